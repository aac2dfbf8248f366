#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "wattrank/core.hpp"
#include "wattrank/store.hpp"

namespace wattrank::telemetry {

inline constexpr int kDefaultIntervalMs = 100;
inline constexpr int kMinIntervalMs = 10;

// ---------------------------------------------------------------------------
// Trace files: `timestamp_ms,device_id,power_w`

EnergyTrace read_trace_csv(std::istream& in);
void write_trace_csv(std::ostream& out, const EnergyTrace& trace);
void write_trace_file(const std::filesystem::path& path, const EnergyTrace& trace);

struct ReplayResult {
    EnergyTrace trace;
    std::vector<TraceViolation> violations;  // advisory; replay itself succeeds
};

/// Loads a recorded trace. Throws NotFoundError or ParseError (row number).
ReplayResult replay(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Providers

struct DeviceReading {
    std::string device_id;
    double power_w = 0.0;
};

/// Answers "instantaneous watts per device". Polled from a single thread.
class PowerProvider {
public:
    virtual ~PowerProvider() = default;
    /// `elapsed` is the time since sampling started.
    virtual std::vector<DeviceReading> poll(std::chrono::milliseconds elapsed) = 0;
    virtual std::string describe() const = 0;
};

/// Constant wattage, or a script of wattages stepped once per poll (the last
/// value holds).
class SyntheticProvider final : public PowerProvider {
public:
    explicit SyntheticProvider(std::vector<double> watts, std::string device_id = "synthetic0");

    std::vector<DeviceReading> poll(std::chrono::milliseconds elapsed) override;
    std::string describe() const override;

private:
    std::vector<double> watts_;
    std::string device_id_;
    std::size_t step_ = 0;
};

/// Plays back a recorded trace against elapsed time, linearly interpolating
/// each device and holding its last value past the end.
class ReplayProvider final : public PowerProvider {
public:
    explicit ReplayProvider(const EnergyTrace& trace);

    std::vector<DeviceReading> poll(std::chrono::milliseconds elapsed) override;
    std::string describe() const override;

private:
    struct Series {
        std::string device_id;
        std::vector<std::pair<std::int64_t, double>> points;  // offset ms, watts
    };
    std::vector<Series> series_;
};

/// Linux sysfs power sources. The selector is `rapl` (every top-level
/// powercap zone), `hwmon` (every power*_input sensor) or a path to a single
/// `energy_uj` counter or `power*_input` file. Energy counters are
/// differentiated between polls; wraparound uses max_energy_range_uj.
class SysfsProvider final : public PowerProvider {
public:
    explicit SysfsProvider(const std::string& selector, std::filesystem::path sysfs_root = "/sys");

    std::vector<DeviceReading> poll(std::chrono::milliseconds elapsed) override;
    std::string describe() const override;

private:
    struct Source {
        std::string device_id;
        std::filesystem::path file;
        bool is_counter = false;  // energy_uj vs power*_input (microwatts)
        double range_uj = 0.0;
        double last_uj = 0.0;
        std::chrono::milliseconds last_at{0};
        double last_w = 0.0;
    };
    std::string selector_;
    std::vector<Source> sources_;
};

enum class ProviderKind { replay, synthetic, live };

struct ProviderDescriptor {
    ProviderKind kind = ProviderKind::synthetic;
    std::string source;  // file for replay, watts for synthetic, selector for live
    int interval_ms = kDefaultIntervalMs;

    void validate() const;
};

/// Parses `replay:<file>`, `synthetic:<watts>[,<watts>...]` or `live:<selector>`.
ProviderDescriptor parse_provider(const std::string& spec, int interval_ms = kDefaultIntervalMs);

/// Throws ProviderError when the source cannot be initialised.
std::unique_ptr<PowerProvider> make_provider(const ProviderDescriptor& descriptor);

// ---------------------------------------------------------------------------
// Tracking a child process

struct TrackOutcome {
    EnergyTrace trace;
    int child_exit_code = 0;  // 128 + signal when the child was killed
    double wall_seconds = 0.0;
    std::int64_t spawn_ms = 0;  // epoch ms just before spawning
    std::int64_t exit_ms = 0;   // epoch ms when the child was reaped
    store::RunDraft run_skeleton;
    std::vector<std::string> warnings;
};

/// Spawns `command` (PATH lookup, inherited standard streams) while a sampling
/// thread polls `provider` every `interval`. The first sample is taken before
/// the spawn; sampling stops once the child has been reaped, with a closing
/// sample at exit when the last poll is stale or a device has < 2 samples.
TrackOutcome track(const std::vector<std::string>& command, PowerProvider& provider,
                   std::chrono::milliseconds interval, store::RunDraft metadata = {});

/// Builds the provider from `descriptor`, then tracks. Provider failures throw
/// ProviderError before anything is spawned.
TrackOutcome track(const std::vector<std::string>& command, const ProviderDescriptor& descriptor,
                   store::RunDraft metadata = {});

}  // namespace wattrank::telemetry
