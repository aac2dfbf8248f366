#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wattrank {

inline constexpr double kJoulesPerKwh = 3'600'000.0;

/// Non-negative energy in kilowatt-hours. Construction validates.
class EnergyKwh {
public:
    EnergyKwh() = default;
    explicit EnergyKwh(double kwh);

    double value() const noexcept { return kwh_; }

    friend bool operator==(const EnergyKwh&, const EnergyKwh&) = default;
    friend auto operator<=>(const EnergyKwh&, const EnergyKwh&) = default;

private:
    double kwh_ = 0.0;
};

/// Instantaneous power reading from one device.
struct PowerSample {
    std::int64_t timestamp_ms = 0;  // milliseconds since the Unix epoch
    std::string device_id;
    double power_w = 0.0;

    friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Samples in acquisition order. Devices may interleave; within one device
/// timestamps must strictly increase.
struct EnergyTrace {
    std::vector<PowerSample> samples;

    friend bool operator==(const EnergyTrace&, const EnergyTrace&) = default;
};

struct TraceViolation {
    std::string device_id;
    std::size_t index = 0;  // position in EnergyTrace::samples
    std::string rule;       // "negative power", "negative timestamp", "unordered trace", "insufficient samples"

    friend bool operator==(const TraceViolation&, const TraceViolation&) = default;
};

namespace rule {
inline constexpr const char* negative_power = "negative power";
inline constexpr const char* negative_timestamp = "negative timestamp";
inline constexpr const char* unordered = "unordered trace";
inline constexpr const char* insufficient = "insufficient samples";
}  // namespace rule

EnergyKwh to_kwh(double joules);

/// Every invariant violation in `trace`. Never throws. An empty trace yields a
/// single "insufficient samples" entry with an empty device id.
std::vector<TraceViolation> validate_trace(const EnergyTrace& trace);

/// Trapezoidal integral of max(power - baseline, 0) per device, summed over
/// devices. Throws ValidationError naming the first violated rule.
EnergyKwh integrate_trace(const EnergyTrace& trace, std::optional<double> baseline_w = std::nullopt);

/// Distinct device ids in first-appearance order.
std::vector<std::string> trace_devices(const EnergyTrace& trace);

}  // namespace wattrank
