#include "wattrank/telemetry.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "wattrank/csv.hpp"
#include "wattrank/error.hpp"

extern char** environ;

namespace wattrank::telemetry {

namespace fs = std::filesystem;
using std::chrono::milliseconds;

namespace {

constexpr const char* kTraceHeader = "timestamp_ms,device_id,power_w";

std::int64_t epoch_ms() {
    return std::chrono::duration_cast<milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::vector<double> parse_watts_list(const std::string& text) {
    std::vector<double> watts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double w = 0.0;
        try {
            w = csv::parse_double(item, "watts", 1);
        } catch (const ParseError&) {
            throw UsageError("synthetic provider: invalid wattage '" + item + "'");
        }
        if (w < 0.0) throw UsageError("synthetic provider: wattage must be >= 0");
        watts.push_back(w);
    }
    if (watts.empty()) throw UsageError("synthetic provider needs at least one wattage");
    return watts;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ProviderError("cannot read " + p.string() + ": " + std::strerror(errno));
    std::string s;
    std::getline(in, s);
    return s;
}

double read_number(const fs::path& p) {
    const auto text = read_text(p);
    try {
        return csv::parse_double(text, p.string(), 1);
    } catch (const ParseError&) {
        throw ProviderError("unexpected contents in " + p.string() + ": '" + text + "'");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

EnergyTrace read_trace_csv(std::istream& in) {
    const auto rows = csv::read(in);
    if (rows.empty()) throw ParseError("missing header '" + std::string(kTraceHeader) + "'", 1);
    if (csv::join(rows.front().fields) != kTraceHeader) {
        throw ParseError("expected header '" + std::string(kTraceHeader) + "'", rows.front().line);
    }
    EnergyTrace trace;
    trace.samples.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != 3) {
            throw ParseError("expected 3 fields, got " + std::to_string(row.fields.size()), row.line);
        }
        trace.samples.push_back({csv::parse_int(row.fields[0], "timestamp_ms", row.line), row.fields[1],
                                 csv::parse_double(row.fields[2], "power_w", row.line)});
    }
    return trace;
}

void write_trace_csv(std::ostream& out, const EnergyTrace& trace) {
    out << kTraceHeader << '\n';
    for (const auto& s : trace.samples) {
        out << s.timestamp_ms << ',' << csv::escape(s.device_id) << ',' << csv::format_double(s.power_w) << '\n';
    }
}

void write_trace_file(const fs::path& path, const EnergyTrace& trace) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write trace file " + path.string(), "out");
    write_trace_csv(out, trace);
    if (!out.flush()) throw ValidationError("failed writing trace file " + path.string(), "out");
}

ReplayResult replay(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("trace file not found: " + path.string(), "trace");
    ReplayResult result;
    result.trace = read_trace_csv(in);
    result.violations = validate_trace(result.trace);
    return result;
}

// ---------------------------------------------------------------------------

SyntheticProvider::SyntheticProvider(std::vector<double> watts, std::string device_id)
    : watts_(std::move(watts)), device_id_(std::move(device_id)) {
    if (watts_.empty()) throw ProviderError("synthetic provider needs at least one wattage");
}

std::vector<DeviceReading> SyntheticProvider::poll(milliseconds) {
    const double w = watts_[std::min(step_, watts_.size() - 1)];
    ++step_;
    return {{device_id_, w}};
}

std::string SyntheticProvider::describe() const {
    return "synthetic (" + std::to_string(watts_.size()) + " scripted value(s), device " + device_id_ + ")";
}

ReplayProvider::ReplayProvider(const EnergyTrace& trace) {
    if (trace.samples.empty()) throw ProviderError("replay trace has no samples");
    const auto t0 = std::min_element(trace.samples.begin(), trace.samples.end(), [](const auto& a, const auto& b) {
                        return a.timestamp_ms < b.timestamp_ms;
                    })->timestamp_ms;
    for (const auto& device : trace_devices(trace)) {
        Series s{device, {}};
        for (const auto& sample : trace.samples) {
            if (sample.device_id == device) s.points.emplace_back(sample.timestamp_ms - t0, sample.power_w);
        }
        series_.push_back(std::move(s));
    }
}

std::vector<DeviceReading> ReplayProvider::poll(milliseconds elapsed) {
    std::vector<DeviceReading> out;
    const auto t = elapsed.count();
    for (const auto& s : series_) {
        const auto& pts = s.points;
        auto it = std::upper_bound(pts.begin(), pts.end(), t,
                                   [](std::int64_t v, const auto& p) { return v < p.first; });
        double w = 0.0;
        if (it == pts.begin()) {
            w = pts.front().second;
        } else if (it == pts.end()) {
            w = pts.back().second;
        } else {
            const auto& [t1, w1] = *it;
            const auto& [t0, w0] = *(it - 1);
            w = w0 + (w1 - w0) * static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
        }
        out.push_back({s.device_id, w});
    }
    return out;
}

std::string ReplayProvider::describe() const {
    return "replay (" + std::to_string(series_.size()) + " device(s))";
}

SysfsProvider::SysfsProvider(const std::string& selector, fs::path sysfs_root) : selector_(selector) {
    std::error_code ec;
    auto add_counter = [&](const std::string& id, const fs::path& file) {
        Source src{id, file, true};
        const auto range = file.parent_path() / "max_energy_range_uj";
        if (fs::exists(range, ec)) src.range_uj = read_number(range);
        sources_.push_back(std::move(src));
    };
    auto add_power = [&](const std::string& id, const fs::path& file) { sources_.push_back({id, file, false}); };

    if (selector == "rapl") {
        const auto base = sysfs_root / "class" / "powercap";
        static const std::regex top_level("intel-rapl:[0-9]+");
        std::vector<fs::path> zones;
        for (const auto& entry : fs::directory_iterator(base, ec)) {
            const auto name = entry.path().filename().string();
            if (std::regex_match(name, top_level) && fs::exists(entry.path() / "energy_uj", ec)) {
                zones.push_back(entry.path());
            }
        }
        std::sort(zones.begin(), zones.end());
        for (const auto& z : zones) add_counter(z.filename().string(), z / "energy_uj");
        if (sources_.empty()) throw ProviderError("no RAPL zones found under " + base.string());
    } else if (selector == "hwmon") {
        const auto base = sysfs_root / "class" / "hwmon";
        static const std::regex power_input("power[0-9]+_input");
        std::vector<fs::path> files;
        for (const auto& dir : fs::directory_iterator(base, ec)) {
            for (const auto& entry : fs::directory_iterator(dir.path(), ec)) {
                if (std::regex_match(entry.path().filename().string(), power_input)) files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            add_power(f.parent_path().filename().string() + "/" + f.filename().string().substr(0, f.filename().string().find('_')), f);
        }
        if (sources_.empty()) throw ProviderError("no hwmon power sensors found under " + base.string());
    } else {
        const fs::path file(selector);
        if (!fs::exists(file, ec)) throw ProviderError("live selector '" + selector + "' is not rapl, hwmon or an existing file");
        const auto name = file.filename().string();
        if (name == "energy_uj") {
            add_counter(file.parent_path().filename().string(), file);
        } else if (name.starts_with("power") && name.ends_with("_input")) {
            add_power(file.parent_path().filename().string() + "/" + name.substr(0, name.find('_')), file);
        } else {
            throw ProviderError("unsupported sysfs file '" + selector + "' (expected energy_uj or power*_input)");
        }
    }

    // Prime energy counters so the first poll already has a rate.
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& s : sources_) {
        if (s.is_counter) s.last_uj = read_number(s.file);
    }
    if (std::any_of(sources_.begin(), sources_.end(), [](const Source& s) { return s.is_counter; })) {
        std::this_thread::sleep_for(milliseconds(20));
        const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (auto& s : sources_) {
            if (!s.is_counter) continue;
            double now = read_number(s.file);
            double delta = now - s.last_uj;
            if (delta < 0.0 && s.range_uj > 0.0) delta += s.range_uj;
            s.last_w = delta > 0.0 ? delta / 1e6 / dt : 0.0;
            s.last_uj = now;
        }
    }
    for (auto& s : sources_) s.last_at = milliseconds(-1);
}

std::vector<DeviceReading> SysfsProvider::poll(milliseconds elapsed) {
    std::vector<DeviceReading> out;
    out.reserve(sources_.size());
    for (auto& s : sources_) {
        const double value = read_number(s.file);
        if (!s.is_counter) {
            out.push_back({s.device_id, value / 1e6});
            continue;
        }
        if (s.last_at.count() >= 0 && elapsed > s.last_at) {
            double delta = value - s.last_uj;
            if (delta < 0.0 && s.range_uj > 0.0) delta += s.range_uj;
            const double seconds = static_cast<double>((elapsed - s.last_at).count()) / 1000.0;
            if (delta >= 0.0) s.last_w = delta / 1e6 / seconds;
        }
        s.last_uj = value;
        s.last_at = elapsed;
        out.push_back({s.device_id, s.last_w});
    }
    return out;
}

std::string SysfsProvider::describe() const {
    return "live sysfs '" + selector_ + "' (" + std::to_string(sources_.size()) + " source(s))";
}

// ---------------------------------------------------------------------------

void ProviderDescriptor::validate() const {
    if (interval_ms <= 0) throw UsageError("interval must be > 0 ms");
    if (kind == ProviderKind::live && interval_ms < kMinIntervalMs) {
        throw UsageError("live providers need an interval of at least " + std::to_string(kMinIntervalMs) + " ms");
    }
    if (source.empty()) throw UsageError("provider source must not be empty");
    if (kind == ProviderKind::synthetic) parse_watts_list(source);
}

ProviderDescriptor parse_provider(const std::string& spec, int interval_ms) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw UsageError("provider must be replay:<file>, synthetic:<watts> or live:<selector>, got '" + spec + "'");
    }
    const auto kind = spec.substr(0, colon);
    ProviderDescriptor d;
    d.source = spec.substr(colon + 1);
    d.interval_ms = interval_ms;
    if (kind == "replay") {
        d.kind = ProviderKind::replay;
    } else if (kind == "synthetic") {
        d.kind = ProviderKind::synthetic;
    } else if (kind == "live") {
        d.kind = ProviderKind::live;
    } else {
        throw UsageError("unknown provider kind '" + kind + "'");
    }
    d.validate();
    return d;
}

std::unique_ptr<PowerProvider> make_provider(const ProviderDescriptor& d) {
    d.validate();
    switch (d.kind) {
        case ProviderKind::synthetic:
            return std::make_unique<SyntheticProvider>(parse_watts_list(d.source));
        case ProviderKind::replay:
            try {
                return std::make_unique<ReplayProvider>(replay(d.source).trace);
            } catch (const ValidationError& e) {
                throw ProviderError(std::string("replay provider: ") + e.what());
            }
        case ProviderKind::live:
            try {
                return std::make_unique<SysfsProvider>(d.source);
            } catch (const fs::filesystem_error& e) {
                throw ProviderError(std::string("live provider: ") + e.what());
            }
    }
    throw ProviderError("unknown provider kind");
}

// ---------------------------------------------------------------------------

namespace {

// Records samples from one thread; the trace is read only after join.
class Sampler {
public:
    Sampler(PowerProvider& provider, milliseconds interval)
        : provider_(provider), interval_(interval), start_(std::chrono::steady_clock::now()), start_epoch_(epoch_ms()) {}

    std::int64_t now_ms() const { return start_epoch_ + elapsed().count(); }

    void sample() {
        const auto at = elapsed();
        const auto readings = provider_.poll(at);
        const auto ts = start_epoch_ + at.count();
        for (const auto& r : readings) {
            auto [it, inserted] = last_ts_.try_emplace(r.device_id, ts);
            if (!inserted) {
                if (ts <= it->second) continue;
                it->second = ts;
            }
            trace_.samples.push_back({ts, r.device_id, r.power_w});
        }
    }

    void start() {
        worker_ = std::thread([this] { run(); });
    }

    void stop() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    /// After stop(): one more sample at exit if the last poll is older than half
    /// an interval or some device still has fewer than two samples.
    void close() {
        const auto now = now_ms();
        const bool stale = trace_.samples.empty() || now - trace_.samples.back().timestamp_ms >= interval_.count() / 2;
        std::map<std::string, int> counts;
        for (const auto& s : trace_.samples) ++counts[s.device_id];
        const bool thin = std::any_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second < 2; });
        if (!stale && !thin) return;
        // A child that exits within the first millisecond would otherwise
        // leave a single-sample trace.
        if (thin && !trace_.samples.empty()) {
            while (now_ms() <= trace_.samples.back().timestamp_ms) std::this_thread::sleep_for(milliseconds(1));
        }
        try {
            sample();
        } catch (const std::exception& e) {
            if (failure_.empty()) failure_ = e.what();
        }
    }

    EnergyTrace take_trace() { return std::move(trace_); }
    const std::string& failure() const { return failure_; }

private:
    milliseconds elapsed() const {
        return std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - start_);
    }

    void run() {
        auto next = start_ + interval_;
        std::unique_lock lock(mutex_);
        while (!wake_.wait_until(lock, next, [this] { return stopping_; })) {
            try {
                sample();
            } catch (const std::exception& e) {
                failure_ = e.what();
                return;
            }
            // Late polls keep their true timestamp; missed ticks are skipped.
            const auto now = std::chrono::steady_clock::now();
            next += interval_;
            while (next <= now) next += interval_;
        }
    }

    PowerProvider& provider_;
    milliseconds interval_;
    std::chrono::steady_clock::time_point start_;
    std::int64_t start_epoch_;
    EnergyTrace trace_;
    std::map<std::string, std::int64_t> last_ts_;
    std::string failure_;

    std::mutex mutex_;
    std::condition_variable wake_;
    bool stopping_ = false;
    std::thread worker_;
};

// Ignores SIGINT/SIGQUIT in the parent while a child runs, like time(1).
class ScopedIgnoreInterrupts {
public:
    ScopedIgnoreInterrupts() {
        struct sigaction ignore {};
        ignore.sa_handler = SIG_IGN;
        sigemptyset(&ignore.sa_mask);
        sigaction(SIGINT, &ignore, &old_int_);
        sigaction(SIGQUIT, &ignore, &old_quit_);
    }
    ~ScopedIgnoreInterrupts() {
        sigaction(SIGINT, &old_int_, nullptr);
        sigaction(SIGQUIT, &old_quit_, nullptr);
    }

private:
    struct sigaction old_int_ {};
    struct sigaction old_quit_ {};
};

pid_t spawn(const std::vector<std::string>& command) {
    std::vector<char*> argv;
    argv.reserve(command.size() + 1);
    for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
    argv.push_back(nullptr);

    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    sigset_t defaults;
    sigemptyset(&defaults);
    sigaddset(&defaults, SIGINT);
    sigaddset(&defaults, SIGQUIT);
    posix_spawnattr_setsigdefault(&attr, &defaults);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGDEF);

    pid_t pid = -1;
    const int rc = posix_spawnp(&pid, argv[0], nullptr, &attr, argv.data(), environ);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) throw SpawnError("cannot spawn '" + command.front() + "': " + std::strerror(rc));
    return pid;
}

int reap(pid_t pid) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw SpawnError(std::string("waitpid failed: ") + std::strerror(errno));
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return 1;
}

}  // namespace

TrackOutcome track(const std::vector<std::string>& command, PowerProvider& provider, milliseconds interval,
                   store::RunDraft metadata) {
    if (command.empty() || command.front().empty()) throw UsageError("track needs a command to run after '--'");
    if (interval.count() <= 0) throw UsageError("interval must be > 0 ms");

    Sampler sampler(provider, interval);
    try {
        sampler.sample();
    } catch (const ProviderError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProviderError(std::string("provider failed on first poll: ") + e.what());
    }

    ScopedIgnoreInterrupts guard;
    TrackOutcome outcome;
    outcome.spawn_ms = sampler.now_ms();
    sampler.start();
    const auto started = std::chrono::steady_clock::now();
    pid_t pid = -1;
    try {
        pid = spawn(command);
    } catch (...) {
        sampler.stop();
        throw;
    }
    outcome.child_exit_code = reap(pid);
    outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    outcome.exit_ms = sampler.now_ms();
    sampler.stop();
    if (sampler.failure().empty()) sampler.close();

    outcome.trace = sampler.take_trace();
    outcome.run_skeleton = std::move(metadata);
    if (!sampler.failure().empty()) {
        outcome.warnings.push_back("sampling stopped early: " + sampler.failure());
    }
    return outcome;
}

TrackOutcome track(const std::vector<std::string>& command, const ProviderDescriptor& descriptor,
                   store::RunDraft metadata) {
    if (command.empty() || command.front().empty()) throw UsageError("track needs a command to run after '--'");
    auto provider = make_provider(descriptor);
    return track(command, *provider, milliseconds(descriptor.interval_ms), std::move(metadata));
}

}  // namespace wattrank::telemetry
