#include "wattrank/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wattrank/error.hpp"

namespace wattrank {

namespace {

/// Neumaier summation; integration results must not depend on where a long
/// trace is split.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

std::map<std::string, std::vector<std::size_t>> indices_by_device(const EnergyTrace& trace) {
    std::map<std::string, std::vector<std::size_t>> by_device;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        by_device[trace.samples[i].device_id].push_back(i);
    }
    return by_device;
}

}  // namespace

EnergyKwh::EnergyKwh(double kwh) : kwh_(kwh) {
    if (!(kwh >= 0.0) || !std::isfinite(kwh)) {
        throw ValidationError("energy must be a finite value >= 0 kWh", "energy_kwh");
    }
}

EnergyKwh to_kwh(double joules) {
    if (!(joules >= 0.0) || !std::isfinite(joules)) {
        throw ValidationError("energy in joules must be finite and >= 0", "joules");
    }
    return EnergyKwh(joules / kJoulesPerKwh);
}

std::vector<TraceViolation> validate_trace(const EnergyTrace& trace) {
    std::vector<TraceViolation> out;
    if (trace.samples.empty()) {
        out.push_back({"", 0, rule::insufficient});
        return out;
    }
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        if (!(s.power_w >= 0.0) || !std::isfinite(s.power_w)) out.push_back({s.device_id, i, rule::negative_power});
        if (s.timestamp_ms < 0) out.push_back({s.device_id, i, rule::negative_timestamp});
    }
    for (const auto& [device, idx] : indices_by_device(trace)) {
        if (idx.size() < 2) out.push_back({device, idx.front(), rule::insufficient});
        for (std::size_t k = 1; k < idx.size(); ++k) {
            if (trace.samples[idx[k]].timestamp_ms <= trace.samples[idx[k - 1]].timestamp_ms) {
                out.push_back({device, idx[k], rule::unordered});
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    return out;
}

EnergyKwh integrate_trace(const EnergyTrace& trace, std::optional<double> baseline_w) {
    if (baseline_w && (!(*baseline_w >= 0.0) || !std::isfinite(*baseline_w))) {
        throw ValidationError("baseline power must be finite and >= 0 W", "baseline_w");
    }
    const double baseline = baseline_w.value_or(0.0);

    if (auto violations = validate_trace(trace); !violations.empty()) {
        const auto& v = violations.front();
        std::string where = v.device_id.empty() ? std::string("trace") : "device '" + v.device_id + "'";
        throw ValidationError(v.rule + (" at " + where) + ", sample " + std::to_string(v.index), "trace");
    }

    // Accumulated in watt-milliseconds; one conversion at the end.
    CompensatedSum total;
    for (const auto& [device, idx] : indices_by_device(trace)) {
        for (std::size_t k = 1; k < idx.size(); ++k) {
            const auto& a = trace.samples[idx[k - 1]];
            const auto& b = trace.samples[idx[k]];
            const double pa = std::max(a.power_w - baseline, 0.0);
            const double pb = std::max(b.power_w - baseline, 0.0);
            const auto dt_ms = static_cast<double>(b.timestamp_ms - a.timestamp_ms);
            total.add(0.5 * (pa + pb) * dt_ms);
        }
    }
    return to_kwh(std::max(total.value(), 0.0) / 1000.0);
}

std::vector<std::string> trace_devices(const EnergyTrace& trace) {
    std::vector<std::string> out;
    for (const auto& s : trace.samples) {
        if (std::find(out.begin(), out.end(), s.device_id) == out.end()) out.push_back(s.device_id);
    }
    return out;
}

}  // namespace wattrank
