#pragma once

#include <optional>
#include <string>

#include "wattrank/core.hpp"
#include "wattrank/error.hpp"
#include "wattrank/metric.hpp"

namespace wattrank::pipeline {

struct ProbeToSamInputs {
    std::optional<double> baseline_w;
    double probe_fraction = 0.01;
    double probe_epochs = 1.0;
    double target_fraction = 1.0;
    double target_epochs = 1.0;
    double accuracy = 0.0;
    metric::SamParams params;
    std::string run_id = "pipeline";
};

struct ProbeToSamResult {
    EnergyKwh probe_kwh;
    EnergyKwh extrapolated_kwh;
    metric::SamScore score;
};

/// Raised when the extrapolated energy is still at or below 1 kWh; carries the
/// intermediate values so callers can report them.
class UndefinedAfterScaling : public MetricUndefinedError {
public:
    UndefinedAfterScaling(const std::string& message, EnergyKwh probe, EnergyKwh extrapolated)
        : MetricUndefinedError(message), probe_kwh(probe), extrapolated_kwh(extrapolated) {}

    EnergyKwh probe_kwh;
    EnergyKwh extrapolated_kwh;
};

/// integrate_trace -> proportional_scale -> sam. A probe that integrates to
/// 0 kWh is rejected before scaling.
ProbeToSamResult probe_to_sam(const EnergyTrace& probe_trace, const ProbeToSamInputs& inputs);

}  // namespace wattrank::pipeline
