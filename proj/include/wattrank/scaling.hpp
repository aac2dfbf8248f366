#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "wattrank/core.hpp"

namespace wattrank::scaling {

enum class FitKind { epochs, data_fraction };

/// Energy measured for one probe: `x` epochs or data fraction.
struct ProbePoint {
    double x = 0.0;
    double energy_kwh = 0.0;
};

struct LinearFit {
    FitKind kind = FitKind::epochs;
    double slope = 0.0;      // kWh per unit x
    double intercept = 0.0;  // kWh
    double r_squared = 1.0;
    std::size_t n_points = 0;
    /// Fitted abscissa range; absent for hand-entered fits.
    std::optional<double> x_min;
    std::optional<double> x_max;
};

/// Ordinary least squares. A fit with zero residual and zero variance in y
/// has r_squared = 1.
LinearFit fit_linear(const std::vector<ProbePoint>& points, FitKind kind);

struct Prediction {
    EnergyKwh energy;
    bool extrapolated = false;  // x lies outside the fitted range
    std::optional<std::string> warning;
};

/// slope * x + intercept, clamped at zero with a warning.
Prediction predict(const LinearFit& fit, double x);

/// Scales a probe run's energy linearly in data fraction and in epochs.
EnergyKwh proportional_scale(EnergyKwh probe_kwh, double probe_fraction, double probe_epochs, double target_fraction,
                             double target_epochs);

struct AmortizedCost {
    double pretrain_share_kwh = 0.0;
    double finetune_kwh = 0.0;
    double inference_kwh = 0.0;
    double total_kwh = 0.0;
};

/// Splits a pretraining bill evenly over `downstream_tasks` and adds one
/// task's fine-tuning and inference cost.
AmortizedCost amortize(EnergyKwh pretrain_kwh, long long downstream_tasks, EnergyKwh finetune_kwh,
                       EnergyKwh inference_kwh);

FitKind parse_fit_kind(const std::string& text);
const char* to_string(FitKind kind);

}  // namespace wattrank::scaling
