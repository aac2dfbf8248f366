#include "wattrank/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "wattrank/error.hpp"

namespace wattrank::scaling {

namespace {

void require_positive(double v, const char* field) {
    if (!(std::isfinite(v) && v > 0.0)) throw ValidationError(std::string(field) + " must be > 0", field);
}

void require_fraction(double v, const char* field) {
    if (!(std::isfinite(v) && v > 0.0 && v <= 1.0)) {
        throw ValidationError(std::string(field) + " must be in (0, 1]", field);
    }
}

}  // namespace

LinearFit fit_linear(const std::vector<ProbePoint>& points, FitKind kind) {
    if (points.size() < 2) throw ValidationError("insufficient probes: need at least 2 points", "points");
    for (const auto& p : points) {
        if (kind == FitKind::data_fraction) {
            require_fraction(p.x, "x");
        } else {
            require_positive(p.x, "x");
        }
        if (!(std::isfinite(p.energy_kwh) && p.energy_kwh >= 0.0)) {
            throw ValidationError("probe energy must be finite and >= 0", "energy_kwh");
        }
    }

    const auto n = static_cast<double>(points.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& p : points) {
        mean_x += p.x;
        mean_y += p.energy_kwh;
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.x - mean_x;
        const double dy = p.energy_kwh - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ValidationError("degenerate abscissae: all probe x values are identical", "x");

    LinearFit fit;
    fit.kind = kind;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    fit.n_points = points.size();

    double ss_res = 0.0;
    for (const auto& p : points) {
        const double r = p.energy_kwh - (fit.slope * p.x + fit.intercept);
        ss_res += r * r;
    }
    if (syy == 0.0) {
        fit.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
    } else {
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }

    auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                        [](const ProbePoint& a, const ProbePoint& b) { return a.x < b.x; });
    fit.x_min = lo->x;
    fit.x_max = hi->x;
    return fit;
}

Prediction predict(const LinearFit& fit, double x) {
    require_positive(x, "x");
    const double raw = fit.slope * x + fit.intercept;
    Prediction out;
    out.extrapolated = (fit.x_min && x < *fit.x_min) || (fit.x_max && x > *fit.x_max);
    if (raw < 0.0) {
        out.warning = "fit predicts negative energy (" + std::to_string(raw) + " kWh) at x = " + std::to_string(x) +
                      "; clamped to 0, fit is unreliable here";
        out.energy = EnergyKwh(0.0);
    } else {
        out.energy = EnergyKwh(raw);
    }
    return out;
}

EnergyKwh proportional_scale(EnergyKwh probe_kwh, double probe_fraction, double probe_epochs, double target_fraction,
                             double target_epochs) {
    require_positive(probe_kwh.value(), "probe_kwh");
    require_fraction(probe_fraction, "probe_fraction");
    require_positive(probe_epochs, "probe_epochs");
    require_fraction(target_fraction, "target_fraction");
    require_positive(target_epochs, "target_epochs");
    return EnergyKwh(probe_kwh.value() * (target_fraction / probe_fraction) * (target_epochs / probe_epochs));
}

AmortizedCost amortize(EnergyKwh pretrain_kwh, long long downstream_tasks, EnergyKwh finetune_kwh,
                       EnergyKwh inference_kwh) {
    if (downstream_tasks < 1) throw ValidationError("number of downstream tasks must be >= 1", "n_downstream_tasks");
    AmortizedCost cost;
    cost.pretrain_share_kwh = pretrain_kwh.value() / static_cast<double>(downstream_tasks);
    cost.finetune_kwh = finetune_kwh.value();
    cost.inference_kwh = inference_kwh.value();
    cost.total_kwh = cost.pretrain_share_kwh + cost.finetune_kwh + cost.inference_kwh;
    return cost;
}

FitKind parse_fit_kind(const std::string& text) {
    if (text == "epochs") return FitKind::epochs;
    if (text == "fraction" || text == "data_fraction") return FitKind::data_fraction;
    throw UsageError("unknown fit kind '" + text + "' (expected epochs or fraction)");
}

const char* to_string(FitKind kind) {
    return kind == FitKind::epochs ? "epochs" : "data_fraction";
}

}  // namespace wattrank::scaling
