#include "wattrank/pipeline.hpp"

#include "wattrank/error.hpp"
#include "wattrank/scaling.hpp"

namespace wattrank::pipeline {

ProbeToSamResult probe_to_sam(const EnergyTrace& probe_trace, const ProbeToSamInputs& in) {
    const auto probe = integrate_trace(probe_trace, in.baseline_w);
    if (probe.value() <= 0.0) {
        throw ValidationError("probe trace integrates to 0 kWh; nothing to extrapolate", "trace");
    }
    const auto full =
        scaling::proportional_scale(probe, in.probe_fraction, in.probe_epochs, in.target_fraction, in.target_epochs);
    try {
        const double value = metric::sam(in.accuracy, full, in.params);
        return {probe, full, {in.run_id, value, in.params, full.value()}};
    } catch (const MetricUndefinedError& e) {
        throw UndefinedAfterScaling(e.what(), probe, full);
    }
}

}  // namespace wattrank::pipeline
