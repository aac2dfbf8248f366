#include "wattrank/metric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/core.h>

#include "wattrank/error.hpp"

namespace wattrank::metric {

void SamParams::validate() const {
    if (!(std::isfinite(alpha) && alpha > 0.0)) throw ValidationError("alpha must be > 0", "alpha");
    if (!(std::isfinite(beta) && beta > 0.0)) throw ValidationError("beta must be > 0", "beta");
}

double sam(double accuracy, EnergyKwh electricity, const SamParams& params) {
    params.validate();
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
        throw ValidationError("accuracy must be a fraction in [0, 1]", "accuracy");
    }
    if (!(electricity.value() > 1.0 + kDomainEpsilon)) {
        throw MetricUndefinedError("metric undefined below 1 kWh (got " + fmt::format("{:.6g}", electricity.value()) +
                                   " kWh); extrapolate the probe to the full run first");
    }
    return params.beta * std::pow(accuracy, params.alpha) / std::log10(electricity.value());
}

SamScore score(const store::RunRecord& run, const SamParams& params) {
    try {
        return {run.run_id, sam(run.accuracy, EnergyKwh(run.train_energy_kwh), params), params,
                run.train_energy_kwh};
    } catch (const MetricUndefinedError& e) {
        throw MetricUndefinedError("run '" + run.run_id + "': " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("run '" + run.run_id + "': " + e.what(), e.field());
    }
}

namespace {

bool ranks_before(const RankedRun& a, const RankedRun& b) {
    if (a.score.value != b.score.value) return a.score.value > b.score.value;
    if (a.score.electricity_used_kwh != b.score.electricity_used_kwh) {
        return a.score.electricity_used_kwh < b.score.electricity_used_kwh;
    }
    return a.run.run_id < b.run.run_id;
}

std::vector<std::string> order_of(const RankGroup& group) {
    std::vector<std::string> ids;
    ids.reserve(group.entries.size());
    for (const auto& e : group.entries) ids.push_back(e.run.run_id);
    return ids;
}

}  // namespace

Ranking rank(const std::vector<store::RunRecord>& runs, const SamParams& params, bool force) {
    params.validate();
    std::map<std::pair<std::string, std::string>, std::vector<RankedRun>> declared;
    for (const auto& run : runs) {
        declared[{run.task, run.dataset}].push_back({run, score(run, params)});
    }

    Ranking out;
    for (auto& [name, entries] : declared) {
        RankGroup group{name.first, name.second, entries.front().run.batch_size, std::move(entries)};

        std::set<std::int64_t> batch_sizes;
        std::set<std::string> hardware;
        for (const auto& e : group.entries) {
            batch_sizes.insert(e.run.batch_size);
            hardware.insert(e.run.hardware);
        }
        const std::string label = "task '" + group.task + "', dataset '" + group.dataset + "'";
        if (batch_sizes.size() > 1) {
            std::string sizes;
            for (auto b : batch_sizes) sizes += (sizes.empty() ? "" : ", ") + std::to_string(b);
            if (!force) {
                throw IncomparableRunsError("incomparable runs: " + label + " mixes batch sizes {" + sizes +
                                                "}; use a fixed batch size or force",
                                            "batch_size");
            }
            group.batch_size.reset();
            for (auto& e : group.entries) e.incomparable = true;
            out.warnings.push_back("forced ranking across batch sizes {" + sizes + "} for " + label);
        }
        if (hardware.size() > 1) {
            out.warnings.push_back(label + " compares runs measured on " + std::to_string(hardware.size()) +
                                   " different hardware descriptors");
        }

        std::sort(group.entries.begin(), group.entries.end(), ranks_before);
        for (std::size_t i = 0; i < group.entries.size(); ++i) group.entries[i].position = i + 1;
        out.groups.push_back(std::move(group));
    }
    return out;
}

Sweep sam_sweep(const std::vector<store::RunRecord>& runs, std::vector<double> alpha_values, double beta,
                bool force) {
    if (alpha_values.empty()) throw ValidationError("at least one alpha value is required", "alpha");
    for (double a : alpha_values) {
        if (!(std::isfinite(a) && a > 0.0)) throw ValidationError("alpha values must be > 0", "alpha");
    }
    std::sort(alpha_values.begin(), alpha_values.end());
    alpha_values.erase(std::unique(alpha_values.begin(), alpha_values.end()), alpha_values.end());

    Sweep sweep;
    for (double alpha : alpha_values) {
        sweep.rows.push_back({alpha, rank(runs, SamParams{alpha, beta}, force)});
    }
    for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
        const auto& lo = sweep.rows[i - 1];
        const auto& hi = sweep.rows[i];
        // Group membership does not depend on alpha, so groups line up.
        for (std::size_t g = 0; g < lo.ranking.groups.size(); ++g) {
            if (order_of(lo.ranking.groups[g]) != order_of(hi.ranking.groups[g])) {
                sweep.crossovers.push_back(
                    {lo.alpha, hi.alpha, lo.ranking.groups[g].task, lo.ranking.groups[g].dataset});
            }
        }
    }
    return sweep;
}

}  // namespace wattrank::metric
