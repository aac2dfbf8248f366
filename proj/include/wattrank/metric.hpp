#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wattrank/core.hpp"
#include "wattrank/store.hpp"

namespace wattrank::metric {

/// Exponent on accuracy and linear scale of the score. Both must be > 0.
struct SamParams {
    double alpha = 5.0;
    double beta = 5.0;

    void validate() const;

    friend bool operator==(const SamParams&, const SamParams&) = default;
};

/// Below this margin above 1 kWh the log denominator is treated as zero.
inline constexpr double kDomainEpsilon = 1e-9;

struct SamScore {
    std::string run_id;
    double value = 0.0;
    SamParams params;
    double electricity_used_kwh = 0.0;
};

/// beta * accuracy^alpha / log10(electricity).
///
/// Accuracy is a fraction in [0, 1]. Electricity must exceed 1 kWh, where the
/// logarithm turns non-positive; MetricUndefinedError otherwise.
double sam(double accuracy, EnergyKwh electricity, const SamParams& params = {});

/// Scores a run on its training energy. Errors name the run.
SamScore score(const store::RunRecord& run, const SamParams& params = {});

/// Runs are comparable only within the same task, dataset and batch size.
struct ComparabilityKey {
    std::string task;
    std::string dataset;
    std::int64_t batch_size = 0;

    friend auto operator<=>(const ComparabilityKey&, const ComparabilityKey&) = default;
};

struct RankedRun {
    store::RunRecord run;
    SamScore score;
    std::size_t position = 0;  // 1-based within the group
    bool incomparable = false; // mixed batch sizes ranked under `force`
};

struct RankGroup {
    std::string task;
    std::string dataset;
    /// The shared batch size; empty when a forced group mixes batch sizes.
    std::optional<std::int64_t> batch_size;
    std::vector<RankedRun> entries;
};

struct Ranking {
    std::vector<RankGroup> groups;  // ordered by (task, dataset)
    std::vector<std::string> warnings;
};

/// Groups runs by (task, dataset) and sorts each group by descending score,
/// then ascending electricity, then run_id. A group whose runs disagree on
/// batch size throws IncomparableRunsError unless `force`, in which case its
/// entries are flagged. Mixed hardware within a group produces a warning.
Ranking rank(const std::vector<store::RunRecord>& runs, const SamParams& params = {}, bool force = false);

struct SweepRow {
    double alpha = 0.0;
    Ranking ranking;
};

/// A pair of adjacent alphas between which some group's order changed.
struct Crossover {
    double alpha_low = 0.0;
    double alpha_high = 0.0;
    std::string task;
    std::string dataset;
};

struct Sweep {
    std::vector<SweepRow> rows;  // ascending alpha
    std::vector<Crossover> crossovers;
};

/// Full ranking for every alpha (sorted ascending, duplicates dropped) and
/// the brackets in which any group's order changed.
Sweep sam_sweep(const std::vector<store::RunRecord>& runs, std::vector<double> alpha_values, double beta = 5.0,
                bool force = false);

}  // namespace wattrank::metric
