#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "wattrank/core.hpp"
#include "wattrank/metric.hpp"
#include "wattrank/store.hpp"

namespace wattrank::report {

struct ApplianceProfile {
    std::string name;
    double kwh_per_month = 0.0;
};

/// `name,kwh_per_month` lines. A header line with exactly those names, blank
/// lines and lines starting with '#' are skipped. Non-positive values throw.
std::vector<ApplianceProfile> read_appliances(std::istream& in);
std::vector<ApplianceProfile> load_appliances(const std::filesystem::path& path);

struct ApplianceEquivalent {
    std::string name;
    double months = 0.0;
};

/// Months of each appliance's consumption matching `energy`, most months first.
std::vector<ApplianceEquivalent> appliance_equiv(EnergyKwh energy, const std::vector<ApplianceProfile>& profiles);

/// A run in the accuracy / log-energy plane.
struct ParetoPoint {
    std::string run_id;
    double accuracy = 0.0;
    double log10_kwh = 0.0;
};

ParetoPoint to_point(const store::RunRecord& run);

/// True iff `a` is at least as accurate with no more training energy, and
/// strictly better in one of the two.
bool dominates(const store::RunRecord& a, const store::RunRecord& b);

/// Runs not dominated by any other run, by ascending training energy (ties by
/// run_id). Every run needs training energy > 0.
std::vector<store::RunRecord> pareto_frontier(const std::vector<store::RunRecord>& runs);

enum class Format { table_text, csv, json };

Format parse_format(const std::string& text);

/// Ranked tables, Pareto flags and plot series per comparability group. The
/// whole document is built before returning, so a ranking error yields no
/// output at all. Identical inputs give byte-identical documents.
std::string render_report(const std::vector<store::RunRecord>& runs, const metric::SamParams& params, Format format,
                          bool force = false);

}  // namespace wattrank::report
