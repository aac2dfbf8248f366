#include "wattrank/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/core.h>
#include <json.hpp>

#include "wattrank/csv.hpp"
#include "wattrank/error.hpp"

namespace wattrank::report {

std::vector<ApplianceProfile> read_appliances(std::istream& in) {
    std::vector<ApplianceProfile> out;
    for (const auto& row : csv::read(in)) {
        if (!row.fields.front().empty() && row.fields.front().front() == '#') continue;
        if (row.fields.size() == 2 && row.fields[0] == "name" && row.fields[1] == "kwh_per_month") continue;
        if (row.fields.size() != 2) throw ParseError("expected 'name,kwh_per_month'", row.line);
        const double kwh = csv::parse_double(row.fields[1], "kwh_per_month", row.line);
        if (!(kwh > 0.0)) throw ParseError("kwh_per_month must be > 0 for '" + row.fields[0] + "'", row.line);
        out.push_back({row.fields[0], kwh});
    }
    return out;
}

std::vector<ApplianceProfile> load_appliances(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("appliance file not found: " + path.string(), "appliances");
    return read_appliances(in);
}

std::vector<ApplianceEquivalent> appliance_equiv(EnergyKwh energy, const std::vector<ApplianceProfile>& profiles) {
    if (profiles.empty()) throw ValidationError("at least one appliance profile is required", "appliances");
    std::vector<ApplianceEquivalent> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) {
        if (!(std::isfinite(p.kwh_per_month) && p.kwh_per_month > 0.0)) {
            throw ValidationError("kwh_per_month must be > 0 for '" + p.name + "'", "kwh_per_month");
        }
        out.push_back({p.name, energy.value() / p.kwh_per_month});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.months != b.months) return a.months > b.months;
        return a.name < b.name;
    });
    return out;
}

ParetoPoint to_point(const store::RunRecord& run) {
    return {run.run_id, run.accuracy, std::log10(run.train_energy_kwh)};
}

bool dominates(const store::RunRecord& a, const store::RunRecord& b) {
    return a.accuracy >= b.accuracy && a.train_energy_kwh <= b.train_energy_kwh &&
           (a.accuracy > b.accuracy || a.train_energy_kwh < b.train_energy_kwh);
}

std::vector<store::RunRecord> pareto_frontier(const std::vector<store::RunRecord>& runs) {
    for (const auto& r : runs) {
        if (!(std::isfinite(r.train_energy_kwh) && r.train_energy_kwh > 0.0)) {
            throw ValidationError("run '" + r.run_id + "': training energy must be > 0", "train_energy_kwh");
        }
        if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) {
            throw ValidationError("run '" + r.run_id + "': accuracy must be in [0, 1]", "accuracy");
        }
    }

    std::vector<const store::RunRecord*> sorted;
    sorted.reserve(runs.size());
    for (const auto& r : runs) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        if (a->train_energy_kwh != b->train_energy_kwh) return a->train_energy_kwh < b->train_energy_kwh;
        if (a->accuracy != b->accuracy) return a->accuracy > b->accuracy;
        return a->run_id < b->run_id;
    });

    // Sweep equal-energy blocks: a block's most accurate runs survive iff they
    // beat everything cheaper.
    std::vector<store::RunRecord> frontier;
    double best_cheaper = -1.0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double energy = sorted[i]->train_energy_kwh;
        const double top = sorted[i]->accuracy;
        std::size_t j = i;
        for (; j < sorted.size() && sorted[j]->train_energy_kwh == energy; ++j) {
            if (top > best_cheaper && sorted[j]->accuracy == top) frontier.push_back(*sorted[j]);
        }
        best_cheaper = std::max(best_cheaper, top);
        i = j;
    }
    return frontier;
}

Format parse_format(const std::string& text) {
    if (text == "table-text" || text == "text") return Format::table_text;
    if (text == "csv") return Format::csv;
    if (text == "json") return Format::json;
    throw UsageError("unknown report format '" + text + "' (expected table-text, csv or json)");
}

namespace {

struct GroupView {
    const metric::RankGroup* group;
    std::vector<bool> on_frontier;  // parallel to group->entries
};

std::vector<GroupView> analyse(const metric::Ranking& ranking) {
    std::vector<GroupView> views;
    for (const auto& g : ranking.groups) {
        std::vector<store::RunRecord> runs;
        for (const auto& e : g.entries) runs.push_back(e.run);
        const auto frontier = pareto_frontier(runs);
        GroupView v{&g, {}};
        for (const auto& e : g.entries) {
            v.on_frontier.push_back(std::any_of(frontier.begin(), frontier.end(),
                                                [&](const auto& f) { return f.run_id == e.run.run_id; }));
        }
        views.push_back(std::move(v));
    }
    return views;
}

std::string batch_label(const metric::RankGroup& g) {
    return g.batch_size ? std::to_string(*g.batch_size) : std::string("mixed");
}

std::string render_json(const metric::Ranking& ranking, const std::vector<GroupView>& views,
                        const metric::SamParams& params) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["params"] = {{"alpha", params.alpha}, {"beta", params.beta}};
    doc["groups"] = ordered_json::array();
    for (const auto& v : views) {
        const auto& g = *v.group;
        ordered_json group;
        group["task"] = g.task;
        group["dataset"] = g.dataset;
        group["batch_size"] = g.batch_size ? ordered_json(*g.batch_size) : ordered_json(nullptr);
        group["entries"] = ordered_json::array();
        group["series"] = ordered_json::array();
        for (std::size_t i = 0; i < g.entries.size(); ++i) {
            const auto& e = g.entries[i];
            group["entries"].push_back({{"position", e.position},
                                        {"run_id", e.run.run_id},
                                        {"model", e.run.model},
                                        {"accuracy", e.run.accuracy},
                                        {"train_energy_kwh", e.run.train_energy_kwh},
                                        {"sam", e.score.value},
                                        {"pareto", static_cast<bool>(v.on_frontier[i])},
                                        {"incomparable", e.incomparable}});
            const auto p = to_point(e.run);
            group["series"].push_back({{"run_id", p.run_id}, {"accuracy", p.accuracy}, {"log10_kwh", p.log10_kwh}});
        }
        doc["groups"].push_back(std::move(group));
    }
    doc["warnings"] = ranking.warnings;
    return doc.dump(2) + "\n";
}

std::string render_csv(const std::vector<GroupView>& views) {
    std::string out = "task,dataset,batch_size,position,run_id,model,accuracy,train_energy_kwh,log10_kwh,sam,pareto,"
                      "incomparable\n";
    for (const auto& v : views) {
        const auto& g = *v.group;
        for (std::size_t i = 0; i < g.entries.size(); ++i) {
            const auto& e = g.entries[i];
            out += csv::join({g.task, g.dataset, batch_label(g), std::to_string(e.position), e.run.run_id,
                              e.run.model, csv::format_double(e.run.accuracy),
                              csv::format_double(e.run.train_energy_kwh),
                              csv::format_double(to_point(e.run).log10_kwh), csv::format_double(e.score.value),
                              v.on_frontier[i] ? "true" : "false", e.incomparable ? "true" : "false"});
            out += "\n";
        }
    }
    return out;
}

std::string render_text(const metric::Ranking& ranking, const std::vector<GroupView>& views,
                        const metric::SamParams& params) {
    std::string out = fmt::format("SAM leaderboard (alpha={:.6g}, beta={:.6g})\n", params.alpha, params.beta);
    if (views.empty()) out += "\n(no runs)\n";
    for (const auto& v : views) {
        const auto& g = *v.group;
        std::size_t width = 6;
        for (const auto& e : g.entries) width = std::max({width, e.run.run_id.size(), e.run.model.size()});
        out += fmt::format("\n{} / {} (batch size {})\n", g.task, g.dataset, batch_label(g));
        out += fmt::format("{:>4}  {:<{}}  {:<{}}  {:>10}  {:>12}  {:>10}  {:>10}  {}\n", "#", "run_id", width,
                           "model", width, "accuracy", "energy_kwh", "log10_kwh", "sam", "pareto");
        for (std::size_t i = 0; i < g.entries.size(); ++i) {
            const auto& e = g.entries[i];
            out += fmt::format("{:>4}  {:<{}}  {:<{}}  {:>10.6g}  {:>12.6g}  {:>10.6g}  {:>10.6g}  {}{}\n",
                               e.position, e.run.run_id, width, e.run.model, width, e.run.accuracy,
                               e.run.train_energy_kwh, to_point(e.run).log10_kwh, e.score.value,
                               v.on_frontier[i] ? "*" : "", e.incomparable ? " (incomparable)" : "");
        }
    }
    for (const auto& w : ranking.warnings) out += "warning: " + w + "\n";
    return out;
}

}  // namespace

std::string render_report(const std::vector<store::RunRecord>& runs, const metric::SamParams& params, Format format,
                          bool force) {
    const auto ranking = metric::rank(runs, params, force);
    const auto views = analyse(ranking);
    switch (format) {
        case Format::json:
            return render_json(ranking, views, params);
        case Format::csv:
            return render_csv(views);
        case Format::table_text:
            break;
    }
    return render_text(ranking, views, params);
}

}  // namespace wattrank::report
