// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <unistd.h>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "wattrank/core.hpp"
#include "wattrank/metric.hpp"
#include "wattrank/pipeline.hpp"
#include "wattrank/report.hpp"
#include "wattrank/scaling.hpp"
#include "wattrank/store.hpp"
#include "wattrank/telemetry.hpp"

namespace fs = std::filesystem;
using namespace wattrank;
using wattrank::testing::rel_close;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

struct Criterion {
    int number;
    std::string title;
    double budget_seconds;  // 0 means no runtime bound
    std::function<Outcome()> check;
};

std::vector<std::string> order(const metric::RankGroup& g) {
    std::vector<std::string> ids;
    for (const auto& e : g.entries) ids.push_back(e.run.run_id);
    return ids;
}

Outcome published_within(const std::vector<store::RunRecord>& runs,
                         const std::vector<wattrank::testing::Published>& expected) {
    Outcome out;
    double worst = 0.0;
    for (const auto& pub : expected) {
        auto it = std::find_if(runs.begin(), runs.end(), [&](const auto& r) { return r.run_id == pub.run_id; });
        if (it == runs.end()) {
            out.fail(std::string("missing fixture row ") + pub.run_id);
            continue;
        }
        const double got = metric::score(*it).value;
        worst = std::max(worst, std::abs(got - pub.sam));
        if (std::abs(got - pub.sam) > 0.002) out.fail(fmt::format("{}: {:.4f} vs {:.3f}", pub.run_id, got, pub.sam));
    }
    if (out.pass) out.detail = fmt::format("{} rows, max |diff| {:.5f}", expected.size(), worst);
    return out;
}

Outcome segmentation_scores() {
    return published_within(wattrank::testing::segmentation_runs(), wattrank::testing::published_segmentation());
}

Outcome action_recognition_scores() {
    return published_within(wattrank::testing::action_recognition_runs(),
                            wattrank::testing::published_action_recognition());
}

Outcome ranking() {
    Outcome out;
    const auto cityscapes =
        metric::rank(wattrank::testing::only_dataset(wattrank::testing::segmentation_runs(), "Cityscapes"));
    const std::vector<std::string> expected{"seg-cityscapes-mask2former", "seg-cityscapes-bisenet",
                                            "seg-cityscapes-deeplabv3",   "seg-cityscapes-pspnet",
                                            "seg-cityscapes-setr",        "seg-cityscapes-segmenter"};
    if (cityscapes.groups.size() != 1 || order(cityscapes.groups[0]) != expected) out.fail("Cityscapes order differs");

    const auto ssv2 = metric::rank(wattrank::testing::only_dataset(wattrank::testing::action_recognition_runs(), "SSv2"));
    if (ssv2.groups.size() != 1) {
        out.fail("SSv2 did not form one group");
    } else {
        const auto ids = order(ssv2.groups[0]);
        if (ids.size() != 7 || ids.front() != "ar-ssv2-tsm" || ids.back() != "ar-ssv2-trn") {
            out.fail("SSv2 order: " + ids.front() + " first, " + ids.back() + " last");
        }
    }
    if (out.pass) out.detail = "Cityscapes 6/6 positions, SSv2 TSM first and TRN last";
    return out;
}

Outcome metric_properties() {
    Outcome out;
    std::mt19937_64 rng(20240);
    std::uniform_real_distribution<double> acc(0.0, 1.0), log_kwh(1e-6, 6.0), exponent(0.1, 10.0);
    auto kwh = [&] { return std::pow(10.0, log_kwh(rng)); };
    long cases = 0;

    for (int i = 0; i < 4000 && out.pass; ++i, ++cases) {
        const double a = acc(rng), e = kwh();
        const metric::SamParams p{exponent(rng), exponent(rng)};
        const double v = metric::sam(a, EnergyKwh(e), p);
        if (!(v >= 0.0)) out.fail("negative score");
        if (!rel_close(v, p.beta * metric::sam(a, EnergyKwh(e), {p.alpha, 1.0}), 1e-12)) out.fail("beta linearity");
    }
    for (int i = 0; i < 5000 && out.pass; ++i) {
        double a1 = acc(rng), a2 = acc(rng), e1 = kwh(), e2 = kwh();
        if (a1 > a2) std::swap(a1, a2);
        if (e1 > e2) std::swap(e1, e2);
        if (a1 == a2 || a1 == 0.0 || e1 == e2) continue;
        ++cases;
        if (!(metric::sam(a1, EnergyKwh(e1)) < metric::sam(a2, EnergyKwh(e1)))) out.fail("accuracy monotonicity");
        if (!(metric::sam(a2, EnergyKwh(e1)) > metric::sam(a2, EnergyKwh(e2)))) out.fail("electricity monotonicity");
    }
    for (int i = 0; i < 500 && out.pass; ++i, ++cases) {
        std::vector<store::RunRecord> runs;
        for (int k = 0; k < 10; ++k) {
            store::RunRecord r;
            r.run_id = "r" + std::to_string(k);
            r.accuracy = acc(rng);
            r.train_energy_kwh = 1.5 + kwh();
            runs.push_back(r);
        }
        const double alpha = exponent(rng);
        if (order(metric::rank(runs, {alpha, 1.0}).groups[0]) != order(metric::rank(runs, {alpha, exponent(rng)}).groups[0])) {
            out.fail("beta changed a ranking");
        }
    }
    for (int i = 0; i < 2000 && out.pass; ++i) {
        const double acc_b = std::uniform_real_distribution<double>(0.05, 0.9)(rng);
        const double acc_a = std::uniform_real_distribution<double>(acc_b + 0.01, 1.0)(rng);
        const double kwh_b = 1.5 + kwh();
        const double kwh_a = kwh_b * std::uniform_real_distribution<double>(1.5, 100.0)(rng);
        const double root = wattrank::testing::bisect_crossover(acc_a, kwh_a, acc_b, kwh_b, 1e-3, 1e3);
        if (root >= 999.0 || root <= 2e-3) continue;
        ++cases;
        for (double alpha : {root * 1.01, root * 2.0, root + 10.0}) {
            if (!(metric::sam(acc_a, EnergyKwh(kwh_a), {alpha, 1.0}) > metric::sam(acc_b, EnergyKwh(kwh_b), {alpha, 1.0}))) {
                out.fail("alpha crossover direction");
            }
        }
    }
    if (cases < 10'000) out.fail(fmt::format("only {} cases", cases));
    if (out.pass) out.detail = fmt::format("{} randomized cases", cases);
    return out;
}

Outcome integration() {
    Outcome out;
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> watts(0.0, 1000.0);
    std::uniform_int_distribution<std::int64_t> span(1, 36'000'000), step(1, 5000);
    for (int i = 0; i < 1000 && out.pass; ++i) {
        const double p0 = watts(rng), p1 = watts(rng);
        const auto ms = span(rng);
        const EnergyTrace flat{{{0, "g", p0}, {ms, "g", p0}}};
        const EnergyTrace ramp{{{0, "g", p0}, {ms, "g", p1}}};
        const double secs = static_cast<double>(ms) / 1000.0;
        if (!rel_close(integrate_trace(flat).value(), wattrank::testing::constant_power_kwh(p0, secs), 1e-12)) {
            out.fail("constant profile");
        }
        if (!rel_close(integrate_trace(ramp).value(), wattrank::testing::linear_ramp_kwh(p0, p1, secs), 1e-12)) {
            out.fail("ramp profile");
        }
    }
    for (int i = 0; i < 300 && out.pass; ++i) {
        EnergyTrace a, b, both;
        std::int64_t ts = 0;
        for (int k = 0; k < 50; ++k, ts += step(rng)) {
            a.samples.push_back({ts, "gpu0", watts(rng)});
            b.samples.push_back({ts + 3, "gpu1", watts(rng)});
            both.samples.push_back(a.samples.back());
            both.samples.push_back(b.samples.back());
        }
        const auto cut = static_cast<std::ptrdiff_t>(1 + i % 48);
        const EnergyTrace left{{a.samples.begin(), a.samples.begin() + cut + 1}};
        const EnergyTrace right{{a.samples.begin() + cut, a.samples.end()}};
        const double whole = integrate_trace(a).value();
        if (!rel_close(whole, integrate_trace(left).value() + integrate_trace(right).value(), 1e-12)) {
            out.fail("additivity under splitting");
        }
        if (!rel_close(integrate_trace(both).value(), whole + integrate_trace(b).value(), 1e-12)) {
            out.fail("multi-device summation");
        }
    }
    if (out.pass) out.detail = "1000 closed-form profiles, 300 split and multi-device traces";
    return out;
}

Outcome scaling_suite() {
    Outcome out;
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> value(0.0, 1e4);
    std::uniform_int_distribution<int> count(2, 100);
    for (int i = 0; i < 1000 && out.pass; ++i) {
        std::vector<scaling::ProbePoint> pts;
        std::vector<std::pair<double, double>> raw;
        for (int k = count(rng); k > 0; --k) {
            const double x = std::max(value(rng), 1e-3), y = value(rng);
            pts.push_back({x, y});
            raw.emplace_back(x, y);
        }
        const auto fit = scaling::fit_linear(pts, scaling::FitKind::epochs);
        const auto ref = wattrank::testing::normal_equations(raw);
        if (!wattrank::testing::rel_close_floor(fit.slope, static_cast<double>(ref.slope), 1e-9, 1.0) ||
            !wattrank::testing::rel_close_floor(fit.intercept, static_cast<double>(ref.intercept), 1e-9, 1.0)) {
            out.fail(fmt::format("OLS differs from oracle on instance {}", i));
        }
    }
    std::uniform_real_distribution<double> energy(1e-6, 1e3), epochs(0.5, 300.0);
    for (int i = 0; i < 5000 && out.pass; ++i) {
        const EnergyKwh probe(energy(rng));
        const double e1 = epochs(rng), e2 = epochs(rng), e3 = epochs(rng);
        if (scaling::proportional_scale(probe, 0.25, e1, 0.25, e1).value() != probe.value()) out.fail("identity");
        const auto chained = scaling::proportional_scale(scaling::proportional_scale(probe, 0.01, e1, 0.1, e2), 0.1, e2, 1.0, e3);
        if (!rel_close(chained.value(), scaling::proportional_scale(probe, 0.01, e1, 1.0, e3).value(), 1e-12)) {
            out.fail("composition");
        }
    }
    for (int i = 1; i <= 200 && out.pass; ++i) {
        EnergyTrace trace;
        for (int k = 0; k < 40; ++k) trace.samples.push_back({k * 60'000LL, "gpu0", 20.0 + (k * i % 29) * 7.5});
        pipeline::ProbeToSamInputs in;
        in.probe_fraction = 0.01;
        in.target_epochs = 10 + i;
        in.accuracy = 0.4 + i / 400.0;
        const auto full = scaling::proportional_scale(integrate_trace(trace), in.probe_fraction, in.probe_epochs,
                                                      in.target_fraction, in.target_epochs);
        const double manual = metric::sam(in.accuracy, full, in.params);
        const double piped = pipeline::probe_to_sam(trace, in).score.value;
        if (std::memcmp(&manual, &piped, sizeof manual) != 0) out.fail("pipeline differs from composition");
    }
    if (out.pass) out.detail = "1000 OLS instances, 5000 scale cases, 200 bit-equal pipelines";
    return out;
}

Outcome pareto() {
    Outcome out;
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> size(0, 200), grid(1, 25);
    for (int set = 0; set < 500 && out.pass; ++set) {
        std::vector<store::RunRecord> runs;
        std::vector<std::pair<double, double>> raw;
        const bool gridded = set % 2 == 0;
        for (int i = size(rng); i > 0; --i) {
            store::RunRecord r;
            r.run_id = "r" + std::to_string(runs.size());
            r.accuracy = gridded ? grid(rng) / 25.0 : std::uniform_real_distribution<double>(0, 1)(rng);
            r.train_energy_kwh = gridded ? grid(rng) * 4.0 : std::uniform_real_distribution<double>(0.01, 1e4)(rng);
            raw.emplace_back(r.accuracy, r.train_energy_kwh);
            runs.push_back(std::move(r));
        }
        std::set<std::string> expected, got;
        for (auto i : wattrank::testing::brute_force_frontier(raw)) expected.insert(runs[i].run_id);
        for (const auto& r : report::pareto_frontier(runs)) got.insert(r.run_id);
        if (got != expected) out.fail(fmt::format("set {} differs from brute force", set));
    }
    const auto cityscapes = wattrank::testing::only_dataset(wattrank::testing::segmentation_runs(), "Cityscapes");
    for (const auto& r : report::pareto_frontier(cityscapes)) {
        if (r.run_id == "seg-cityscapes-segmenter") out.fail("Segmenter on the Cityscapes frontier");
    }
    if (out.pass) out.detail = "500 random sets match, Segmenter excluded";
    return out;
}

Outcome persistence() {
    Outcome out;
    const auto dir = fs::temp_directory_path() / ("wattrank-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto store_path = dir / "runs.jsonl";

    wattrank::testing::RecordGenerator gen(8);
    std::vector<store::RunRecord> appended;
    for (int batch = 0; batch < 100 && out.pass; ++batch) {
        auto records = gen.records(5);
        for (auto& r : records) r.run_id = fmt::format("b{}-{}", batch, r.run_id);
        if (store::import_csv(store::export_csv(records)) != records) out.fail("CSV round trip changed a record");
        store::append_runs(store_path, records);
        appended.insert(appended.end(), records.begin(), records.end());
        if (store::load_runs(store_path).records != appended) out.fail("append/load changed a record");
    }

    // A "---" cell is absent; a literal 0 stays 0 through both formats.
    const auto dashed = store::import_csv(
        "run_id,model,task,dataset,batch_size,accuracy,train_energy_kwh,test_energy_kwh\n"
        "absent,TRN,action-recognition,K400,8,0.4765,100.5043,---\n"
        "zero,TRN,action-recognition,K400,8,0.4765,100.5043,0\n");
    const auto second = dir / "dashed.jsonl";
    store::append_runs(second, dashed);
    const auto reloaded = store::load_runs(second).records;
    const auto via_csv = store::import_csv(store::export_csv(dashed));
    for (const auto& set : {reloaded, via_csv}) {
        if (set.size() != 2 || set[0].test_energy_kwh.has_value() || set[1].test_energy_kwh != 0.0) {
            out.fail("absent and zero optional energies were conflated");
        }
    }
    fs::remove_all(dir);
    if (out.pass) out.detail = fmt::format("{} random records, absent vs zero preserved", appended.size());
    return out;
}

Outcome tracking() {
    Outcome out;
    telemetry::SyntheticProvider provider({50.0});
    const auto run = telemetry::track({"sh", "-c", "sleep 2; exit 7"}, provider, std::chrono::milliseconds(100));
    const auto n = run.trace.samples.size();
    if (n < 18 || n > 22) out.fail(fmt::format("{} samples", n));
    if (run.child_exit_code != 7) out.fail(fmt::format("exit code {} instead of 7", run.child_exit_code));
    try {
        const double kwh = integrate_trace(run.trace).value();
        if (!rel_close(kwh, wattrank::testing::constant_power_kwh(
                                50.0, static_cast<double>(run.trace.samples.back().timestamp_ms -
                                                          run.trace.samples.front().timestamp_ms) /
                                          1000.0),
                       1e-9)) {
            out.fail("integral differs from 50 W over the sampled span");
        }
    } catch (const std::exception& e) {
        out.fail(std::string("trace not integrable: ") + e.what());
    }
    if (out.pass) out.detail = fmt::format("{} samples over {:.2f} s, exit 7 passed through", n, run.wall_seconds);
    return out;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "Segmentation score regression", 1.0, segmentation_scores},
        {2, "Action-recognition score regression", 1.0, action_recognition_scores},
        {3, "Ranking reproduction", 0.0, ranking},
        {4, "Metric property suite", 10.0, metric_properties},
        {5, "Integration oracle suite", 1.0, integration},
        {6, "Scaling suite", 0.0, scaling_suite},
        {7, "Pareto oracle", 5.0, pareto},
        {8, "Persistence round-trip", 0.0, persistence},
        {9, "End-to-end track smoke", 0.0, tracking},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto started = std::chrono::steady_clock::now();
        Outcome result;
        try {
            result = c.check();
        } catch (const std::exception& e) {
            result.fail(std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (c.budget_seconds > 0.0 && seconds >= c.budget_seconds) {
            result.fail(fmt::format("took {:.2f} s, budget {:.0f} s", seconds, c.budget_seconds));
        }
        if (!result.pass) ++failures;
        std::cout << fmt::format("{} AC{} {}: {} ({:.3f} s)\n", result.pass ? "PASS" : "FAIL", c.number, c.title,
                                 result.detail, seconds);
    }
    std::cout << fmt::format("{}/{} acceptance criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
