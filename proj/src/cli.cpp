#include "wattrank/cli.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "wattrank/csv.hpp"
#include "wattrank/error.hpp"
#include "wattrank/metric.hpp"
#include "wattrank/pipeline.hpp"
#include "wattrank/report.hpp"
#include "wattrank/scaling.hpp"
#include "wattrank/store.hpp"
#include "wattrank/telemetry.hpp"

namespace wattrank::cli {

namespace {

std::string sig6(double v) { return fmt::format("{:.6g}", v); }

double to_fraction(double accuracy, const std::string& unit) {
    if (unit == "percent") return accuracy / 100.0;
    if (accuracy > 1.5) {
        throw ValidationError("accuracy " + sig6(accuracy) +
                                  " looks like a percentage; pass --accuracy-unit percent to convert it",
                              "accuracy");
    }
    return accuracy;
}

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text) || !f.flush()) throw ValidationError("cannot write " + path, "out");
}

struct Filters {
    std::string task;
    std::string dataset;
    std::string model;

    void attach(CLI::App* app) {
        app->add_option("--task", task, "Only runs of this task");
        app->add_option("--dataset", dataset, "Only runs on this dataset");
        app->add_option("--model", model, "Only runs of this model");
    }

    store::RunFilter filter() const {
        store::RunFilter f;
        if (!task.empty()) f.task = task;
        if (!dataset.empty()) f.dataset = dataset;
        if (!model.empty()) f.model = model;
        return f;
    }
};

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err, config::EnvLookup env)
        : out_(out), err_(err), env_(std::move(env)), app_("Measure, extrapolate and rank the electricity cost of "
                                                           "training runs by sustainable accuracy (SAM).",
                                                           "wattrank") {
        app_.require_subcommand(0, 1);
        app_.fallthrough();
        app_.set_version_flag("--version", "wattrank 1.0.0");
        app_.add_option("--store", store_flag_, "Run store (line-delimited records) [env WATTRANK_STORE]");
        app_.add_option("--alpha", alpha_flag_, "Accuracy exponent (default 5) [env WATTRANK_ALPHA]");
        app_.add_option("--beta", beta_flag_, "Score scale (default 5) [env WATTRANK_BETA]");
        app_.add_option("--appliances", appliances_flag_, "Appliance profile file [env WATTRANK_APPLIANCES]");
        app_.add_flag("--lenient", lenient_flag_, "Skip malformed store lines and unknown CSV columns");
        app_.add_option("--config", config_flag_, "JSON config file [env WATTRANK_CONFIG]");
        app_.add_flag("--show-config", show_config_, "Print the resolved configuration");

        add_track();
        add_integrate();
        add_sam();
        add_rank();
        add_pareto();
        add_fit();
        add_predict();
        add_scale();
        add_amortize();
        add_equiv();
        add_import();
        add_export();
        add_ls();
        add_report();
        add_pipeline();
    }

    int run(const std::vector<std::string>& args) {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app_.parse(reversed);
        } catch (const CLI::ParseError& e) {
            const int code = app_.exit(e, out_, err_);
            return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
        }
        try {
            cfg_ = config::resolve(overrides(), env_);
            if (show_config_) out_ << config::describe(cfg_);
            if (!action_) {
                if (show_config_) return 0;
                err_ << app_.help();
                return static_cast<int>(ExitCode::usage);
            }
            return action_();
        } catch (const Error& e) {
            err_ << "wattrank: error: " << e.what() << '\n';
            return static_cast<int>(e.exit_code());
        } catch (const std::exception& e) {
            err_ << "wattrank: error: " << e.what() << '\n';
            return static_cast<int>(ExitCode::validation);
        }
    }

private:
    config::Overrides overrides() const {
        config::Overrides o;
        if (!store_flag_.empty()) o.store_path = store_flag_;
        o.alpha = alpha_flag_;
        o.beta = beta_flag_;
        if (!appliances_flag_.empty()) o.appliance_file = appliances_flag_;
        if (lenient_flag_) o.lenient = true;
        if (!config_flag_.empty()) o.config_file = config_flag_;
        return o;
    }

    metric::SamParams params() const { return {cfg_.alpha, cfg_.beta}; }

    std::vector<store::RunRecord> load(const Filters& filters) const {
        store::LoadOptions opts;
        opts.lenient = cfg_.lenient;
        auto result = store::load_runs(cfg_.store_path, filters.filter(), opts);
        if (result.skipped_lines > 0) {
            err_ << "wattrank: warning: skipped " << result.skipped_lines << " malformed store line(s)\n";
        }
        if (result.partial_tail) err_ << "wattrank: warning: ignored a partially written final store line\n";
        return std::move(result.records);
    }

    void on(CLI::App* sub, std::function<int()> fn) {
        sub->callback([this, fn = std::move(fn)] { action_ = fn; });
    }

    // -- track --------------------------------------------------------------

    void add_track() {
        struct Opts {
            int interval_ms = telemetry::kDefaultIntervalMs;
            std::string provider = "live:rapl";
            std::optional<double> baseline_w;
            std::string out_path;
            std::string record_path;
            std::optional<std::string> run_id, model, task, dataset, hardware, notes;
            std::optional<std::int64_t> batch_size, gpu_count;
            std::optional<double> epochs, data_fraction, accuracy;
            std::string accuracy_unit = "fraction";
            std::vector<std::string> command;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("track", "Run a command while sampling power; write its trace");
        sub->add_option("--interval-ms", o->interval_ms, "Polling interval")->capture_default_str();
        sub->add_option("--provider", o->provider, "replay:<file> | synthetic:<watts>[,...] | live:<selector>")
            ->capture_default_str();
        sub->add_option("--baseline-w", o->baseline_w, "Idle power subtracted before integration");
        sub->add_option("--out", o->out_path, "Trace CSV to write");
        sub->add_option("--record", o->record_path, "Append a run record to this store");
        sub->add_option("--run-id", o->run_id);
        sub->add_option("--model", o->model);
        sub->add_option("--task", o->task);
        sub->add_option("--dataset", o->dataset);
        sub->add_option("--hardware", o->hardware);
        sub->add_option("--gpu-count", o->gpu_count);
        sub->add_option("--batch-size", o->batch_size);
        sub->add_option("--epochs", o->epochs);
        sub->add_option("--data-fraction", o->data_fraction);
        sub->add_option("--accuracy", o->accuracy);
        sub->add_option("--accuracy-unit", o->accuracy_unit)->check(CLI::IsMember({"fraction", "percent"}));
        sub->add_option("--notes", o->notes);
        sub->add_option("command", o->command, "Command to run, after --");
        on(sub, [this, o] {
            if (o->command.empty()) throw UsageError("track needs a command: wattrank track [flags] -- <command...>");
            auto descriptor = telemetry::parse_provider(o->provider, o->interval_ms);

            store::RunDraft draft;
            draft.run_id = o->run_id;
            draft.model = o->model;
            draft.task = o->task;
            draft.dataset = o->dataset;
            draft.hardware = o->hardware;
            draft.gpu_count = o->gpu_count;
            draft.batch_size = o->batch_size;
            draft.epochs = o->epochs;
            draft.data_fraction = o->data_fraction;
            if (o->accuracy) draft.accuracy = to_fraction(*o->accuracy, o->accuracy_unit);
            draft.notes = o->notes;
            if (!o->record_path.empty() && !draft.accuracy) {
                throw ValidationError("--record needs --accuracy for the run record", "accuracy");
            }

            auto outcome = telemetry::track(o->command, descriptor, draft);
            for (const auto& w : outcome.warnings) err_ << "wattrank: warning: " << w << '\n';
            if (!o->out_path.empty()) telemetry::write_trace_file(o->out_path, outcome.trace);

            std::optional<EnergyKwh> energy;
            if (validate_trace(outcome.trace).empty()) energy = integrate_trace(outcome.trace, o->baseline_w);
            err_ << fmt::format("wattrank: {} samples over {} s, {} kWh, exit code {}\n", outcome.trace.samples.size(),
                                sig6(outcome.wall_seconds), energy ? sig6(energy->value()) : "n/a (insufficient samples)",
                                outcome.child_exit_code);

            if (!o->record_path.empty()) {
                if (!energy) throw ValidationError("trace cannot be integrated; no run recorded", "trace");
                auto d = outcome.run_skeleton;
                if (!d.run_id) d.run_id = d.model.value_or("run") + "-" + std::to_string(outcome.spawn_ms);
                d.train_energy_kwh = energy->value();
                store::append_run(o->record_path, store::complete(d));
                err_ << "wattrank: recorded run '" << *d.run_id << "' in " << o->record_path << '\n';
            }
            return outcome.child_exit_code;
        });
    }

    // -- integrate ----------------------------------------------------------

    void add_integrate() {
        struct Opts {
            std::string trace;
            std::optional<double> baseline_w;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("integrate", "Integrate a trace CSV into kWh");
        sub->add_option("trace", o->trace, "Trace CSV (timestamp_ms,device_id,power_w)")->required();
        sub->add_option("--baseline-w", o->baseline_w, "Idle power subtracted per sample");
        on(sub, [this, o] {
            auto replayed = telemetry::replay(o->trace);
            if (!replayed.violations.empty()) {
                for (const auto& v : replayed.violations) {
                    err_ << fmt::format("wattrank: {}: device '{}', sample {}\n", v.rule, v.device_id, v.index);
                }
                throw ValidationError("trace violates " + std::to_string(replayed.violations.size()) + " rule(s)",
                                      "trace");
            }
            out_ << sig6(integrate_trace(replayed.trace, o->baseline_w).value()) << '\n';
            return 0;
        });
    }

    // -- sam ----------------------------------------------------------------

    void add_sam() {
        struct Opts {
            double accuracy = 0.0;
            double kwh = 0.0;
            std::string unit = "fraction";
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("sam", "Score one (accuracy, electricity) pair");
        sub->add_option("--accuracy", o->accuracy, "Accuracy (fraction unless --accuracy-unit percent)")->required();
        sub->add_option("--kwh", o->kwh, "Training electricity in kWh")->required();
        sub->add_option("--accuracy-unit", o->unit)->check(CLI::IsMember({"fraction", "percent"}));
        on(sub, [this, o] {
            out_ << sig6(metric::sam(to_fraction(o->accuracy, o->unit), EnergyKwh(o->kwh), params())) << '\n';
            return 0;
        });
    }

    // -- rank ---------------------------------------------------------------

    void add_rank() {
        struct Opts {
            Filters filters;
            bool force = false;
            std::vector<double> sweep;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("rank", "Rank stored runs by SAM within comparability groups");
        o->filters.attach(sub);
        sub->add_flag("--force", o->force, "Rank groups with mixed batch sizes (entries are flagged)");
        sub->add_option("--sweep-alpha", o->sweep, "Comma-separated alphas for a sensitivity sweep")->delimiter(',');
        on(sub, [this, o] {
            const auto runs = load(o->filters);
            if (!o->sweep.empty()) {
                const auto sweep = metric::sam_sweep(runs, o->sweep, cfg_.beta, o->force);
                for (const auto& row : sweep.rows) {
                    out_ << "alpha = " << sig6(row.alpha) << '\n';
                    print_ranking(row.ranking);
                }
                if (sweep.crossovers.empty()) out_ << "no rank changes across the sweep\n";
                for (const auto& c : sweep.crossovers) {
                    out_ << fmt::format("order changes between alpha={} and alpha={} in {} / {}\n",
                                        sig6(c.alpha_low), sig6(c.alpha_high), c.task, c.dataset);
                }
                return 0;
            }
            const auto ranking = metric::rank(runs, params(), o->force);
            print_ranking(ranking);
            for (const auto& w : ranking.warnings) err_ << "wattrank: warning: " << w << '\n';
            return 0;
        });
    }

    void print_ranking(const metric::Ranking& ranking) {
        for (const auto& g : ranking.groups) {
            out_ << fmt::format("{} / {} (batch size {})\n", g.task, g.dataset,
                                g.batch_size ? std::to_string(*g.batch_size) : "mixed");
            for (const auto& e : g.entries) {
                out_ << fmt::format("  {:>3}. {:<24} {:<20} sam={:<10} kwh={}{}\n", e.position, e.run.run_id,
                                    e.run.model, sig6(e.score.value), sig6(e.score.electricity_used_kwh),
                                    e.incomparable ? "  [incomparable batch size]" : "");
            }
        }
    }

    // -- pareto -------------------------------------------------------------

    void add_pareto() {
        struct Opts {
            Filters filters;
            std::string format = "text";
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("pareto", "Runs on the accuracy/energy Pareto frontier");
        o->filters.attach(sub);
        sub->add_option("--format", o->format)->check(CLI::IsMember({"text", "csv"}));
        on(sub, [this, o] {
            const auto frontier = report::pareto_frontier(load(o->filters));
            if (o->format == "csv") out_ << "run_id,model,accuracy,train_energy_kwh,log10_kwh\n";
            for (const auto& r : frontier) {
                const auto p = report::to_point(r);
                if (o->format == "csv") {
                    out_ << csv::join({r.run_id, r.model, csv::format_double(r.accuracy),
                                       csv::format_double(r.train_energy_kwh), csv::format_double(p.log10_kwh)})
                         << '\n';
                } else {
                    out_ << fmt::format("{:<24} {:<20} accuracy={:<10} kwh={:<12} log10_kwh={}\n", r.run_id, r.model,
                                        sig6(r.accuracy), sig6(r.train_energy_kwh), sig6(p.log10_kwh));
                }
            }
            return 0;
        });
    }

    // -- fit / predict / scale / amortize -----------------------------------

    void add_fit() {
        struct Opts {
            std::string kind;
            std::string file;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("fit", "Least-squares line through probe energies (CSV x,energy_kwh)");
        sub->add_option("--x", o->kind, "Abscissa: epochs or fraction")
            ->required()
            ->check(CLI::IsMember({"epochs", "fraction"}));
        sub->add_option("probes", o->file, "Probe CSV with header x,energy_kwh")->required();
        on(sub, [this, o] {
            std::istringstream in(read_input(o->file));
            const auto rows = csv::read(in);
            if (rows.empty() || csv::join(rows.front().fields) != "x,energy_kwh") {
                throw SchemaError("probe CSV must start with header 'x,energy_kwh'");
            }
            std::vector<scaling::ProbePoint> points;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                const auto& r = rows[i];
                if (r.fields.size() != 2) throw ParseError("expected 2 fields", r.line);
                points.push_back({csv::parse_double(r.fields[0], "x", r.line),
                                  csv::parse_double(r.fields[1], "energy_kwh", r.line)});
            }
            const auto fit = scaling::fit_linear(points, scaling::parse_fit_kind(o->kind));
            out_ << "kind: " << scaling::to_string(fit.kind) << '\n'
                 << "slope: " << sig6(fit.slope) << '\n'
                 << "intercept: " << sig6(fit.intercept) << '\n'
                 << "r_squared: " << sig6(fit.r_squared) << '\n'
                 << "n_points: " << fit.n_points << '\n';
            return 0;
        });
    }

    void add_predict() {
        struct Opts {
            double slope = 0.0;
            double intercept = 0.0;
            double at = 0.0;
            std::optional<double> x_min, x_max;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("predict", "Evaluate a fitted line at x");
        sub->add_option("--slope", o->slope)->required();
        sub->add_option("--intercept", o->intercept)->required();
        sub->add_option("--at", o->at)->required();
        sub->add_option("--x-min", o->x_min, "Lower end of the fitted range");
        sub->add_option("--x-max", o->x_max, "Upper end of the fitted range");
        on(sub, [this, o] {
            scaling::LinearFit fit;
            fit.slope = o->slope;
            fit.intercept = o->intercept;
            fit.x_min = o->x_min;
            fit.x_max = o->x_max;
            const auto p = scaling::predict(fit, o->at);
            if (p.warning) err_ << "wattrank: warning: " << *p.warning << '\n';
            if (p.extrapolated) err_ << "wattrank: note: x is outside the fitted range (extrapolation)\n";
            out_ << sig6(p.energy.value()) << '\n';
            return 0;
        });
    }

    void add_scale() {
        struct Opts {
            double probe_kwh = 0, probe_fraction = 0, probe_epochs = 0, target_fraction = 0, target_epochs = 0;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("scale", "Extrapolate a probe run to the full data fraction and epochs");
        sub->add_option("--probe-kwh", o->probe_kwh)->required();
        sub->add_option("--probe-fraction", o->probe_fraction)->required();
        sub->add_option("--probe-epochs", o->probe_epochs)->required();
        sub->add_option("--target-fraction", o->target_fraction)->required();
        sub->add_option("--target-epochs", o->target_epochs)->required();
        on(sub, [this, o] {
            const auto e = scaling::proportional_scale(EnergyKwh(o->probe_kwh), o->probe_fraction, o->probe_epochs,
                                                       o->target_fraction, o->target_epochs);
            out_ << sig6(e.value()) << '\n';
            return 0;
        });
    }

    void add_amortize() {
        struct Opts {
            double pretrain = 0, finetune = 0, inference = 0;
            long long tasks = 1;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("amortize", "Share pretraining energy across downstream tasks");
        sub->add_option("--pretrain-kwh", o->pretrain)->required();
        sub->add_option("--tasks", o->tasks, "Number of downstream tasks")->required();
        sub->add_option("--finetune-kwh", o->finetune)->required();
        sub->add_option("--inference-kwh", o->inference)->capture_default_str();
        on(sub, [this, o] {
            const auto c = scaling::amortize(EnergyKwh(o->pretrain), o->tasks, EnergyKwh(o->finetune),
                                             EnergyKwh(o->inference));
            out_ << "pretrain_share_kwh: " << sig6(c.pretrain_share_kwh) << '\n'
                 << "finetune_kwh: " << sig6(c.finetune_kwh) << '\n'
                 << "inference_kwh: " << sig6(c.inference_kwh) << '\n'
                 << "total_kwh: " << sig6(c.total_kwh) << '\n';
            return 0;
        });
    }

    // -- equiv --------------------------------------------------------------

    void add_equiv() {
        struct Opts {
            double kwh = 0.0;
            std::string appliances;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("equiv", "Express energy as months of appliance consumption");
        sub->add_option("--kwh", o->kwh)->required();
        on(sub, [this, o] {
            if (!cfg_.appliance_file) throw UsageError("equiv needs --appliances <file>");
            const auto profiles = report::load_appliances(*cfg_.appliance_file);
            for (const auto& e : report::appliance_equiv(EnergyKwh(o->kwh), profiles)) {
                out_ << e.name << ": " << sig6(e.months) << " months\n";
            }
            return 0;
        });
    }

    // -- store --------------------------------------------------------------

    void add_import() {
        struct Opts {
            std::string file;
            std::string unit = "fraction";
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("import", "Append runs from a CSV file to the store");
        sub->add_option("csv", o->file, "CSV file ('-' for stdin)")->required();
        sub->add_option("--accuracy-unit", o->unit, "Unit of the accuracy column")
            ->check(CLI::IsMember({"fraction", "percent"}));
        on(sub, [this, o] {
            store::CsvImportOptions opts;
            opts.lenient = cfg_.lenient;
            opts.accuracy_unit = o->unit == "percent" ? store::AccuracyUnit::percent : store::AccuracyUnit::fraction;
            const auto records = store::import_csv(read_input(o->file), opts);
            store::append_runs(cfg_.store_path, records);
            out_ << "imported " << records.size() << " run(s) into " << cfg_.store_path.string() << '\n';
            return 0;
        });
    }

    void add_export() {
        struct Opts {
            Filters filters;
            std::string out_path;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("export", "Write stored runs as CSV");
        o->filters.attach(sub);
        sub->add_option("--out", o->out_path, "Output file (default stdout)");
        on(sub, [this, o] {
            write_output(o->out_path, store::export_csv(load(o->filters)), out_);
            return 0;
        });
    }

    void add_ls() {
        auto filters = std::make_shared<Filters>();
        auto* sub = app_.add_subcommand("ls", "List stored runs");
        filters->attach(sub);
        on(sub, [this, filters] {
            for (const auto& r : load(*filters)) {
                out_ << fmt::format("{:<24} {:<20} {:<22} {:<14} batch={:<5} accuracy={:<9} kwh={}\n", r.run_id,
                                    r.model, r.task, r.dataset, r.batch_size, sig6(r.accuracy),
                                    sig6(r.train_energy_kwh));
            }
            return 0;
        });
    }

    // -- report -------------------------------------------------------------

    void add_report() {
        struct Opts {
            Filters filters;
            std::string format = "table-text";
            std::string out_path;
            bool force = false;
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("report", "Leaderboard, Pareto flags and plot series per group");
        o->filters.attach(sub);
        sub->add_option("--format", o->format)->check(CLI::IsMember({"table-text", "csv", "json"}));
        sub->add_option("--out", o->out_path, "Output file (default stdout)");
        sub->add_flag("--force", o->force, "Rank groups with mixed batch sizes (entries are flagged)");
        on(sub, [this, o] {
            const auto doc = report::render_report(load(o->filters), params(), report::parse_format(o->format),
                                                   o->force);
            write_output(o->out_path, doc, out_);
            return 0;
        });
    }

    // -- pipeline -----------------------------------------------------------

    void add_pipeline() {
        struct Opts {
            std::string trace;
            std::optional<double> baseline_w;
            double probe_fraction = 0, probe_epochs = 0, target_fraction = 0, target_epochs = 0, accuracy = 0;
            std::string unit = "fraction";
        };
        auto o = std::make_shared<Opts>();
        auto* sub = app_.add_subcommand("pipeline", "Probe trace -> extrapolated kWh -> SAM");
        sub->add_option("--trace", o->trace, "Probe run trace CSV")->required();
        sub->add_option("--baseline-w", o->baseline_w);
        sub->add_option("--probe-fraction", o->probe_fraction)->required();
        sub->add_option("--probe-epochs", o->probe_epochs)->required();
        sub->add_option("--target-fraction", o->target_fraction)->required();
        sub->add_option("--target-epochs", o->target_epochs)->required();
        sub->add_option("--accuracy", o->accuracy)->required();
        sub->add_option("--accuracy-unit", o->unit)->check(CLI::IsMember({"fraction", "percent"}));
        on(sub, [this, o] {
            pipeline::ProbeToSamInputs in;
            in.baseline_w = o->baseline_w;
            in.probe_fraction = o->probe_fraction;
            in.probe_epochs = o->probe_epochs;
            in.target_fraction = o->target_fraction;
            in.target_epochs = o->target_epochs;
            in.accuracy = to_fraction(o->accuracy, o->unit);
            in.params = params();
            const auto replayed = telemetry::replay(o->trace);
            try {
                const auto r = pipeline::probe_to_sam(replayed.trace, in);
                out_ << "probe_kwh: " << sig6(r.probe_kwh.value()) << '\n'
                     << "extrapolated_kwh: " << sig6(r.extrapolated_kwh.value()) << '\n'
                     << "sam: " << sig6(r.score.value) << '\n';
            } catch (const pipeline::UndefinedAfterScaling& e) {
                out_ << "probe_kwh: " << sig6(e.probe_kwh.value()) << '\n'
                     << "extrapolated_kwh: " << sig6(e.extrapolated_kwh.value()) << '\n';
                throw;
            }
            return 0;
        });
    }

    std::ostream& out_;
    std::ostream& err_;
    config::EnvLookup env_;
    CLI::App app_;
    config::GlobalConfig cfg_;
    std::function<int()> action_;

    std::string store_flag_;
    std::optional<double> alpha_flag_;
    std::optional<double> beta_flag_;
    std::string appliances_flag_;
    bool lenient_flag_ = false;
    std::string config_flag_;
    bool show_config_ = false;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const config::EnvLookup& env) {
    Cli cli(out, err, env);
    return cli.run(args);
}

}  // namespace wattrank::cli
