// Command-line surface for the repair toolkit: CSV in, CSV out, one
// self-describing JSON record per run on stdout.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imr/imr.hpp"

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("IMR_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

imr::Backend parse_backend(const std::string& name) {
    if (name == "full") return imr::Backend::full;
    if (name == "pruned") return imr::Backend::pruned;
    if (name == "incremental") return imr::Backend::incremental;
    throw imr::InputError("unknown backend '" + name + "'");
}

imr::ErrorKind parse_error_kind(const std::string& name) {
    if (name == "shift") return imr::ErrorKind::shift;
    if (name == "innovational") return imr::ErrorKind::innovational;
    if (name == "spike") return imr::ErrorKind::spike;
    throw imr::InputError("unknown error kind '" + name + "'");
}

imr::LabelingMode parse_label_mode(const std::string& name) {
    if (name == "uniform") return imr::LabelingMode::uniform;
    if (name == "prefix") return imr::LabelingMode::prefix;
    throw imr::InputError("unknown labeling mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// repair

struct RepairOptions {
    std::string input;
    std::string output;
    std::string method = "imr";
    std::size_t order = 1;
    double tau = 0.1;
    std::size_t max_iter = 100000;
    std::string backend = "incremental";
    std::vector<double> phi;
    double alpha = 0.3;
    std::size_t window = 5;
    double fixpoint_tol = 1e-9;
    bool trace = false;
};

struct MethodOutcome {
    std::vector<double> values;
    std::size_t iterations = 1;
    bool converged = true;
    std::vector<imr::ModelParams> phi_trace;
    json extra = json::object();
};

MethodOutcome run_method(const RepairOptions& opt, const imr::TimeSeries& x,
                         const imr::LabeledSeries& labels) {
    MethodOutcome out;
    if (opt.method == "imr" || opt.method == "imr-static") {
        imr::RepairConfig cfg;
        cfg.order = opt.order;
        cfg.tau = opt.tau;
        cfg.max_iterations = opt.max_iter;
        cfg.backend = parse_backend(opt.backend);
        imr::RepairResult result;
        if (opt.method == "imr-static") {
            if (opt.phi.size() != opt.order) {
                throw imr::InputError("--phi must supply exactly p values for imr-static");
            }
            result = imr::imr_repair_static(x, labels, cfg, imr::ModelParams{opt.phi});
        } else {
            result = imr::imr_repair(x, labels, cfg);
        }
        out.values = std::move(result.values);
        out.iterations = result.iterations;
        out.converged = result.converged;
        out.phi_trace = std::move(result.phi_trace);
    } else if (opt.method == "ar") {
        out.values = imr::ar_repair(x, labels, opt.order, opt.tau);
    } else if (opt.method == "arx") {
        std::optional<imr::ModelParams> phi;
        if (!opt.phi.empty()) {
            phi = imr::ModelParams{opt.phi};
        }
        out.values = imr::arx_repair(x, labels, opt.order, opt.tau, phi);
    } else if (opt.method == "ewma") {
        out.values = imr::ewma(x, opt.alpha);
    } else if (opt.method == "sma") {
        out.values = imr::sma(x, opt.window);
    } else if (opt.method == "online") {
        imr::MultiSegmentInfo info;
        out.values = imr::repair_multi_segment(x, labels, opt.fixpoint_tol, &info);
        out.iterations = info.steps;
        out.extra["phi1"] = info.phi1;
        out.extra["fixpoint_residual"] = info.residual;
    } else {
        throw imr::InputError("unknown method '" + opt.method + "'");
    }
    return out;
}

int cmd_repair(const RepairOptions& opt) {
    const auto start = Clock::now();
    const imr::SeriesTable table = imr::read_series_csv(opt.input);
    const imr::TimeSeries x = table.values_series();
    const imr::LabeledSeries labels = table.labels_series();

    const MethodOutcome outcome = run_method(opt, x, labels);

    imr::SeriesTable out_table;
    out_table.value = outcome.values;
    imr::write_series_csv(std::filesystem::path(opt.output), out_table);

    json report;
    report["command"] = "repair";
    report["method"] = opt.method;
    json config;
    if (opt.method == "imr" || opt.method == "imr-static") {
        config["order"] = opt.order;
        config["tau"] = opt.tau;
        config["max_iter"] = opt.max_iter;
        config["backend"] = opt.backend;
    } else if (opt.method == "ar" || opt.method == "arx") {
        config["order"] = opt.order;
        config["tau"] = opt.tau;
    } else if (opt.method == "ewma") {
        config["alpha"] = opt.alpha;
    } else if (opt.method == "sma") {
        config["window"] = opt.window;
    } else if (opt.method == "online") {
        config["fixpoint_tol"] = opt.fixpoint_tol;
    }
    if (!opt.phi.empty()) {
        config["phi"] = opt.phi;
    }
    report["config"] = config;
    report["n"] = x.size();
    report["labeled"] = labels.size();
    report["iterations"] = outcome.iterations;
    report["converged"] = outcome.converged;
    for (auto& [key, value] : outcome.extra.items()) {
        report[key] = value;
    }
    if (table.has_truth) {
        report["rms"] = imr::rms(imr::TimeSeries(table.truth), outcome.values);
    }
    if (opt.trace) {
        json trace = json::array();
        for (const imr::ModelParams& params : outcome.phi_trace) {
            trace.push_back(params.phi);
        }
        report["phi_trace"] = trace;
    }
    report["wall_ms"] = elapsed_ms(start);
    std::cout << report.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// inject

struct InjectOptions {
    std::string input;
    std::string output;
    std::string kind = "shift";
    std::vector<std::size_t> start;
    std::vector<std::size_t> len;
    double amount = 3.0;
    double variance = 0.1;
    double decay = 0.8;
    std::uint64_t seed = default_seed();
    double rate = 0.0;
    std::string label_mode = "uniform";
    std::optional<std::uint64_t> label_seed;
};

int cmd_inject(const InjectOptions& opt) {
    const auto start_time = Clock::now();
    const imr::SeriesTable table = imr::read_series_csv(opt.input);
    const imr::TimeSeries truth = table.values_series();

    if (opt.start.size() != opt.len.size()) {
        throw imr::InputError("--start and --len must be given once per error window");
    }

    imr::TimeSeries dirty = truth;
    std::vector<std::size_t> mask;
    for (std::size_t w = 0; w < opt.start.size(); ++w) {
        imr::ErrorSpec spec;
        spec.kind = parse_error_kind(opt.kind);
        spec.start = opt.start[w];
        spec.length = opt.len[w];
        spec.amount = opt.amount;
        spec.variance = opt.variance;
        spec.decay = opt.decay;
        spec.seed = opt.seed + w; // one window, one stream
        imr::Injection injected = imr::inject_errors(dirty, spec);
        dirty = std::move(injected.dirty);
        mask.insert(mask.end(), injected.error_indices.begin(),
                    injected.error_indices.end());
    }

    imr::LabelingPolicy policy;
    policy.rate = opt.rate;
    policy.mode = parse_label_mode(opt.label_mode);
    policy.seed = opt.label_seed.value_or(opt.seed + 1000003);
    const imr::LabeledSeries labels = imr::sample_labels(truth, mask, policy);

    imr::SeriesTable out_table;
    out_table.has_label = true;
    out_table.has_truth = true;
    out_table.value = dirty.values();
    out_table.truth = truth.values();
    out_table.label.resize(truth.size());
    for (const auto& [t, v] : labels.entries()) {
        out_table.label[t - 1] = v;
    }
    imr::write_series_csv(std::filesystem::path(opt.output), out_table);

    json report;
    report["command"] = "inject";
    report["kind"] = opt.kind;
    report["windows"] = opt.start.size();
    report["amount"] = opt.amount;
    report["variance"] = opt.variance;
    if (opt.kind == "innovational") {
        report["decay"] = opt.decay;
    }
    report["seed"] = opt.seed;
    report["label_rate"] = opt.rate;
    report["label_mode"] = opt.label_mode;
    report["labeled"] = labels.size();
    report["error_points"] = mask.size();
    report["generator"] = imr::GaussianSampler::identity();
    report["wall_ms"] = elapsed_ms(start_time);
    std::cout << report.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& truth_file, const std::string& repair_file) {
    const imr::SeriesTable truth_table = imr::read_series_csv(truth_file);
    const imr::SeriesTable repair_table = imr::read_series_csv(repair_file);
    const double value = imr::rms(truth_table.values_series(), repair_table.value);

    json report;
    report["command"] = "evaluate";
    report["truth"] = truth_file;
    report["repair"] = repair_file;
    report["n"] = truth_table.rows();
    report["rms"] = value;
    std::cout << report.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// stream

int cmd_stream(const std::string& input, const std::string& output) {
    const auto start = Clock::now();
    const imr::SeriesTable table = imr::read_series_csv(input);
    if (!table.has_label) {
        throw imr::InputError("stream input needs a label column with a labeled prefix");
    }

    imr::StreamingRepairer repairer;
    std::vector<double> repaired;
    repaired.reserve(table.rows());
    std::size_t prefix = 0;
    bool in_prefix = true;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        if (in_prefix && table.label[i].has_value()) {
            repairer.push_labeled(table.value[i], *table.label[i]);
            repaired.push_back(*table.label[i]);
            ++prefix;
            continue;
        }
        in_prefix = false;
        if (table.label[i].has_value()) {
            throw imr::InputError("stream expects one labeled prefix; found a label "
                                  "at row " + std::to_string(i + 1) +
                                  " after observations started");
        }
        repaired.push_back(repairer.push_observation(table.value[i]));
    }

    imr::SeriesTable out_table;
    out_table.value = std::move(repaired);
    imr::write_series_csv(std::filesystem::path(output), out_table);

    json report;
    report["command"] = "stream";
    report["n"] = table.rows();
    report["prefix"] = prefix;
    report["phi1"] = repairer.phi();
    if (table.has_truth) {
        report["rms"] = imr::rms(imr::TimeSeries(table.truth), out_table.value);
    }
    report["wall_ms"] = elapsed_ms(start);
    std::cout << report.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchMethod {
    std::string name;
    RepairOptions options; // method-relevant fields only
};

int cmd_bench(const std::string& scenario_file, const std::string& output) {
    const auto start_time = Clock::now();
    std::ifstream in(scenario_file);
    if (!in) {
        throw imr::CsvError("cannot open scenario '" + scenario_file + "'");
    }
    json scenario;
    try {
        in >> scenario;
    } catch (const json::exception& e) {
        throw imr::CsvError("scenario parse failure: " + std::string(e.what()));
    }

    const std::size_t n = scenario.value("n", 3000);
    const std::size_t reps = scenario.value("reps", 10);
    const std::uint64_t base_seed = scenario.value("seed", default_seed());

    const json error = scenario.value("error", json::object());
    const std::string kind = error.value("kind", "shift");
    const double amount = error.value("amount", 3.0);
    const double variance = error.value("variance", 0.1);
    const double decay = error.value("decay", 0.8);
    const std::vector<std::size_t> lengths =
        error.value("lengths", std::vector<std::size_t>{50});

    const json labeling = scenario.value("labeling", json::object());
    imr::LabelingPolicy policy;
    policy.rate = labeling.value("rate", 0.2);
    policy.mode = parse_label_mode(labeling.value("mode", "uniform"));

    std::vector<BenchMethod> methods;
    for (const json& mj : scenario.value("methods", json::array())) {
        BenchMethod m;
        m.name = mj.value("name", "imr");
        m.options.method = m.name;
        m.options.order = mj.value("order", std::size_t{1});
        m.options.tau = mj.value("tau", 0.1);
        m.options.max_iter = mj.value("max_iter", std::size_t{100000});
        m.options.backend = mj.value("backend", "incremental");
        m.options.alpha = mj.value("alpha", 0.3);
        m.options.window = mj.value("window", std::size_t{5});
        m.options.phi = mj.value("phi", std::vector<double>{});
        m.options.fixpoint_tol = mj.value("fixpoint_tol", 1e-9);
        methods.push_back(std::move(m));
    }
    if (methods.empty()) {
        throw imr::InputError("scenario lists no methods");
    }

    const std::filesystem::path out_path(output);
    std::filesystem::path tmp_path = out_path;
    tmp_path += ".tmp";
    std::ofstream tmp(tmp_path, std::ios::binary | std::ios::trunc);
    if (!tmp) {
        throw imr::CsvError("cannot open '" + tmp_path.string() + "' for writing");
    }
    tmp << "method,error_kind,error_len,rep,seed,rms\n";

    try {
    for (const std::size_t len : lengths) {
        if (len < 1 || len > n) {
            throw imr::InputError("scenario error length " + std::to_string(len) +
                                  " does not fit a series of " + std::to_string(n));
        }
        for (std::size_t rep = 0; rep < reps; ++rep) {
            // Fully derived per-repetition seeds so reruns are byte-identical.
            std::mt19937_64 seeder(base_seed ^ (static_cast<std::uint64_t>(len) << 24) ^
                                   rep);
            const std::uint64_t truth_seed = seeder();
            const std::uint64_t error_seed = seeder();
            const std::uint64_t label_seed = seeder();

            const imr::TimeSeries truth = imr::generate_truth(n, truth_seed);
            imr::ErrorSpec spec;
            spec.kind = parse_error_kind(kind);
            spec.length = len;
            spec.start = 1 + seeder() % (n - len + 1);
            spec.amount = amount;
            spec.variance = variance;
            spec.decay = decay;
            spec.seed = error_seed;
            const imr::Injection injected = imr::inject_errors(truth, spec);

            imr::LabelingPolicy rep_policy = policy;
            rep_policy.seed = label_seed;
            const imr::LabeledSeries labels =
                imr::sample_labels(truth, injected.error_indices, rep_policy);

            for (const BenchMethod& method : methods) {
                const auto t0 = Clock::now();
                const MethodOutcome outcome =
                    run_method(method.options, injected.dirty, labels);
                const double ms = elapsed_ms(t0);
                const double score = imr::rms(truth, outcome.values);

                tmp << method.name << ',' << kind << ',' << len << ',' << rep << ','
                    << truth_seed << ',' << imr::detail::format_double(score) << "\n";

                json row;
                row["command"] = "bench";
                row["method"] = method.name;
                row["error_kind"] = kind;
                row["error_len"] = len;
                row["rep"] = rep;
                row["rms"] = score;
                row["iterations"] = outcome.iterations;
                row["converged"] = outcome.converged;
                row["wall_ms"] = ms;
                std::cout << row.dump() << "\n";
            }
        }
    }
    } catch (...) {
        tmp.close();
        std::filesystem::remove(tmp_path);
        throw;
    }
    tmp.flush();
    if (!tmp) {
        std::filesystem::remove(tmp_path);
        throw imr::CsvError("failed writing '" + tmp_path.string() + "'");
    }
    tmp.close();
    std::filesystem::rename(tmp_path, out_path);

    json summary;
    summary["command"] = "bench";
    summary["scenario"] = scenario_file;
    summary["output"] = output;
    summary["rows"] = lengths.size() * reps * methods.size();
    summary["wall_ms"] = elapsed_ms(start_time);
    std::cout << summary.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-series anomaly repair toolkit"};
    app.require_subcommand(1);

    RepairOptions repair_opt;
    CLI::App* repair = app.add_subcommand("repair", "Repair a series from CSV");
    repair->add_option("input", repair_opt.input, "input CSV (index,value[,label][,truth])")
        ->required();
    repair->add_option("-o,--output", repair_opt.output, "repaired CSV path")->required();
    repair->add_option("--method", repair_opt.method,
                       "imr | imr-static | ar | arx | ewma | sma | online");
    repair->add_option("--order", repair_opt.order, "model order p");
    repair->add_option("--tau", repair_opt.tau, "significance / convergence threshold");
    repair->add_option("--max-iter", repair_opt.max_iter, "iteration cap");
    repair->add_option("--backend", repair_opt.backend, "full | pruned | incremental");
    repair->add_option("--phi", repair_opt.phi, "static parameters (p values)")
        ->delimiter(',');
    repair->add_option("--alpha", repair_opt.alpha, "EWMA weight in (0,1]");
    repair->add_option("--window", repair_opt.window, "SMA window");
    repair->add_option("--fixpoint-tol", repair_opt.fixpoint_tol,
                       "online fixpoint tolerance");
    repair->add_flag("--trace", repair_opt.trace, "include the phi trace in the report");

    InjectOptions inject_opt;
    CLI::App* inject = app.add_subcommand("inject", "Inject synthetic errors and labels");
    inject->add_option("input", inject_opt.input, "truth CSV (index,value)")->required();
    inject->add_option("-o,--output", inject_opt.output, "dirty+labels CSV path")
        ->required();
    inject->add_option("--kind", inject_opt.kind, "shift | innovational | spike");
    inject->add_option("--start", inject_opt.start, "window start (1-based), repeatable")
        ->required();
    inject->add_option("--len", inject_opt.len, "window length, repeatable")->required();
    inject->add_option("--amount", inject_opt.amount, "mean error magnitude");
    inject->add_option("--variance", inject_opt.variance, "Gaussian variance");
    inject->add_option("--decay", inject_opt.decay, "innovational decay in (0,1)");
    inject->add_option("--seed", inject_opt.seed, "RNG seed (default $IMR_SEED or 0)");
    inject->add_option("--rate", inject_opt.rate, "labeling rate in [0,1]");
    inject->add_option("--label-mode", inject_opt.label_mode, "uniform | prefix");
    inject->add_option("--label-seed", inject_opt.label_seed, "labeling RNG seed");

    std::string eval_truth;
    std::string eval_repair;
    CLI::App* evaluate = app.add_subcommand("evaluate", "RMS between truth and repair");
    evaluate->add_option("truth", eval_truth, "truth CSV")->required();
    evaluate->add_option("repair", eval_repair, "repair CSV")->required();

    std::string stream_input;
    std::string stream_output;
    CLI::App* stream = app.add_subcommand(
        "stream", "Online prefix repair: labeled prefix, then O(1) repairs");
    stream->add_option("input", stream_input, "CSV with a labeled prefix")->required();
    stream->add_option("-o,--output", stream_output, "repaired CSV path")->required();

    std::string bench_scenario;
    std::string bench_output;
    CLI::App* bench = app.add_subcommand("bench", "Run a benchmark scenario");
    bench->add_option("scenario", bench_scenario, "scenario JSON")->required();
    bench->add_option("-o,--output", bench_output, "results table path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (repair->parsed()) {
            return cmd_repair(repair_opt);
        }
        if (inject->parsed()) {
            return cmd_inject(inject_opt);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(eval_truth, eval_repair);
        }
        if (stream->parsed()) {
            return cmd_stream(stream_input, stream_output);
        }
        if (bench->parsed()) {
            return cmd_bench(bench_scenario, bench_output);
        }
    } catch (const imr::DegenerateLabels& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const imr::NoFixpoint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const imr::SingularSystem& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const imr::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
