#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mmdcp/conformal.hpp"
#include "mmdcp/datagen.hpp"
#include "mmdcp/experiment.hpp"
#include "mmdcp/io.hpp"
#include "mmdcp/metrics.hpp"
#include "mmdcp/validation.hpp"

namespace mmdcp::cli {

namespace fs = std::filesystem;

namespace {

// Raised for flag combinations CLI11 cannot express; maps to the usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioFlags {
    std::string scenario;
    std::size_t p = 1000;
    std::size_t n_k = 1000;
    std::size_t m = 1000;
    double rho = 0.0;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::uint64_t atom_seed = 2024;
    std::string correlation = "ar1";

    void add_to(CLI::App& app, bool require_scenario) {
        auto* s = app.add_option("--scenario", scenario, "one_class | multi_class (also: one, multi)");
        if (require_scenario) s->required();
        app.add_option("--p", p, "feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--nk", n_k, "training rows per class")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--m", m, "test set size")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--rho", rho, "correlation of the Gaussian part")->capture_default_str();
        app.add_option("--alpha", alpha, "significance level")->capture_default_str();
        app.add_option("--seed", seed, "run seed")->capture_default_str();
        app.add_option("--atom-seed", atom_seed, "seed of the W atoms")->capture_default_str();
        app.add_option("--correlation", correlation, "ar1 | equicorrelated")->capture_default_str();
    }

    ScenarioConfig config() const {
        auto cfg = ScenarioConfig::defaults(parse_scenario(scenario));
        cfg.p = p;
        cfg.n_k = n_k;
        cfg.m = m;
        cfg.rho = rho;
        cfg.alpha = alpha;
        cfg.run_seed = seed;
        cfg.atom_seed = atom_seed;
        cfg.correlation = parse_correlation(correlation);
        cfg.check();
        return cfg;
    }
};

void set_workers(int requested) {
#ifdef _OPENMP
    omp_set_num_threads(resolve_workers(requested));
#else
    (void)requested;
#endif
}

std::string counts_line(const std::vector<std::size_t>& counts) {
    std::ostringstream s;
    for (std::size_t k = 0; k < counts.size(); ++k) s << (k ? ", " : "") << "class " << k + 1 << ": " << counts[k];
    return s.str();
}

std::string test_counts_line(const TestBatch& test, int K) {
    if (!test.truth) return "no truth";
    std::vector<std::size_t> counts(static_cast<std::size_t>(K) + 1, 0);
    for (int t : *test.truth) ++counts[static_cast<std::size_t>(t - 1)];
    const std::size_t outliers = counts.back();
    counts.pop_back();
    return counts_line(counts) + ", outliers: " + std::to_string(outliers);
}

void print_metrics(std::ostream& out, const MetricsReport& report) {
    char buf[128];
    for (const auto& [name, value] : report.named()) {
        std::snprintf(buf, sizeof(buf), "  %-16s %.4f\n", name.c_str(), value);
        out << buf;
    }
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
    ScenarioFlags scenario;
    std::string out = "data";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const auto cfg = a.scenario.config();
    const auto atoms = make_atoms(cfg.atom_seed, cfg.p);
    const auto [train, test] = generate(cfg);
    const fs::path dir = a.out;
    fs::create_directories(dir);
    io::write_dataset_csv(dir / "train.csv", train);
    io::write_test_csv(dir / "test.csv", test, train.label_names);
    io::write_oracle_params(dir / "oracle.csv", oracle_params(cfg, atoms));

    out << "scenario " << to_string(cfg.scenario) << " p=" << cfg.p << " n_k=" << cfg.n_k << " m=" << cfg.m
        << " rho=" << io::format_double(cfg.rho) << " correlation=" << to_string(cfg.correlation)
        << " seed=" << cfg.run_seed << '\n';
    out << "train: " << train.size() << " rows (" << counts_line(train.class_counts()) << ")\n";
    out << "test: " << test.size() << " rows (" << test_counts_line(test, train.num_classes) << ")\n";
    out << "wrote " << (dir / "train.csv").string() << ", " << (dir / "test.csv").string() << ", "
        << (dir / "oracle.csv").string() << '\n';
    return kOk;
}

// --- predict --------------------------------------------------------------

struct PredictArgs {
    ScenarioFlags scenario;
    std::string train;
    std::string test;
    std::string oracle;
    std::string mode = "empirical";
    bool variance_floor = false;
    int workers = 0;
    std::string out = "predictions";
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const auto mode = io::parse_run_mode(a.mode);
    const bool needs_oracle = mode != io::RunMode::empirical;

    LabeledDataset train;
    TestBatch test;
    std::optional<OracleParams> oracle;
    if (!a.scenario.scenario.empty()) {
        if (!a.train.empty() || !a.test.empty()) throw UsageError("--scenario cannot be combined with --train/--test");
        const auto cfg = a.scenario.config();
        std::tie(train, test) = generate(cfg);
        if (needs_oracle && a.oracle.empty()) oracle = oracle_params(cfg, make_atoms(cfg.atom_seed, cfg.p));
    } else {
        if (a.train.empty() || a.test.empty()) throw UsageError("predict needs --train and --test, or --scenario");
        train = io::read_dataset_csv(a.train);
        test = io::load_test_csv(a.test, train.label_names);
    }
    if (needs_oracle && !oracle) {
        if (a.oracle.empty()) throw UsageError("mode " + a.mode + " needs an oracle parameter file (--oracle)");
        oracle = io::read_oracle_params(a.oracle);
    }
    set_workers(a.workers);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    const double alpha = a.scenario.alpha;
    const int K = train.num_classes;

    auto run_one = [&](const ScoreMode& sm, const std::string& suffix, const std::string& label) {
        const auto pred = predict(train, test, alpha, sm);
        io::write_prediction_sets(dir / ("sets" + suffix + ".csv"), pred.sets, K);
        io::write_pvalues(dir / ("pvalues" + suffix + ".csv"), pred.pvalues);
        std::size_t empty = 0;
        for (const auto& s : pred.sets.sets) empty += s.empty() ? 1 : 0;
        out << label << ": " << test.size() << " test points, " << empty << " declared outliers\n";
        for (int k = 0; k < K; ++k) {
            out << "  class " << k + 1 << " n_k=" << pred.pvalues.class_counts[static_cast<std::size_t>(k)]
                << " threshold=" << io::format_double(pred.pvalues.thresholds[static_cast<std::size_t>(k)]) << '\n';
        }
        if (test.truth) print_metrics(out, evaluate(pred.sets, test, K));
        out << "wrote " << (dir / ("sets" + suffix + ".csv")).string() << ", "
            << (dir / ("pvalues" + suffix + ".csv")).string() << '\n';
    };

    if (mode != io::RunMode::oracle) run_one(ScoreMode::empirical(FitOptions{a.variance_floor}), "", "MMDCP");
    if (needs_oracle) {
        run_one(ScoreMode::with_oracle(*oracle), mode == io::RunMode::both ? "_oracle" : "", "MMDCP-oracle");
    }
    return kOk;
}

// --- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string sets;
    std::string test;
    std::string train;
    int classes = 0;
    std::string out;
};

int sets_file_classes(const fs::path& path) {
    std::ifstream in(path);
    std::string header;
    if (!in || !std::getline(in, header)) throw io::IoError("cannot read " + path.string());
    int k = 0;
    std::size_t pos = 0;
    while ((pos = header.find(",in_", pos)) != std::string::npos) {
        ++k;
        ++pos;
    }
    return k;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    std::vector<std::string> names;
    if (!a.train.empty()) {
        names = io::read_dataset_csv(a.train).label_names;
    } else {
        const int K = a.classes > 0 ? a.classes : sets_file_classes(a.sets);
        for (int k = 1; k <= K; ++k) names.push_back(std::to_string(k));
    }
    const int K = static_cast<int>(names.size());
    const auto sets = io::read_prediction_sets(a.sets);
    const auto test = io::load_test_csv(a.test, names);
    if (sets.size() != test.size()) {
        throw ValidationError("sets file has " + std::to_string(sets.size()) + " rows but the test file has " +
                              std::to_string(test.size()));
    }
    const auto report = evaluate(sets, test, K);
    out << "metrics over " << test.size() << " test points, K=" << K << '\n';
    print_metrics(out, report);
    if (!a.out.empty()) {
        const std::vector<MetricsReport> reports{report};
        io::write_results(reports, a.out);
        out << "wrote " << a.out << ".csv, " << a.out << ".txt\n";
    }
    return kOk;
}

// --- experiment -----------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<double> alpha;
    std::optional<int> workers;
    std::optional<std::string> out;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
    auto cfg = io::load_experiment_config(a.config);
    if (a.seed) cfg.master_seed = *a.seed;
    if (a.mode) cfg.mode = io::parse_run_mode(*a.mode);
    if (a.alpha) cfg.alpha = *a.alpha;
    if (a.workers) cfg.workers = *a.workers;
    if (a.out) cfg.out = *a.out;
    cfg.check();

    const auto result = run_experiment(cfg);
    write_experiment(result, cfg.out);
    out << render_summary(result);
    out << "wrote " << cfg.out << '\n';
    return kOk;
}

// --- validate -------------------------------------------------------------

struct ValidateArgs {
    std::vector<std::string> checks{"all"};
    std::uint64_t seed = 0;
    int workers = 0;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
    set_workers(a.workers);
    std::vector<std::string> names;
    for (const auto& c : a.checks) {
        if (c == "all") {
            names = validation::check_names();
            break;
        }
        names.push_back(c);
    }
    const auto results = validation::run_checks(names, a.seed);
    bool ok = true;
    char buf[64];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof(buf), " (%.1fs)", r.seconds);
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << buf << '\n';
        ok = ok && r.passed;
    }
    out << (ok ? "all checks passed" : "some checks failed") << '\n';
    return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Set-valued classification with outlier detection via conformal p-values"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a simulated train/test pair and oracle parameters");
    sim.scenario.add_to(*simulate, true);
    simulate->add_option("--out", sim.out, "output directory")->capture_default_str();

    PredictArgs pa;
    auto* predict_cmd = app.add_subcommand("predict", "Compute prediction sets and p-values");
    pa.scenario.add_to(*predict_cmd, false);
    predict_cmd->add_option("--train", pa.train, "training CSV written by simulate");
    predict_cmd->add_option("--test", pa.test, "test CSV");
    predict_cmd->add_option("--oracle", pa.oracle, "oracle parameter CSV");
    predict_cmd->add_option("--mode", pa.mode, "empirical | oracle | both")->capture_default_str();
    predict_cmd->add_flag("--variance-floor", pa.variance_floor, "floor zero variances instead of failing");
    predict_cmd->add_option("--workers", pa.workers, "threads (default: MMDCP_WORKERS or all cores)");
    predict_cmd->add_option("--out", pa.out, "output directory")->capture_default_str();

    EvaluateArgs ea;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a prediction-set file against test labels");
    evaluate_cmd->add_option("--sets", ea.sets, "prediction-set CSV")->required();
    evaluate_cmd->add_option("--test", ea.test, "test CSV with a label column")->required();
    evaluate_cmd->add_option("--train", ea.train, "training CSV (for the label dictionary)");
    evaluate_cmd->add_option("--classes", ea.classes, "number of classes when labels are 1..K");
    evaluate_cmd->add_option("--out", ea.out, "results base path (writes .csv and .txt)");

    ExperimentArgs xa;
    auto* experiment = app.add_subcommand("experiment", "Run a replicated simulation or CSV experiment");
    experiment->add_option("--config", xa.config, "config file")->required();
    experiment->add_option("--seed", xa.seed, "override master seed");
    experiment->add_option("--mode", xa.mode, "override mode: empirical | oracle | both");
    experiment->add_option("--alpha", xa.alpha, "override alpha");
    experiment->add_option("--workers", xa.workers, "override worker count");
    experiment->add_option("--out", xa.out, "override output directory");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Monte Carlo checks of the coverage and FDR guarantees");
    validate->add_option("--check", va.checks, "all | validity | coverage | deviation | discrepancy | cwfdr | scw | remark | bh")
        ->capture_default_str();
    validate->add_option("--seed", va.seed, "offset added to every check seed")->capture_default_str();
    validate->add_option("--workers", va.workers, "threads (default: MMDCP_WORKERS or all cores)");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, out);
        if (predict_cmd->parsed()) return cmd_predict(pa, out);
        if (evaluate_cmd->parsed()) return cmd_evaluate(ea, out);
        if (experiment->parsed()) return cmd_experiment(xa, out);
        if (validate->parsed()) return cmd_validate(va, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}

}  // namespace mmdcp::cli
