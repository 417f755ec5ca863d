#include "mmdcp/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mmdcp/conformal.hpp"
#include "mmdcp/datagen.hpp"

namespace mmdcp {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEmpirical = "MMDCP";
constexpr const char* kOracle = "MMDCP-oracle";

struct ReplicateOutput {
    std::vector<std::vector<MetricsReport>> per_method;
    std::vector<double> seconds;
};

std::vector<const char*> methods_for(io::RunMode mode) {
    switch (mode) {
        case io::RunMode::empirical: return {kEmpirical};
        case io::RunMode::oracle: return {kOracle};
        case io::RunMode::both: return {kEmpirical, kOracle};
    }
    return {kEmpirical};
}

double timed_predict(const LabeledDataset& train, const TestBatch& test, double alpha, const ScoreMode& mode,
                     PredictionSets& sets) {
    const auto t0 = std::chrono::steady_clock::now();
    sets = predict(train, test, alpha, mode).sets;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ReplicateOutput run_simulated_replicate(const io::ExperimentConfig& cfg, const ScenarioConfig& scenario,
                                        std::span<const double> atoms, const OracleParams& oracle,
                                        std::size_t replicate) {
    const auto methods = methods_for(cfg.mode);
    ReplicateOutput out;
    out.per_method.resize(methods.size());
    out.seconds.assign(methods.size(), 0.0);

    const std::uint64_t run_seed = derive_seed(cfg.master_seed, replicate);
    const auto train = generate_train(scenario, atoms, derive_seed(run_seed, 0));
    const FitOptions fit{cfg.variance_floor};
    for (std::size_t t = 0; t < cfg.test_sets_per_run; ++t) {
        const auto test = generate_test(scenario, atoms, derive_seed(run_seed, 1 + t));
        for (std::size_t j = 0; j < methods.size(); ++j) {
            const auto mode = methods[j] == kOracle ? ScoreMode::with_oracle(oracle) : ScoreMode::empirical(fit);
            PredictionSets sets;
            out.seconds[j] += timed_predict(train, test, cfg.alpha, mode, sets);
            out.per_method[j].push_back(evaluate(sets, test, train.num_classes));
        }
    }
    return out;
}

ReplicateOutput run_csv_replicate(const io::ExperimentConfig& cfg, const io::CsvDataset& data, std::size_t replicate) {
    ReplicateOutput out;
    out.per_method.resize(1);
    out.seconds.assign(1, 0.0);
    const auto [train, test] = io::split_train_test(data, cfg.train_fraction, derive_seed(cfg.master_seed, replicate));
    PredictionSets sets;
    out.seconds[0] += timed_predict(train, test, cfg.alpha, ScoreMode::empirical(FitOptions{cfg.variance_floor}), sets);
    out.per_method[0].push_back(evaluate(sets, test, train.num_classes));
    return out;
}

template <class Fn>
CellResult run_cell(const io::ExperimentConfig& cfg, const GridCell& cell, const std::vector<const char*>& methods,
                    int workers, Fn&& replicate_fn) {
    const auto n = static_cast<std::ptrdiff_t>(cfg.replicates);
    std::vector<ReplicateOutput> outputs(cfg.replicates);
    std::vector<std::exception_ptr> errors(cfg.replicates);

    #pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        try {
            outputs[static_cast<std::size_t>(r)] = replicate_fn(static_cast<std::size_t>(r));
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    CellResult result;
    result.cell = cell;
    for (std::size_t j = 0; j < methods.size(); ++j) {
        MethodResult mr;
        mr.method = methods[j];
        for (const auto& o : outputs) {
            mr.reports.insert(mr.reports.end(), o.per_method[j].begin(), o.per_method[j].end());
            mr.predict_seconds += o.seconds[j];
        }
        result.methods.push_back(std::move(mr));
    }
    return result;
}

}  // namespace

std::string GridCell::label() const {
    if (from_csv) return "csv";
    return "p" + std::to_string(p) + "_nk" + std::to_string(n_k) + "_rho" + io::format_double(rho);
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MMDCP_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

ExperimentResult run_experiment(const io::ExperimentConfig& cfg) {
    cfg.check();
    const int workers = resolve_workers(cfg.workers);
    ExperimentResult result;

    if (cfg.uses_csv()) {
        io::CsvOptions opts;
        opts.delimiter = cfg.delimiter;
        opts.label_column = cfg.label_column;
        if (!cfg.outlier_label.empty()) opts.outlier_label = cfg.outlier_label;
        const auto data = io::load_csv(cfg.csv_path, opts);
        GridCell cell;
        cell.from_csv = true;
        cell.p = data.inliers.dim();
        result.cells.push_back(run_cell(cfg, cell, {kEmpirical}, workers,
                                        [&](std::size_t r) { return run_csv_replicate(cfg, data, r); }));
        return result;
    }

    for (std::size_t p : cfg.p_grid) {
        const auto atoms = make_atoms(cfg.atom_seed, p);
        for (std::size_t n_k : cfg.nk_grid) {
            for (double rho : cfg.rho_grid) {
                auto scenario = ScenarioConfig::defaults(*cfg.scenario);
                scenario.p = p;
                scenario.n_k = n_k;
                scenario.rho = rho;
                scenario.m = cfg.m;
                scenario.alpha = cfg.alpha;
                scenario.correlation = cfg.correlation;
                scenario.atom_seed = cfg.atom_seed;
                scenario.check();
                const auto oracle = oracle_params(scenario, atoms);
                const GridCell cell{p, n_k, rho};
                result.cells.push_back(run_cell(cfg, cell, methods_for(cfg.mode), workers, [&](std::size_t r) {
                    return run_simulated_replicate(cfg, scenario, atoms, oracle, r);
                }));
            }
        }
    }
    return result;
}

std::string render_summary(const ExperimentResult& result) {
    std::ostringstream out;
    char buf[256];
    for (const auto& cell : result.cells) {
        out << "== " << cell.cell.label() << " ==\n";
        std::vector<std::vector<io::MetricSummary>> summaries;
        std::snprintf(buf, sizeof(buf), "%-18s", "Methods");
        out << buf;
        for (const auto& m : cell.methods) {
            summaries.push_back(io::summarize(m.reports));
            std::snprintf(buf, sizeof(buf), " %16s", m.method.c_str());
            out << buf;
        }
        out << '\n';
        if (summaries.empty()) continue;
        for (std::size_t row = 0; row < summaries.front().size(); ++row) {
            std::snprintf(buf, sizeof(buf), "%-18s", summaries.front()[row].name.c_str());
            out << buf;
            for (const auto& s : summaries) {
                std::snprintf(buf, sizeof(buf), " %16s", io::mean_std_cell(s[row].mean, s[row].std).c_str());
                out << buf;
            }
            out << '\n';
        }
        std::snprintf(buf, sizeof(buf), "%-18s", "Time(s)");
        out << buf;
        for (const auto& m : cell.methods) {
            std::snprintf(buf, sizeof(buf), " %16.3f", m.predict_seconds);
            out << buf;
        }
        out << "\nruns per method: " << (cell.methods.empty() ? 0 : cell.methods.front().reports.size()) << "\n\n";
    }
    return out.str();
}

void write_experiment(const ExperimentResult& result, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream timing(dir / "timing.csv");
    if (!timing) throw io::IoError("cannot write " + (dir / "timing.csv").string());
    timing << "cell,method,runs,predict_seconds\n";
    for (const auto& cell : result.cells) {
        for (const auto& m : cell.methods) {
            io::write_results(m.reports, dir / cell.cell.label() / m.method);
            timing << cell.cell.label() << ',' << m.method << ',' << m.reports.size() << ',' << m.predict_seconds << '\n';
        }
    }
    std::ofstream summary(dir / "summary.txt");
    if (!summary) throw io::IoError("cannot write " + (dir / "summary.txt").string());
    summary << render_summary(result);
}

}  // namespace mmdcp
