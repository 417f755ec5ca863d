#ifndef MMDCP_EXPERIMENT_HPP
#define MMDCP_EXPERIMENT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "mmdcp/io.hpp"
#include "mmdcp/metrics.hpp"

namespace mmdcp {

struct GridCell {
    std::size_t p = 0;
    std::size_t n_k = 0;
    double rho = 0.0;

    /// Directory-safe name, e.g. `p200_nk200_rho0.8`; `csv` for a CSV source.
    std::string label() const;
    bool from_csv = false;
};

struct MethodResult {
    std::string method;  // "MMDCP" or "MMDCP-oracle"
    std::vector<MetricsReport> reports;  // replicate-major, then test set
    double predict_seconds = 0.0;
};

struct CellResult {
    GridCell cell;
    std::vector<MethodResult> methods;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
};

/// Worker count: `requested` if positive, else `MMDCP_WORKERS`, else the OpenMP default.
int resolve_workers(int requested);

/**
 * For every grid cell and replicate: derive `run_seed = derive_seed(master_seed, replicate)`,
 * generate one training set and `test_sets_per_run` test sets, predict with each requested
 * method on identical data, and score every test set. Replicates run in parallel; results are
 * collected by replicate index so output does not depend on scheduling. The timing covers
 * prediction only.
 */
ExperimentResult run_experiment(const io::ExperimentConfig& config);

/**
 * Writes `<dir>/<cell>/<method>.{csv,txt}`, a combined `<dir>/summary.txt` with one column per
 * method and a Time(s) row, and `<dir>/timing.csv`. The per-method CSVs carry no timing, so they
 * are byte-identical across runs with the same config.
 */
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

/// Summary table text (same as summary.txt).
std::string render_summary(const ExperimentResult& result);

}  // namespace mmdcp

#endif  // MMDCP_EXPERIMENT_HPP
