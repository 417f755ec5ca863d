#ifndef MMDCP_IO_HPP
#define MMDCP_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmdcp/core.hpp"
#include "mmdcp/datagen.hpp"
#include "mmdcp/metrics.hpp"

/**
 * @file io.hpp
 *
 * @brief CSV ingestion, experiment configuration, and result/table serialization.
 *
 * Every real number is written in shortest round-trip form, so write-then-read reproduces
 * values bit for bit.
 */

namespace mmdcp::io {

class IoError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);
double parse_double(std::string_view s);

struct CsvOptions {
    char delimiter = ',';
    std::string label_column = "label";
    /// Rows carrying this label are outliers: kept out of training, truth `K + 1` in tests.
    std::optional<std::string> outlier_label;
};

/// A whole delimited file with labels mapped to `1..K` by first appearance.
struct CsvDataset {
    LabeledDataset inliers;
    Matrix outliers;
    std::vector<std::string> feature_names;
};

/**
 * Reads a header row plus numeric feature columns (file order) and one label column.
 * Throws IoError on an empty file, a missing label column, or a non-numeric feature cell.
 */
CsvDataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/**
 * Reads a test file against an existing label dictionary. If the label column is absent the
 * batch has no truth. Known labels map to their class id, the outlier label to `K + 1`.
 */
TestBatch load_test_csv(const std::filesystem::path& path, const std::vector<std::string>& label_names,
                        const CsvOptions& options = {});

/**
 * Stratified random split: `round(fraction * n_k)` rows of each class go to training.
 * Outlier rows always go to the test batch with truth `K + 1`. Reproducible by seed.
 */
std::pair<LabeledDataset, TestBatch> split_train_test(const CsvDataset& data, double fraction, std::uint64_t seed);
std::pair<LabeledDataset, TestBatch> split_train_test(const LabeledDataset& data, double fraction, std::uint64_t seed);

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

/// Test rows with a `label` column holding the class name or `outlier`; no column without truth.
void write_test_csv(const std::filesystem::path& path, const TestBatch& test, const std::vector<std::string>& label_names);

inline constexpr std::string_view kOutlierName = "outlier";

void write_oracle_params(const std::filesystem::path& path, const OracleParams& params);
OracleParams read_oracle_params(const std::filesystem::path& path);

void write_class_summary(const std::filesystem::path& path, const ClassSummary& summary);
ClassSummary read_class_summary(const std::filesystem::path& path);

/// `index,raw_1..raw_K,adj_1..adj_K`, plus a sidecar `<stem>_thresholds.csv`.
void write_pvalues(const std::filesystem::path& path, const PValueMatrix& pvalues);
PValueMatrix read_pvalues(const std::filesystem::path& path);

/// `index,in_1..in_K,set` where `set` is `;`-joined class ids (empty for outliers).
void write_prediction_sets(const std::filesystem::path& path, const PredictionSets& sets, int num_classes);
PredictionSets read_prediction_sets(const std::filesystem::path& path);

struct MetricSummary {
    std::string name;
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and sample (n - 1) standard deviation of every metric; std is 0 for one report.
std::vector<MetricSummary> summarize(std::span<const MetricsReport> reports);

/// "0.044(0.018)".
std::string mean_std_cell(double mean, double std);

/**
 * Writes `<base>.csv` (metric,mean,std) and `<base>.txt` (rendered mean(std) table).
 * Throws IoError for an empty report list or an unwritable path.
 */
void write_results(std::span<const MetricsReport> reports, const std::filesystem::path& base);

std::vector<MetricSummary> read_results_csv(const std::filesystem::path& path);

enum class RunMode { empirical, oracle, both };

RunMode parse_run_mode(const std::string& s);
std::string to_string(RunMode m);

/**
 * Everything an experiment run needs. Either a simulated scenario with a `(p, n_k, rho)` grid,
 * or a CSV source split repeatedly into train and test.
 */
struct ExperimentConfig {
    std::optional<Scenario> scenario = Scenario::multi_class;
    std::string csv_path;
    std::string label_column = "label";
    std::string outlier_label;
    char delimiter = ',';
    double train_fraction = 0.7;

    std::vector<std::size_t> p_grid{1000};
    std::vector<std::size_t> nk_grid{1000};
    std::vector<double> rho_grid{0.0};
    std::size_t m = 1000;
    Correlation correlation = Correlation::ar1;

    double alpha = 0.05;
    std::size_t replicates = 1;
    std::size_t test_sets_per_run = 1;
    std::uint64_t atom_seed = 2024;
    std::uint64_t master_seed = 1;
    RunMode mode = RunMode::both;
    bool variance_floor = false;
    int workers = 0;
    std::string out = "results";

    bool uses_csv() const { return !scenario.has_value(); }
    void check() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Flat `key = value` document; `#` starts a comment; grid keys take comma lists.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string to_config_text(const ExperimentConfig& config);

}  // namespace mmdcp::io

#endif  // MMDCP_IO_HPP
