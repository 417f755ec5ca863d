#ifndef MMDCP_CORE_HPP
#define MMDCP_CORE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * @file core.hpp
 *
 * @brief Domain data model shared by scoring, conformal prediction, metrics and IO.
 *
 * Class labels are dense integers `1..K`. In evaluation data the label `K + 1`
 * marks a point that belongs to none of the known classes (an outlier).
 */

namespace mmdcp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: label out of range, non-finite feature, shape mismatch.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A class has a feature with zero sample variance and no variance floor was requested.
class DegenerateVarianceError : public Error {
public:
    DegenerateVarianceError(int class_id, std::size_t column);
    int class_id;
    std::size_t column;
};

/**
 * Dense row-major matrix of doubles.
 * Rows are exposed as spans so kernels can work on contiguous memory.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const { return data_; }

    void append_row(std::span<const double> values);

    /// New matrix holding the listed rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Labelled training pool: `n` rows of `p` features, labels in `1..K`.
struct LabeledDataset {
    Matrix features;
    std::vector<int> labels;
    int num_classes = 0;
    /// Optional original label names; `label_names[k - 1]` is the name of class `k`.
    std::vector<std::string> label_names;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    std::vector<std::size_t> class_counts() const;
    /// Row indices of class `k`, in file order.
    std::vector<std::size_t> class_rows(int k) const;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Out-of-sample points, optionally with evaluation truth in `1..K+1`.
struct TestBatch {
    Matrix features;
    std::optional<std::vector<int>> truth;

    std::size_t size() const { return features.rows(); }

    friend bool operator==(const TestBatch&, const TestBatch&) = default;
};

/// Per-class sample mean and diagonal (unbiased) variance.
struct ClassSummary {
    int class_id = 0;
    std::vector<double> mean;
    std::vector<double> diag_var;
    std::size_t count = 0;

    friend bool operator==(const ClassSummary&, const ClassSummary&) = default;
};

/// True class means and covariance diagonals, used by the oracle variant.
struct OracleParams {
    std::vector<std::vector<double>> means;       // [K][p]
    std::vector<std::vector<double>> diag_sigma;  // [K][p]

    int num_classes() const { return static_cast<int>(means.size()); }
    void check() const;

    friend bool operator==(const OracleParams&, const OracleParams&) = default;
};

/// Raw and BH-adjusted conformal p-values, one column per class.
struct PValueMatrix {
    Matrix raw;       // m x K
    Matrix adjusted;  // m x K
    std::vector<double> thresholds;
    std::vector<std::size_t> class_counts;
    double alpha = 0.0;

    friend bool operator==(const PValueMatrix&, const PValueMatrix&) = default;
};

/// Accepted classes per test point; an empty set declares the point an outlier.
struct PredictionSets {
    std::vector<std::vector<int>> sets;

    std::size_t size() const { return sets.size(); }
    bool contains(std::size_t i, int k) const;

    friend bool operator==(const PredictionSets&, const PredictionSets&) = default;
};

/// Deviation radius `t_k = 4 * lambda1 * sqrt(log(n_k) / n_k)` with `lambda1 = sqrt(a) + 2a/3`.
struct DeviationBound {
    explicit DeviationBound(double a = 2.0);

    double a;
    double lambda1;

    double radius(std::size_t n_k) const;
    /// Probability bound `2 n_k^{-a}` on exceeding the radius.
    double tail(std::size_t n_k) const;
};

struct ZeroVarianceFlag {
    int class_id;
    std::size_t column;

    friend bool operator==(const ZeroVarianceFlag&, const ZeroVarianceFlag&) = default;
};

struct ValidationReport {
    std::vector<std::size_t> class_counts;
    double min_variance = 0.0;
    double max_abs_feature = 0.0;
    std::vector<ZeroVarianceFlag> zero_variance;

    bool ok() const { return zero_variance.empty(); }
};

/**
 * Structural and regularity checks on a training pool.
 *
 * Labels outside `1..K`, non-finite features, and classes with fewer than three rows throw
 * ValidationError. A zero-variance feature is reported as a flag; scoring decides whether
 * that is fatal.
 */
ValidationReport validate_dataset(const LabeledDataset& data);

/// Throws ValidationError unless the batch has `p` columns and truth (if any) lies in `1..K+1`.
void validate_test_batch(const TestBatch& test, std::size_t p, int num_classes);

inline constexpr std::size_t kMinClassCount = 3;

}  // namespace mmdcp

#endif  // MMDCP_CORE_HPP
