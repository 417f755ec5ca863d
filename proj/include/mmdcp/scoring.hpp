#ifndef MMDCP_SCORING_HPP
#define MMDCP_SCORING_HPP

#include <span>
#include <vector>

#include "mmdcp/core.hpp"

/**
 * @file scoring.hpp
 *
 * @brief Modified Mahalanobis nonconformity scores.
 *
 * The score of `x` for class `k` is the squared distance to the class mean after dividing
 * every coordinate by its variance: `sum_j (x_j - mean_j)^2 / var_j`. Only the covariance
 * diagonal is used, so no matrix is ever inverted.
 */

namespace mmdcp {

/// Replacement value for sample variances below it when the floor is enabled.
inline constexpr double kVarianceFloor = 1e-12;

struct FitOptions {
    /// Replace variances below kVarianceFloor instead of throwing DegenerateVarianceError.
    bool variance_floor = false;
};

/**
 * Mean and unbiased (n_k - 1) diagonal variance of the class-`k` rows of `data`.
 * Only training rows enter the summary. Two rows are enough to fit; `predict` enforces the
 * three-row minimum through validate_dataset.
 */
ClassSummary fit_class_summary(const LabeledDataset& data, int k, FitOptions options = {});

/// Same, over an explicit block of rows that all belong to class `class_id`.
ClassSummary fit_class_summary(const Matrix& rows, int class_id, FitOptions options = {});

double empirical_score(const ClassSummary& summary, std::span<const double> x);

double oracle_score(const OracleParams& params, int k, std::span<const double> x);

/// Row-wise scores; parallel over rows.
std::vector<double> score_batch(const ClassSummary& summary, const Matrix& rows);
std::vector<double> score_batch(const OracleParams& params, int k, const Matrix& rows);

namespace serial {

// Single-threaded reference kernels, kept for testing and benchmarking.
std::vector<double> score_batch(const ClassSummary& summary, const Matrix& rows);
std::vector<double> score_batch(const OracleParams& params, int k, const Matrix& rows);

}  // namespace serial

}  // namespace mmdcp

#endif  // MMDCP_SCORING_HPP
