#ifndef MMDCP_METRICS_HPP
#define MMDCP_METRICS_HPP

#include <span>
#include <string>
#include <vector>

#include "mmdcp/core.hpp"

/**
 * @file metrics.hpp
 *
 * @brief Evaluation metrics for set-valued prediction with outliers.
 *
 * Truth labels are `1..K` for inliers and `K + 1` for outliers. A point is *rejected
 * from class k* when `k` is not in its prediction set, and *declared an outlier* when
 * its set is empty.
 */

namespace mmdcp {

struct MetricsReport {
    std::vector<double> classwise_fdr;
    double scw_fdr = 0.0;
    double global_fdr = 0.0;
    double power = 0.0;
    double coverage = 0.0;
    double flr = 0.0;
    double accuracy = 0.0;
    double ambiguity = 0.0;

    /// Flattened `(name, value)` pairs in reporting order.
    std::vector<std::pair<std::string, double>> named() const;
};

/// `|R_k ∩ T_0^k| / max(1, |R_k|)`: share of class-k rejections that were true class-k points.
double classwise_fdr(const PredictionSets& sets, std::span<const int> truth, int k);

/// `sum_k |R_k ∩ T_0^k| / sum_k max(1, |R_k|)`.
double scw_fdr_loss(const PredictionSets& sets, std::span<const int> truth, int num_classes);

/// False discovery proportion of outlier declarations: inliers with empty sets over all empty sets.
double global_fdr(const PredictionSets& sets, std::span<const int> truth, int num_classes);

/// Global FDP under the class-wise rejection convention: `sum_k V_k / max(1, sum_k R_k)`.
double rejection_fdp(const PredictionSets& sets, std::span<const int> truth, int num_classes);

double power(const PredictionSets& sets, std::span<const int> truth, int num_classes);
double coverage(const PredictionSets& sets, std::span<const int> truth, int num_classes);
/// Outliers that received a nonempty set, over the full test size.
double flr(const PredictionSets& sets, std::span<const int> truth, int num_classes);
/// Inliers whose set is exactly `{truth}`.
double accuracy(const PredictionSets& sets, std::span<const int> truth, int num_classes);
/// Mean set size over points with a nonempty set; 0 when every set is empty.
double ambiguity(const PredictionSets& sets);

MetricsReport evaluate(const PredictionSets& sets, std::span<const int> truth, int num_classes);

/// Throws ValidationError when the batch carries no truth labels.
MetricsReport evaluate(const PredictionSets& sets, const TestBatch& test, int num_classes);

}  // namespace mmdcp

#endif  // MMDCP_METRICS_HPP
