#ifndef MMDCP_CONFORMAL_HPP
#define MMDCP_CONFORMAL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "mmdcp/core.hpp"
#include "mmdcp/scoring.hpp"

/**
 * @file conformal.hpp
 *
 * @brief Full conformal p-values, per-class Benjamini-Hochberg adjustment and prediction sets.
 */

namespace mmdcp {

/**
 * Conformal p-value of one test score against the training scores of a class:
 * `(1 + #{l : test <= train[l]}) / (n + 1)`. Ties count toward the larger p-value.
 */
double conformal_pvalue(std::span<const double> train_scores, double test_score);

/// Batch version: sorts the training scores once and counts by binary search, parallel over tests.
std::vector<double> conformal_pvalues(std::span<const double> train_scores, std::span<const double> test_scores);

/**
 * Benjamini-Hochberg step-up adjusted p-values.
 * `{i : adjusted[i] <= alpha}` is the BH rejection set at level `alpha` for every `alpha`.
 */
std::vector<double> bh_adjust(std::span<const double> pvals);

/// `floor((n_k + 1) * alpha) / (n_k + 1)`.
double acceptance_threshold(std::size_t n_k, double alpha);

/// Which score feeds the p-values. Oracle mode swaps in the true class parameters.
struct ScoreMode {
    enum class Kind { empirical, oracle };

    Kind kind = Kind::empirical;
    const OracleParams* oracle = nullptr;
    FitOptions fit{};

    static ScoreMode empirical(FitOptions fit = {}) { return {Kind::empirical, nullptr, fit}; }
    static ScoreMode with_oracle(const OracleParams& params) { return {Kind::oracle, &params, {}}; }
};

struct Prediction {
    PValueMatrix pvalues;
    PredictionSets sets;
};

/**
 * Runs the full procedure: for every class, score the class training rows and all test
 * rows, compute conformal p-values, BH-adjust them across the test points (skipped when
 * there is a single test point), and accept class `k` for point `i` when the adjusted
 * p-value strictly exceeds the class threshold. Parallel over classes.
 */
Prediction predict(const LabeledDataset& data, const TestBatch& test, double alpha, const ScoreMode& mode = {});

/// Rebuilds prediction sets from a p-value matrix.
PredictionSets sets_from_pvalues(const PValueMatrix& pvalues);

/// Mean over test points of `| |A_i| - |B_i| |`.
double set_size_discrepancy(const PredictionSets& empirical, const PredictionSets& oracle);

namespace serial {

// Brute-force O(n m) counting; reference for conformal_pvalues.
std::vector<double> conformal_pvalues(std::span<const double> train_scores, std::span<const double> test_scores);

}  // namespace serial

}  // namespace mmdcp

#endif  // MMDCP_CONFORMAL_HPP
