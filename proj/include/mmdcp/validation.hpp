#ifndef MMDCP_VALIDATION_HPP
#define MMDCP_VALIDATION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

/**
 * @file validation.hpp
 *
 * @brief Monte Carlo checks of the finite-sample guarantees.
 *
 * Each check is seeded and deterministic and returns the measured quantities with a verdict.
 * The `validate` subcommand and the acceptance suite both run them.
 */

namespace mmdcp::validation {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct OracleDesign {
    std::size_t p = 50;
    std::size_t n_k = 200;
    std::size_t draws = 2000;
    double rho = 0.0;
    std::uint64_t seed = 11;
};

/// One fresh training set and one exchangeable inlier per draw; raw oracle p-values and
/// whether the oracle prediction set at `coverage_alpha` contains the true class.
struct OracleDraws {
    std::vector<double> pvalues;
    std::vector<bool> covered;
    double coverage_alpha = 0.05;
};

OracleDraws draw_oracle_pvalues(const OracleDesign& design, double coverage_alpha);

/// `P(p <= alpha) <= alpha + 3 sqrt(alpha (1 - alpha) / N)` for every alpha.
CheckResult check_oracle_validity(const OracleDraws& draws, std::span<const double> alphas);

/// Coverage frequency `>= 1 - alpha - tolerance`.
CheckResult check_oracle_coverage(const OracleDraws& draws, double tolerance);

struct DeviationDesign {
    std::size_t p = 50;
    std::vector<std::size_t> n_grid{100, 400, 1600};
    std::size_t draws = 200;
    double quantile = 0.95;
    double a = 2.0;
    std::uint64_t seed = 23;
};

struct DeviationResult {
    std::vector<double> quantiles;
    std::vector<double> radii;
};

DeviationResult measure_pvalue_deviation(const DeviationDesign& design);

/// Quantile of `|p_hat - p_oracle|` strictly decreasing in `n_k` and below `t_k` at every `n_k`.
CheckResult check_pvalue_deviation(const DeviationDesign& design);

struct DiscrepancyDesign {
    std::size_t p = 20;
    std::size_t m = 200;
    std::vector<std::size_t> n_grid{100, 400, 1600};
    std::size_t seeds = 50;
    double alpha = 0.05;
    std::uint64_t seed = 37;
};

/// Median over seeds of the mean set-size discrepancy, one value per `n_k`.
std::vector<double> measure_set_discrepancy(const DiscrepancyDesign& design);

CheckResult check_set_discrepancy(const DiscrepancyDesign& design);

struct FdrDesign {
    std::size_t p = 200;
    std::size_t n_k = 200;
    std::size_t m = 1000;
    double rho = 0.0;
    double alpha = 0.05;
    std::size_t replicates = 10;
    double tolerance = 0.02;
    std::uint64_t seed = 41;
};

/// Mean class-wise FDR of the multi-class design `<= alpha + tolerance` for every class.
CheckResult check_classwise_fdr(const FdrDesign& design);

/// Pointwise `L_SCW <= V / max(1, R)` over random rejection configurations with K in 1..6.
CheckResult check_scw_pointwise(std::size_t instances, std::uint64_t seed);

struct RemarkResult {
    double scw_mean = 0.0;
    double global_mean = 0.0;
};

/// Two classes; exactly one rejection in class 1, null with probability `beta`; none in class 2.
RemarkResult simulate_remark(double beta, std::size_t trials, std::uint64_t seed);

CheckResult check_remark(double beta, std::size_t trials, std::uint64_t seed);

/// Classical step-up: reject every `p <= p_(i*)` with `i*` the largest `i` such that `p_(i) <= i alpha / m`.
std::vector<bool> step_up_rejections(std::span<const double> pvals, double alpha);

/// Adjusted-p rejection sets equal step-up sets over random vectors and an alpha grid.
CheckResult check_bh_equivalence(std::size_t vectors, std::uint64_t seed);

/// Empirical FDR of BH at `alpha` under the global null with independent uniform p-values.
double bh_null_fdr(std::size_t m, double alpha, std::size_t trials, std::uint64_t seed);

CheckResult check_bh_null_fdr(double alpha, std::size_t trials, double tolerance, std::uint64_t seed);

/// validity, coverage, deviation, discrepancy, cwfdr, scw, remark, bh.
const std::vector<std::string>& check_names();

/// The named checks with their default designs, in `check_names()` order. Unknown names throw.
std::vector<CheckResult> run_checks(const std::vector<std::string>& names, std::uint64_t seed_offset = 0);

std::vector<CheckResult> run_all(std::uint64_t seed_offset = 0);

}  // namespace mmdcp::validation

#endif  // MMDCP_VALIDATION_HPP
