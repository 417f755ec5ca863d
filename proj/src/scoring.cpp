#include "mmdcp/scoring.hpp"

#include <cstddef>
#include <string>

namespace mmdcp {

namespace {

void check_dim(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw ValidationError("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                              std::to_string(got));
    }
}

double diag_distance(std::span<const double> mean, std::span<const double> var, std::span<const double> x) {
    double acc = 0.0;
    const std::size_t p = x.size();
    #pragma omp simd reduction(+ : acc)
    for (std::size_t j = 0; j < p; ++j) {
        const double d = x[j] - mean[j];
        acc += d * d / var[j];
    }
    return acc;
}

std::vector<double> score_rows_parallel(std::span<const double> mean, std::span<const double> var,
                                        const Matrix& rows) {
    if (!rows.empty()) {
        check_dim(mean.size(), rows.cols());
    }
    const auto n = static_cast<std::ptrdiff_t>(rows.rows());
    std::vector<double> out(rows.rows());
    #pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = diag_distance(mean, var, rows.row(static_cast<std::size_t>(i)));
    }
    return out;
}

std::vector<double> score_rows_serial(std::span<const double> mean, std::span<const double> var,
                                      const Matrix& rows) {
    std::vector<double> out;
    out.reserve(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        auto x = rows.row(i);
        check_dim(mean.size(), x.size());
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            acc += (x[j] - mean[j]) * (x[j] - mean[j]) / var[j];
        }
        out.push_back(acc);
    }
    return out;
}

const std::vector<double>& oracle_mean(const OracleParams& params, int k) {
    if (k < 1 || k > params.num_classes()) {
        throw ValidationError("oracle params have no class " + std::to_string(k));
    }
    return params.means[static_cast<std::size_t>(k - 1)];
}

const std::vector<double>& oracle_sigma(const OracleParams& params, int k) {
    oracle_mean(params, k);
    return params.diag_sigma[static_cast<std::size_t>(k - 1)];
}

}  // namespace

ClassSummary fit_class_summary(const Matrix& rows, int class_id, FitOptions options) {
    const std::size_t n = rows.rows();
    if (n < 2) {
        throw ValidationError("class " + std::to_string(class_id) + " has " + std::to_string(n) +
                              " rows, need at least 2 for a variance");
    }
    const std::size_t p = rows.cols();
    ClassSummary s;
    s.class_id = class_id;
    s.count = n;
    s.mean.assign(p, 0.0);
    s.diag_var.assign(p, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        auto x = rows.row(i);
        for (std::size_t j = 0; j < p; ++j) s.mean[j] += x[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);

    // A constant column can leave a rounding-sized residual, so constancy is tested directly.
    std::vector<char> constant(p, 1);
    auto first = rows.row(0);
    for (std::size_t i = 0; i < n; ++i) {
        auto x = rows.row(i);
        for (std::size_t j = 0; j < p; ++j) {
            const double d = x[j] - s.mean[j];
            s.diag_var[j] += d * d;
            constant[j] &= static_cast<char>(x[j] == first[j]);
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        double& v = s.diag_var[j];
        v = constant[j] ? 0.0 : v / static_cast<double>(n - 1);
        if (options.variance_floor) {
            if (v < kVarianceFloor) v = kVarianceFloor;
        } else if (v == 0.0) {
            throw DegenerateVarianceError(class_id, j);
        }
    }
    return s;
}

ClassSummary fit_class_summary(const LabeledDataset& data, int k, FitOptions options) {
    if (k < 1 || k > data.num_classes) {
        throw ValidationError("class " + std::to_string(k) + " outside 1.." + std::to_string(data.num_classes));
    }
    const auto idx = data.class_rows(k);
    return fit_class_summary(data.features.select_rows(idx), k, options);
}

double empirical_score(const ClassSummary& summary, std::span<const double> x) {
    check_dim(summary.mean.size(), x.size());
    return diag_distance(summary.mean, summary.diag_var, x);
}

double oracle_score(const OracleParams& params, int k, std::span<const double> x) {
    const auto& mean = oracle_mean(params, k);
    check_dim(mean.size(), x.size());
    return diag_distance(mean, oracle_sigma(params, k), x);
}

std::vector<double> score_batch(const ClassSummary& summary, const Matrix& rows) {
    return score_rows_parallel(summary.mean, summary.diag_var, rows);
}

std::vector<double> score_batch(const OracleParams& params, int k, const Matrix& rows) {
    return score_rows_parallel(oracle_mean(params, k), oracle_sigma(params, k), rows);
}

namespace serial {

std::vector<double> score_batch(const ClassSummary& summary, const Matrix& rows) {
    return score_rows_serial(summary.mean, summary.diag_var, rows);
}

std::vector<double> score_batch(const OracleParams& params, int k, const Matrix& rows) {
    return score_rows_serial(oracle_mean(params, k), oracle_sigma(params, k), rows);
}

}  // namespace serial

}  // namespace mmdcp
