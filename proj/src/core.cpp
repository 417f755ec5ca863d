#include "mmdcp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mmdcp {

DegenerateVarianceError::DegenerateVarianceError(int k, std::size_t col)
    : Error("class " + std::to_string(k) + " has zero variance in column " + std::to_string(col)),
      class_id(k),
      column(col) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("matrix data size does not match its shape");
    }
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    }
    if (values.size() != cols_) {
        throw ValidationError("row has " + std::to_string(values.size()) + " columns, expected " +
                              std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
    for (int y : labels) {
        if (y >= 1 && y <= num_classes) {
            ++counts[static_cast<std::size_t>(y - 1)];
        }
    }
    return counts;
}

std::vector<std::size_t> LabeledDataset::class_rows(int k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == k) {
            out.push_back(i);
        }
    }
    return out;
}

void OracleParams::check() const {
    if (means.size() != diag_sigma.size()) {
        throw ValidationError("oracle params: mean and sigma class counts differ");
    }
    for (std::size_t k = 0; k < means.size(); ++k) {
        if (means[k].size() != diag_sigma[k].size()) {
            throw ValidationError("oracle params: dimension mismatch in class " + std::to_string(k + 1));
        }
        for (double s : diag_sigma[k]) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw ValidationError("oracle params: diagonal sigma must be positive in class " +
                                      std::to_string(k + 1));
            }
        }
    }
}

bool PredictionSets::contains(std::size_t i, int k) const {
    const auto& s = sets[i];
    return std::find(s.begin(), s.end(), k) != s.end();
}

DeviationBound::DeviationBound(double a_) : a(a_), lambda1(std::sqrt(a_) + 2.0 * a_ / 3.0) {
    if (a < 2.0) {
        throw ValidationError("deviation bound requires a >= 2");
    }
}

double DeviationBound::radius(std::size_t n_k) const {
    const double n = static_cast<double>(n_k);
    return 4.0 * lambda1 * std::sqrt(std::log(n) / n);
}

double DeviationBound::tail(std::size_t n_k) const {
    return 2.0 * std::pow(static_cast<double>(n_k), -a);
}

ValidationReport validate_dataset(const LabeledDataset& data) {
    if (data.num_classes < 1) {
        throw ValidationError("dataset must have at least one class");
    }
    if (data.labels.size() != data.features.rows()) {
        throw ValidationError("label count does not match row count");
    }
    const std::size_t p = data.dim();
    if (p == 0) {
        throw ValidationError("dataset has no feature columns");
    }

    ValidationReport report;
    report.class_counts.assign(static_cast<std::size_t>(data.num_classes), 0);
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        const int y = data.labels[i];
        if (y < 1 || y > data.num_classes) {
            throw ValidationError("label " + std::to_string(y) + " at row " + std::to_string(i) +
                                  " outside 1.." + std::to_string(data.num_classes));
        }
        ++report.class_counts[static_cast<std::size_t>(y - 1)];
        for (double v : data.features.row(i)) {
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite feature at row " + std::to_string(i));
            }
            report.max_abs_feature = std::max(report.max_abs_feature, std::abs(v));
        }
    }

    report.min_variance = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= data.num_classes; ++k) {
        const std::size_t n_k = report.class_counts[static_cast<std::size_t>(k - 1)];
        if (n_k < kMinClassCount) {
            throw ValidationError("class " + std::to_string(k) + " has " + std::to_string(n_k) +
                                  " rows, need at least " + std::to_string(kMinClassCount));
        }
        const auto rows = data.class_rows(k);
        for (std::size_t j = 0; j < p; ++j) {
            double mean = 0.0;
            for (auto r : rows) mean += data.features(r, j);
            mean /= static_cast<double>(n_k);
            double ss = 0.0;
            bool constant = true;
            const double first = data.features(rows.front(), j);
            for (auto r : rows) {
                const double d = data.features(r, j) - mean;
                ss += d * d;
                constant = constant && data.features(r, j) == first;
            }
            const double var = constant ? 0.0 : ss / static_cast<double>(n_k - 1);
            report.min_variance = std::min(report.min_variance, var);
            if (constant) {
                report.zero_variance.push_back({k, j});
            }
        }
    }
    return report;
}

void validate_test_batch(const TestBatch& test, std::size_t p, int num_classes) {
    if (test.features.rows() > 0 && test.features.cols() != p) {
        throw ValidationError("test batch has " + std::to_string(test.features.cols()) +
                              " columns, training data has " + std::to_string(p));
    }
    for (double v : test.features.data()) {
        if (!std::isfinite(v)) {
            throw ValidationError("non-finite feature in test batch");
        }
    }
    if (test.truth) {
        if (test.truth->size() != test.size()) {
            throw ValidationError("truth length does not match test size");
        }
        for (int t : *test.truth) {
            if (t < 1 || t > num_classes + 1) {
                throw ValidationError("truth label " + std::to_string(t) + " outside 1.." +
                                      std::to_string(num_classes + 1));
            }
        }
    }
}

}  // namespace mmdcp
