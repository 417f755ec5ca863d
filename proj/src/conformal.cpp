#include "mmdcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <string>

namespace mmdcp {

namespace {

void check_scores(std::span<const double> scores, const char* what) {
    for (double s : scores) {
        if (std::isnan(s)) {
            throw ValidationError(std::string("NaN in ") + what);
        }
    }
}

}  // namespace

double conformal_pvalue(std::span<const double> train_scores, double test_score) {
    if (train_scores.empty()) {
        throw ValidationError("conformal p-value needs at least one training score");
    }
    if (std::isnan(test_score)) {
        throw ValidationError("NaN test score");
    }
    check_scores(train_scores, "training scores");
    const auto hits = std::count_if(train_scores.begin(), train_scores.end(),
                                    [test_score](double s) { return test_score <= s; });
    return static_cast<double>(1 + hits) / static_cast<double>(train_scores.size() + 1);
}

std::vector<double> conformal_pvalues(std::span<const double> train_scores, std::span<const double> test_scores) {
    if (train_scores.empty()) {
        throw ValidationError("conformal p-value needs at least one training score");
    }
    check_scores(train_scores, "training scores");
    check_scores(test_scores, "test scores");

    std::vector<double> sorted(train_scores.begin(), train_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double denom = static_cast<double>(sorted.size() + 1);

    const auto m = static_cast<std::ptrdiff_t>(test_scores.size());
    std::vector<double> out(test_scores.size());
    #pragma omp parallel for schedule(static) if (m > 1024)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        // first training score >= test: everything from there on satisfies test <= train
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), test_scores[static_cast<std::size_t>(i)]);
        const auto hits = std::distance(it, sorted.end());
        out[static_cast<std::size_t>(i)] = static_cast<double>(1 + hits) / denom;
    }
    return out;
}

std::vector<double> bh_adjust(std::span<const double> pvals) {
    for (double p : pvals) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw ValidationError("p-value " + std::to_string(p) + " outside (0, 1]");
        }
    }
    const std::size_t m = pvals.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

    std::vector<double> out(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const std::size_t i = order[r];
        const double scaled = pvals[i] * static_cast<double>(m) / static_cast<double>(r + 1);
        running = std::min(running, scaled);
        // m p / r can round a hair below p when r == m; adjusted values never drop below raw
        out[i] = std::max(std::min(running, 1.0), pvals[i]);
    }
    return out;
}

double acceptance_threshold(std::size_t n_k, double alpha) {
    const double slots = static_cast<double>(n_k + 1);
    const double x = slots * alpha;
    // absorb representation error so that e.g. 100 * 0.29 counts as 29 slots
    const double nearest = std::round(x);
    const double count = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::floor(x);
    return count / slots;
}

Prediction predict(const LabeledDataset& data, const TestBatch& test, double alpha, const ScoreMode& mode) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
    validate_dataset(data);
    validate_test_batch(test, data.dim(), data.num_classes);
    if (mode.kind == ScoreMode::Kind::oracle) {
        if (mode.oracle == nullptr) {
            throw ValidationError("oracle mode requires oracle parameters");
        }
        mode.oracle->check();
        if (mode.oracle->num_classes() != data.num_classes) {
            throw ValidationError("oracle parameters describe " + std::to_string(mode.oracle->num_classes()) +
                                  " classes, data has " + std::to_string(data.num_classes));
        }
    }

    const std::size_t m = test.size();
    const auto K = static_cast<std::size_t>(data.num_classes);

    Prediction out;
    auto& pv = out.pvalues;
    pv.alpha = alpha;
    pv.raw = Matrix(m, K);
    pv.adjusted = Matrix(m, K);
    pv.thresholds.assign(K, 0.0);
    pv.class_counts = data.class_counts();

    // exceptions must not escape an OpenMP region
    std::vector<std::exception_ptr> errors(K);

    #pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(K); ++kk) {
        const auto col = static_cast<std::size_t>(kk);
        const int k = static_cast<int>(col) + 1;
        try {
            const Matrix train_rows = data.features.select_rows(data.class_rows(k));
            std::vector<double> train_scores;
            std::vector<double> test_scores;
            if (mode.kind == ScoreMode::Kind::oracle) {
                train_scores = score_batch(*mode.oracle, k, train_rows);
                test_scores = score_batch(*mode.oracle, k, test.features);
            } else {
                const ClassSummary summary = fit_class_summary(train_rows, k, mode.fit);
                train_scores = score_batch(summary, train_rows);
                test_scores = score_batch(summary, test.features);
            }
            const auto raw = m > 0 ? conformal_pvalues(train_scores, test_scores) : std::vector<double>{};
            const auto adjusted = m == 1 ? raw : bh_adjust(raw);
            for (std::size_t i = 0; i < m; ++i) {
                pv.raw(i, col) = raw[i];
                pv.adjusted(i, col) = adjusted[i];
            }
            pv.thresholds[col] = acceptance_threshold(train_rows.rows(), alpha);
        } catch (...) {
            errors[col] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    out.sets = sets_from_pvalues(pv);
    return out;
}

PredictionSets sets_from_pvalues(const PValueMatrix& pvalues) {
    const std::size_t m = pvalues.adjusted.rows();
    const std::size_t K = pvalues.thresholds.size();
    PredictionSets out;
    out.sets.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            if (pvalues.adjusted(i, k) > pvalues.thresholds[k]) {
                out.sets[i].push_back(static_cast<int>(k) + 1);
            }
        }
    }
    return out;
}

double set_size_discrepancy(const PredictionSets& empirical, const PredictionSets& oracle) {
    if (empirical.size() != oracle.size()) {
        throw ValidationError("prediction set lists differ in length");
    }
    if (empirical.size() == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < empirical.size(); ++i) {
        total += std::abs(static_cast<double>(empirical.sets[i].size()) - static_cast<double>(oracle.sets[i].size()));
    }
    return total / static_cast<double>(empirical.size());
}

namespace serial {

std::vector<double> conformal_pvalues(std::span<const double> train_scores, std::span<const double> test_scores) {
    std::vector<double> out;
    out.reserve(test_scores.size());
    for (double t : test_scores) {
        out.push_back(conformal_pvalue(train_scores, t));
    }
    return out;
}

}  // namespace serial

}  // namespace mmdcp
