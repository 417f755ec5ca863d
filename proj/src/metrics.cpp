#include "mmdcp/metrics.hpp"

#include <algorithm>
#include <string>

namespace mmdcp {

namespace {

void check_inputs(const PredictionSets& sets, std::span<const int> truth) {
    if (sets.size() != truth.size()) {
        throw ValidationError("prediction sets and truth differ in length");
    }
}

bool is_outlier(int t, int num_classes) { return t == num_classes + 1; }

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct ClassCounts {
    std::size_t rejected = 0;
    std::size_t false_rejections = 0;
};

ClassCounts count_class(const PredictionSets& sets, std::span<const int> truth, int k) {
    ClassCounts c;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!sets.contains(i, k)) {
            ++c.rejected;
            if (truth[i] == k) ++c.false_rejections;
        }
    }
    return c;
}

}  // namespace

std::vector<std::pair<std::string, double>> MetricsReport::named() const {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t k = 0; k < classwise_fdr.size(); ++k) {
        out.emplace_back("classwise_fdr_" + std::to_string(k + 1), classwise_fdr[k]);
    }
    out.emplace_back("scw_fdr", scw_fdr);
    out.emplace_back("fdr", global_fdr);
    out.emplace_back("power", power);
    out.emplace_back("flr", flr);
    out.emplace_back("coverage", coverage);
    out.emplace_back("accuracy", accuracy);
    out.emplace_back("ambiguity", ambiguity);
    return out;
}

double classwise_fdr(const PredictionSets& sets, std::span<const int> truth, int k) {
    check_inputs(sets, truth);
    const auto c = count_class(sets, truth, k);
    return static_cast<double>(c.false_rejections) / static_cast<double>(std::max<std::size_t>(1, c.rejected));
}

double scw_fdr_loss(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t num = 0;
    std::size_t den = 0;
    for (int k = 1; k <= num_classes; ++k) {
        const auto c = count_class(sets, truth, k);
        num += c.false_rejections;
        den += std::max<std::size_t>(1, c.rejected);
    }
    return ratio(num, den);
}

double rejection_fdp(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t v = 0;
    std::size_t r = 0;
    for (int k = 1; k <= num_classes; ++k) {
        const auto c = count_class(sets, truth, k);
        v += c.false_rejections;
        r += c.rejected;
    }
    return static_cast<double>(v) / static_cast<double>(std::max<std::size_t>(1, r));
}

double global_fdr(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t declared = 0;
    std::size_t false_declared = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets.sets[i].empty()) {
            ++declared;
            if (truth[i] <= num_classes) ++false_declared;
        }
    }
    return static_cast<double>(false_declared) / static_cast<double>(std::max<std::size_t>(1, declared));
}

double power(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t outliers = 0;
    std::size_t caught = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (is_outlier(truth[i], num_classes)) {
            ++outliers;
            if (sets.sets[i].empty()) ++caught;
        }
    }
    return ratio(caught, outliers);
}

double coverage(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t inliers = 0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!is_outlier(truth[i], num_classes)) {
            ++inliers;
            if (sets.contains(i, truth[i])) ++covered;
        }
    }
    return ratio(covered, inliers);
}

double flr(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t labelled_outliers = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (is_outlier(truth[i], num_classes) && !sets.sets[i].empty()) ++labelled_outliers;
    }
    return ratio(labelled_outliers, sets.size());
}

double accuracy(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    std::size_t inliers = 0;
    std::size_t exact = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!is_outlier(truth[i], num_classes)) {
            ++inliers;
            const auto& s = sets.sets[i];
            if (s.size() == 1 && s.front() == truth[i]) ++exact;
        }
    }
    return ratio(exact, inliers);
}

double ambiguity(const PredictionSets& sets) {
    std::size_t nonempty = 0;
    std::size_t total = 0;
    for (const auto& s : sets.sets) {
        if (!s.empty()) {
            ++nonempty;
            total += s.size();
        }
    }
    return ratio(total, nonempty);
}

MetricsReport evaluate(const PredictionSets& sets, std::span<const int> truth, int num_classes) {
    check_inputs(sets, truth);
    MetricsReport r;
    for (int k = 1; k <= num_classes; ++k) {
        r.classwise_fdr.push_back(classwise_fdr(sets, truth, k));
    }
    r.scw_fdr = scw_fdr_loss(sets, truth, num_classes);
    r.global_fdr = global_fdr(sets, truth, num_classes);
    r.power = power(sets, truth, num_classes);
    r.coverage = coverage(sets, truth, num_classes);
    r.flr = flr(sets, truth, num_classes);
    r.accuracy = accuracy(sets, truth, num_classes);
    r.ambiguity = ambiguity(sets);
    return r;
}

MetricsReport evaluate(const PredictionSets& sets, const TestBatch& test, int num_classes) {
    if (!test.truth) {
        throw ValidationError("evaluation requires truth labels");
    }
    return evaluate(sets, *test.truth, num_classes);
}

}  // namespace mmdcp
