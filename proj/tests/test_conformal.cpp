#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mmdcp/conformal.hpp"
#include "mmdcp/datagen.hpp"

using namespace mmdcp;

namespace {

// p_adj_(i) = min_{j >= i} min(1, m p_(j) / j), straight from the definition.
std::vector<double> naive_bh(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = i; j < m; ++j) best = std::min(best, p[order[j]] * double(m) / double(j + 1));
        out[order[i]] = std::max(best, p[order[i]]);
    }
    return out;
}

LabeledDataset gaussian_classes(const std::vector<std::vector<double>>& centers, std::size_t n_k, double sd,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, sd);
    LabeledDataset d;
    d.num_classes = static_cast<int>(centers.size());
    d.features = Matrix(0, centers[0].size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
        for (std::size_t i = 0; i < n_k; ++i) {
            std::vector<double> x(centers[k]);
            for (auto& v : x) v += z(rng);
            d.features.append_row(x);
            d.labels.push_back(static_cast<int>(k) + 1);
        }
    }
    return d;
}

TestBatch batch_of(const std::vector<std::vector<double>>& rows) {
    TestBatch t;
    t.features = Matrix(0, rows[0].size());
    for (const auto& r : rows) t.features.append_row(r);
    return t;
}

// Whole procedure re-derived with brute-force counting and the naive BH.
PredictionSets reference_predict(const LabeledDataset& d, const TestBatch& t, double alpha) {
    const std::size_t m = t.size();
    PredictionSets out;
    out.sets.resize(m);
    for (int k = 1; k <= d.num_classes; ++k) {
        const auto idx = d.class_rows(k);
        const std::size_t n = idx.size(), p = d.dim();
        std::vector<double> mean(p, 0.0), var(p, 0.0);
        for (auto r : idx)
            for (std::size_t j = 0; j < p; ++j) mean[j] += d.features(r, j) / double(n);
        for (auto r : idx)
            for (std::size_t j = 0; j < p; ++j) var[j] += std::pow(d.features(r, j) - mean[j], 2) / double(n - 1);
        auto score = [&](std::span<const double> x) {
            double s = 0;
            for (std::size_t j = 0; j < p; ++j) s += std::pow(x[j] - mean[j], 2) / var[j];
            return s;
        };
        std::vector<double> train;
        for (auto r : idx) train.push_back(score(d.features.row(r)));
        std::vector<double> pv;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = score(t.features.row(i));
            pv.push_back((1.0 + double(std::count_if(train.begin(), train.end(), [s](double v) { return s <= v; }))) /
                         double(n + 1));
        }
        if (m > 1) pv = naive_bh(pv);
        const double thr = std::floor(double(n + 1) * alpha) / double(n + 1);
        for (std::size_t i = 0; i < m; ++i)
            if (pv[i] > thr) out.sets[i].push_back(k);
    }
    return out;
}

}  // namespace

TEST_CASE("conformal_pvalue examples") {
    const std::vector<double> train{1, 3, 5};
    CHECK(conformal_pvalue(train, 2) == 0.75);
    CHECK(conformal_pvalue(train, 0) == 1.0);
    CHECK(conformal_pvalue(train, 6) == 0.25);
    // ties count toward the larger p-value
    CHECK(conformal_pvalue(train, 3) == 0.75);
    CHECK_THROWS_AS(conformal_pvalue(train, std::numeric_limits<double>::quiet_NaN()), ValidationError);
    CHECK_THROWS_AS(conformal_pvalue(std::vector<double>{}, 1.0), ValidationError);
}

TEST_CASE("batched p-values match brute-force counting") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> small(0, 20);
    for (int rep = 0; rep < 20; ++rep) {
        // integer-valued scores force plenty of ties
        std::vector<double> train(1 + rep * 17), test(3000);
        for (auto& v : train) v = small(rng);
        for (auto& v : test) v = small(rng) + 0.5 * (rep % 2);
        const auto fast = conformal_pvalues(train, test);
        const auto slow = serial::conformal_pvalues(train, test);
        CHECK(fast == slow);
    }
}

TEST_CASE("bh_adjust examples") {
    const auto adj = bh_adjust(std::vector<double>{0.01, 0.04, 0.03, 0.20});
    CHECK(adj[0] == doctest::Approx(0.04));
    CHECK(adj[1] == doctest::Approx(4 * 0.04 / 3));
    CHECK(adj[2] == doctest::Approx(4 * 0.04 / 3));
    CHECK(adj[3] == doctest::Approx(0.20));
    CHECK(bh_adjust(std::vector<double>{1, 1, 1}) == std::vector<double>{1, 1, 1});
    CHECK(bh_adjust(std::vector<double>{0.3}) == std::vector<double>{0.3});
    CHECK(bh_adjust(std::vector<double>{}).empty());
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{0.1, 0.0}), ValidationError);
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{1.2}), ValidationError);
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}), ValidationError);
}

TEST_CASE("bh_adjust agrees with the definition and never lowers a p-value") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t m = 1 + rep % 60;
        std::vector<double> p(m);
        for (auto& x : p) x = rep % 3 == 0 ? std::ceil(u(rng) * 20) / 21.0 : 1.0 - u(rng);
        const auto adj = bh_adjust(p);
        const auto ref = naive_bh(p);
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(adj[i] == doctest::Approx(ref[i]).epsilon(1e-12));
            CHECK(adj[i] >= p[i]);
            CHECK(adj[i] <= 1.0);
        }
    }
}

TEST_CASE("acceptance_threshold") {
    CHECK(acceptance_threshold(99, 0.05) == 0.05);
    CHECK(acceptance_threshold(10, 0.05) == 0.0);
    CHECK(acceptance_threshold(99, 0.01 - 1e-6) == 0.0);
    CHECK(acceptance_threshold(10, 1.0 / 11.0 - 1e-6) == 0.0);
    CHECK(acceptance_threshold(200, 0.05) == 10.0 / 201.0);
    // exact-integer products that floating point lands just under
    CHECK(acceptance_threshold(99, 0.29) == 0.29);
    CHECK(acceptance_threshold(99, 0.57) == 0.57);

    // integer oracle: alpha = a / 1000
    for (std::size_t n : {1, 3, 10, 99, 199, 200, 999, 1600}) {
        double prev = 0.0;
        for (int a = 1; a < 1000; ++a) {
            const double thr = acceptance_threshold(n, a / 1000.0);
            const auto slots = static_cast<long>(n + 1) * a / 1000;
            CHECK(thr == doctest::Approx(double(slots) / double(n + 1)).epsilon(1e-15));
            CHECK(thr >= prev);
            prev = thr;
        }
    }
}

TEST_CASE("predict on a separated two-class instance") {
    const auto d = gaussian_classes({{0, 0}, {10, 10}}, 50, 1.0, 99);

    SUBCASE("point at the class-1 training mean") {
        std::vector<double> mean{0, 0};
        for (auto r : d.class_rows(1)) {
            mean[0] += d.features(r, 0) / 50;
            mean[1] += d.features(r, 1) / 50;
        }
        const auto pred = predict(d, batch_of({mean}), 0.05);
        CHECK(pred.sets.sets[0] == std::vector<int>{1});
        CHECK(pred.pvalues.raw(0, 0) == 1.0);
        CHECK(pred.pvalues.raw(0, 1) == 1.0 / 51.0);
    }
    SUBCASE("point far from every center") {
        const auto pred = predict(d, batch_of({{100, -100}}), 0.05);
        CHECK(pred.sets.sets[0].empty());
    }
    SUBCASE("threshold zero accepts everything") {
        const auto small = gaussian_classes({{0, 0}, {10, 10}}, 10, 1.0, 5);
        const auto pred = predict(small, batch_of({{100, -100}, {0, 0}, {5, 5}}), 0.05);
        CHECK(pred.pvalues.thresholds == std::vector<double>{0.0, 0.0});
        for (const auto& s : pred.sets.sets) CHECK(s == std::vector<int>{1, 2});
    }
}

TEST_CASE("predict matches an independent re-derivation") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 3.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = gaussian_classes({{0, 0, 0}, {2, 0, 1}, {0, 3, -1}}, 20 + seed * 7, 1.0, seed);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < 1 + seed * 13; ++i) rows.push_back({z(rng), z(rng), z(rng)});
        const auto t = batch_of(rows);
        for (double alpha : {0.05, 0.1, 0.3}) {
            const auto pred = predict(d, t, alpha);
            CHECK(pred.sets == reference_predict(d, t, alpha));
        }
    }
}

TEST_CASE("p-value matrix invariants") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto cfg = ScenarioConfig::multi_class_defaults();
        cfg.p = 20;
        cfg.n_k = 30 + seed * 11;
        cfg.m = 1 + seed * 37;
        cfg.run_seed = seed;
        const auto [train, test] = generate(cfg);
        const auto pred = predict(train, test, 0.1);
        const auto& pv = pred.pvalues;
        const double denom = double(cfg.n_k + 1);
        for (std::size_t i = 0; i < test.size(); ++i) {
            for (std::size_t k = 0; k < 4; ++k) {
                const double r = pv.raw(i, k) * denom;
                CHECK(std::abs(r - std::round(r)) < 1e-9);
                CHECK(std::round(r) >= 1);
                CHECK(std::round(r) <= denom);
                CHECK(pv.adjusted(i, k) >= pv.raw(i, k));
                if (test.size() == 1) CHECK(pv.adjusted(i, k) == pv.raw(i, k));
            }
        }
        CHECK(sets_from_pvalues(pv) == pred.sets);
        CHECK(pv.class_counts == std::vector<std::size_t>(4, cfg.n_k));
    }
}

TEST_CASE("sets shrink as alpha grows") {
    auto cfg = ScenarioConfig::multi_class_defaults();
    cfg.p = 30;
    cfg.n_k = 60;
    cfg.m = 200;
    const auto [train, test] = generate(cfg);
    const std::vector<double> alphas{0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8};
    for (std::size_t a = 1; a < alphas.size(); ++a) {
        const auto loose = predict(train, test, alphas[a - 1]).sets;
        const auto tight = predict(train, test, alphas[a]).sets;
        for (std::size_t i = 0; i < test.size(); ++i) {
            for (int k : tight.sets[i]) CHECK(loose.contains(i, k));
        }
    }
}

TEST_CASE("oracle mode shares the code path") {
    const auto d = gaussian_classes({{0, 0}, {3, 3}}, 40, 1.0, 4);
    const auto t = batch_of({{0, 0}, {3, 2}, {1, 1}, {9, 9}});
    OracleParams o;
    for (int k = 1; k <= 2; ++k) {
        const auto s = fit_class_summary(d, k);
        o.means.push_back(s.mean);
        o.diag_sigma.push_back(s.diag_var);
    }
    const auto emp = predict(d, t, 0.1);
    const auto orc = predict(d, t, 0.1, ScoreMode::with_oracle(o));
    CHECK(emp.sets == orc.sets);
    CHECK(emp.pvalues == orc.pvalues);

    ScoreMode broken{ScoreMode::Kind::oracle, nullptr, {}};
    CHECK_THROWS_AS(predict(d, t, 0.1, broken), ValidationError);
    OracleParams one{{o.means[0]}, {o.diag_sigma[0]}};
    CHECK_THROWS_AS(predict(d, t, 0.1, ScoreMode::with_oracle(one)), ValidationError);
}

TEST_CASE("predict input errors") {
    const auto d = gaussian_classes({{0, 0}, {3, 3}}, 10, 1.0, 4);
    CHECK_THROWS_AS(predict(d, batch_of({{0, 0}}), 0.0), ValidationError);
    CHECK_THROWS_AS(predict(d, batch_of({{0, 0}}), 1.0), ValidationError);
    CHECK_THROWS_AS(predict(d, batch_of({{0, 0, 0}}), 0.1), ValidationError);

    auto flat = d;
    for (auto r : flat.class_rows(2)) flat.features(r, 0) = 1.0;
    CHECK_THROWS_AS(predict(flat, batch_of({{0, 0}}), 0.1), DegenerateVarianceError);
    CHECK_NOTHROW(predict(flat, batch_of({{0, 0}}), 0.1, ScoreMode::empirical(FitOptions{true})));

    TestBatch empty;
    empty.features = Matrix(0, 2);
    const auto pred = predict(d, empty, 0.1);
    CHECK(pred.sets.size() == 0);
    CHECK(pred.pvalues.thresholds.size() == 2);
}

TEST_CASE("set_size_discrepancy") {
    PredictionSets a, b;
    a.sets = {{1}, {1, 2}};
    b.sets = {{1}, {1}};
    CHECK(set_size_discrepancy(a, a) == 0.0);
    CHECK(set_size_discrepancy(a, b) == 0.5);
    PredictionSets none, full;
    none.sets = {{}};
    full.sets = {{1, 2, 3, 4}};
    CHECK(set_size_discrepancy(none, full) == 4.0);
    CHECK_THROWS_AS(set_size_discrepancy(a, full), ValidationError);
}
