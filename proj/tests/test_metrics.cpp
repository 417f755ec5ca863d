#include <doctest.h>

#include <algorithm>
#include <random>

#include "mmdcp/metrics.hpp"

using namespace mmdcp;

namespace {

PredictionSets make_sets(std::vector<std::vector<int>> s) {
    PredictionSets out;
    out.sets = std::move(s);
    return out;
}

struct Instance {
    PredictionSets sets;
    std::vector<int> truth;
    int K;
};

Instance random_instance(std::mt19937_64& rng) {
    Instance x;
    x.K = std::uniform_int_distribution<int>(1, 6)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    std::bernoulli_distribution keep(std::uniform_real_distribution<double>(0, 1)(rng));
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<int> s;
        for (int k = 1; k <= x.K; ++k)
            if (keep(rng)) s.push_back(k);
        x.sets.sets.push_back(s);
        x.truth.push_back(std::uniform_int_distribution<int>(1, x.K + 1)(rng));
    }
    return x;
}

}  // namespace

TEST_CASE("classwise_fdr") {
    // no rejections from class 1
    CHECK(classwise_fdr(make_sets({{1}, {1, 2}}), std::vector<int>{1, 2}, 1) == 0.0);

    // 10 rejections from class 1, one of them a true class-1 point
    std::vector<std::vector<int>> s(12, std::vector<int>{2});
    s[10] = {1};
    s[11] = {1, 2};
    std::vector<int> truth(12, 3);
    truth[0] = 1;
    truth[10] = 1;
    CHECK(classwise_fdr(make_sets(s), truth, 1) == doctest::Approx(0.1));

    // inliers accepted, outliers rejected
    CHECK(classwise_fdr(make_sets({{1}, {}, {1}}), std::vector<int>{1, 2, 1}, 1) == 0.0);
    CHECK_THROWS_AS(classwise_fdr(make_sets({{1}}), std::vector<int>{1, 2}, 1), ValidationError);
}

TEST_CASE("scw_fdr_loss") {
    // K = 2: one rejection in class 1 that is a true class-1 point, none in class 2
    CHECK(scw_fdr_loss(make_sets({{2}}), std::vector<int>{1}, 2) == 0.5);
    CHECK(scw_fdr_loss(make_sets({{2}}), std::vector<int>{2}, 2) == 0.0);
    CHECK(scw_fdr_loss(make_sets({{1, 2}, {1, 2}}), std::vector<int>{1, 3}, 2) == 0.0);
}

TEST_CASE("global_fdr on outlier declarations") {
    CHECK(global_fdr(make_sets({{}, {1}}), std::vector<int>{2, 1}, 1) == 0.0);
    CHECK(global_fdr(make_sets({{1}, {1}}), std::vector<int>{2, 1}, 1) == 0.0);

    // 250 detected outliers plus 37 inliers with empty sets
    std::vector<std::vector<int>> s;
    std::vector<int> truth;
    for (int i = 0; i < 250; ++i) {
        s.push_back({});
        truth.push_back(5);
    }
    for (int i = 0; i < 750; ++i) {
        truth.push_back(1 + i % 4);
        s.push_back(i < 37 ? std::vector<int>{} : std::vector<int>{1 + i % 4});
    }
    const auto sets = make_sets(s);
    CHECK(global_fdr(sets, truth, 4) == doctest::Approx(37.0 / 287.0));
    CHECK(global_fdr(sets, truth, 4) == doctest::Approx(0.129).epsilon(0.001));
    CHECK(coverage(sets, truth, 4) == doctest::Approx(713.0 / 750.0));
    CHECK(power(sets, truth, 4) == 1.0);
    CHECK(flr(sets, truth, 4) == 0.0);
    CHECK(ambiguity(sets) == 1.0);
}

TEST_CASE("power, flr, coverage, accuracy, ambiguity") {
    SUBCASE("all outliers rejected") {
        const auto sets = make_sets({{}, {}, {1}, {2}});
        const std::vector<int> truth{3, 3, 1, 2};
        CHECK(power(sets, truth, 2) == 1.0);
        CHECK(flr(sets, truth, 2) == 0.0);
        CHECK(accuracy(sets, truth, 2) == 1.0);
    }
    SUBCASE("accept everything") {
        std::vector<std::vector<int>> s(8, std::vector<int>{1, 2, 3, 4});
        const std::vector<int> truth{1, 2, 3, 4, 1, 2, 5, 5};
        const auto sets = make_sets(s);
        CHECK(coverage(sets, truth, 4) == 1.0);
        CHECK(accuracy(sets, truth, 4) == 0.0);
        CHECK(ambiguity(sets) == 4.0);
        CHECK(flr(sets, truth, 4) == 0.25);
        CHECK(power(sets, truth, 4) == 0.0);
    }
    SUBCASE("power 0.996 with a quarter outliers") {
        std::vector<std::vector<int>> s;
        std::vector<int> truth;
        for (int i = 0; i < 250; ++i) {
            s.push_back(i == 0 ? std::vector<int>{1} : std::vector<int>{});
            truth.push_back(2);
        }
        for (int i = 0; i < 750; ++i) {
            s.push_back({1});
            truth.push_back(1);
        }
        const auto sets = make_sets(s);
        CHECK(power(sets, truth, 1) == doctest::Approx(0.996));
        CHECK(flr(sets, truth, 1) == doctest::Approx(0.001));
    }
    SUBCASE("ambiguity ignores empty sets") {
        CHECK(ambiguity(make_sets({{}, {1, 2}, {1}})) == 1.5);
        CHECK(ambiguity(make_sets({{}, {}})) == 0.0);
        CHECK(ambiguity(make_sets({})) == 0.0);
    }
    SUBCASE("accuracy wants the exact singleton") {
        const auto sets = make_sets({{1, 2}, {2}, {1}});
        CHECK(accuracy(sets, std::vector<int>{1, 2, 2}, 2) == doctest::Approx(1.0 / 3.0));
        CHECK(coverage(sets, std::vector<int>{1, 2, 2}, 2) == doctest::Approx(2.0 / 3.0));
    }
}

TEST_CASE("evaluate bundles every metric") {
    const auto sets = make_sets({{}, {1}, {1, 2}, {2}, {}});
    const std::vector<int> truth{3, 1, 2, 1, 1};
    const auto r = evaluate(sets, truth, 2);
    CHECK(r.classwise_fdr == std::vector<double>{classwise_fdr(sets, truth, 1), classwise_fdr(sets, truth, 2)});
    CHECK(r.scw_fdr == scw_fdr_loss(sets, truth, 2));
    CHECK(r.global_fdr == global_fdr(sets, truth, 2));
    CHECK(r.power == 1.0);
    CHECK(r.coverage == doctest::Approx(0.5));
    CHECK(r.accuracy == doctest::Approx(0.25));
    CHECK(r.ambiguity == doctest::Approx(4.0 / 3.0));
    const auto named = r.named();
    REQUIRE(named.size() == 9);
    CHECK(named[0].first == "classwise_fdr_1");
    CHECK(named[2].first == "scw_fdr");
    CHECK(named.back().first == "ambiguity");

    TestBatch t;
    t.features = Matrix(5, 1);
    CHECK_THROWS_AS(evaluate(sets, t, 2), ValidationError);
    t.truth = truth;
    CHECK(evaluate(sets, t, 2).named() == named);
}

TEST_CASE("random instances: ranges, SCW bound, K = 1, reordering") {
    std::mt19937_64 rng(2718);
    for (int rep = 0; rep < 2000; ++rep) {
        auto x = random_instance(rng);
        const auto r = evaluate(x.sets, x.truth, x.K);
        for (const auto& [name, v] : r.named()) {
            CHECK(v >= 0.0);
            CHECK(v <= (name == "ambiguity" ? double(x.K) : 1.0));
        }
        CHECK(r.scw_fdr <= rejection_fdp(x.sets, x.truth, x.K));
        if (x.K == 1) {
            CHECK(r.scw_fdr == r.classwise_fdr[0]);
            CHECK(r.scw_fdr == rejection_fdp(x.sets, x.truth, 1));
        }

        std::vector<std::size_t> order(x.truth.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        Instance y{{}, {}, x.K};
        for (auto i : order) {
            y.sets.sets.push_back(x.sets.sets[i]);
            y.truth.push_back(x.truth[i]);
        }
        CHECK(evaluate(y.sets, y.truth, y.K).named() == r.named());
    }
}
