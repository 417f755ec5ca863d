#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mmdcp/scoring.hpp"

using namespace mmdcp;

namespace {

Matrix rows_of(std::initializer_list<std::vector<double>> rows) {
    Matrix m;
    for (const auto& r : rows) m.append_row(r);
    return m;
}

Matrix random_rows(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix m(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) m(i, j) = 3.0 * z(rng) + static_cast<double>(j);
    return m;
}

// Two-pass textbook estimates, written independently of the library.
void reference_fit(const Matrix& rows, std::vector<double>& mean, std::vector<double>& var) {
    const std::size_t n = rows.rows(), p = rows.cols();
    mean.assign(p, 0.0);
    var.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        long double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += rows(i, j);
        mean[j] = static_cast<double>(s / n);
        long double ss = 0;
        for (std::size_t i = 0; i < n; ++i) ss += (rows(i, j) - mean[j]) * (rows(i, j) - mean[j]);
        var[j] = static_cast<double>(ss / (n - 1));
    }
}

}  // namespace

TEST_CASE("fit_class_summary hand examples") {
    SUBCASE("two rows") {
        const auto s = fit_class_summary(rows_of({{0, 0}, {2, 2}}), 1);
        CHECK(s.mean == std::vector<double>{1, 1});
        CHECK(s.diag_var == std::vector<double>{2, 2});
        CHECK(s.count == 2);
    }
    SUBCASE("p = 1") {
        const auto s = fit_class_summary(rows_of({{0}, {1}, {2}}), 1);
        CHECK(s.mean == std::vector<double>{1});
        CHECK(s.diag_var == std::vector<double>{1});
    }
    SUBCASE("class rows only") {
        LabeledDataset d;
        d.num_classes = 2;
        d.features = rows_of({{0, 0}, {100, 100}, {2, 2}, {-50, 7}, {1, 1}});
        d.labels = {1, 2, 1, 2, 1};
        const auto s = fit_class_summary(d, 1);
        CHECK(s.mean == std::vector<double>{1, 1});
        CHECK(s.diag_var == std::vector<double>{1, 1});
        CHECK(s.class_id == 1);
        CHECK_THROWS_AS(fit_class_summary(d, 3), ValidationError);
    }
}

TEST_CASE("fit_class_summary matches a two-pass reference") {
    const auto rows = random_rows(137, 9, 5);
    const auto s = fit_class_summary(rows, 2);
    std::vector<double> mean, var;
    reference_fit(rows, mean, var);
    for (std::size_t j = 0; j < 9; ++j) {
        CHECK(s.mean[j] == doctest::Approx(mean[j]).epsilon(1e-12));
        CHECK(s.diag_var[j] == doctest::Approx(var[j]).epsilon(1e-12));
    }
}

TEST_CASE("zero variance") {
    const auto rows = rows_of({{1, 5}, {1, 6}, {1, 7}});
    try {
        fit_class_summary(rows, 3);
        FAIL("expected DegenerateVarianceError");
    } catch (const DegenerateVarianceError& e) {
        CHECK(e.class_id == 3);
        CHECK(e.column == 0);
    }
    const auto s = fit_class_summary(rows, 3, FitOptions{true});
    CHECK(s.diag_var[0] == kVarianceFloor);
    CHECK(s.diag_var[1] == 1.0);

    // a value that does not sum exactly still counts as constant
    const auto awkward = rows_of({{0.1}, {0.1}, {0.1}});
    CHECK_THROWS_AS(fit_class_summary(awkward, 1), DegenerateVarianceError);
    CHECK_THROWS_AS(fit_class_summary(rows_of({{1.0}}), 1), ValidationError);
}

TEST_CASE("empirical and oracle scores") {
    ClassSummary s{1, {1, 1}, {2, 2}, 2};
    CHECK(empirical_score(s, std::vector<double>{3, 1}) == 2.0);
    CHECK(empirical_score(s, s.mean) == 0.0);
    CHECK_THROWS_AS(empirical_score(s, std::vector<double>{1}), ValidationError);

    OracleParams o{{{0, 0}}, {{4, 1}}};
    CHECK(oracle_score(o, 1, std::vector<double>{2, 3}) == 10.0);
    CHECK(oracle_score(o, 1, std::vector<double>{0, 0}) == 0.0);
    OracleParams one{{{0}}, {{1}}};
    CHECK(oracle_score(one, 1, std::vector<double>{2}) == 4.0);
    CHECK_THROWS_AS(oracle_score(o, 2, std::vector<double>{2, 3}), ValidationError);
    CHECK_THROWS_AS(oracle_score(o, 1, std::vector<double>{2, 3, 4}), ValidationError);
}

TEST_CASE("score_batch") {
    ClassSummary s{1, {1, 1}, {2, 2}, 2};
    CHECK(score_batch(s, Matrix(0, 2)).empty());
    CHECK(score_batch(s, rows_of({{1, 1}})) == std::vector<double>{0.0});
    const auto two = rows_of({{3, 1}, {1, 3}});
    const auto out = score_batch(s, two);
    CHECK(out == std::vector<double>{empirical_score(s, two.row(0)), empirical_score(s, two.row(1))});
    CHECK_THROWS_AS(score_batch(s, rows_of({{1, 2, 3}})), ValidationError);
}

TEST_CASE("parallel score_batch agrees with the serial reference") {
    // large enough to take the threaded branch
    const auto train = random_rows(300, 40, 1);
    const auto test = random_rows(2000, 40, 2);
    const auto s = fit_class_summary(train, 1);
    const auto par = score_batch(s, test);
    const auto ser = serial::score_batch(s, test);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) CHECK(par[i] == doctest::Approx(ser[i]).epsilon(1e-12));

    OracleParams o{{s.mean}, {s.diag_var}};
    const auto opar = score_batch(o, 1, test);
    const auto oser = serial::score_batch(o, 1, test);
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(opar[i] == doctest::Approx(oser[i]).epsilon(1e-12));
        CHECK(opar[i] == doctest::Approx(par[i]).epsilon(1e-12));
    }
}

TEST_CASE("affine invariance of empirical scores") {
    const std::size_t p = 12;
    const auto train = random_rows(60, p, 11);
    const auto test = random_rows(40, p, 12);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.2, 5.0), b(-100.0, 100.0);
    std::bernoulli_distribution flip(0.5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(p), shift(p);
        for (std::size_t j = 0; j < p; ++j) {
            a[j] = flip(rng) ? -u(rng) : u(rng);
            shift[j] = b(rng);
        }
        auto map = [&](Matrix m) {
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < p; ++j) m(i, j) = a[j] * m(i, j) + shift[j];
            return m;
        };
        const auto before = score_batch(fit_class_summary(train, 1), test);
        const auto after = score_batch(fit_class_summary(map(train), 1), map(test));
        for (std::size_t i = 0; i < before.size(); ++i) {
            CHECK(std::abs(after[i] - before[i]) <= 1e-9 * std::abs(before[i]));
        }
    }
}

TEST_CASE("permutation invariance of the class summary") {
    auto train = random_rows(50, 6, 21);
    const auto base = fit_class_summary(train, 1);
    std::vector<std::size_t> order(50);
    for (std::size_t i = 0; i < 50; ++i) order[i] = i;
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 10; ++rep) {
        std::shuffle(order.begin(), order.end(), rng);
        const auto s = fit_class_summary(train.select_rows(order), 1);
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(s.mean[j] == doctest::Approx(base.mean[j]).epsilon(1e-12));
            CHECK(s.diag_var[j] == doctest::Approx(base.diag_var[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("empirical scores approach oracle scores as n_k grows") {
    // Fixed Gaussian N(mu_j, sigma_j^2) per coordinate and a fixed test grid.
    const std::size_t p = 10;
    std::vector<double> mu(p), sd(p);
    for (std::size_t j = 0; j < p; ++j) {
        mu[j] = 0.5 * static_cast<double>(j);
        sd[j] = 1.0 + 0.2 * static_cast<double>(j);
    }
    OracleParams o{{mu}, {{}}};
    for (double s : sd) o.diag_sigma[0].push_back(s * s);
    Matrix grid(0, p);
    for (int g = -2; g <= 2; ++g) {
        std::vector<double> x(p);
        for (std::size_t j = 0; j < p; ++j) x[j] = mu[j] + g * sd[j];
        grid.append_row(x);
    }
    const auto truth = score_batch(o, 1, grid);

    std::vector<double> medians;
    for (std::size_t n : {100, 400, 1600}) {
        std::vector<double> gaps;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            std::mt19937_64 rng(seed * 7919 + n);
            std::normal_distribution<double> z(0.0, 1.0);
            Matrix train(n, p);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < p; ++j) train(i, j) = mu[j] + sd[j] * z(rng);
            const auto est = score_batch(fit_class_summary(train, 1), grid);
            double worst = 0.0;
            for (std::size_t i = 0; i < est.size(); ++i) worst = std::max(worst, std::abs(est[i] - truth[i]));
            gaps.push_back(worst);
        }
        std::sort(gaps.begin(), gaps.end());
        medians.push_back(0.5 * (gaps[24] + gaps[25]));
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}
