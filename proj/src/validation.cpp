#include "mmdcp/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "mmdcp/conformal.hpp"
#include "mmdcp/datagen.hpp"
#include "mmdcp/metrics.hpp"

namespace mmdcp::validation {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

TestBatch single_point(const ScenarioConfig& cfg, std::span<const double> atoms, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TestBatch test;
    test.features = Matrix(0, cfg.p);
    test.features.append_row(
        sample_point(cfg.class_specs[static_cast<std::size_t>(k - 1)], cfg.rho, cfg.correlation, atoms, rng));
    test.truth = std::vector<int>{k};
    return test;
}

std::string joined(const std::ostringstream& s) {
    auto text = s.str();
    while (!text.empty() && (text.back() == ' ' || text.back() == ';')) text.pop_back();
    return text;
}

double upper_quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

OracleDraws draw_oracle_pvalues(const OracleDesign& design, double coverage_alpha) {
    auto cfg = ScenarioConfig::one_class_defaults();
    cfg.p = design.p;
    cfg.n_k = design.n_k;
    cfg.rho = design.rho;
    cfg.m = 1;
    const auto atoms = make_atoms(cfg.atom_seed, cfg.p);
    const auto oracle = oracle_params(cfg, atoms);

    OracleDraws out;
    out.coverage_alpha = coverage_alpha;
    out.pvalues.assign(design.draws, 0.0);
    std::vector<char> covered(design.draws, 0);
    const auto n = static_cast<std::ptrdiff_t>(design.draws);
    #pragma omp parallel for schedule(static)
    for (std::ptrdiff_t d = 0; d < n; ++d) {
        const auto seed = derive_seed(design.seed, static_cast<std::uint64_t>(d));
        const auto train = generate_train(cfg, atoms, derive_seed(seed, 0));
        const auto test = single_point(cfg, atoms, 1, derive_seed(seed, 1));
        const auto pred = predict(train, test, coverage_alpha, ScoreMode::with_oracle(oracle));
        out.pvalues[static_cast<std::size_t>(d)] = pred.pvalues.raw(0, 0);
        covered[static_cast<std::size_t>(d)] = pred.sets.contains(0, 1) ? 1 : 0;
    }
    out.covered.assign(covered.begin(), covered.end());
    return out;
}

CheckResult check_oracle_validity(const OracleDraws& draws, std::span<const double> alphas) {
    CheckResult r{"oracle-validity", true, {}, 0.0};
    const double N = static_cast<double>(draws.pvalues.size());
    std::ostringstream detail;
    for (double a : alphas) {
        const auto hits = std::count_if(draws.pvalues.begin(), draws.pvalues.end(), [a](double p) { return p <= a; });
        const double freq = static_cast<double>(hits) / N;
        const double bound = a + 3.0 * std::sqrt(a * (1.0 - a) / N);
        const bool ok = freq <= bound;
        r.passed = r.passed && ok;
        detail << "alpha=" << a << " P(p<=alpha)=" << fmt(freq) << " bound=" << fmt(bound) << (ok ? "" : " VIOLATED")
               << "; ";
    }
    r.detail = joined(detail);
    return r;
}

CheckResult check_oracle_coverage(const OracleDraws& draws, double tolerance) {
    const double N = static_cast<double>(draws.covered.size());
    const double freq = static_cast<double>(std::count(draws.covered.begin(), draws.covered.end(), true)) / N;
    const double floor = 1.0 - draws.coverage_alpha - tolerance;
    CheckResult r{"oracle-coverage", freq >= floor, {}, 0.0};
    r.detail = "alpha=" + fmt(draws.coverage_alpha, 2) + " coverage=" + fmt(freq) + " required>=" + fmt(floor);
    return r;
}

DeviationResult measure_pvalue_deviation(const DeviationDesign& design) {
    auto cfg = ScenarioConfig::one_class_defaults();
    cfg.p = design.p;
    cfg.m = 1;
    const auto atoms = make_atoms(cfg.atom_seed, cfg.p);
    const auto oracle = oracle_params(cfg, atoms);
    const DeviationBound bound(design.a);

    DeviationResult out;
    for (std::size_t n_k : design.n_grid) {
        cfg.n_k = n_k;
        std::vector<double> gaps(design.draws);
        const auto n = static_cast<std::ptrdiff_t>(design.draws);
        #pragma omp parallel for schedule(static)
        for (std::ptrdiff_t d = 0; d < n; ++d) {
            const auto seed = derive_seed(design.seed, n_k, static_cast<std::uint64_t>(d));
            const auto train = generate_train(cfg, atoms, derive_seed(seed, 0));
            const auto test = single_point(cfg, atoms, 1, derive_seed(seed, 1));
            const double emp = predict(train, test, 0.05).pvalues.raw(0, 0);
            const double orc = predict(train, test, 0.05, ScoreMode::with_oracle(oracle)).pvalues.raw(0, 0);
            gaps[static_cast<std::size_t>(d)] = std::abs(emp - orc);
        }
        out.quantiles.push_back(upper_quantile(gaps, design.quantile));
        out.radii.push_back(bound.radius(n_k));
    }
    return out;
}

CheckResult check_pvalue_deviation(const DeviationDesign& design) {
    const auto t0 = Clock::now();
    const auto res = measure_pvalue_deviation(design);
    CheckResult r{"pvalue-deviation", true, {}, 0.0};
    std::ostringstream detail;
    for (std::size_t i = 0; i < res.quantiles.size(); ++i) {
        const double ratio = res.quantiles[i] / res.radii[i];
        detail << "n_k=" << design.n_grid[i] << " q" << static_cast<int>(design.quantile * 100) << "="
               << fmt(res.quantiles[i]) << " t_k=" << fmt(res.radii[i]) << " ratio=" << fmt(ratio) << "; ";
        r.passed = r.passed && ratio < 1.0;
        if (i > 0 && !(res.quantiles[i] < res.quantiles[i - 1])) r.passed = false;
    }
    r.detail = joined(detail);
    r.seconds = elapsed(t0);
    return r;
}

std::vector<double> measure_set_discrepancy(const DiscrepancyDesign& design) {
    auto cfg = ScenarioConfig::multi_class_defaults();
    cfg.p = design.p;
    cfg.m = design.m;
    cfg.alpha = design.alpha;
    const auto atoms = make_atoms(cfg.atom_seed, cfg.p);
    const auto oracle = oracle_params(cfg, atoms);

    std::vector<std::vector<double>> per_n(design.n_grid.size(), std::vector<double>(design.seeds));
    const auto S = static_cast<std::ptrdiff_t>(design.seeds);
    #pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < S; ++s) {
        const auto seed = derive_seed(design.seed, static_cast<std::uint64_t>(s));
        auto local = cfg;
        const auto test = generate_test(local, atoms, derive_seed(seed, 0));
        for (std::size_t i = 0; i < design.n_grid.size(); ++i) {
            local.n_k = design.n_grid[i];
            const auto train = generate_train(local, atoms, derive_seed(seed, 1 + i));
            const auto emp = predict(train, test, design.alpha).sets;
            const auto orc = predict(train, test, design.alpha, ScoreMode::with_oracle(oracle)).sets;
            per_n[i][static_cast<std::size_t>(s)] = set_size_discrepancy(emp, orc);
        }
    }
    std::vector<double> out;
    for (auto& v : per_n) out.push_back(median(v));
    return out;
}

CheckResult check_set_discrepancy(const DiscrepancyDesign& design) {
    const auto t0 = Clock::now();
    const auto med = measure_set_discrepancy(design);
    CheckResult r{"set-discrepancy", true, {}, 0.0};
    std::ostringstream detail;
    for (std::size_t i = 0; i < med.size(); ++i) {
        detail << "n_k=" << design.n_grid[i] << " median=" << fmt(med[i]) << "; ";
        if (i > 0 && med[i] > med[i - 1]) r.passed = false;
    }
    r.detail = joined(detail);
    r.seconds = elapsed(t0);
    return r;
}

CheckResult check_classwise_fdr(const FdrDesign& design) {
    const auto t0 = Clock::now();
    auto cfg = ScenarioConfig::multi_class_defaults();
    cfg.p = design.p;
    cfg.n_k = design.n_k;
    cfg.m = design.m;
    cfg.rho = design.rho;
    cfg.alpha = design.alpha;
    const auto atoms = make_atoms(cfg.atom_seed, cfg.p);
    const int K = cfg.num_classes();

    std::vector<std::vector<double>> fdr(design.replicates);
    std::vector<double> scw(design.replicates);
    const auto n = static_cast<std::ptrdiff_t>(design.replicates);
    #pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const auto seed = derive_seed(design.seed, static_cast<std::uint64_t>(r));
        const auto train = generate_train(cfg, atoms, derive_seed(seed, 0));
        const auto test = generate_test(cfg, atoms, derive_seed(seed, 1));
        const auto report = evaluate(predict(train, test, design.alpha).sets, test, K);
        fdr[static_cast<std::size_t>(r)] = report.classwise_fdr;
        scw[static_cast<std::size_t>(r)] = report.scw_fdr;
    }

    CheckResult res{"classwise-fdr", true, {}, 0.0};
    std::ostringstream detail;
    const double limit = design.alpha + design.tolerance;
    for (int k = 0; k < K; ++k) {
        double mean = 0.0;
        for (const auto& f : fdr) mean += f[static_cast<std::size_t>(k)];
        mean /= static_cast<double>(design.replicates);
        detail << "class " << k + 1 << " CW-FDR=" << fmt(mean) << "; ";
        res.passed = res.passed && mean <= limit;
    }
    const double scw_mean = std::accumulate(scw.begin(), scw.end(), 0.0) / static_cast<double>(design.replicates);
    res.passed = res.passed && scw_mean <= design.alpha;
    detail << "SCW-FDR=" << fmt(scw_mean) << " limit(class)=" << fmt(limit) << " limit(SCW)=" << fmt(design.alpha);
    res.detail = detail.str();
    res.seconds = elapsed(t0);
    return res;
}

CheckResult check_scw_pointwise(std::size_t instances, std::uint64_t seed) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(seed);
    std::size_t violations = 0;
    for (std::size_t it = 0; it < instances; ++it) {
        const int K = std::uniform_int_distribution<int>(1, 6)(rng);
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
        const double keep = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::bernoulli_distribution include(keep);
        std::uniform_int_distribution<int> label(1, K + 1);
        PredictionSets sets;
        std::vector<int> truth(m);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<int> s;
            for (int k = 1; k <= K; ++k) {
                if (include(rng)) s.push_back(k);
            }
            sets.sets.push_back(std::move(s));
            truth[i] = label(rng);
        }
        if (scw_fdr_loss(sets, truth, K) > rejection_fdp(sets, truth, K)) ++violations;
    }
    CheckResult r{"scw-le-global", violations == 0, {}, elapsed(t0)};
    r.detail = std::to_string(instances) + " instances, " + std::to_string(violations) + " violations";
    return r;
}

RemarkResult simulate_remark(double beta, std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution null_rejection(beta);
    PredictionSets sets;
    // rejected from class 1, accepted by class 2
    sets.sets = {{2}};
    RemarkResult out;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::vector<int> truth{null_rejection(rng) ? 1 : 2};
        out.scw_mean += scw_fdr_loss(sets, truth, 2);
        out.global_mean += rejection_fdp(sets, truth, 2);
    }
    out.scw_mean /= static_cast<double>(trials);
    out.global_mean /= static_cast<double>(trials);
    return out;
}

CheckResult check_remark(double beta, std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const auto res = simulate_remark(beta, trials, seed);
    const bool ok = std::abs(res.scw_mean - beta / 2.0) <= 0.005 && std::abs(res.global_mean - beta) <= 0.01;
    CheckResult r{"scw-remark", ok, {}, elapsed(t0)};
    r.detail = "beta=" + fmt(beta, 2) + " SCW-FDR=" + fmt(res.scw_mean) + " (target " + fmt(beta / 2.0) +
               "±0.005) global=" + fmt(res.global_mean) + " (target " + fmt(beta) + "±0.01)";
    return r;
}

std::vector<bool> step_up_rejections(std::span<const double> pvals, double alpha) {
    const std::size_t m = pvals.size();
    std::vector<double> sorted(pvals.begin(), pvals.end());
    std::sort(sorted.begin(), sorted.end());
    double cutoff = -1.0;
    for (std::size_t i = m; i >= 1; --i) {
        if (sorted[i - 1] <= static_cast<double>(i) * alpha / static_cast<double>(m)) {
            cutoff = sorted[i - 1];
            break;
        }
    }
    std::vector<bool> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = pvals[i] <= cutoff;
    return out;
}

CheckResult check_bh_equivalence(std::size_t vectors, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const std::vector<double> alphas{0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t mismatches = 0;
    for (std::size_t v = 0; v < vectors; ++v) {
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
        const double signal_share = unif(rng);
        std::vector<double> p(m);
        for (auto& x : p) {
            const double u = 1.0 - unif(rng);  // (0, 1]
            x = unif(rng) < signal_share ? std::pow(u, 6.0) : u;
        }
        const auto adjusted = bh_adjust(p);
        for (double a : alphas) {
            const auto classical = step_up_rejections(p, a);
            for (std::size_t i = 0; i < m; ++i) {
                if ((adjusted[i] <= a) != classical[i]) {
                    ++mismatches;
                    break;
                }
            }
        }
    }
    CheckResult r{"bh-equivalence", mismatches == 0, {}, elapsed(t0)};
    r.detail = std::to_string(vectors) + " vectors x " + std::to_string(alphas.size()) + " alphas, " +
               std::to_string(mismatches) + " mismatching rejection sets";
    return r;
}

double bh_null_fdr(std::size_t m, double alpha, std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double total = 0.0;
    std::vector<double> p(m);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& x : p) x = 1.0 - unif(rng);
        const auto adjusted = bh_adjust(p);
        // every hypothesis is null, so the FDP is 1 whenever anything is rejected
        if (std::any_of(adjusted.begin(), adjusted.end(), [alpha](double q) { return q <= alpha; })) total += 1.0;
    }
    return total / static_cast<double>(trials);
}

CheckResult check_bh_null_fdr(double alpha, std::size_t trials, double tolerance, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const double fdr = bh_null_fdr(20, alpha, trials, seed);
    CheckResult r{"bh-null-fdr", fdr <= alpha + tolerance, {}, elapsed(t0)};
    r.detail = "alpha=" + fmt(alpha, 2) + " FDR=" + fmt(fdr) + " limit=" + fmt(alpha + tolerance) + " over " +
               std::to_string(trials) + " trials";
    return r;
}

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{"validity", "coverage", "deviation", "discrepancy",
                                                "cwfdr",    "scw",      "remark",    "bh"};
    return names;
}

std::vector<CheckResult> run_checks(const std::vector<std::string>& names, std::uint64_t seed_offset) {
    const auto& known = check_names();
    for (const auto& n : names) {
        if (std::find(known.begin(), known.end(), n) == known.end()) throw ValidationError("unknown check: " + n);
    }
    auto wanted = [&](const char* n) { return std::find(names.begin(), names.end(), n) != names.end(); };

    std::vector<CheckResult> out;
    OracleDesign od;
    od.seed += seed_offset;
    if (wanted("validity") || wanted("coverage")) {
        const auto t0 = Clock::now();
        const auto draws = draw_oracle_pvalues(od, 0.05);
        const double draw_seconds = elapsed(t0);
        if (wanted("validity")) {
            const std::vector<double> alphas{0.01, 0.05, 0.1, 0.2};
            out.push_back(check_oracle_validity(draws, alphas));
            out.back().seconds = draw_seconds;
        }
        if (wanted("coverage")) {
            out.push_back(check_oracle_coverage(draws, 0.02));
            out.back().seconds = draw_seconds;
            const auto t1 = Clock::now();
            const auto half = draw_oracle_pvalues(od, 0.5);
            out.push_back(check_oracle_coverage(half, 3.0 * std::sqrt(0.25 / static_cast<double>(od.draws))));
            out.back().name = "oracle-coverage-alpha0.5";
            out.back().seconds = elapsed(t1);
        }
    }
    if (wanted("deviation")) {
        DeviationDesign dd;
        dd.seed += seed_offset;
        out.push_back(check_pvalue_deviation(dd));
    }
    if (wanted("discrepancy")) {
        DiscrepancyDesign sd;
        sd.seed += seed_offset;
        out.push_back(check_set_discrepancy(sd));
    }
    if (wanted("cwfdr")) {
        FdrDesign fd;
        fd.seed += seed_offset;
        out.push_back(check_classwise_fdr(fd));
    }
    if (wanted("scw")) out.push_back(check_scw_pointwise(10000, 53 + seed_offset));
    if (wanted("remark")) out.push_back(check_remark(0.15, 100000, 59 + seed_offset));
    if (wanted("bh")) {
        out.push_back(check_bh_equivalence(1000, 61 + seed_offset));
        out.push_back(check_bh_null_fdr(0.1, 5000, 0.01, 67 + seed_offset));
    }
    return out;
}

std::vector<CheckResult> run_all(std::uint64_t seed_offset) { return run_checks(check_names(), seed_offset); }

}  // namespace mmdcp::validation
