#include "mmdcp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmdcp {

namespace {

constexpr std::uint64_t kTestStream = 0x7e57;
constexpr std::uint64_t kOutlierStream = 0xbad;

void fill_rows(Matrix& out, std::size_t first_row, std::size_t count, const ComponentSpec& spec,
               const ScenarioConfig& config, std::span<const double> atoms, std::uint64_t seed,
               std::uint64_t stream) {
    const auto n = static_cast<std::ptrdiff_t>(count);
    #pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(derive_seed(seed, stream, static_cast<std::uint64_t>(i)));
        sample_point(spec, config.rho, config.correlation, atoms, rng, out.row(first_row + static_cast<std::size_t>(i)));
    }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix_seed(mix_seed(master) ^ index);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return derive_seed(derive_seed(master, stream), index);
}

Scenario parse_scenario(const std::string& s) {
    if (s == "one" || s == "one_class") return Scenario::one_class;
    if (s == "multi" || s == "multi_class") return Scenario::multi_class;
    throw ValidationError("unknown scenario '" + s + "' (expected one_class or multi_class)");
}

std::string to_string(Scenario s) { return s == Scenario::one_class ? "one_class" : "multi_class"; }

Correlation parse_correlation(const std::string& s) {
    if (s == "ar1") return Correlation::ar1;
    if (s == "equicorrelated") return Correlation::equicorrelated;
    throw ValidationError("unknown correlation '" + s + "' (expected ar1 or equicorrelated)");
}

std::string to_string(Correlation c) { return c == Correlation::ar1 ? "ar1" : "equicorrelated"; }

void ScenarioConfig::check() const {
    if (p < 1) throw ValidationError("p must be at least 1");
    if (n_k < kMinClassCount) throw ValidationError("n_k must be at least 3");
    if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho must lie in [0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (inlier_parts < 0 || outlier_parts < 0 || inlier_parts + outlier_parts == 0) {
        throw ValidationError("inlier:outlier ratio must be nonnegative and not 0:0");
    }
    if (class_specs.empty()) throw ValidationError("at least one inlier class is required");
    if (scenario == Scenario::one_class && class_specs.size() != 1) {
        throw ValidationError("one_class scenario takes exactly one inlier class");
    }
    for (const auto& s : class_specs) {
        if (!(s.c >= 1.0)) throw ValidationError("component scale c must be >= 1");
    }
    if (!(outlier_spec.c >= 1.0)) throw ValidationError("outlier scale c must be >= 1");
}

ScenarioConfig ScenarioConfig::one_class_defaults() {
    ScenarioConfig c;
    c.scenario = Scenario::one_class;
    c.class_specs = {{0.0, 1.0}};
    c.outlier_spec = {0.0, 2.5};
    return c;
}

ScenarioConfig ScenarioConfig::multi_class_defaults() {
    ScenarioConfig c;
    c.scenario = Scenario::multi_class;
    c.class_specs = {{0.0, 1.0}, {1.3, 1.0}, {-1.3, 1.0}, {2.5, 1.0}};
    c.outlier_spec = {0.0, 3.5};
    return c;
}

ScenarioConfig ScenarioConfig::defaults(Scenario s) {
    return s == Scenario::one_class ? one_class_defaults() : multi_class_defaults();
}

std::vector<double> make_atoms(std::uint64_t atom_seed, std::size_t p) {
    std::mt19937_64 rng(derive_seed(atom_seed, 0xa70u));
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    std::vector<double> atoms(p);
    for (auto& a : atoms) a = unif(rng);
    return atoms;
}

void sample_point(const ComponentSpec& spec, double rho, Correlation corr, std::span<const double> atoms,
                  std::mt19937_64& rng, std::span<double> out) {
    const std::size_t p = atoms.size();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, p - 1);
    const double scale = std::sqrt(spec.c);

    if (corr == Correlation::ar1) {
        const double innov = std::sqrt(1.0 - rho * rho);
        double z = gauss(rng);
        for (std::size_t j = 0; j < p; ++j) {
            if (j > 0) z = rho * z + innov * gauss(rng);
            out[j] = scale * (z + spec.mu);
        }
    } else {
        const double shared = std::sqrt(rho) * gauss(rng);
        const double own = std::sqrt(1.0 - rho);
        for (std::size_t j = 0; j < p; ++j) {
            out[j] = scale * (shared + own * gauss(rng) + spec.mu);
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        out[j] += atoms[pick(rng)];
    }
}

std::vector<double> sample_point(const ComponentSpec& spec, double rho, Correlation corr,
                                 std::span<const double> atoms, std::mt19937_64& rng) {
    std::vector<double> out(atoms.size());
    sample_point(spec, rho, corr, atoms, rng, out);
    return out;
}

std::size_t TestCounts::inliers() const { return std::accumulate(per_class.begin(), per_class.end(), std::size_t{0}); }

TestCounts apportion_test(std::size_t m, int num_classes, int inlier_parts, int outlier_parts) {
    if (num_classes < 1) throw ValidationError("need at least one class");
    const double share = static_cast<double>(inlier_parts) / static_cast<double>(inlier_parts + outlier_parts);
    const auto inliers = static_cast<std::size_t>(std::llround(static_cast<double>(m) * share));
    const auto K = static_cast<std::size_t>(num_classes);

    TestCounts out;
    // equal quotas; leftover units go to the lowest class ids first
    out.per_class.assign(K, inliers / K);
    for (std::size_t k = 0; k < inliers % K; ++k) ++out.per_class[k];
    out.outliers = m - inliers;
    return out;
}

LabeledDataset generate_train(const ScenarioConfig& config, std::span<const double> atoms, std::uint64_t seed) {
    config.check();
    if (atoms.size() != config.p) throw ValidationError("atom count must equal p");
    const int K = config.num_classes();
    LabeledDataset data;
    data.num_classes = K;
    data.features = Matrix(config.n_k * static_cast<std::size_t>(K), config.p);
    data.labels.reserve(data.features.rows());
    for (int k = 1; k <= K; ++k) {
        fill_rows(data.features, config.n_k * static_cast<std::size_t>(k - 1), config.n_k,
                  config.class_specs[static_cast<std::size_t>(k - 1)], config, atoms, seed, static_cast<std::uint64_t>(k));
        data.labels.insert(data.labels.end(), config.n_k, k);
        data.label_names.push_back(std::to_string(k));
    }
    return data;
}

TestBatch generate_test(const ScenarioConfig& config, std::span<const double> atoms, std::uint64_t seed) {
    config.check();
    if (atoms.size() != config.p) throw ValidationError("atom count must equal p");
    const int K = config.num_classes();
    const auto counts = apportion_test(config.m, K, config.inlier_parts, config.outlier_parts);

    TestBatch test;
    test.features = Matrix(config.m, config.p);
    std::vector<int> truth;
    truth.reserve(config.m);
    std::size_t row = 0;
    for (int k = 1; k <= K; ++k) {
        const auto n = counts.per_class[static_cast<std::size_t>(k - 1)];
        fill_rows(test.features, row, n, config.class_specs[static_cast<std::size_t>(k - 1)], config, atoms,
                  derive_seed(seed, kTestStream), static_cast<std::uint64_t>(k));
        truth.insert(truth.end(), n, k);
        row += n;
    }
    fill_rows(test.features, row, counts.outliers, config.outlier_spec, config, atoms, derive_seed(seed, kTestStream),
              kOutlierStream);
    truth.insert(truth.end(), counts.outliers, K + 1);
    test.truth = std::move(truth);
    return test;
}

std::pair<LabeledDataset, TestBatch> generate(const ScenarioConfig& config) {
    const auto atoms = make_atoms(config.atom_seed, config.p);
    return {generate_train(config, atoms, derive_seed(config.run_seed, 0)),
            generate_test(config, atoms, derive_seed(config.run_seed, 1))};
}

OracleParams oracle_params(const ScenarioConfig& config, std::span<const double> atoms) {
    const double n = static_cast<double>(atoms.size());
    const double w_mean = std::accumulate(atoms.begin(), atoms.end(), 0.0) / n;
    double w_var = 0.0;
    for (double a : atoms) w_var += (a - w_mean) * (a - w_mean);
    w_var /= n;

    OracleParams params;
    for (const auto& spec : config.class_specs) {
        params.means.emplace_back(atoms.size(), std::sqrt(spec.c) * spec.mu + w_mean);
        params.diag_sigma.emplace_back(atoms.size(), spec.c + w_var);
    }
    return params;
}

}  // namespace mmdcp
