#ifndef MMDCP_DATAGEN_HPP
#define MMDCP_DATAGEN_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmdcp/core.hpp"

/**
 * @file datagen.hpp
 *
 * @brief Seeded Gaussian-mixture generator for the one-class and multi-class simulation designs.
 *
 * A point of a component with mean level `mu` and scale `c` is `sqrt(c) * (Z + mu * 1) + W`.
 * `Z` is a correlated standard Gaussian vector, and each coordinate of `W` is drawn uniformly
 * from a fixed set of `p` scalar atoms on [-3, 3]. The atoms depend only on the atom seed,
 * so they stay fixed across replicates while the run seed varies.
 */

namespace mmdcp {

/// splitmix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

enum class Scenario { one_class, multi_class };
enum class Correlation { ar1, equicorrelated };

Scenario parse_scenario(const std::string& s);
std::string to_string(Scenario s);
Correlation parse_correlation(const std::string& s);
std::string to_string(Correlation c);

struct ComponentSpec {
    double mu = 0.0;
    double c = 1.0;

    friend bool operator==(const ComponentSpec&, const ComponentSpec&) = default;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::multi_class;
    std::size_t p = 1000;
    std::size_t n_k = 1000;
    std::size_t m = 1000;
    double rho = 0.0;
    double alpha = 0.05;
    // inlier:outlier ratio of the test set
    int inlier_parts = 3;
    int outlier_parts = 1;
    std::vector<ComponentSpec> class_specs;
    ComponentSpec outlier_spec;
    Correlation correlation = Correlation::ar1;
    std::uint64_t atom_seed = 2024;
    std::uint64_t run_seed = 1;

    int num_classes() const { return static_cast<int>(class_specs.size()); }
    void check() const;

    /// mu = 0; inliers c = 1, outliers c = 2.5.
    static ScenarioConfig one_class_defaults();
    /// Class means 0, 1.3, -1.3, 2.5 with c = 1; outliers mean 0, c = 3.5.
    static ScenarioConfig multi_class_defaults();
    static ScenarioConfig defaults(Scenario s);

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// `p` atoms uniform on [-3, 3]; a pure function of `(atom_seed, p)`.
std::vector<double> make_atoms(std::uint64_t atom_seed, std::size_t p);

/// Writes one draw of `sqrt(c) (Z + mu) + W` into `out` (length = atoms.size()).
void sample_point(const ComponentSpec& spec, double rho, Correlation corr, std::span<const double> atoms,
                  std::mt19937_64& rng, std::span<double> out);

std::vector<double> sample_point(const ComponentSpec& spec, double rho, Correlation corr,
                                 std::span<const double> atoms, std::mt19937_64& rng);

/// Test-set composition: inliers per class (largest-remainder split) and the outlier count.
struct TestCounts {
    std::vector<std::size_t> per_class;
    std::size_t outliers = 0;

    std::size_t inliers() const;
};

TestCounts apportion_test(std::size_t m, int num_classes, int inlier_parts, int outlier_parts);

/// `n_k` rows per inlier class, in class order. Never contains outliers.
LabeledDataset generate_train(const ScenarioConfig& config, std::span<const double> atoms, std::uint64_t seed);

/// Inliers class by class, then outliers; truth attached.
TestBatch generate_test(const ScenarioConfig& config, std::span<const double> atoms, std::uint64_t seed);

/// Training set and one test set from `(atom_seed, run_seed)`.
std::pair<LabeledDataset, TestBatch> generate(const ScenarioConfig& config);

/**
 * True class means and covariance diagonals: mean `sqrt(c) mu + E[W]` and variance
 * `c + Var(W)`, where `W` is uniform over the atoms. Correlation leaves the diagonal at 1.
 */
OracleParams oracle_params(const ScenarioConfig& config, std::span<const double> atoms);

}  // namespace mmdcp

#endif  // MMDCP_DATAGEN_HPP
