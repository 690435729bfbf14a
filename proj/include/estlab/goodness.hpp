#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "estlab/model.hpp"

namespace estlab {

enum class SubsetMode { Auto, Exhaustive, Heuristic };

struct GoodnessConfig {
    double c_good = 3.0;  // constant in front of the mean / covariance bounds
    double c_hog = 3.0;   // constant for the higher-order clauses
    SubsetMode mode = SubsetMode::Auto;  // Auto: exhaustive iff n <= 20
};

struct GoodnessReport {
    bool passed = true;
    Vector worst_direction;
    int worst_subset_size = 0;
    double margin = 0.0;  // bound minus observed, over the worst clause
    std::string mode;     // "exhaustive" or "heuristic"
    std::string worst_clause;
};

// Subset concentration of mean and covariance: the large-subset bounds and
// the small-subset covariance bound, with explicit constant c_good.
// Exhaustive over subsets when n <= 20, extreme-subset heuristic otherwise.
GoodnessReport check_eta_goodness(const PointDataset& points, double eta, double psi,
                                  const Vector& mu, const Matrix& sigma, int trials,
                                  std::uint64_t seed, const GoodnessConfig& cfg = {});

// Frobenius-normalised fourth-moment clauses on pre-whitened points.
GoodnessReport check_higher_order_goodness(const PointDataset& points, double eta, int trials,
                                           std::uint64_t seed, const GoodnessConfig& cfg = {});

struct HypercontractivityResult {
    bool certified = false;
    double min_eigenvalue = 0.0;
    bool rank_deficient = false;
};

// Degree-4 certificate for (1/n) sum <x_i - c, v>^4 <= C (v' S v)^2 where S is
// the empirical second moment about c. Decided by searching the Gram family
// of the slack quartic for a PSD completion, starting from the symmetric-
// subspace matrix C * vec(S)vec(S)' - (1/n) sum vec(z z')vec(z z')'. The
// search is exact for d <= 2 (one free Gram direction) and a sufficient test
// beyond; near-boundary inputs show up through min_eigenvalue.
HypercontractivityResult certify_hypercontractivity(const PointDataset& points, double constant,
                                                    const std::optional<Vector>& center = {},
                                                    bool regression_variant = false);

struct HyperGram {
    double margin = 0.0;   // best minimum eigenvalue over the Gram family
    Matrix gram_unitf;     // the completion attaining it, unit-Frobenius basis
};

// best Gram completion for C (v'Sv)^2 - (1/n) sum <z_i, v>^4 given the
// centered rows z; shared by the certificate above and the feasibility
// witnesses of the constraint systems
HyperGram hyper_gram_completion(const Matrix& second_moment, const Matrix& centered_rows,
                                double constant);

}  // namespace estlab
