#pragma once

#include <optional>

#include "estlab/constraint_system.hpp"
#include "estlab/model.hpp"

namespace estlab {

// Handles into a built system for extracting estimates from a functional.
struct SystemHandles {
    std::vector<int> theta;          // theta' ids
    std::vector<int> mu;             // mu' ids
    std::vector<int> sigma;          // Sigma' ids, row-major d x d (shared upper triangle)
    std::vector<int> q;              // Q ids, row-major
    int dim = 0;
};

struct BuiltSystem {
    ConstraintSystem system;
    SystemHandles handles;
};

Vector extract_vector(const PseudoExpectation& pe, const std::vector<int>& ids);
Matrix extract_matrix(const PseudoExpectation& pe, const std::vector<int>& ids, int dim);

struct RegressionSystemConfig {
    double eta = 0.0;
    int budget_T = -1;            // >= 0 switches the counting constraint to n - T
    bool with_inverse = false;    // register Q with its left/right inverse relations
    bool with_sqrt_witness = false;  // B, D square-root witnesses (d = 1 only)
    double noise_second = -1.0;   // default 1 + 2 eta
    double noise_fourth = 10.0;
    double hyper_constant = -1.0;  // default 3 + eta log^2(1/eta)
    double theta_bound = -1.0;     // default from data scale
    double q_bound = 1e3;
    std::vector<Vector> theta_anchors;  // extra candidate directions
    int max_candidate_drops = -1;       // default: allowed budget
};

BuiltSystem build_regression_system(const LabeledDataset& data, const RegressionSystemConfig& cfg);

struct MeanSystemConfig {
    double eta = 0.0;
    int budget_T = -1;
    double hyper_constant = -1.0;
    double mu_bound = -1.0;
    std::vector<Vector> mu_anchors;
    bool spread_candidates = true;  // free-slot variance-inflation mixtures
};

BuiltSystem build_mean_system(const PointDataset& points, const MeanSystemConfig& cfg);

struct CovSystemConfig {
    double eta = 0.0;
    int budget_T = -1;
    double hyper_constant = -1.0;   // spectral form
    double frobenius_constant = -1.0;  // 2 + O(eta log^2) form
    bool frobenius = false;
};

BuiltSystem build_cov_system(const PointDataset& points, const CovSystemConfig& cfg);

}  // namespace estlab
