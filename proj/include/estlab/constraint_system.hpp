#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "estlab/poly.hpp"
#include "estlab/pseudoexpectation.hpp"

namespace estlab {

// Matrix-valued polynomial expression required PSD under the functional.
struct PsdBlockExpr {
    std::string name;
    std::vector<std::vector<Polynomial>> entries;  // square, symmetric
};

// A linear cut sum_k coeff_k * y_k <= rhs on tracked moments, valid for every
// feasible functional and violated at the queried point.
struct LinearCut {
    std::vector<std::pair<int, double>> coeffs;
    double rhs = 0.0;
    std::string source;
};

using CustomOracle = std::function<std::optional<LinearCut>(const PseudoExpectation&)>;

// Full assignment (or mixture of assignments) proposed as a feasibility
// witness; moments are evaluated exactly.
struct CandidateAssignment {
    std::vector<Eigen::VectorXd> support;
    std::vector<double> weights;
};

struct ConstraintSystem {
    std::shared_ptr<VariableRegistry> registry = std::make_shared<VariableRegistry>();
    std::vector<Polynomial> equalities;    // p = 0
    std::vector<Polynomial> inequalities;  // p >= 0
    std::vector<PsdBlockExpr> psd_blocks;
    double bounding_radius = 1.0;

    // moment-matrix bases; their pairwise products define the tracked set
    std::vector<std::vector<Monomial>> moment_blocks;

    // counting metadata for the relaxed-satisfaction clauses
    std::vector<int> w_vars;
    int budget_T = 0;
    int n_samples = 0;

    std::vector<CandidateAssignment> candidates;
    std::vector<CustomOracle> custom_oracles;

    std::vector<Monomial> tracked_monomials() const;
    void validate() const;
};

struct SolverConfig {
    int degree = 4;
    double tau = 1e-10;           // approximate-satisfaction slack scale
    double eq_tol = 1e-7;         // equality residual tolerance
    double psd_tol = 1e-8;        // relative PSD tolerance
    double ineq_tol = 1e-7;
    long iteration_budget = 400000;
    double volume_log2_ratio = -40.0;  // ellipsoid termination
    bool try_candidates = true;
    std::size_t basis_cap = 5000;
};

enum class SolveStatus { Feasible, Infeasible, Budget };

struct SolveResult {
    SolveStatus status = SolveStatus::Budget;
    PseudoExpectation pe;
    long iterations = 0;
    double log_volume_ratio = 0.0;  // infeasibility certificate when Infeasible
    std::string detail;
};

SolveResult solve_pseudoexpectation(const ConstraintSystem& sys, const SolverConfig& cfg = {});

struct ClauseViolation {
    std::string clause;
    double value = 0.0;
    double threshold = 0.0;
};

struct SatisfactionReport {
    bool ok = true;
    std::vector<ClauseViolation> violations;
    int clauses_checked = 0;
};

// Clause-by-clause verification of approximate satisfaction at outlier budget
// T: normalization, PSD of moment blocks (sampled squares plus eigenvector
// directions), inequality products with tracked multipliers, and the counting
// clause with its 5*tau*T*n slack.
SatisfactionReport check_approx_satisfaction(const PseudoExpectation& pe,
                                             const ConstraintSystem& sys, double tau, int T,
                                             int degree, int samples = 16,
                                             std::uint64_t seed = 1);

// evaluates a candidate assignment exactly against all constraints
bool candidate_feasible(const ConstraintSystem& sys, const CandidateAssignment& cand,
                        const SolverConfig& cfg, PseudoExpectation* out_pe = nullptr);

}  // namespace estlab
