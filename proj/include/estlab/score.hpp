#pragma once

#include <cstdint>
#include <optional>

#include "estlab/constraint_system.hpp"
#include "estlab/model.hpp"
#include "estlab/systems.hpp"

namespace estlab {

enum class Task { Regression, Mean };

struct ScoreSpec {
    double alpha = 0.2;
    double tau = -1.0;  // <= 0: default 1/(n d R L / alpha)^10, capped for floating point
    double norm_bound = 1.0;       // R
    double cov_bound = 1.0;        // L
    Task task = Task::Regression;
    double closeness_const = 1.0;  // hidden O(alpha^2) constant
    double q_bound = -1.0;         // <= 0: derived so the whole domain stays reachable
    SolverConfig solver;

    double tau_effective(int n, int d) const;
    double domain_radius(int n, int d) const;  // 2R + n tau + alpha sqrt(L)
};

struct ScoreCertificate {
    PseudoExpectation functional;
    int T = 0;
    double closeness_margin = 0.0;
    bool budget_flagged = false;  // solver exhausted somewhere; T is an upper bound
    std::string decided_by;
};

std::pair<int, ScoreCertificate> score_regression(const Vector& theta_tilde,
                                                  const LabeledDataset& data,
                                                  const ScoreSpec& spec);
std::pair<int, ScoreCertificate> score_mean(const Vector& mu_tilde, const PointDataset& points,
                                            const ScoreSpec& spec);

// Separation oracle for { (x, M) : alpha^2 M - x x^T >= 0 }. When the query
// violates the constraint, the returned hyperplane <hx, x> + <hm, M> <= rhs
// holds for every feasible pair and is strictly violated by the query.
struct ClosenessOracleResult {
    bool feasible = true;
    Vector hx;
    Matrix hm;
    double rhs = 0.0;
    Vector witness_direction;
};

ClosenessOracleResult closeness_oracle(const Vector& x0, const Matrix& m0, double alpha);

struct LowScoreResult {
    Vector parameter;
    int T = 0;
    bool budget_flagged = false;
};

LowScoreResult find_low_score_regression(const LabeledDataset& data, const ScoreSpec& spec);
LowScoreResult find_low_score_mean(const PointDataset& points, const ScoreSpec& spec);

struct QuasiConvexityReport {
    int pairs = 0;
    int violations = 0;
    double worst_excess = 0.0;  // score(mid) - max(score(a), score(b)), before the +1 slack
};

QuasiConvexityReport quasiconvexity_probe(Task task, const LabeledDataset& labeled,
                                          const PointDataset& points, const ScoreSpec& spec,
                                          int pairs, std::uint64_t seed);

// feasibility decision for one (parameter, T); used by the score search and
// the mechanisms. Decision order: sound infeasibility screen, exact witness
// candidates, ellipsoid arbiter.
enum class ScoreFeasibility { Feasible, Infeasible, Budget };
ScoreFeasibility score_feasible_at(Task task, const Vector& param, const LabeledDataset& labeled,
                                   const PointDataset& points, const ScoreSpec& spec, int T,
                                   PseudoExpectation* witness = nullptr,
                                   std::string* decided_by = nullptr);

}  // namespace estlab
