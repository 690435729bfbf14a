#pragma once

#include <cstdint>
#include <vector>

#include "estlab/model.hpp"
#include "estlab/score.hpp"

namespace estlab {

struct MechanismConfig {
    double epsilon = 1.0;
    double delta = 0.0;
    double beta = 0.05;
    double eta_star = 0.05;   // breakdown threshold for the propose-test step
    int grid_per_dim = 50;
    long cell_cap = 1000000;
    std::uint64_t seed = 0;
};

struct MechanismOutput {
    Vector parameter;
    int score = 0;
    bool abstained = false;  // approx-DP test-step failure (the delta event)
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    double volume_log_ratio = 0.0;  // log(V_{eta*} / V_{0.8 eta*}), approx path
    std::vector<int> cell_scores;
    std::vector<double> cell_probs;
    std::vector<Vector> cells;
};

// Exponential mechanism over a uniform grid on the domain ball with weights
// exp(-epsilon * score / 2); epsilon-DP follows from score sensitivity 1.
MechanismOutput pure_dp_mechanism(Task task, const LabeledDataset& labeled,
                                  const PointDataset& points, const ScoreSpec& spec,
                                  const MechanismConfig& config);

// Truncated variant: propose-test at 0.7 eta* n, then sample within the
// eta*-sublevel set.
MechanismOutput approx_dp_mechanism(Task task, const LabeledDataset& labeled,
                                    const PointDataset& points, const ScoreSpec& spec,
                                    const MechanismConfig& config);

struct AuditReport {
    double max_abs_log_ratio_empirical = 0.0;
    double max_abs_log_ratio_exact = 0.0;
    long draws = 0;
    int cells_compared = 0;
    int min_count_threshold = 0;
};

// Monte-Carlo likelihood-ratio audit of the pure mechanism on two adjacent
// datasets; cells below the count threshold are excluded from the empirical
// ratio (the exact ratio covers all cells).
AuditReport audit_pure_dp(Task task, const LabeledDataset& data1, const LabeledDataset& data2,
                          const PointDataset& pts1, const PointDataset& pts2,
                          const ScoreSpec& spec, const MechanismConfig& config, long draws,
                          int min_count = 50);

}  // namespace estlab
