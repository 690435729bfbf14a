#include "estlab/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "estlab/rng.hpp"

namespace estlab {

namespace {

std::vector<Vector> make_grid(double radius, int d, int per_dim, long cap) {
    double cells = 1.0;
    for (int k = 0; k < d; ++k) cells *= per_dim;
    if (cells > static_cast<double>(cap)) {
        throw std::invalid_argument(
            "domain grid exceeds the cell cap; reduce the dimension, the grid resolution, or "
            "the domain radius");
    }
    std::vector<Vector> grid;
    std::vector<int> idx(d, 0);
    while (true) {
        Vector p(d);
        for (int k = 0; k < d; ++k) {
            p(k) = -radius + (2.0 * radius) * (idx[k] + 0.5) / per_dim;
        }
        if (p.norm() <= radius) grid.push_back(p);
        int k = 0;
        while (k < d && ++idx[k] == per_dim) idx[k++] = 0;
        if (k == d) break;
    }
    return grid;
}

std::vector<int> grid_scores(Task task, const std::vector<Vector>& grid,
                             const LabeledDataset& labeled, const PointDataset& points,
                             const ScoreSpec& spec) {
    std::vector<int> scores(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        scores[j] = task == Task::Regression ? score_regression(grid[j], labeled, spec).first
                                             : score_mean(grid[j], points, spec).first;
    }
    return scores;
}

std::vector<double> exp_weights(const std::vector<int>& scores, double epsilon) {
    std::vector<double> w(scores.size());
    double total = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        w[j] = std::exp(-0.5 * epsilon * scores[j]);
        total += w[j];
    }
    for (double& v : w) v /= total;
    return w;
}

std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        if (u <= acc) return j;
    }
    return probs.size() - 1;
}

}  // namespace

MechanismOutput pure_dp_mechanism(Task task, const LabeledDataset& labeled,
                                  const PointDataset& points, const ScoreSpec& spec,
                                  const MechanismConfig& config) {
    const int n = task == Task::Regression ? labeled.n() : points.n();
    const int d = task == Task::Regression ? labeled.d() : points.d();
    if (d > 3) throw std::invalid_argument("grid sampler supports d <= 3");
    MechanismOutput out;
    out.epsilon = config.epsilon;
    out.delta = 0.0;
    out.seed = config.seed;
    out.cells = make_grid(spec.domain_radius(n, d), d, config.grid_per_dim, config.cell_cap);
    out.cell_scores = grid_scores(task, out.cells, labeled, points, spec);
    out.cell_probs = exp_weights(out.cell_scores, config.epsilon);
    Rng rng(config.seed, "pure_dp_mechanism");
    const std::size_t pick = sample_index(out.cell_probs, rng);
    out.parameter = out.cells[pick];
    out.score = out.cell_scores[pick];
    return out;
}

MechanismOutput approx_dp_mechanism(Task task, const LabeledDataset& labeled,
                                    const PointDataset& points, const ScoreSpec& spec,
                                    const MechanismConfig& config) {
    const int n = task == Task::Regression ? labeled.n() : points.n();
    const int d = task == Task::Regression ? labeled.d() : points.d();
    if (d > 3) throw std::invalid_argument("grid sampler supports d <= 3");
    MechanismOutput out;
    out.epsilon = config.epsilon;
    out.delta = config.delta;
    out.seed = config.seed;

    // propose-test: abstain unless a point of score <= 0.7 eta* n exists
    const LowScoreResult low = task == Task::Regression ? find_low_score_regression(labeled, spec)
                                                        : find_low_score_mean(points, spec);
    const double threshold = 0.7 * config.eta_star * n;
    if (static_cast<double>(low.T) > threshold) {
        out.abstained = true;
        return out;
    }

    out.cells = make_grid(spec.domain_radius(n, d), d, config.grid_per_dim, config.cell_cap);
    out.cell_scores = grid_scores(task, out.cells, labeled, points, spec);
    const double level = config.eta_star * n;
    long inside = 0, inside08 = 0;
    for (const int s : out.cell_scores) {
        if (s <= level) ++inside;
        if (s <= 0.8 * level) ++inside08;
    }
    out.volume_log_ratio = inside08 > 0 ? std::log(static_cast<double>(inside) / inside08)
                                        : std::numeric_limits<double>::infinity();
    std::vector<double> w(out.cells.size(), 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < out.cells.size(); ++j) {
        if (out.cell_scores[j] <= level) {
            w[j] = std::exp(-0.5 * config.epsilon * out.cell_scores[j]);
            total += w[j];
        }
    }
    if (total <= 0.0) {
        out.abstained = true;
        return out;
    }
    for (double& v : w) v /= total;
    out.cell_probs = w;
    Rng rng(config.seed, "approx_dp_mechanism");
    const std::size_t pick = sample_index(w, rng);
    out.parameter = out.cells[pick];
    out.score = out.cell_scores[pick];
    return out;
}

AuditReport audit_pure_dp(Task task, const LabeledDataset& data1, const LabeledDataset& data2,
                          const PointDataset& pts1, const PointDataset& pts2,
                          const ScoreSpec& spec, const MechanismConfig& config, long draws,
                          int min_count) {
    MechanismConfig c1 = config;
    MechanismOutput m1 = pure_dp_mechanism(task, data1, pts1, spec, c1);
    MechanismOutput m2 = pure_dp_mechanism(task, data2, pts2, spec, c1);
    if (m1.cells.size() != m2.cells.size()) {
        throw std::logic_error("adjacent datasets must share the score domain");
    }
    AuditReport report;
    report.draws = draws;
    report.min_count_threshold = min_count;
    for (std::size_t j = 0; j < m1.cells.size(); ++j) {
        if (m1.cell_probs[j] > 0 && m2.cell_probs[j] > 0) {
            report.max_abs_log_ratio_exact =
                std::max(report.max_abs_log_ratio_exact,
                         std::abs(std::log(m1.cell_probs[j] / m2.cell_probs[j])));
        }
    }
    Rng rng1(config.seed, "audit_draws_1");
    Rng rng2(config.seed + 1, "audit_draws_2");
    std::vector<long> h1(m1.cells.size(), 0), h2(m2.cells.size(), 0);
    for (long t = 0; t < draws; ++t) {
        ++h1[sample_index(m1.cell_probs, rng1)];
        ++h2[sample_index(m2.cell_probs, rng2)];
    }
    for (std::size_t j = 0; j < h1.size(); ++j) {
        if (h1[j] >= min_count && h2[j] >= min_count) {
            ++report.cells_compared;
            report.max_abs_log_ratio_empirical =
                std::max(report.max_abs_log_ratio_empirical,
                         std::abs(std::log(static_cast<double>(h1[j]) / h2[j])));
        }
    }
    return report;
}

}  // namespace estlab
