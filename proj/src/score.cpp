#include "estlab/score.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "estlab/rng.hpp"

namespace estlab {

namespace {

double eta_of_alpha(double alpha) {
    return std::min(0.49, alpha / std::sqrt(log1e(alpha)));
}

// box bound used for theta'/mu' inside the score systems; the certificate
// norm clause keeps first moments within 2R + tau T, the box adds margin
double param_box(const ScoreSpec& spec, int n, int d) {
    (void)n;
    (void)d;
    return 2.0 * spec.norm_bound + spec.alpha * std::sqrt(spec.cov_bound) + 1.0;
}

double q_box(const ScoreSpec& spec) {
    if (spec.q_bound > 0) return spec.q_bound;
    return 4.0 * std::max(spec.norm_bound, 1.0) / (spec.alpha * spec.alpha);
}

// ---------------------------------------------------------------------------
// sound infeasibility screens (d = 1)
//
// Any tau-approximately satisfying functional L obeys, for every sample,
//   L[w_i (y_i - theta' x_i)^2] >= a_i * (|r_i(t1)| - |x_i| * spread(u_i))^2
// where a_i = L[w_i], u_i = 1 - a_i, t1 = L[theta'], and the spread is what
// the Cauchy-Schwarz coupling through L[w_i theta'] permits with
// L[theta'^2] at most its box bound. Summing against the noise budget and
// minimizing over admissible (t1, u) therefore lower-bounds every functional;
// if even the minimum violates the budget the system is infeasible.
// ---------------------------------------------------------------------------
struct ScreenInput {
    std::vector<double> base;    // |r_i(t1)| at the current t1
    std::vector<double> slope;   // |x_i| (regression) or 1 (mean)
    int n = 0;
    int T = 0;
    double t2max = 0.0;  // box bound on the squared parameter
    double t1abs = 0.0;
    int power = 2;  // 2 for the noise budget, 4 for the kurtosis budget
};

double screen_min_cost(const ScreenInput& in) {
    const int ugrid = 16;
    const int buckets = in.T * ugrid;
    std::vector<double> dp(buckets + 1, 0.0);
    // dp[b] = min cost with total debit b/ugrid; per-sample cells rounded in
    // the sound direction (cost at the cell top, debit at the cell bottom)
    for (int i = 0; i < in.n; ++i) {
        std::vector<double> next(buckets + 1, std::numeric_limits<double>::infinity());
        std::vector<double> cost(ugrid + 1);
        for (int c = 0; c <= ugrid; ++c) {
            const double u = static_cast<double>(c) / ugrid;
            double m;
            if (u >= 1.0) {
                m = 0.0;
            } else {
                const double spread = (std::sqrt(u * in.t2max) + u * in.t1abs) / (1.0 - u);
                const double resid = std::max(0.0, in.base[i] - in.slope[i] * spread);
                m = (1.0 - u) * std::pow(resid, in.power);
            }
            cost[c] = m;
        }
        for (int b = 0; b <= buckets; ++b) {
            if (!std::isfinite(dp[b])) continue;
            for (int c = 0; c <= ugrid; ++c) {
                const int debit = std::max(0, c - 1);
                const int nb = b + debit;
                if (nb > buckets) break;
                next[nb] = std::min(next[nb], dp[b] + cost[c]);
            }
        }
        // allow exceeding budget only by dropping the sample entirely at full debit
        dp = std::move(next);
        for (int b = buckets - 1; b >= 0; --b) dp[b] = std::min(dp[b], dp[b + 1]);
    }
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b <= buckets; ++b) best = std::min(best, dp[b]);
    return best;
}

struct WindowArm {
    bool active = false;
    double center = 0.0;
    double halfwidth = 0.0;
};

bool screen_infeasible_1d(const std::vector<double>& xs, const std::vector<double>& ys, int T,
                          double budget2, double t2max, double box, const WindowArm& window,
                          int power) {
    const int n = static_cast<int>(xs.size());
    if (n - T <= 0) return false;
    double lo = -box, hi = box;
    if (window.active) {
        lo = std::max(lo, window.center - window.halfwidth);
        hi = std::min(hi, window.center + window.halfwidth);
        if (lo > hi) return true;  // closeness window misses the parameter box
    }
    const int grid = 192;
    const double gap = (hi - lo) / grid;
    ScreenInput in;
    in.n = n;
    in.T = T;
    in.t2max = t2max;
    in.power = power;
    in.base.resize(n);
    in.slope.resize(n);
    for (int g = 0; g <= grid; ++g) {
        const double t1 = lo + gap * g;
        in.t1abs = std::abs(t1);
        double lip = 0.0;
        for (int i = 0; i < n; ++i) {
            in.base[i] = std::abs(ys[i] - t1 * xs[i]);
            in.slope[i] = std::abs(xs[i]);
            const double r = in.base[i] + 0.5 * gap * in.slope[i];
            lip += power * std::pow(r, power - 1) * in.slope[i];
        }
        const double v = screen_min_cost(in);
        if (v - lip * 0.5 * gap <= budget2 * (1.0 + 1e-9) + 1e-6) return false;
    }
    return grid >= 0;  // every grid cell certified above the budget
}

// ---------------------------------------------------------------------------
// closeness custom oracles (Lemma D.1 shape)
// ---------------------------------------------------------------------------

CustomOracle make_closeness_oracle(const SystemHandles& handles, const Vector& target,
                                   double a2, double slack, bool use_q) {
    return [handles, target, a2, slack, use_q](const PseudoExpectation& pe)
               -> std::optional<LinearCut> {
        const int d = handles.dim;
        const std::vector<int>& mids = use_q ? handles.q : handles.sigma;
        const Vector param = extract_vector(pe, use_q ? handles.theta : handles.mu);
        const Vector u0 = param - target;
        Matrix m = extract_matrix(pe, mids, d);
        Matrix c = a2 * m - u0 * u0.transpose() + (slack + 1e-8) * Matrix::Identity(d, d);
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
        if (es.eigenvalues().minCoeff() >= 0.0) return std::nullopt;
        const Vector v = es.eigenvectors().col(0);
        // tangent cut: 2<v,u0><v, L[param]> - a2 v'L[M]v <= <v,u0>^2 + 2<v,u0><v,target> + slack
        LinearCut cut;
        cut.source = "closeness";
        const double vu0 = v.dot(u0);
        const std::vector<int>& pids = use_q ? handles.theta : handles.mu;
        for (int a = 0; a < d; ++a) {
            cut.coeffs.push_back({pe.index_of(Monomial::var(pids[a])), 2.0 * vu0 * v(a)});
        }
        std::map<int, double> macc;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) macc[mids[a * d + b]] += -a2 * v(a) * v(b);
        for (const auto& [id, coeff] : macc) {
            cut.coeffs.push_back({pe.index_of(Monomial::var(id)), coeff});
        }
        cut.rhs = vu0 * vu0 + 2.0 * vu0 * v.dot(target) + slack;
        return cut;
    };
}

// certificate norm clause ||L[param']|| <= bound, as a tangent-plane oracle
CustomOracle make_norm_oracle(const std::vector<int>& param_ids, double bound) {
    return [param_ids, bound](const PseudoExpectation& pe) -> std::optional<LinearCut> {
        Vector v(static_cast<int>(param_ids.size()));
        for (std::size_t a = 0; a < param_ids.size(); ++a) {
            v(static_cast<int>(a)) = pe.value(Monomial::var(param_ids[a]));
        }
        const double norm = v.norm();
        if (norm <= bound * (1.0 + 1e-9) + 1e-9) return std::nullopt;
        LinearCut cut;
        cut.source = "parameter-norm";
        for (std::size_t a = 0; a < param_ids.size(); ++a) {
            cut.coeffs.push_back(
                {pe.index_of(Monomial::var(param_ids[a])), v(static_cast<int>(a)) / norm});
        }
        cut.rhs = bound;
        return cut;
    };
}

}  // namespace

double ScoreSpec::tau_effective(int n, int d) const {
    if (tau > 0) return tau;
    const double base = std::max(2.0, n * d * std::max(norm_bound, 1.0) * std::max(cov_bound, 1.0) /
                                          std::max(alpha, 1e-3));
    return std::max(1e-12, std::pow(base, -10.0));
}

double ScoreSpec::domain_radius(int n, int d) const {
    return 2.0 * norm_bound + n * tau_effective(n, d) + alpha * std::sqrt(cov_bound);
}

ClosenessOracleResult closeness_oracle(const Vector& x0, const Matrix& m0, double alpha) {
    if (m0.rows() != m0.cols() || m0.rows() != x0.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const int d = static_cast<int>(x0.size());
    const Matrix c = alpha * alpha * 0.5 * (m0 + m0.transpose()) - x0 * x0.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    ClosenessOracleResult out;
    if (es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + std::abs(c.trace()))) {
        out.feasible = true;
        return out;
    }
    out.feasible = false;
    const Vector v = es.eigenvectors().col(0);
    out.witness_direction = v;
    out.hx = 2.0 * v.dot(x0) * v;
    out.hm = -(alpha * alpha) * v * v.transpose();
    out.rhs = v.dot(x0) * v.dot(x0);
    return out;
}

ScoreFeasibility score_feasible_at(Task task, const Vector& param, const LabeledDataset& labeled,
                                   const PointDataset& points, const ScoreSpec& spec, int T,
                                   PseudoExpectation* witness, std::string* decided_by) {
    const int n = task == Task::Regression ? labeled.n() : points.n();
    const int d = task == Task::Regression ? labeled.d() : points.d();
    const double tau = spec.tau_effective(n, d);
    const double box = param_box(spec, n, d);
    const double a2 = spec.closeness_const * spec.alpha * spec.alpha;
    const double eta = eta_of_alpha(spec.alpha);

    // sound screen (d = 1)
    if (d == 1) {
        if (task == Task::Regression) {
            std::vector<double> xs(n), ys(n);
            for (int i = 0; i < n; ++i) {
                xs[i] = labeled.x(i, 0);
                ys[i] = labeled.y(i);
            }
            WindowArm window;
            window.active = true;
            window.center = param(0);
            window.halfwidth = std::sqrt(a2 * q_box(spec) + tau * T) + 1e-9;
            const double nb = 2.0 * spec.norm_bound + tau * T + 1e-9;
            const double budget = n * (1.0 + 2.0 * eta);
            if (screen_infeasible_1d(xs, ys, T, budget, std::min(box * box, nb * nb + 1.0), nb,
                                     window, 2)) {
                if (decided_by) *decided_by = "screen";
                return ScoreFeasibility::Infeasible;
            }
        } else {
            std::vector<double> xs(n, 1.0), ys(n);
            for (int i = 0; i < n; ++i) ys[i] = points.x(i, 0);
            const double xmax = std::max(1.0, points.x.cwiseAbs().maxCoeff());
            const double smax = 4.0 * xmax * xmax + 1.0;
            WindowArm window;
            window.active = true;
            window.center = param(0);
            window.halfwidth = std::sqrt(a2 * smax + tau * T) + 1e-9;
            const double hc = 3.0 + eta * log1e(eta) * log1e(eta);
            // second-moment arm (budget n * Sigma'_max) and kurtosis arm
            const double bmu = 2.0 * spec.norm_bound + tau * T + 1e-9;
            if (screen_infeasible_1d(xs, ys, T, n * smax, bmu * bmu, bmu, window, 2) ||
                screen_infeasible_1d(xs, ys, T, n * hc * smax * smax, bmu * bmu, bmu, window, 4)) {
                if (decided_by) *decided_by = "screen";
                return ScoreFeasibility::Infeasible;
            }
        }
    }

    // build the budgeted system with the closeness and norm side constraints
    const double norm_clause = 2.0 * spec.norm_bound + tau * T;
    Vector projected = param;
    if (projected.norm() > norm_clause) projected *= norm_clause / projected.norm();
    BuiltSystem built;
    if (task == Task::Regression) {
        RegressionSystemConfig rc;
        rc.eta = eta;
        rc.budget_T = T;
        rc.with_inverse = true;
        rc.theta_bound = box;
        rc.q_bound = q_box(spec);
        rc.theta_anchors.push_back(projected);
        if ((projected - param).norm() > 1e-12) rc.theta_anchors.push_back(projected * 0.95);
        built = build_regression_system(labeled, rc);
    } else {
        MeanSystemConfig mc;
        mc.eta = eta;
        mc.budget_T = T;
        mc.mu_bound = box;
        mc.mu_anchors.push_back(projected);
        if ((projected - param).norm() > 1e-12) mc.mu_anchors.push_back(projected * 0.95);
        built = build_mean_system(points, mc);
    }
    const double slack = tau * T;
    built.system.custom_oracles.push_back(make_closeness_oracle(
        built.handles, param, a2, slack, task == Task::Regression));
    built.system.custom_oracles.push_back(make_norm_oracle(
        task == Task::Regression ? built.handles.theta : built.handles.mu, norm_clause));

    SolverConfig sc = spec.solver;
    sc.tau = tau;

    // at T = 0 every sample is pinned, the gradient (resp. the mean
    // definition) fixes the parameter moments, and the point-mass witness is
    // a complete decision procedure
    if (T == 0) {
        for (const auto& cand : built.system.candidates) {
            PseudoExpectation pe;
            if (candidate_feasible(built.system, cand, sc, &pe)) {
                if (witness) *witness = std::move(pe);
                if (decided_by) *decided_by = "pinned witness";
                return ScoreFeasibility::Feasible;
            }
        }
        if (decided_by) *decided_by = "pinned check";
        return ScoreFeasibility::Infeasible;
    }

    SolveResult res = solve_pseudoexpectation(built.system, sc);
    if (decided_by) *decided_by = res.detail;
    if (res.status == SolveStatus::Feasible) {
        if (witness) *witness = std::move(res.pe);
        return ScoreFeasibility::Feasible;
    }
    return res.status == SolveStatus::Infeasible ? ScoreFeasibility::Infeasible
                                                 : ScoreFeasibility::Budget;
}

namespace {

std::pair<int, ScoreCertificate> score_search(Task task, const Vector& param,
                                              const LabeledDataset& labeled,
                                              const PointDataset& points, const ScoreSpec& spec) {
    const int n = task == Task::Regression ? labeled.n() : points.n();
    const int d = task == Task::Regression ? labeled.d() : points.d();
    if (param.norm() > spec.domain_radius(n, d) * (1.0 + 1e-9)) {
        throw std::invalid_argument("parameter outside the score domain ball");
    }
    ScoreCertificate cert;
    // binary search on the monotone feasibility predicate
    int lo = 0, hi = n;  // hi always feasible via the all-free witness
    PseudoExpectation best;
    std::string info;
    const ScoreFeasibility top =
        score_feasible_at(task, param, labeled, points, spec, n, &best, &info);
    if (top == ScoreFeasibility::Budget) cert.budget_flagged = true;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        PseudoExpectation pe;
        std::string why;
        const ScoreFeasibility f = score_feasible_at(task, param, labeled, points, spec, mid, &pe, &why);
        if (f == ScoreFeasibility::Feasible) {
            hi = mid;
            best = std::move(pe);
            info = why;
        } else {
            if (f == ScoreFeasibility::Budget) cert.budget_flagged = true;
            lo = mid + 1;
        }
    }
    cert.T = lo;
    cert.functional = std::move(best);
    cert.decided_by = info;
    // closeness margin at the certified budget
    if (cert.functional.tracked().size() > 0) {
        const int dd = d;
        const double a2 = spec.closeness_const * spec.alpha * spec.alpha;
        Vector u0;
        Matrix m;
        // handles are positional: recover via names
        const auto& reg = cert.functional.registry();
        Vector pv(dd);
        Matrix mv(dd, dd);
        for (int a = 0; a < dd; ++a) {
            pv(a) = cert.functional.value(Monomial::var(
                reg.id((task == Task::Regression ? "theta'[" : "mu'[") + std::to_string(a) + "]")));
        }
        for (int a = 0; a < dd; ++a) {
            for (int b = 0; b < dd; ++b) {
                const std::string nm = (task == Task::Regression && reg.has("Q[0,0]")) ? "Q" : "Sigma'";
                const int lo_i = std::min(a, b), hi_i = std::max(a, b);
                mv(a, b) = cert.functional.value(Monomial::var(
                    reg.id(nm + "[" + std::to_string(lo_i) + "," + std::to_string(hi_i) + "]")));
            }
        }
        u0 = pv - param;
        Matrix c = a2 * mv - u0 * u0.transpose() +
                   spec.tau_effective(n, dd) * cert.T * Matrix::Identity(dd, dd);
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
        cert.closeness_margin = es.eigenvalues().minCoeff();
    }
    return {cert.T, std::move(cert)};
}

}  // namespace

std::pair<int, ScoreCertificate> score_regression(const Vector& theta_tilde,
                                                  const LabeledDataset& data,
                                                  const ScoreSpec& spec) {
    PointDataset dummy;
    dummy.x = Matrix::Zero(0, data.d());
    return score_search(Task::Regression, theta_tilde, data, dummy, spec);
}

std::pair<int, ScoreCertificate> score_mean(const Vector& mu_tilde, const PointDataset& points,
                                            const ScoreSpec& spec) {
    LabeledDataset dummy;
    dummy.x = Matrix::Zero(0, points.d());
    dummy.y = Vector::Zero(0);
    return score_search(Task::Mean, mu_tilde, dummy, points, spec);
}

namespace {

LowScoreResult find_low_score_impl(Task task, const LabeledDataset& labeled,
                                   const PointDataset& points, const ScoreSpec& spec) {
    const int n = task == Task::Regression ? labeled.n() : points.n();
    const int d = task == Task::Regression ? labeled.d() : points.d();
    const double eta = eta_of_alpha(spec.alpha);
    const double box = param_box(spec, n, d);
    LowScoreResult out;

    auto feasible_at = [&](int T, PseudoExpectation* pe) {
        BuiltSystem built;
        if (task == Task::Regression) {
            RegressionSystemConfig rc;
            rc.eta = eta;
            rc.budget_T = T;
            rc.with_inverse = false;  // closeness constraint dropped entirely
            rc.theta_bound = box;
            built = build_regression_system(labeled, rc);
        } else {
            MeanSystemConfig mc;
            mc.eta = eta;
            mc.budget_T = T;
            mc.mu_bound = box;
            built = build_mean_system(points, mc);
        }
        built.system.custom_oracles.push_back(make_norm_oracle(
            task == Task::Regression ? built.handles.theta : built.handles.mu,
            2.0 * spec.norm_bound + spec.tau_effective(n, d) * T));
        // screen without the closeness window
        if (d == 1) {
            if (task == Task::Regression) {
                std::vector<double> xs(n), ys(n);
                for (int i = 0; i < n; ++i) {
                    xs[i] = labeled.x(i, 0);
                    ys[i] = labeled.y(i);
                }
                const double nb = 2.0 * spec.norm_bound + spec.tau_effective(n, d) * T + 1e-9;
                if (screen_infeasible_1d(xs, ys, T, n * (1.0 + 2.0 * eta),
                                         std::min(box * box, nb * nb + 1.0), nb, {}, 2)) {
                    return ScoreFeasibility::Infeasible;
                }
            }
        }
        SolverConfig sc = spec.solver;
        sc.tau = spec.tau_effective(n, d);
        if (T == 0) {
            for (const auto& cand : built.system.candidates) {
                PseudoExpectation cpe;
                if (candidate_feasible(built.system, cand, sc, &cpe)) {
                    if (pe) {
                        *pe = std::move(cpe);
                        out.parameter = extract_vector(*pe, task == Task::Regression
                                                                ? built.handles.theta
                                                                : built.handles.mu);
                    }
                    return ScoreFeasibility::Feasible;
                }
            }
            return ScoreFeasibility::Infeasible;
        }
        SolveResult res = solve_pseudoexpectation(built.system, sc);
        if (res.status == SolveStatus::Feasible && pe) {
            *pe = std::move(res.pe);
            // stash parameter while the handles are in scope
            out.parameter = extract_vector(*pe, task == Task::Regression ? built.handles.theta
                                                                         : built.handles.mu);
        }
        return res.status == SolveStatus::Feasible
                   ? ScoreFeasibility::Feasible
                   : (res.status == SolveStatus::Infeasible ? ScoreFeasibility::Infeasible
                                                            : ScoreFeasibility::Budget);
    };

    int lo = 0, hi = n;
    PseudoExpectation pe;
    if (feasible_at(n, &pe) != ScoreFeasibility::Feasible) {
        throw std::logic_error("score system infeasible even at T = n");
    }
    Vector best = out.parameter;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        const ScoreFeasibility f = feasible_at(mid, &pe);
        if (f == ScoreFeasibility::Feasible) {
            hi = mid;
            best = out.parameter;
        } else {
            if (f == ScoreFeasibility::Budget) out.budget_flagged = true;
            lo = mid + 1;
        }
    }
    out.T = lo;
    out.parameter = best;
    return out;
}

}  // namespace

LowScoreResult find_low_score_regression(const LabeledDataset& data, const ScoreSpec& spec) {
    PointDataset dummy;
    dummy.x = Matrix::Zero(0, data.d());
    return find_low_score_impl(Task::Regression, data, dummy, spec);
}

LowScoreResult find_low_score_mean(const PointDataset& points, const ScoreSpec& spec) {
    LabeledDataset dummy;
    dummy.x = Matrix::Zero(0, points.d());
    dummy.y = Vector::Zero(0);
    return find_low_score_impl(Task::Mean, dummy, points, spec);
}

QuasiConvexityReport quasiconvexity_probe(Task task, const LabeledDataset& labeled,
                                          const PointDataset& points, const ScoreSpec& spec,
                                          int pairs, std::uint64_t seed) {
    const int n = task == Task::Regression ? labeled.n() : points.n();
    const int d = task == Task::Regression ? labeled.d() : points.d();
    const double radius = spec.domain_radius(n, d);
    Rng rng(seed, "quasiconvexity_probe");
    QuasiConvexityReport report;
    report.pairs = pairs;
    auto score_of = [&](const Vector& p) {
        return task == Task::Regression ? score_regression(p, labeled, spec).first
                                        : score_mean(p, points, spec).first;
    };
    for (int t = 0; t < pairs; ++t) {
        Vector a(d), b(d);
        for (int k = 0; k < d; ++k) {
            a(k) = rng.uniform(-radius, radius) / std::sqrt(static_cast<double>(d));
            b(k) = rng.uniform(-radius, radius) / std::sqrt(static_cast<double>(d));
        }
        const double lambda = rng.next_double();
        const Vector mid = lambda * a + (1.0 - lambda) * b;
        const int sa = score_of(a);
        const int sb = score_of(b);
        const int sm = score_of(mid);
        const double excess = sm - std::max(sa, sb);
        report.worst_excess = std::max(report.worst_excess, excess);
        if (excess > 1.0) ++report.violations;
    }
    return report;
}

}  // namespace estlab
