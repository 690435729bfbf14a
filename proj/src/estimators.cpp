#include "estlab/estimators.hpp"

#include <cmath>

namespace estlab {

Vector least_squares(const LabeledDataset& data) {
    const Matrix g = data.x.transpose() * data.x;
    const Vector c = data.x.transpose() * data.y;
    Eigen::FullPivLU<Matrix> lu(g);
    if (lu.isInvertible()) return lu.solve(c);
    // rank-deficient designs fall back to the pseudo-inverse solution
    return g.completeOrthogonalDecomposition().solve(c);
}

double least_squares_gradient_residual(const LabeledDataset& data, const Vector& theta) {
    const Vector r = data.x * theta - data.y;
    return (data.x.transpose() * r / data.n()).norm();
}

namespace {

void check_tiny(int n, int d, const SosEstimatorConfig& cfg) {
    if (n > cfg.max_n || d > cfg.max_d) {
        throw std::invalid_argument(
            "sos estimator is built for tiny instances (n <= " + std::to_string(cfg.max_n) +
            ", d <= " + std::to_string(cfg.max_d) + "); use the weighted estimator instead");
    }
}

SolverStats stats_of(const SolveResult& r) {
    SolverStats s;
    s.status = r.status == SolveStatus::Feasible
                   ? "feasible"
                   : (r.status == SolveStatus::Infeasible ? "infeasible" : "budget-exhausted");
    s.iterations = r.iterations;
    s.detail = r.detail;
    return s;
}

}  // namespace

EstimateReport robust_regression_sos(const LabeledDataset& data, double eta,
                                     const SosEstimatorConfig& cfg) {
    check_tiny(data.n(), data.d(), cfg);
    RegressionSystemConfig rc;
    rc.eta = eta;
    rc.hyper_constant = cfg.hyper_constant;
    rc.noise_second = cfg.noise_second;
    BuiltSystem built = build_regression_system(data, rc);
    SolverConfig sc = cfg.solver;
    sc.degree = cfg.degree;
    SolveResult res = solve_pseudoexpectation(built.system, sc);
    EstimateReport report;
    report.method = "sos";
    report.solver = stats_of(res);
    if (res.status != SolveStatus::Feasible) {
        report.converged = false;
        return report;
    }
    report.estimate_vector = extract_vector(res.pe, built.handles.theta);
    report.estimate_matrix = extract_matrix(res.pe, built.handles.sigma, built.handles.dim);
    return report;
}

EstimateReport robust_mean_sos(const PointDataset& points, double eta,
                               const SosEstimatorConfig& cfg) {
    check_tiny(points.n(), points.d(), cfg);
    MeanSystemConfig mc;
    mc.eta = eta;
    mc.hyper_constant = cfg.hyper_constant;
    BuiltSystem built = build_mean_system(points, mc);
    SolverConfig sc = cfg.solver;
    sc.degree = cfg.degree;
    SolveResult res = solve_pseudoexpectation(built.system, sc);
    EstimateReport report;
    report.method = "sos";
    report.solver = stats_of(res);
    if (res.status != SolveStatus::Feasible) {
        report.converged = false;
        return report;
    }
    report.estimate_vector = extract_vector(res.pe, built.handles.mu);
    report.estimate_matrix = extract_matrix(res.pe, built.handles.sigma, built.handles.dim);
    return report;
}

EstimateReport robust_cov_spectral_sos(const PointDataset& points, double eta,
                                       const SosEstimatorConfig& cfg) {
    check_tiny(points.n(), points.d(), cfg);
    CovSystemConfig cc;
    cc.eta = eta;
    cc.hyper_constant = cfg.hyper_constant;
    BuiltSystem built = build_cov_system(points, cc);
    SolverConfig sc = cfg.solver;
    sc.degree = cfg.degree;
    SolveResult res = solve_pseudoexpectation(built.system, sc);
    EstimateReport report;
    report.method = "sos";
    report.solver = stats_of(res);
    if (res.status != SolveStatus::Feasible) {
        report.converged = false;
        return report;
    }
    report.estimate_matrix = extract_matrix(res.pe, built.handles.sigma, built.handles.dim);
    return report;
}

EstimateReport robust_cov_frobenius_sos(const PointDataset& points, double eta,
                                        const SosEstimatorConfig& cfg) {
    check_tiny(points.n(), points.d(), cfg);
    {
        // the relative-Frobenius guarantee requires a near-identity covariance;
        // check it on a trimmed second moment so corrupted rows cannot mask it
        std::vector<double> norms(points.n());
        for (int i = 0; i < points.n(); ++i) norms[i] = points.x.row(i).norm();
        std::vector<double> sorted = norms;
        std::sort(sorted.begin(), sorted.end());
        const double cutoff = sorted[static_cast<std::size_t>(0.8 * (points.n() - 1))];
        Matrix second = Matrix::Zero(points.d(), points.d());
        int kept = 0;
        for (int i = 0; i < points.n(); ++i) {
            if (norms[i] <= cutoff) {
                second += points.x.row(i).transpose() * points.x.row(i);
                ++kept;
            }
        }
        second /= std::max(kept, 1);
        Eigen::SelfAdjointEigenSolver<Matrix> es(second - Matrix::Identity(points.d(), points.d()));
        const double dev = std::max(std::abs(es.eigenvalues().minCoeff()),
                                    std::abs(es.eigenvalues().maxCoeff()));
        if (dev > 0.6) {
            throw std::invalid_argument(
                "relative-Frobenius estimation requires a near-identity covariance");
        }
    }
    CovSystemConfig cc;
    cc.eta = eta;
    cc.frobenius = true;
    BuiltSystem built = build_cov_system(points, cc);
    SolverConfig sc = cfg.solver;
    sc.degree = cfg.degree;
    SolveResult res = solve_pseudoexpectation(built.system, sc);
    EstimateReport report;
    report.method = "sos";
    report.solver = stats_of(res);
    if (res.status != SolveStatus::Feasible) {
        report.converged = false;
        return report;
    }
    report.estimate_matrix = extract_matrix(res.pe, built.handles.sigma, built.handles.dim);
    return report;
}

}  // namespace estlab
