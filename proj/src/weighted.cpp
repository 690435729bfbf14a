#include <algorithm>
#include <cmath>
#include <vector>

#include "estlab/estimators.hpp"

namespace estlab {

namespace {

double weighted_quantile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    const std::size_t k = std::min(values.size() - 1,
                                   static_cast<std::size_t>(q * (values.size() - 1)));
    std::nth_element(values.begin(), values.begin() + k, values.end());
    return values[k];
}

// soft trimming weight: 1 inside the threshold, (t/s)^2 decay outside
double soft_weight(double score, double threshold) {
    if (score <= threshold || threshold <= 0.0) return 1.0;
    const double r = threshold / score;
    return r * r;
}

}  // namespace

EstimateReport robust_regression_weighted(const LabeledDataset& data, double eta,
                                          const WeightedConfig& cfg) {
    const int n = data.n();
    const int d = data.d();
    EstimateReport report;
    report.method = "weighted";
    if (eta <= 0.0) {
        report.estimate_vector = least_squares(data);
        report.weights = Vector::Ones(n);
        return report;
    }
    const double trim_q = 1.0 - std::min(0.45, cfg.trim_multiplier * eta);

    // covariate filter: downweight rows with outlying Mahalanobis leverage
    Vector wx = Vector::Ones(n);
    Matrix second = data.x.transpose() * data.x / n;
    for (int round = 0; round < cfg.cov_rounds; ++round) {
        Matrix m = Matrix::Zero(d, d);
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            m += wx(i) * data.x.row(i).transpose() * data.x.row(i);
            wsum += wx(i);
        }
        m /= wsum;
        Eigen::LDLT<Matrix> ldlt(m + 1e-12 * Matrix::Identity(d, d));
        std::vector<double> scores(n);
        for (int i = 0; i < n; ++i) {
            scores[i] = data.x.row(i) * ldlt.solve(data.x.row(i).transpose());
        }
        const double t = weighted_quantile(scores, trim_q);
        Vector next(n);
        for (int i = 0; i < n; ++i) next(i) = soft_weight(scores[i], t);
        if ((next - wx).cwiseAbs().maxCoeff() < cfg.tol) {
            wx = next;
            break;
        }
        wx = next;
        second = m;
    }

    // residual reweighting around weighted least squares
    Vector theta = Vector::Zero(d);
    Vector v = Vector::Ones(n);
    bool converged = false;
    for (int round = 0; round < cfg.max_rounds; ++round) {
        Matrix g = Matrix::Zero(d, d);
        Vector c = Vector::Zero(d);
        for (int i = 0; i < n; ++i) {
            const double wi = wx(i) * v(i);
            g += wi * data.x.row(i).transpose() * data.x.row(i);
            c += wi * data.x.row(i).transpose() * data.y(i);
        }
        const Vector next = (g + 1e-12 * Matrix::Identity(d, d)).ldlt().solve(c);
        std::vector<double> r2(n);
        for (int i = 0; i < n; ++i) {
            const double r = data.y(i) - data.x.row(i).dot(next);
            r2[i] = r * r;
        }
        const double t = weighted_quantile(r2, trim_q);
        for (int i = 0; i < n; ++i) v(i) = soft_weight(r2[i], t);
        if (round > 0 && (next - theta).norm() < cfg.tol * (1.0 + theta.norm())) {
            theta = next;
            converged = true;
            break;
        }
        theta = next;
    }

    report.estimate_vector = theta;
    report.converged = converged;
    report.weights = Vector(n);
    for (int i = 0; i < n; ++i) report.weights(i) = wx(i) * v(i);
    return report;
}

EstimateReport robust_mean_weighted(const PointDataset& points, double eta,
                                    const WeightedConfig& cfg) {
    const int n = points.n();
    const int d = points.d();
    EstimateReport report;
    report.method = "weighted";
    if (eta <= 0.0) {
        report.estimate_vector = points.x.colwise().mean().transpose();
        report.weights = Vector::Ones(n);
        return report;
    }
    const double trim_q = 1.0 - std::min(0.45, cfg.trim_multiplier * eta);

    // coordinate-wise median start
    Vector mu(d);
    for (int a = 0; a < d; ++a) {
        std::vector<double> col(points.x.col(a).data(), points.x.col(a).data() + n);
        std::nth_element(col.begin(), col.begin() + n / 2, col.end());
        mu(a) = col[n / 2];
    }

    Vector w = Vector::Ones(n);
    bool converged = false;
    for (int round = 0; round < cfg.max_rounds; ++round) {
        Matrix cov = Matrix::Zero(d, d);
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            const Vector diff = points.x.row(i).transpose() - mu;
            cov += w(i) * diff * diff.transpose();
            wsum += w(i);
        }
        cov /= wsum;
        Eigen::LDLT<Matrix> ldlt(cov + 1e-12 * Matrix::Identity(d, d));
        std::vector<double> scores(n);
        for (int i = 0; i < n; ++i) {
            const Vector diff = points.x.row(i).transpose() - mu;
            scores[i] = diff.dot(ldlt.solve(diff));
        }
        const double t = weighted_quantile(scores, trim_q);
        for (int i = 0; i < n; ++i) w(i) = soft_weight(scores[i], t);

        Vector next = Vector::Zero(d);
        wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            next += w(i) * points.x.row(i).transpose();
            wsum += w(i);
        }
        next /= wsum;
        if (round > 0 && (next - mu).norm() < cfg.tol * (1.0 + mu.norm())) {
            mu = next;
            converged = true;
            break;
        }
        mu = next;
    }

    report.estimate_vector = mu;
    report.converged = converged;
    report.weights = w;
    return report;
}

}  // namespace estlab
