#include "estlab/lower_bounds.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace estlab {

Matrix regression_joint_cov(const Vector& theta) {
    const int d = static_cast<int>(theta.size());
    Matrix out = Matrix::Identity(d + 1, d + 1);
    out.block(0, d, d, 1) = theta;
    out.block(d, 0, 1, d) = theta.transpose();
    out(d, d) = theta.squaredNorm() + 1.0;
    return out;
}

RegressionTv tv_regression_bound(const Vector& theta1, const Vector& theta2) {
    if (theta1.size() != theta2.size()) throw std::invalid_argument("dimension mismatch");
    const double z = (theta1 - theta2).norm();
    if (z > 1.0 + 1e-12) throw std::invalid_argument("bound requires ||theta1 - theta2|| <= 1");
    RegressionTv out;
    out.bound = 3.0 * z;
    out.trace_sq = 2.0 * z * z + z * z * z * z;
    return out;
}

TvBound tv_gaussian_same_mean(const Matrix& sigma1, const Matrix& sigma2) {
    if (sigma1.rows() != sigma2.rows()) throw std::invalid_argument("dimension mismatch");
    const Matrix m = sigma1.llt().solve(sigma2) - Matrix::Identity(sigma1.rows(), sigma1.cols());
    Eigen::EigenSolver<Matrix> es(m);
    TvBound out;
    double sumsq = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        const double ev = es.eigenvalues()(i).real();
        out.eigenvalues.push_back(ev);
        sumsq += ev * ev;
    }
    out.trace_sq = (m * m).trace();
    const double base = std::min(1.0, std::sqrt(sumsq));
    out.lower = base / 100.0;
    out.upper = 1.5 * base;
    out.upper = std::min(out.upper, 1.0);
    return out;
}

double packing_bound(double m, double beta, double gamma, double epsilon,
                     bool small_epsilon_form) {
    if (m < 1 || beta <= 0 || beta >= 1 || gamma <= 0 || epsilon <= 0) {
        throw std::invalid_argument("invalid parameters");
    }
    const double denom = small_epsilon_form ? epsilon : std::exp(2.0 * epsilon) - 1.0;
    return (std::log(m) + std::log(1.0 / beta)) / (gamma * denom);
}

namespace {

LbResult lb_pure_common(int d, double alpha, double epsilon, double beta, double R, double L) {
    if (d < 1 || alpha <= 0 || epsilon <= 0 || beta <= 0 || beta >= 1) {
        throw std::invalid_argument("invalid parameters");
    }
    const double lb = std::log(1.0 / beta);
    LbResult out;
    out.terms = {(d + lb) / (alpha * alpha), (d + lb) / (alpha * epsilon),
                 (d * std::log(std::max(R * std::sqrt(L) / alpha, 1.0)) + lb) / epsilon};
    out.term_names = {"nonprivate", "fine-estimation", "packing"};
    out.n0 = *std::max_element(out.terms.begin(), out.terms.end());
    return out;
}

}  // namespace

LbResult lb_pure_regression(int d, double alpha, double epsilon, double beta, double R, double L) {
    return lb_pure_common(d, alpha, epsilon, beta, R, L);
}

LbResult lb_pure_mean(int d, double alpha, double epsilon, double beta, double R, double L) {
    return lb_pure_common(d, alpha, epsilon, beta, R, L);
}

McTvResult mc_tv_estimate(const std::function<double(const Vector&)>& density1,
                          const std::function<double(const Vector&)>& density2,
                          const std::function<Vector(Rng&)>& sampler1, long samples,
                          std::uint64_t seed) {
    Rng rng(seed, "mc_tv_estimate");
    double sum = 0.0, sumsq = 0.0;
    for (long t = 0; t < samples; ++t) {
        const Vector x = sampler1(rng);
        const double p1 = density1(x);
        const double ratio = p1 > 0 ? density2(x) / p1 : 0.0;
        const double v = 0.5 * std::abs(1.0 - ratio);
        sum += v;
        sumsq += v * v;
    }
    McTvResult out;
    out.estimate = sum / samples;
    const double var = std::max(0.0, sumsq / samples - out.estimate * out.estimate);
    out.standard_error = std::sqrt(var / samples);
    return out;
}

std::function<double(const Vector&)> gaussian_density(const Vector& mean, const Matrix& cov) {
    const int d = static_cast<int>(mean.size());
    Eigen::LLT<Matrix> llt(cov);
    const Matrix l = llt.matrixL();
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(l(i, i));
    const double lognorm = -0.5 * (d * std::log(2.0 * M_PI) + logdet);
    return [mean, llt, lognorm](const Vector& x) {
        const Vector diff = x - mean;
        const double q = diff.dot(llt.solve(diff));
        return std::exp(lognorm - 0.5 * q);
    };
}

std::function<Vector(Rng&)> gaussian_sampler(const Vector& mean, const Matrix& cov) {
    const Matrix root = matrix_sqrt(cov);
    const int d = static_cast<int>(mean.size());
    return [mean, root, d](Rng& rng) {
        Vector g(d);
        for (int i = 0; i < d; ++i) g(i) = rng.next_gaussian();
        return Vector(mean + root * g);
    };
}

}  // namespace estlab
