#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "estlab/model.hpp"
#include "estlab/rng.hpp"

namespace estlab {

struct TvBound {
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> eigenvalues;  // of Sigma1^{-1} Sigma2 - I
    double trace_sq = 0.0;            // Tr(M^2)
};

// joint covariance of (x, y) for x ~ N(0, I), y = <theta, x> + N(0,1)
Matrix regression_joint_cov(const Vector& theta);

struct RegressionTv {
    double bound = 0.0;     // 3 ||theta1 - theta2||
    double trace_sq = 0.0;  // 2||z||^2 + ||z||^4
};
RegressionTv tv_regression_bound(const Vector& theta1, const Vector& theta2);

// two-sided envelope for TV(N(mu,S1), N(mu,S2)); window [1/100, 3/2] around
// min{1, sqrt(sum lambda_i^2)}
TvBound tv_gaussian_same_mean(const Matrix& sigma1, const Matrix& sigma2);

// packing meta bound (log m + log(1/beta)) / (gamma (e^{2 eps} - 1)); the
// small-epsilon variant replaces e^{2 eps} - 1 by eps
double packing_bound(double m, double beta, double gamma, double epsilon,
                     bool small_epsilon_form = false);

struct LbResult {
    double n0 = 0.0;
    std::vector<double> terms;
    std::vector<std::string> term_names;
};
LbResult lb_pure_regression(int d, double alpha, double epsilon, double beta, double R, double L);
LbResult lb_pure_mean(int d, double alpha, double epsilon, double beta, double R, double L);

struct McTvResult {
    double estimate = 0.0;
    double standard_error = 0.0;
};

// (1/2) E_{x ~ p1} |1 - p2(x)/p1(x)| with a sample standard error
McTvResult mc_tv_estimate(const std::function<double(const Vector&)>& density1,
                          const std::function<double(const Vector&)>& density2,
                          const std::function<Vector(Rng&)>& sampler1, long samples,
                          std::uint64_t seed);

// helpers for Gaussian densities
std::function<double(const Vector&)> gaussian_density(const Vector& mean, const Matrix& cov);
std::function<Vector(Rng&)> gaussian_sampler(const Vector& mean, const Matrix& cov);

}  // namespace estlab
