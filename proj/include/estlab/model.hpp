#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace estlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Ground-truth parameters for y = <theta, x> + zeta, x ~ N(0, cov),
// zeta ~ N(0, noise_var).
struct RegressionInstance {
    Vector theta;
    Matrix cov;
    double noise_var = 1.0;
    double norm_bound = 1.0;   // R, ||theta|| <= R
    double cov_bound = 1.0;    // L, eigenvalues of cov in [0, L]

    int dim() const { return static_cast<int>(theta.size()); }
    void validate() const;
};

// Ground truth for N(mean, cov) with cov >= (1/cov_lower_bound) * I.
struct GaussianInstance {
    Vector mean;
    Matrix cov;
    double norm_bound = 1.0;       // R
    double cov_lower_bound = 1.0;  // L

    int dim() const { return static_cast<int>(mean.size()); }
    void validate() const;
};

struct LabeledDataset {
    Matrix x;  // n x d
    Vector y;  // n
    int n() const { return static_cast<int>(x.rows()); }
    int d() const { return static_cast<int>(x.cols()); }
};

struct PointDataset {
    Matrix x;  // n x d
    int n() const { return static_cast<int>(x.rows()); }
    int d() const { return static_cast<int>(x.cols()); }
};

// kept[i] is the r_i indicator: true when row i was left untouched.
struct CorruptionMask {
    std::vector<bool> kept;
    int corrupted_count() const;
};

enum class Adversary { None, LabelFlip, LeveragePoint, MeanShiftCluster, ObliviousReplace };

Adversary adversary_from_string(const std::string& name);
std::string adversary_name(Adversary a);

LabeledDataset sample_regression(const RegressionInstance& inst, int n, std::uint64_t seed);
PointDataset sample_gaussian(const GaussianInstance& inst, int n, std::uint64_t seed);

// Replaces at most floor(eta*n) rows according to the named strategy and
// records the kept indicators. eta >= 1/2 is rejected.
std::pair<LabeledDataset, CorruptionMask> corrupt(const LabeledDataset& data, double eta,
                                                  Adversary adversary, std::uint64_t seed);
std::pair<PointDataset, CorruptionMask> corrupt(const PointDataset& data, double eta,
                                                Adversary adversary, std::uint64_t seed);

// Excess squared prediction risk ||Sigma^{1/2}(theta_hat - theta)||^2.
double generalization_gap(const Vector& theta_hat, const RegressionInstance& inst);

// log(1/eta), natural, floored at 1.
double log1e(double eta);

// mean-zero reduction for covariance estimation: consecutive sample
// differences scaled by 1/sqrt(2), preserving the covariance
PointDataset pair_differences(const PointDataset& points);

// symmetric PSD square root
Matrix matrix_sqrt(const Matrix& m);
Matrix matrix_inv_sqrt(const Matrix& m);

}  // namespace estlab
