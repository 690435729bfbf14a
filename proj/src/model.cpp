#include "estlab/model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "estlab/rng.hpp"

namespace estlab {

double log1e(double eta) {
    if (eta <= 0.0) return 1.0;
    return std::max(1.0, std::log(1.0 / eta));
}

Matrix matrix_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Matrix matrix_inv_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector ev = es.eigenvalues();
    Vector inv = ev;
    for (int i = 0; i < ev.size(); ++i) {
        inv(i) = ev(i) > 1e-12 ? 1.0 / std::sqrt(ev(i)) : 0.0;
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

void require_psd(const Matrix& cov, double upper) {
    if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
    if (!cov.isApprox(cov.transpose(), 1e-10)) {
        throw std::invalid_argument("covariance must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        throw std::invalid_argument("covariance must be PSD");
    }
    if (upper > 0 && es.eigenvalues().maxCoeff() > upper * (1.0 + 1e-9)) {
        throw std::invalid_argument("covariance exceeds the stated eigenvalue bound");
    }
}

Matrix sample_gaussian_rows(const Matrix& cov, const Vector& mean, int n, Rng& rng) {
    const int d = static_cast<int>(cov.rows());
    const Matrix root = matrix_sqrt(cov);
    Matrix out(n, d);
    Vector g(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) g(j) = rng.next_gaussian();
        out.row(i) = (mean + root * g).transpose();
    }
    return out;
}

int corrupt_count(double eta, int n) {
    if (eta < 0.0 || eta >= 0.5) throw std::invalid_argument("eta must lie in [0, 1/2)");
    return static_cast<int>(std::floor(eta * n));
}

std::vector<int> pick_targets(int n, int m, Rng& rng) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < m; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

void RegressionInstance::validate() const {
    require_psd(cov, cov_bound);
    if (theta.norm() > norm_bound * (1.0 + 1e-9)) {
        throw std::invalid_argument("||theta|| exceeds norm_bound");
    }
    if (noise_var <= 0.0 || noise_var > 1.0) {
        throw std::invalid_argument("noise_var must lie in (0, 1]");
    }
}

void GaussianInstance::validate() const {
    require_psd(cov, 0.0);
    if (mean.norm() > norm_bound * (1.0 + 1e-9)) {
        throw std::invalid_argument("||mean|| exceeds norm_bound");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (cov_lower_bound > 0 && es.eigenvalues().minCoeff() < 1.0 / cov_lower_bound - 1e-9) {
        throw std::invalid_argument("smallest eigenvalue of cov below 1/L");
    }
}

int CorruptionMask::corrupted_count() const {
    int c = 0;
    for (const bool k : kept) c += k ? 0 : 1;
    return c;
}

Adversary adversary_from_string(const std::string& name) {
    if (name == "none") return Adversary::None;
    if (name == "label-flip") return Adversary::LabelFlip;
    if (name == "leverage-point") return Adversary::LeveragePoint;
    if (name == "mean-shift-cluster") return Adversary::MeanShiftCluster;
    if (name == "oblivious-replace") return Adversary::ObliviousReplace;
    throw std::invalid_argument("unknown adversary: " + name);
}

std::string adversary_name(Adversary a) {
    switch (a) {
        case Adversary::None: return "none";
        case Adversary::LabelFlip: return "label-flip";
        case Adversary::LeveragePoint: return "leverage-point";
        case Adversary::MeanShiftCluster: return "mean-shift-cluster";
        case Adversary::ObliviousReplace: return "oblivious-replace";
    }
    return "none";
}

LabeledDataset sample_regression(const RegressionInstance& inst, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    inst.validate();
    Rng rng(seed, "sample_regression");
    LabeledDataset out;
    out.x = sample_gaussian_rows(inst.cov, Vector::Zero(inst.dim()), n, rng);
    out.y.resize(n);
    const double noise_sd = std::sqrt(inst.noise_var);
    for (int i = 0; i < n; ++i) {
        out.y(i) = out.x.row(i).dot(inst.theta) + noise_sd * rng.next_gaussian();
    }
    return out;
}

PointDataset sample_gaussian(const GaussianInstance& inst, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    inst.validate();
    Rng rng(seed, "sample_gaussian");
    PointDataset out;
    out.x = sample_gaussian_rows(inst.cov, inst.mean, n, rng);
    return out;
}

std::pair<LabeledDataset, CorruptionMask> corrupt(const LabeledDataset& data, double eta,
                                                  Adversary adversary, std::uint64_t seed) {
    const int n = data.n();
    const int d = data.d();
    const int m = corrupt_count(eta, n);
    LabeledDataset out = data;
    CorruptionMask mask;
    mask.kept.assign(n, true);
    if (m == 0 || adversary == Adversary::None) return {out, mask};

    Rng rng(seed, "corrupt_labeled");
    const std::vector<int> targets = pick_targets(n, m, rng);
    for (const int i : targets) mask.kept[i] = false;

    const double max_norm = data.x.rowwise().norm().maxCoeff();
    switch (adversary) {
        case Adversary::LabelFlip:
            for (const int i : targets) out.y(i) = -out.y(i);
            break;
        case Adversary::LeveragePoint: {
            // large covariates, labels chosen consistent with a rogue hyperplane
            Vector rogue(d);
            for (int j = 0; j < d; ++j) rogue(j) = rng.next_gaussian();
            rogue.normalize();
            for (const int i : targets) {
                Vector dir(d);
                for (int j = 0; j < d; ++j) dir(j) = rng.next_gaussian();
                dir.normalize();
                out.x.row(i) = (1e3 * std::max(max_norm, 1.0) * dir).transpose();
                out.y(i) = out.x.row(i).dot(rogue);
            }
            break;
        }
        case Adversary::MeanShiftCluster: {
            Vector dir(d);
            for (int j = 0; j < d; ++j) dir(j) = rng.next_gaussian();
            dir.normalize();
            const Vector shift = 2.0 * std::sqrt(log1e(eta)) * max_norm / std::sqrt((double)d) * dir;
            for (const int i : targets) {
                for (int j = 0; j < d; ++j) out.x(i, j) = shift(j) + 0.1 * rng.next_gaussian();
                out.y(i) = 3.0 * std::sqrt(log1e(eta));
            }
            break;
        }
        case Adversary::ObliviousReplace:
            for (const int i : targets) {
                for (int j = 0; j < d; ++j) out.x(i, j) = rng.next_gaussian();
                out.y(i) = rng.next_gaussian();
            }
            break;
        case Adversary::None:
            break;
    }
    return {out, mask};
}

std::pair<PointDataset, CorruptionMask> corrupt(const PointDataset& data, double eta,
                                                Adversary adversary, std::uint64_t seed) {
    const int n = data.n();
    const int d = data.d();
    const int m = corrupt_count(eta, n);
    PointDataset out = data;
    CorruptionMask mask;
    mask.kept.assign(n, true);
    if (m == 0 || adversary == Adversary::None) return {out, mask};

    Rng rng(seed, "corrupt_points");
    const std::vector<int> targets = pick_targets(n, m, rng);
    for (const int i : targets) mask.kept[i] = false;

    Vector mean = data.x.colwise().mean();
    Matrix centered = data.x.rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * centered / n;
    const double max_norm = data.x.rowwise().norm().maxCoeff();
    switch (adversary) {
        case Adversary::LabelFlip:
            for (const int i : targets) out.x.row(i) = -out.x.row(i);
            break;
        case Adversary::LeveragePoint:
            for (const int i : targets) {
                Vector dir(d);
                for (int j = 0; j < d; ++j) dir(j) = rng.next_gaussian();
                dir.normalize();
                out.x.row(i) = (1e3 * std::max(max_norm, 1.0) * dir).transpose();
            }
            break;
        case Adversary::MeanShiftCluster: {
            Vector dir(d);
            for (int j = 0; j < d; ++j) dir(j) = rng.next_gaussian();
            dir.normalize();
            const Vector shift = mean + 2.0 * std::sqrt(log1e(eta)) * (matrix_sqrt(cov) * dir);
            for (const int i : targets) {
                for (int j = 0; j < d; ++j) out.x(i, j) = shift(j) + 0.01 * rng.next_gaussian();
            }
            break;
        }
        case Adversary::ObliviousReplace:
            for (const int i : targets) {
                for (int j = 0; j < d; ++j) out.x(i, j) = rng.next_gaussian();
            }
            break;
        case Adversary::None:
            break;
    }
    return {out, mask};
}

PointDataset pair_differences(const PointDataset& points) {
    const int pairs = points.n() / 2;
    if (pairs < 1) throw std::invalid_argument("need at least two points to pair");
    PointDataset out;
    out.x.resize(pairs, points.d());
    for (int i = 0; i < pairs; ++i) {
        out.x.row(i) = (points.x.row(2 * i) - points.x.row(2 * i + 1)) / std::sqrt(2.0);
    }
    return out;
}

double generalization_gap(const Vector& theta_hat, const RegressionInstance& inst) {
    if (theta_hat.size() != inst.theta.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const Vector diff = theta_hat - inst.theta;
    return diff.dot(inst.cov * diff);
}

}  // namespace estlab
