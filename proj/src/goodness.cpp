#include "estlab/goodness.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "estlab/rng.hpp"

namespace estlab {

namespace {

struct ClauseTracker {
    double margin = std::numeric_limits<double>::infinity();
    Vector direction;
    int subset_size = 0;
    std::string clause;

    void observe(double bound, double value, const Vector& dir, int size, const std::string& name) {
        const double m = bound - value;
        if (m < margin) {
            margin = m;
            direction = dir;
            subset_size = size;
            clause = name;
        }
    }
};

// all k-subsets of [n], k small
void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    if (k == 0) {
        fn(idx);
        return;
    }
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double op_norm(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

std::vector<Vector> direction_family(const Matrix& z, int trials, std::uint64_t seed) {
    const int d = static_cast<int>(z.cols());
    const int n = static_cast<int>(z.rows());
    std::vector<Vector> dirs;
    Rng rng(seed, "goodness_directions");
    for (int t = 0; t < trials; ++t) {
        Vector v(d);
        for (int j = 0; j < d; ++j) v(j) = rng.next_gaussian();
        if (v.norm() < 1e-12) v(0) = 1.0;
        dirs.push_back(v.normalized());
    }
    for (int j = 0; j < d; ++j) dirs.push_back(Vector::Unit(d, j));
    Matrix cov = z.transpose() * z / n;
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    for (int j = 0; j < d; ++j) dirs.push_back(es.eigenvectors().col(j));
    return dirs;
}

}  // namespace

GoodnessReport check_eta_goodness(const PointDataset& points, double eta, double psi,
                                  const Vector& mu, const Matrix& sigma, int trials,
                                  std::uint64_t seed, const GoodnessConfig& cfg) {
    const int n = points.n();
    const int d = points.d();
    if (mu.size() != d || sigma.rows() != d || sigma.cols() != d) {
        throw std::invalid_argument("dimension mismatch");
    }
    if (eta > 1.0 / std::exp(1.0) + 1e-12) throw std::invalid_argument("eta must be <= 1/e");
    if (psi > eta * std::sqrt(log1e(eta)) + 1e-12) {
        throw std::invalid_argument("psi exceeds eta*sqrt(log(1/eta))");
    }

    const Matrix w = matrix_inv_sqrt(sigma);
    Matrix z(n, d);
    for (int i = 0; i < n; ++i) z.row(i) = (w * (points.x.row(i).transpose() - mu)).transpose();

    const int k = static_cast<int>(std::floor(eta * n));
    const int large = n - k;
    const double mean_bound = cfg.c_good * eta * std::sqrt(log1e(eta));
    const double cov_large_bound = cfg.c_good * (eta * log1e(eta) + psi);
    const double cov_small_bound = cfg.c_good * eta * log1e(eta);
    const Matrix full_cov = z.transpose() * z / n;
    const Vector full_sum = z.colwise().sum();

    ClauseTracker worst;
    GoodnessReport report;
    const bool exhaustive = cfg.mode == SubsetMode::Auto ? (n <= 20)
                                                         : cfg.mode == SubsetMode::Exhaustive;
    report.mode = exhaustive ? "exhaustive" : "heuristic";

    if (k == 0) {
        // only the full set qualifies
        worst.observe(mean_bound, full_sum.norm() / std::max(1, large), Vector::Unit(d, 0), n,
                      "mean");
        worst.observe(cov_large_bound, 0.0, Vector::Unit(d, 0), n, "cov-large");
    } else if (exhaustive) {
        for_each_subset(n, k, [&](const std::vector<int>& removed) {
            Vector sum = full_sum;
            Matrix sub = Matrix::Zero(d, d);
            for (const int i : removed) {
                sum -= z.row(i).transpose();
                sub += z.row(i).transpose() * z.row(i);
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es_small(sub / large);
            Vector dir_small = es_small.eigenvectors().col(d - 1);
            worst.observe(cov_small_bound, es_small.eigenvalues().maxCoeff(), dir_small, k,
                          "cov-small");
            worst.observe(mean_bound, sum.norm() / large,
                          sum.norm() > 1e-12 ? Vector(sum.normalized()) : Vector::Unit(d, 0), large,
                          "mean");
            const Matrix rest = (z.transpose() * z - sub) / large - full_cov;
            Eigen::SelfAdjointEigenSolver<Matrix> es_rest(rest);
            const double lo = es_rest.eigenvalues().minCoeff();
            const double hi = es_rest.eigenvalues().maxCoeff();
            const bool top = std::abs(hi) >= std::abs(lo);
            worst.observe(cov_large_bound, std::max(std::abs(lo), std::abs(hi)),
                          es_rest.eigenvectors().col(top ? d - 1 : 0), large, "cov-large");
        });
    } else {
        for (const Vector& v : direction_family(z, trials, seed)) {
            Vector proj = z * v;
            std::vector<double> p(proj.data(), proj.data() + n);
            std::vector<double> p2(n);
            for (int i = 0; i < n; ++i) p2[i] = p[i] * p[i];

            // small subsets: top-k squared projections
            std::vector<double> sorted2 = p2;
            std::nth_element(sorted2.begin(), sorted2.begin() + (n - k), sorted2.end());
            double small_sum = std::accumulate(sorted2.begin() + (n - k), sorted2.end(), 0.0);
            worst.observe(cov_small_bound, small_sum / large, v, k, "cov-small");

            // mean over large subsets: drop the k most negative / most positive
            std::vector<double> sorted = p;
            std::sort(sorted.begin(), sorted.end());
            const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
            double drop_low = std::accumulate(sorted.begin(), sorted.begin() + k, 0.0);
            double drop_high = std::accumulate(sorted.end() - k, sorted.end(), 0.0);
            const double mean_dev =
                std::max(std::abs(total - drop_low), std::abs(total - drop_high)) / large;
            worst.observe(mean_bound, mean_dev, v, large, "mean");

            // large-subset covariance vs full: drop extremes of the squared projection
            std::sort(sorted2.begin(), sorted2.end());
            const double total2 = std::accumulate(sorted2.begin(), sorted2.end(), 0.0);
            const double base = v.dot(full_cov * v);
            double keep_low = total2 - std::accumulate(sorted2.end() - k, sorted2.end(), 0.0);
            double keep_high = total2 - std::accumulate(sorted2.begin(), sorted2.begin() + k, 0.0);
            const double dev = std::max(std::abs(keep_low / large - base),
                                        std::abs(keep_high / large - base));
            worst.observe(cov_large_bound, dev, v, large, "cov-large");
        }
    }

    report.passed = worst.margin >= 0.0;
    report.margin = worst.margin;
    report.worst_direction = worst.direction.size() ? worst.direction : Vector::Unit(d, 0);
    report.worst_subset_size = worst.subset_size;
    report.worst_clause = worst.clause;
    return report;
}

GoodnessReport check_higher_order_goodness(const PointDataset& points, double eta, int trials,
                                           std::uint64_t seed, const GoodnessConfig& cfg) {
    const int n = points.n();
    const int d = points.d();
    const int k = std::max(1, static_cast<int>(std::floor(eta * n)));
    const double b1 = cfg.c_hog * eta * log1e(eta);
    const double b2 = cfg.c_hog * eta * log1e(eta) * log1e(eta);
    const double b4 = cfg.c_hog;

    // family of unit-Frobenius test matrices P
    std::vector<Matrix> ps;
    Rng rng(seed, "hog_directions");
    for (int t = 0; t < trials; ++t) {
        Matrix p(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) p(a, b) = rng.next_gaussian();
        p = 0.5 * (p + p.transpose()).eval();
        if (p.norm() < 1e-12) p = Matrix::Identity(d, d);
        ps.push_back(p / p.norm());
    }
    ps.push_back(Matrix::Identity(d, d) / std::sqrt(static_cast<double>(d)));
    Matrix dev = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) dev += points.x.row(i).transpose() * points.x.row(i);
    dev = dev / n - Matrix::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(dev);
    for (int j = 0; j < d; ++j) {
        Vector v = es.eigenvectors().col(j);
        ps.push_back(v * v.transpose());
    }

    ClauseTracker worst;
    for (const Matrix& p : ps) {
        std::vector<double> vals(n);
        for (int i = 0; i < n; ++i) {
            const Vector xi = points.x.row(i).transpose();
            vals[i] = xi.dot(p * xi) - p.trace();
        }
        const Vector dir = Vector::Map(p.data(), p.size());
        double s1 = 0, s2 = 0, s_abs = 0;
        for (const double v : vals) {
            s1 += v;
            s2 += v * v;
            s_abs += std::abs(v);
        }
        worst.observe(b1, std::abs(s1 / n), dir, n, "full-mean");
        worst.observe(b2, std::abs(s2 / n - 2.0), dir, n, "full-second");
        worst.observe(b4, s_abs / n, dir, n, "full-abs");

        // subset clauses: sorted extremes are exact for fixed P
        std::vector<double> sorted = vals;
        std::sort(sorted.begin(), sorted.end());
        double low = std::accumulate(sorted.begin(), sorted.begin() + k, 0.0);
        double high = std::accumulate(sorted.end() - k, sorted.end(), 0.0);
        worst.observe(b1, std::max(std::abs(low), std::abs(high)) / n, dir, k, "subset-mean");
        std::vector<double> sq(n);
        for (int i = 0; i < n; ++i) sq[i] = vals[i] * vals[i];
        std::sort(sq.begin(), sq.end());
        double top_sq = std::accumulate(sq.end() - k, sq.end(), 0.0);
        worst.observe(b2, top_sq / n, dir, k, "subset-second");
    }

    GoodnessReport report;
    report.mode = (d == 1) ? "exhaustive" : "heuristic";
    report.passed = worst.margin >= 0.0;
    report.margin = worst.margin;
    report.worst_direction = worst.direction;
    report.worst_subset_size = worst.subset_size;
    report.worst_clause = worst.clause;
    return report;
}

// Gram matrices of the quartic form C (v'Sv)^2 - (1/n) sum <z_i, v>^4 over
// the monomial basis {v_a v_b : a <= b}. The natural symmetric-subspace
// completion is one member of an affine family: directions that shift weight
// between (aa, bb) and (ab, ab) entries leave the quartic unchanged. The
// degree-4 SoS certificate exists iff some member is PSD; we search the
// family by coordinate ascent on the minimum eigenvalue (exact for d <= 2
// where the family is one-dimensional, a sound sufficient test beyond).
namespace {

struct GramFamily {
    Matrix natural;                 // one valid completion
    std::vector<Matrix> shifts;     // null directions of the coefficient map
    std::vector<std::pair<int, int>> pairs;  // basis index -> (a, b)
};

GramFamily hyper_gram_family(const Matrix& second, const Matrix& z, double constant) {
    const int d = static_cast<int>(second.rows());
    const int n = static_cast<int>(z.rows());
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) pairs.push_back({a, b});
    const int dd = static_cast<int>(pairs.size());
    auto flat = [&](const Matrix& m) {
        Vector out(dd);
        for (int i = 0; i < dd; ++i) {
            const auto [a, b] = pairs[i];
            out(i) = a == b ? m(a, a) : std::sqrt(2.0) * m(a, b);
        }
        return out;
    };
    GramFamily fam;
    fam.pairs = pairs;
    const Vector sv = flat(second);
    Matrix m4 = Matrix::Zero(dd, dd);
    for (int i = 0; i < n; ++i) {
        const Vector zi = z.row(i).transpose();
        const Vector q = flat(zi * zi.transpose());
        m4 += q * q.transpose();
    }
    m4 /= std::max(n, 1);
    fam.natural = constant * (sv * sv.transpose()) - m4;

    // null shifts: for a < b, move weight between the (aa, bb) cross entry
    // and the (ab, ab) diagonal entry; both multiply v_a^2 v_b^2
    auto index_of = [&](int a, int b) {
        for (int i = 0; i < dd; ++i) {
            if (pairs[i] == std::make_pair(std::min(a, b), std::max(a, b))) return i;
        }
        return -1;
    };
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            Matrix k = Matrix::Zero(dd, dd);
            const int iaa = index_of(a, a), ibb = index_of(b, b), iab = index_of(a, b);
            // q_aa q_bb has coefficient 1 on v_a^2 v_b^2; q_ab^2 has 2
            k(iaa, ibb) = k(ibb, iaa) = 1.0;
            k(iab, iab) = -1.0;
            fam.shifts.push_back(k);
        }
    }
    // shifts among distinct off-diagonal pairs sharing a monomial, d >= 3;
    // the 1/sqrt(2) compensates the unit-Frobenius scaling of the basis
    const double r = 1.0 / std::sqrt(2.0);
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            for (int c = b + 1; c < d; ++c) {
                // v_a^2 v_b v_c arises from (aa, bc) and (ab, ac)
                Matrix k = Matrix::Zero(dd, dd);
                k(index_of(a, a), index_of(b, c)) = k(index_of(b, c), index_of(a, a)) = 1.0;
                k(index_of(a, b), index_of(a, c)) = k(index_of(a, c), index_of(a, b)) = -r;
                fam.shifts.push_back(k);
                Matrix k2 = Matrix::Zero(dd, dd);
                k2(index_of(b, b), index_of(a, c)) = k2(index_of(a, c), index_of(b, b)) = 1.0;
                k2(index_of(a, b), index_of(b, c)) = k2(index_of(b, c), index_of(a, b)) = -r;
                fam.shifts.push_back(k2);
                Matrix k3 = Matrix::Zero(dd, dd);
                k3(index_of(c, c), index_of(a, b)) = k3(index_of(a, b), index_of(c, c)) = 1.0;
                k3(index_of(a, c), index_of(b, c)) = k3(index_of(b, c), index_of(a, c)) = -r;
                fam.shifts.push_back(k3);
            }
        }
    }
    return fam;
}

double min_eig(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

// coordinate ascent of t -> min_eig(natural + sum t_k shifts_k); the
// objective is concave in t, one-dimensional sweeps use ternary search
std::pair<double, Vector> best_gram_completion(const GramFamily& fam) {
    const int k = static_cast<int>(fam.shifts.size());
    Vector t = Vector::Zero(std::max(k, 1));
    Matrix current = fam.natural;
    double val = min_eig(current);
    if (k == 0) return {val, t};
    const double scale = 1.0 + fam.natural.cwiseAbs().maxCoeff();
    for (int sweep = 0; sweep < (k == 1 ? 1 : 8); ++sweep) {
        for (int j = 0; j < k; ++j) {
            double lo = t(j) - 4.0 * scale, hi = t(j) + 4.0 * scale;
            auto eval = [&](double tj) {
                return min_eig(current + (tj - t(j)) * fam.shifts[j]);
            };
            for (int step = 0; step < 60; ++step) {
                const double m1 = lo + (hi - lo) / 3.0;
                const double m2 = hi - (hi - lo) / 3.0;
                if (eval(m1) < eval(m2)) lo = m1; else hi = m2;
            }
            const double tj = 0.5 * (lo + hi);
            current += (tj - t(j)) * fam.shifts[j];
            t(j) = tj;
        }
        val = min_eig(current);
    }
    return {val, t};
}

}  // namespace

HypercontractivityResult certify_hypercontractivity(const PointDataset& points, double constant,
                                                    const std::optional<Vector>& center,
                                                    bool regression_variant) {
    if (constant <= 0.0) throw std::invalid_argument("constant must be positive");
    const int n = points.n();
    int d = points.d();
    Vector c = center ? *center
                      : (regression_variant ? Vector(Vector::Zero(d))
                                            : Vector(points.x.colwise().mean().transpose()));
    Matrix z(n, d);
    for (int i = 0; i < n; ++i) z.row(i) = points.x.row(i) - c.transpose();
    Matrix s = z.transpose() * z / n;

    HypercontractivityResult result;

    // restrict to the range of S when rank-deficient
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const double emax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    std::vector<int> keep;
    for (int j = 0; j < d; ++j) {
        if (es.eigenvalues()(j) > 1e-12 * std::max(emax, 1.0)) keep.push_back(j);
    }
    if (static_cast<int>(keep.size()) < d) {
        result.rank_deficient = true;
        if (keep.empty()) {
            result.certified = true;  // all mass at the center, both sides vanish
            result.min_eigenvalue = 0.0;
            return result;
        }
        Matrix u(d, keep.size());
        for (std::size_t j = 0; j < keep.size(); ++j) u.col(j) = es.eigenvectors().col(keep[j]);
        z = (z * u).eval();
        d = static_cast<int>(keep.size());
        s = z.transpose() * z / n;
    }

    const HyperGram hg = hyper_gram_completion(s, z, constant);
    result.min_eigenvalue = hg.margin;
    result.certified = hg.margin >= -1e-8 * std::abs(hg.gram_unitf.trace());
    return result;
}

HyperGram hyper_gram_completion(const Matrix& second_moment, const Matrix& centered_rows,
                                double constant) {
    const GramFamily fam = hyper_gram_family(second_moment, centered_rows, constant);
    const auto [margin, shift] = best_gram_completion(fam);
    HyperGram out;
    out.margin = margin;
    out.gram_unitf = fam.natural;
    for (std::size_t j = 0; j < fam.shifts.size(); ++j) out.gram_unitf += shift(j) * fam.shifts[j];
    return out;
}

}  // namespace estlab
