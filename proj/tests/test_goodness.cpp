#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "estlab/goodness.hpp"
#include "estlab/model.hpp"
#include "estlab/rng.hpp"

using namespace estlab;

namespace {

PointDataset standard_gaussian(int n, int d, std::uint64_t seed) {
    GaussianInstance inst;
    inst.mean = Vector::Zero(d);
    inst.cov = Matrix::Identity(d, d);
    return sample_gaussian(inst, n, seed);
}

}  // namespace

TEST_CASE("all points at the center pass with zero deviations") {
    PointDataset pts;
    pts.x = Matrix::Zero(12, 2);
    const auto rep = check_eta_goodness(pts, 0.1, 0.0, Vector::Zero(2), Matrix::Identity(2, 2), 50, 1);
    CHECK(rep.passed);
    CHECK(rep.mode == "exhaustive");
}

TEST_CASE("gaussian samples are eta-good in most seeds") {
    int pass = 0;
    for (int seed = 0; seed < 20; ++seed) {
        const auto pts = standard_gaussian(5000, 2, seed);
        const auto rep = check_eta_goodness(pts, 0.1, 0.0, Vector::Zero(2),
                                            Matrix::Identity(2, 2), 60, seed);
        pass += rep.passed ? 1 : 0;
    }
    CHECK(pass >= 19);
}

TEST_CASE("a planted far point fails exhaustively with the witness subset") {
    auto pts = standard_gaussian(50, 2, 3);
    pts.x.row(7) = Vector::Constant(2, 1000.0 / std::sqrt(2.0)).transpose();
    // n = 50 is above the exhaustive cutoff; drop to 18 points for exact mode
    PointDataset small;
    small.x = pts.x.topRows(18);
    small.x.row(7) = pts.x.row(7);
    const auto rep = check_eta_goodness(small, 0.12, 0.0, Vector::Zero(2),
                                        Matrix::Identity(2, 2), 40, 5);
    CHECK_FALSE(rep.passed);
    CHECK(rep.mode == "exhaustive");
    CHECK(rep.worst_clause == "cov-small");
}

TEST_CASE("exhaustive and heuristic modes agree on small datasets") {
    for (int trial = 0; trial < 15; ++trial) {
        PointDataset pts = standard_gaussian(14, 2, 100 + trial);
        if (trial % 3 == 0) pts.x.row(2) *= 40.0;  // planted violation in some trials
        GoodnessConfig exact_cfg, heur_cfg;
        exact_cfg.mode = SubsetMode::Exhaustive;
        heur_cfg.mode = SubsetMode::Heuristic;
        const auto exact = check_eta_goodness(pts, 0.15, 0.0, Vector::Zero(2),
                                              Matrix::Identity(2, 2), 200, trial, exact_cfg);
        const auto heur = check_eta_goodness(pts, 0.15, 0.0, Vector::Zero(2),
                                             Matrix::Identity(2, 2), 200, trial, heur_cfg);
        CHECK(exact.passed == heur.passed);
    }
}

TEST_CASE("higher-order goodness clause 2 for the standard normal") {
    // E (x^2 - 1)^2 = 2 exactly for one-dimensional standard normals
    const auto pts = standard_gaussian(100000, 1, 9);
    double s = 0;
    for (int i = 0; i < pts.n(); ++i) {
        const double z = pts.x(i, 0) * pts.x(i, 0) - 1.0;
        s += z * z;
    }
    CHECK(s / pts.n() == doctest::Approx(2.0).epsilon(0.025));
    const auto rep = check_higher_order_goodness(pts, 0.05, 30, 2);
    CHECK(rep.passed);
}

TEST_CASE("degenerate kurtosis fails clause 2") {
    PointDataset pts;
    pts.x = Matrix::Ones(2000, 1);
    for (int i = 0; i < pts.n(); i += 2) pts.x(i, 0) = -1.0;
    // (1/n) sum (x^2 - 1)^2 = 0, off from 2 beyond 3 eta log^2(1/eta)
    const auto rep = check_higher_order_goodness(pts, 0.05, 20, 3);
    CHECK_FALSE(rep.passed);
}

TEST_CASE("subset clauses pass for gaussians in most seeds") {
    int pass = 0;
    for (int seed = 0; seed < 20; ++seed) {
        const auto pts = standard_gaussian(10000, 2, 500 + seed);
        const auto rep = check_higher_order_goodness(pts, 0.05, 40, seed);
        pass += rep.passed ? 1 : 0;
    }
    CHECK(pass >= 18);
}

TEST_CASE("verdicts are invariant under orthogonal rotation") {
    Matrix rot(2, 2);
    const double c = std::cos(0.7), s = std::sin(0.7);
    rot << c, -s, s, c;

    const auto pts = standard_gaussian(8000, 2, 77);
    PointDataset rotated;
    rotated.x = pts.x * rot.transpose();
    const auto a = check_higher_order_goodness(pts, 0.05, 40, 4);
    const auto b = check_higher_order_goodness(rotated, 0.05, 40, 4);
    CHECK(a.passed == b.passed);

    PointDataset bad;
    bad.x = Matrix::Ones(2000, 2);
    for (int i = 0; i < bad.n(); i += 2) bad.x.row(i) *= -1.0;
    PointDataset bad_rot;
    bad_rot.x = bad.x * rot.transpose();
    CHECK(check_higher_order_goodness(bad, 0.05, 40, 4).passed ==
          check_higher_order_goodness(bad_rot, 0.05, 40, 4).passed);
}

TEST_CASE("hypercontractivity certificates") {
    SUBCASE("two-point distribution is 3-hypercontractive") {
        PointDataset pts;
        pts.x = Matrix::Ones(4, 1);
        pts.x(1, 0) = -1.0;
        pts.x(3, 0) = -1.0;
        const auto res = certify_hypercontractivity(pts, 3.0, Vector::Zero(1), true);
        CHECK(res.certified);
    }
    SUBCASE("k nonzeros among n fail when n/k > C") {
        PointDataset pts;
        pts.x = Matrix::Zero(100, 1);
        pts.x(0, 0) = 1.0;
        const auto res = certify_hypercontractivity(pts, 3.0, Vector::Zero(1), true);
        CHECK_FALSE(res.certified);  // kurtosis ratio n/k = 100 > 3
    }
    SUBCASE("gaussian d = 2 passes at 3 + eta log^2(1/eta) in most seeds") {
        const double eta = 0.05;
        const double c = 3.0 + eta * std::pow(std::log(1.0 / eta), 2.0);
        int pass = 0;
        for (int seed = 0; seed < 20; ++seed) {
            const auto pts = standard_gaussian(10000, 2, 900 + seed);
            pass += certify_hypercontractivity(pts, c).certified ? 1 : 0;
        }
        CHECK(pass >= 18);
    }
    SUBCASE("monotone in the constant") {
        const auto pts = standard_gaussian(2000, 2, 33);
        const auto lo = certify_hypercontractivity(pts, 2.0);
        const auto hi = certify_hypercontractivity(pts, 8.0);
        if (lo.certified) CHECK(hi.certified);
        CHECK(hi.min_eigenvalue >= lo.min_eigenvalue);
    }
    SUBCASE("rank-deficient second moment is flagged") {
        PointDataset pts;
        pts.x = Matrix::Zero(50, 2);
        for (int i = 0; i < 50; ++i) pts.x(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
        const auto res = certify_hypercontractivity(pts, 3.0, Vector::Zero(2), true);
        CHECK(res.rank_deficient);
        CHECK(res.certified);
    }
}
