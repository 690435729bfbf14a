#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "estlab/estimators.hpp"
#include "estlab/model.hpp"
#include "estlab/rng.hpp"
#include "estlab/systems.hpp"

using namespace estlab;

namespace {

LabeledDataset tiny_with_outlier(int* clean_row, std::uint64_t seed = 1) {
    RegressionInstance inst;
    inst.theta = Vector::Constant(1, 0.8);
    inst.cov = Matrix::Identity(1, 1);
    auto data = sample_regression(inst, 8, seed);
    data.x(3, 0) = 8.0;
    data.y(3) = -10.0;
    *clean_row = 3;
    return data;
}

Vector clean_ls_without(const LabeledDataset& data, int row) {
    LabeledDataset clean;
    clean.x.resize(data.n() - 1, data.d());
    clean.y.resize(data.n() - 1);
    int k = 0;
    for (int i = 0; i < data.n(); ++i) {
        if (i == row) continue;
        clean.x.row(k) = data.x.row(i);
        clean.y(k) = data.y(i);
        ++k;
    }
    return least_squares(clean);
}

}  // namespace

TEST_CASE("least squares") {
    SUBCASE("exact linear data recovered to 1e-9") {
        LabeledDataset data;
        data.x.resize(6, 2);
        data.y.resize(6);
        Rng rng(5, "ls");
        Vector theta(2);
        theta << 1.5, -2.0;
        for (int i = 0; i < 6; ++i) {
            data.x(i, 0) = rng.next_gaussian();
            data.x(i, 1) = rng.next_gaussian();
            data.y(i) = data.x.row(i).dot(theta);
        }
        CHECK((least_squares(data) - theta).norm() < 1e-9);
    }
    SUBCASE("closed-form slope") {
        LabeledDataset data;
        data.x.resize(3, 1);
        data.y.resize(3);
        data.x << 1, 2, 3;
        data.y << 2, 3.9, 6.1;
        const double slope = (1 * 2 + 2 * 3.9 + 3 * 6.1) / (1.0 + 4.0 + 9.0);
        CHECK(least_squares(data)(0) == doctest::Approx(slope).epsilon(1e-12));
    }
    SUBCASE("gradient condition on random data") {
        RegressionInstance inst;
        inst.theta = Vector::Constant(3, 0.4);
        inst.cov = Matrix::Identity(3, 3);
        inst.norm_bound = 1.0;
        const auto data = sample_regression(inst, 200, 8);
        CHECK(least_squares_gradient_residual(data, least_squares(data)) <= 1e-8);
    }
}

TEST_CASE("robust regression sos") {
    RegressionInstance inst;
    inst.theta = Vector::Constant(1, 0.8);
    inst.cov = Matrix::Identity(1, 1);

    SUBCASE("eta = 0 pins theta to least squares") {
        const auto data = sample_regression(inst, 8, 4);  // frozen feasible seed
        const auto rep = robust_regression_sos(data, 0.0);
        REQUIRE(rep.converged);
        CHECK((rep.estimate_vector - least_squares(data)).norm() < 1e-6);
    }
    SUBCASE("one leverage outlier at eta = 1/8") {
        int row = 0;
        const auto data = tiny_with_outlier(&row);
        const auto rep = robust_regression_sos(data, 1.0 / 8.0);
        REQUIRE(rep.converged);
        const Vector clean = clean_ls_without(data, row);
        const double eta = 1.0 / 8.0;
        CHECK((rep.estimate_vector - clean).norm() <= 5.0 * eta * log1e(eta));
    }
    SUBCASE("clean data is feasible at the 1 + 2 eta noise bound") {
        const auto data = sample_regression(inst, 8, 4);
        double rss = 0;
        const Vector ls = least_squares(data);
        for (int i = 0; i < 8; ++i) {
            const double r = data.y(i) - data.x(i, 0) * ls(0);
            rss += r * r;
        }
        REQUIRE(rss / 8.0 <= 1.0 + 2.0 * 0.1);  // empirical second moment oracle
        CHECK(robust_regression_sos(data, 0.1).converged);
    }
    SUBCASE("scale guard") {
        const auto data = sample_regression(inst, 200, 4);
        CHECK_THROWS(robust_regression_sos(data, 0.1));
    }
}

TEST_CASE("robust mean sos") {
    SUBCASE("eta = 0 returns the empirical mean exactly") {
        GaussianInstance gi;
        gi.mean = Vector::Constant(1, 0.3);
        gi.cov = Matrix::Identity(1, 1);
        const auto pts = sample_gaussian(gi, 9, 12);
        const auto rep = robust_mean_sos(pts, 0.0);
        REQUIRE(rep.converged);
        CHECK(rep.estimate_vector(0) == doctest::Approx(pts.x.col(0).mean()).epsilon(1e-8));
    }
    SUBCASE("one far outlier at eta = 0.1") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(1);
        gi.cov = Matrix::Identity(1, 1);
        auto pts = sample_gaussian(gi, 10, 3);
        double clean_mean = 0.0;
        for (int i = 1; i < 10; ++i) clean_mean += pts.x(i, 0);
        clean_mean /= 9.0;
        pts.x(0, 0) = 50.0;
        const auto rep = robust_mean_sos(pts, 0.1);
        REQUIRE(rep.converged);
        CHECK(std::abs(rep.estimate_vector(0) - clean_mean) <=
              5.0 * 0.1 * std::sqrt(log1e(0.1)));
    }
    SUBCASE("Cauchy-Schwarz rounding holds on the returned functional") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(1);
        gi.cov = Matrix::Identity(1, 1);
        const auto pts = sample_gaussian(gi, 8, 21);
        MeanSystemConfig mc;
        mc.eta = 0.1;
        auto built = build_mean_system(pts, mc);
        const auto res = solve_pseudoexpectation(built.system);
        REQUIRE(res.status == SolveStatus::Feasible);
        const double mu_true = 0.0;
        const double m1 = res.pe.value(Monomial::var(built.handles.mu[0]));
        const double m2 = res.pe.value(Monomial::var(built.handles.mu[0], 2));
        const double m3 = res.pe.value(Monomial::var(built.handles.mu[0], 3));
        const double m4 = res.pe.value(Monomial::var(built.handles.mu[0], 4));
        // pE <mu' - mu, u>^4 at the optimal (sign) direction, Sigma = 1
        const double lhs = std::pow(std::abs(m1 - mu_true), 4.0);
        const double rhs = m4 - 4 * m3 * mu_true + 6 * m2 * mu_true * mu_true -
                           4 * m1 * std::pow(mu_true, 3) + std::pow(mu_true, 4);
        CHECK(lhs <= rhs + 1e-8);
    }
}

TEST_CASE("robust covariance sos") {
    SUBCASE("eta = 0 returns the empirical second moment") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(1);
        gi.cov = Matrix::Identity(1, 1);
        const auto pts = sample_gaussian(gi, 10, 7);
        const auto rep = robust_cov_spectral_sos(pts, 0.0);
        REQUIRE(rep.converged);
        const double emp = pts.x.col(0).squaredNorm() / 10.0;
        CHECK(rep.estimate_matrix(0, 0) == doctest::Approx(emp).epsilon(1e-7));
    }
    SUBCASE("planted scaling outlier at tiny scale") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(1);
        gi.cov = Matrix::Identity(1, 1);
        auto pts = sample_gaussian(gi, 10, 19);
        Matrix clean = Matrix::Zero(1, 1);
        for (int i = 1; i < 10; ++i) clean += pts.x.row(i).transpose() * pts.x.row(i);
        clean /= 9.0;
        pts.x(0, 0) = 30.0;  // scaling outlier
        const auto rep = robust_cov_spectral_sos(pts, 0.1);
        REQUIRE(rep.converged);
        const double rel = std::abs(rep.estimate_matrix(0, 0) / clean(0, 0) - 1.0);
        CHECK(rel <= 5.0 * 0.1 * log1e(0.1));
    }
    SUBCASE("pair differencing recenters") {
        GaussianInstance gi;
        gi.mean = Vector::Constant(2, 3.0);
        gi.cov = Matrix::Identity(2, 2);
        gi.norm_bound = 5.0;
        const auto pts = sample_gaussian(gi, 20000, 31);
        const auto diffs = pair_differences(pts);
        CHECK(Vector(diffs.x.colwise().mean()).norm() < 0.05);
        Matrix cov = diffs.x.transpose() * diffs.x / diffs.n();
        CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
    }
    SUBCASE("frobenius path enforces the near-identity precondition") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(1);
        gi.cov = Matrix::Identity(1, 1) * 9.0;
        gi.cov_lower_bound = 1.0;
        const auto pts = sample_gaussian(gi, 10, 2);
        CHECK_THROWS(robust_cov_frobenius_sos(pts, 0.1));
    }
    SUBCASE("frobenius eta = 0 identity") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(1);
        gi.cov = Matrix::Identity(1, 1);
        const auto pts = sample_gaussian(gi, 10, 7);
        const auto rep = robust_cov_frobenius_sos(pts, 0.0);
        REQUIRE(rep.converged);
        const double emp = pts.x.col(0).squaredNorm() / 10.0;
        CHECK(rep.estimate_matrix(0, 0) == doctest::Approx(emp).epsilon(1e-7));
    }
}

TEST_CASE("weighted estimators") {
    SUBCASE("eta = 0 matches the classical estimators exactly") {
        RegressionInstance inst;
        inst.theta = Vector::Constant(3, 0.5);
        inst.cov = Matrix::Identity(3, 3);
        const auto data = sample_regression(inst, 500, 3);
        const auto rep = robust_regression_weighted(data, 0.0);
        CHECK((rep.estimate_vector - least_squares(data)).norm() == 0.0);

        GaussianInstance gi;
        gi.mean = Vector::Zero(3);
        gi.cov = Matrix::Identity(3, 3);
        const auto pts = sample_gaussian(gi, 500, 3);
        const auto mrep = robust_mean_weighted(pts, 0.0);
        CHECK((mrep.estimate_vector - Vector(pts.x.colwise().mean().transpose())).norm() == 0.0);
    }

    SUBCASE("leverage corruption at d = 10") {
        RegressionInstance inst;
        inst.theta = Vector::Constant(10, 0.3);
        inst.cov = Matrix::Identity(10, 10);
        inst.norm_bound = 1.0;
        const auto data = sample_regression(inst, 20000, 5);
        const auto [bad, mask] = corrupt(data, 0.05, Adversary::LeveragePoint, 6);
        const auto rep = robust_regression_weighted(bad, 0.05);
        const double err = std::sqrt(generalization_gap(rep.estimate_vector, inst));
        CHECK(err <= 5.0 * 0.05 * log1e(0.05));
        CHECK(rep.weights.sum() >= (1.0 - 2 * 0.05) * bad.n());
    }

    SUBCASE("error curve over eta is monotone and below the rate line") {
        RegressionInstance inst;
        inst.theta = Vector::Constant(5, 0.4);
        inst.cov = Matrix::Identity(5, 5);
        double last = 0.0;
        for (const double eta : {0.01, 0.02, 0.05, 0.1}) {
            double total = 0.0;
            for (int seed = 0; seed < 3; ++seed) {
                const auto data = sample_regression(inst, 20000, 100 + seed);
                const auto [bad, mask] = corrupt(data, eta, Adversary::LeveragePoint, seed);
                const auto rep = robust_regression_weighted(bad, eta);
                total += std::sqrt(generalization_gap(rep.estimate_vector, inst));
            }
            const double err = total / 3.0;
            CHECK(err <= 5.0 * eta * log1e(eta));
            CHECK(err >= last - 0.01);  // monotone up to trial noise
            last = err;
        }
    }

    SUBCASE("mean shift cluster at d = 10") {
        GaussianInstance gi;
        gi.mean = Vector::Constant(10, 0.2);
        gi.cov = Matrix::Identity(10, 10);
        gi.norm_bound = 1.0;
        const auto pts = sample_gaussian(gi, 20000, 9);
        const auto [bad, mask] = corrupt(pts, 0.05, Adversary::MeanShiftCluster, 10);
        const auto rep = robust_mean_weighted(bad, 0.05);
        const double err = (rep.estimate_vector - gi.mean).norm();
        CHECK(err <= 5.0 * 0.05 * std::sqrt(log1e(0.05)));
    }

    SUBCASE("translation equivariance of the weighted mean") {
        GaussianInstance gi;
        gi.mean = Vector::Zero(2);
        gi.cov = Matrix::Identity(2, 2);
        auto pts = sample_gaussian(gi, 400, 17);
        pts.x.row(0) = Vector::Constant(2, 25.0).transpose();
        const auto base = robust_mean_weighted(pts, 0.05);
        PointDataset shifted = pts;
        Vector t(2);
        t << 3.0, -1.0;
        shifted.x.rowwise() += t.transpose();
        const auto moved = robust_mean_weighted(shifted, 0.05);
        CHECK((moved.estimate_vector - base.estimate_vector - t).norm() < 1e-7);
    }

    SUBCASE("regression error metric is invariant under reparameterization") {
        RegressionInstance inst;
        inst.theta = Vector::Constant(2, 0.5);
        inst.cov = Matrix::Identity(2, 2);
        const auto data = sample_regression(inst, 4000, 23);
        auto [bad, mask] = corrupt(data, 0.05, Adversary::LabelFlip, 24);
        const auto rep = robust_regression_weighted(bad, 0.05);
        const double err = std::sqrt(generalization_gap(rep.estimate_vector, inst));

        Matrix a(2, 2);
        a << 1.2, 0.3, -0.4, 0.9;  // invertible reparameterization
        LabeledDataset mapped = bad;
        mapped.x = bad.x * a.transpose();
        const auto rep2 = robust_regression_weighted(mapped, 0.05);
        RegressionInstance mapped_inst = inst;
        mapped_inst.theta = a.transpose().inverse() * inst.theta;
        mapped_inst.cov = a * inst.cov * a.transpose();
        mapped_inst.norm_bound = 10.0;
        mapped_inst.cov_bound = 10.0;
        const double err2 = std::sqrt(generalization_gap(rep2.estimate_vector, mapped_inst));
        CHECK(err == doctest::Approx(err2).epsilon(1e-6));
    }

    SUBCASE("sos and weighted agree on clean tiny data") {
        RegressionInstance inst;
        inst.theta = Vector::Constant(1, 0.8);
        inst.cov = Matrix::Identity(1, 1);
        const auto data = sample_regression(inst, 8, 4);
        const auto sos = robust_regression_sos(data, 0.0);
        const auto wtd = robust_regression_weighted(data, 0.0);
        REQUIRE(sos.converged);
        CHECK((sos.estimate_vector - wtd.estimate_vector).norm() < 1e-6);
    }
}
