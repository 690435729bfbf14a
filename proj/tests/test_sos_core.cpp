#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "estlab/constraint_system.hpp"
#include "estlab/estimators.hpp"
#include "estlab/io.hpp"
#include "estlab/model.hpp"
#include "estlab/rng.hpp"
#include "estlab/selector.hpp"
#include "estlab/systems.hpp"

using namespace estlab;

TEST_CASE("enumerate_basis sizes") {
    VariableRegistry reg;
    const int w = reg.add_scalar("w", 1.0);
    SUBCASE("one scalar, degree 2") {
        CHECK(enumerate_basis(reg, {w}, 2).size() == 3);  // 1, w, w^2
    }
    SUBCASE("two scalars, degree 2") {
        const int v = reg.add_scalar("v", 1.0);
        CHECK(enumerate_basis(reg, {w, v}, 2).size() == 6);
    }
    SUBCASE("cap guard") {
        std::vector<int> many;
        for (int i = 0; i < 40; ++i) many.push_back(reg.add_scalar("z" + std::to_string(i), 1.0));
        CHECK_THROWS_AS(enumerate_basis(reg, many, 4, 5000), std::length_error);
    }
    SUBCASE("idempotent variables collapse") {
        VariableRegistry r2;
        const int b = r2.add_scalar("b", 1.0, true);
        CHECK(enumerate_basis(r2, {b}, 4).size() == 2);  // 1, b only
    }
}

TEST_CASE("moment and localizing matrices on actual distributions") {
    auto reg = std::make_shared<VariableRegistry>();
    const int w = reg->add_scalar("w", 2.0);
    std::vector<Monomial> tracked{Monomial::var(w), Monomial::var(w, 2), Monomial::var(w, 3),
                                  Monomial::var(w, 4)};
    std::vector<Monomial> basis{Monomial::one(), Monomial::var(w)};

    SUBCASE("point mass at w = 1") {
        Eigen::VectorXd pt(1);
        pt << 1.0;
        auto pe = PseudoExpectation::from_points(reg, 4, tracked, {pt}, {1.0});
        Matrix m = pe.moment_matrix(basis);
        CHECK(m(0, 0) == 1.0);
        CHECK(m(0, 1) == 1.0);
        CHECK(m(1, 1) == 1.0);
    }
    SUBCASE("uniform on {-1, +1}") {
        Eigen::VectorXd a(1), b(1);
        a << 1.0;
        b << -1.0;
        auto pe = PseudoExpectation::from_points(reg, 4, tracked, {a, b}, {0.5, 0.5});
        Matrix m = pe.moment_matrix(basis);
        CHECK(m(0, 1) == 0.0);
        CHECK(m(1, 1) == 1.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        CHECK(es.eigenvalues().minCoeff() >= 0.0);

        // localizing with g = 1 - w^2 annihilates the uniform distribution
        Polynomial g(1.0);
        g.add(Monomial::var(w, 2), -1.0);
        Matrix loc = pe.localizing_matrix(g, basis);
        CHECK(loc.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("solver: {w^2 = w, w = 1} pins the moment") {
    ConstraintSystem sys;
    const int w = sys.registry->add_scalar("w", 1.0, true);
    sys.moment_blocks.push_back({Monomial::one(), Monomial::var(w)});
    Polynomial eq;
    eq.add(Monomial::var(w), 1.0);
    eq.add(Monomial::one(), -1.0);
    sys.equalities.push_back(eq);
    sys.bounding_radius = 1.0;
    const auto res = solve_pseudoexpectation(sys);
    REQUIRE(res.status == SolveStatus::Feasible);
    CHECK(res.pe.value(Monomial::var(w)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solver: {w^2 = w, w - 2 >= 0} is infeasible") {
    // no Boolean w reaches 2; the dual certificate is -(w - 2) as an SoS
    // combination modulo w^2 = w
    ConstraintSystem sys;
    const int w = sys.registry->add_scalar("w", 1.0, true);
    sys.moment_blocks.push_back({Monomial::one(), Monomial::var(w)});
    Polynomial ge;
    ge.add(Monomial::var(w), 1.0);
    ge.add(Monomial::one(), -2.0);
    sys.inequalities.push_back(ge);
    const auto res = solve_pseudoexpectation(sys);
    CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("solver: A_eta at n = 6, d = 1 with no corruption recovers least squares") {
    RegressionInstance inst;
    inst.theta = Vector::Constant(1, 0.8);
    inst.cov = Matrix::Identity(1, 1);
    inst.norm_bound = 1.0;
    inst.cov_bound = 1.0;
    // frozen seed with empirical noise below the eta = 0 bound
    const auto data = sample_regression(inst, 6, 40);
    LabeledDataset ds = data;
    double rss_best = 1e9;
    const Vector ls = least_squares(ds);
    {
        double s = 0;
        for (int i = 0; i < 6; ++i) {
            const double r = ds.y(i) - ds.x(i, 0) * ls(0);
            s += r * r;
        }
        rss_best = s / 6;
    }
    REQUIRE(rss_best < 1.0);  // seed chosen so the eta = 0 system is feasible

    RegressionSystemConfig rc;
    rc.eta = 0.0;
    auto built = build_regression_system(ds, rc);
    const auto res = solve_pseudoexpectation(built.system);
    REQUIRE(res.status == SolveStatus::Feasible);
    const Vector theta = extract_vector(res.pe, built.handles.theta);
    CHECK(theta(0) == doctest::Approx(ls(0)).epsilon(1e-3));
}

TEST_CASE("returned functionals pass the clause checker") {
    RegressionInstance inst;
    inst.theta = Vector::Constant(1, 0.5);
    inst.cov = Matrix::Identity(1, 1);
    const auto data = sample_regression(inst, 6, 40);
    RegressionSystemConfig rc;
    rc.eta = 0.0;
    auto built = build_regression_system(data, rc);
    const auto res = solve_pseudoexpectation(built.system);
    REQUIRE(res.status == SolveStatus::Feasible);
    const auto rep = check_approx_satisfaction(res.pe, built.system, 1e-8, built.system.budget_T, 4);
    CHECK(rep.ok);
    CHECK(rep.clauses_checked > 10);
}

TEST_CASE("checker rejects a functional with a negative moment block") {
    ConstraintSystem sys;
    const int w = sys.registry->add_scalar("w", 1.0);
    sys.moment_blocks.push_back({Monomial::one(), Monomial::var(w)});
    PseudoExpectation pe(sys.registry, 2, sys.tracked_monomials());
    pe.set_value(Monomial::var(w), 0.5);
    pe.set_value(Monomial::var(w, 2), -0.01);  // min eig about -10 tau T for tau = 1e-3
    const auto rep = check_approx_satisfaction(pe, sys, 1e-3, 1, 2);
    CHECK_FALSE(rep.ok);
    bool cites_psd = false;
    for (const auto& v : rep.violations) {
        if (v.clause.find("moment-psd") != std::string::npos) cites_psd = true;
    }
    CHECK(cites_psd);
}

TEST_CASE("counting clause accepts the zeroed-coordinate surgery at budget T + 1") {
    // the sensitivity construction: zero every monomial containing one w_i
    ConstraintSystem sys;
    const int n = 4;
    std::vector<int> w;
    for (int i = 0; i < n; ++i) w.push_back(sys.registry->add_scalar("w" + std::to_string(i), 1.0, true));
    sys.w_vars = w;
    sys.n_samples = n;
    std::vector<Monomial> basis{Monomial::one()};
    for (int i = 0; i < n; ++i) basis.push_back(Monomial::var(w[i]));
    sys.moment_blocks.push_back(basis);

    Eigen::VectorXd pt(n);
    pt.setOnes();
    auto pe = PseudoExpectation::from_points(sys.registry, 2, sys.tracked_monomials(), {pt}, {1.0});
    // T = 0 holds for the all-ones functional
    CHECK(check_approx_satisfaction(pe, sys, 1e-9, 0, 2).ok);
    // zero w_0: counting clause passes at budget T + 1
    for (const Monomial& m : pe.tracked()) {
        if (m.contains(w[0])) pe.set_value(m, 0.0);
    }
    CHECK(check_approx_satisfaction(pe, sys, 1e-9, 1, 2).ok);
}

TEST_CASE("selector certificates") {
    SUBCASE("extreme point") {
        const auto cert = selector_certificate({3, 2, 1}, 2);
        CHECK(cert.bound == 5.0);
        CHECK(verify_selector(cert, 3, 100, 1) < 1e-9);
    }
    SUBCASE("interior point stays below the bound") {
        const auto cert = selector_certificate({3, 2, 1}, 2);
        // z = (0.5, 0.5, 1): sum z a = 3.5 <= 5
        CHECK(0.5 * 3 + 0.5 * 2 + 1.0 * 1 <= cert.bound);
    }
    SUBCASE("brute force equals sorted top-k, random instances") {
        Rng rng(7, "selector_test");
        for (int t = 0; t < 100; ++t) {
            const int n = 3 + static_cast<int>(rng.uniform_int(10));
            const int k = 1 + static_cast<int>(rng.uniform_int(n));
            std::vector<double> a(n);
            for (double& v : a) v = rng.uniform(-5.0, 5.0);
            const auto cert = selector_certificate(a, k);
            CHECK(best_subset_sum(a, k) == doctest::Approx(cert.bound).epsilon(1e-12));
            CHECK(verify_selector(cert, n, 100, t) < 1e-9);
        }
    }
}

TEST_CASE("pseudo-expectation Cauchy-Schwarz on returned functionals") {
    RegressionInstance inst;
    inst.theta = Vector::Constant(1, 0.5);
    inst.cov = Matrix::Identity(1, 1);
    const auto data = sample_regression(inst, 6, 40);
    RegressionSystemConfig rc;
    rc.eta = 0.0;
    auto built = build_regression_system(data, rc);
    const auto res = solve_pseudoexpectation(built.system);
    REQUIRE(res.status == SolveStatus::Feasible);

    Rng rng(3, "cs_test");
    for (const auto& basis : built.system.moment_blocks) {
        const Matrix m = res.pe.moment_matrix(basis);
        for (int t = 0; t < 10; ++t) {
            Vector p(m.rows()), q(m.rows());
            for (int i = 0; i < m.rows(); ++i) {
                p(i) = rng.next_gaussian();
                q(i) = rng.next_gaussian();
            }
            const double pq = p.dot(m * q);
            const double pp = p.dot(m * p);
            const double qq = q.dot(m * q);
            CHECK(pq * pq <= pp * qq + 1e-6 * (1 + pp) * (1 + qq));
        }
    }
}

TEST_CASE("product pseudo-expectations") {
    auto reg1 = std::make_shared<VariableRegistry>();
    const int w1 = reg1->add_scalar("w", 1.0, true);
    auto reg2 = std::make_shared<VariableRegistry>();
    const int w2 = reg2->add_scalar("w", 1.0, true);

    SUBCASE("two point masses at w = 1") {
        Eigen::VectorXd pt(1);
        pt << 1.0;
        auto a = PseudoExpectation::from_points(reg1, 2, {Monomial::var(w1)}, {pt}, {1.0});
        auto b = PseudoExpectation::from_points(reg2, 2, {Monomial::var(w2)}, {pt}, {1.0});
        auto prod = a.product(b);
        Monomial joint;
        joint.factors = {{0, 1}, {1, 1}};
        CHECK(prod.value(joint) == doctest::Approx(1.0));
    }

    SUBCASE("product of discrete moments equals moments of the product (exhaustive)") {
        Eigen::VectorXd p0(1), p1(1);
        p0 << 0.0;
        p1 << 1.0;
        auto a = PseudoExpectation::from_points(reg1, 2, {Monomial::var(w1)}, {p0, p1}, {0.3, 0.7});
        auto b = PseudoExpectation::from_points(reg2, 2, {Monomial::var(w2)}, {p0, p1}, {0.6, 0.4});
        auto prod = a.product(b);
        Monomial joint;
        joint.factors = {{0, 1}, {1, 1}};
        CHECK(prod.value(joint) == doctest::Approx(0.7 * 0.4));
        CHECK(prod.value(Monomial::var(0)) == doctest::Approx(0.7));
    }
}

TEST_CASE("pseudo-expectation JSON golden shape") {
    auto reg = std::make_shared<VariableRegistry>();
    const int w = reg->add_scalar("w", 1.0);
    Eigen::VectorXd pt(1);
    pt << 0.5;
    auto pe = PseudoExpectation::from_points(reg, 2, {Monomial::var(w), Monomial::var(w, 2)}, {pt},
                                             {1.0});
    const Json j = pe_to_json(pe);
    CHECK(j["degree"] == 2);
    CHECK(j["variables"].size() == 1);
    CHECK(j["monomials"].size() == 2);
    CHECK(j["moments"][0] == doctest::Approx(0.5));
    CHECK(j["moments"][1] == doctest::Approx(0.25));
}
