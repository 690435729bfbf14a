#include "estlab/constraint_system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "estlab/rng.hpp"

namespace estlab {

std::vector<Monomial> ConstraintSystem::tracked_monomials() const {
    std::set<Monomial> seen;
    for (const auto& basis : moment_blocks) {
        for (std::size_t a = 0; a < basis.size(); ++a) {
            for (std::size_t b = a; b < basis.size(); ++b) {
                seen.insert(registry->mul(basis[a], basis[b]));
            }
        }
    }
    auto add_poly = [&](const Polynomial& p) {
        for (const auto& [m, c] : p.terms()) seen.insert(m);
    };
    for (const auto& q : equalities) add_poly(q);
    for (const auto& q : inequalities) add_poly(q);
    for (const auto& blk : psd_blocks) {
        for (const auto& row : blk.entries) {
            for (const auto& e : row) add_poly(e);
        }
    }
    seen.erase(Monomial::one());
    return {seen.begin(), seen.end()};
}

void ConstraintSystem::validate() const {
    if (bounding_radius <= 0.0) throw std::invalid_argument("system must be explicitly bounded");
    const auto tracked = tracked_monomials();
    std::set<Monomial> tracked_set(tracked.begin(), tracked.end());
    auto check_poly = [&](const Polynomial& p, const char* where) {
        for (const auto& [m, c] : p.terms()) {
            if (!m.is_one() && !tracked_set.count(m)) {
                throw std::logic_error(std::string("constraint monomial not tracked in ") + where);
            }
            for (const auto& [v, e] : m.factors) {
                if (v < 0 || v >= registry->count()) {
                    throw std::logic_error("unregistered variable referenced");
                }
            }
        }
    };
    for (const auto& q : equalities) check_poly(q, "equalities");
    for (const auto& q : inequalities) check_poly(q, "inequalities");
    for (const auto& blk : psd_blocks) {
        for (const auto& row : blk.entries) {
            for (const auto& e : row) check_poly(e, blk.name.c_str());
        }
    }
}

bool candidate_feasible(const ConstraintSystem& sys, const CandidateAssignment& cand,
                        const SolverConfig& cfg, PseudoExpectation* out_pe) {
    // constraints are verified at every support point so that all multiplied
    // clauses of the relaxed-satisfaction definition hold exactly
    for (const auto& point : cand.support) {
        auto value_of = [&](int v) { return point(v); };
        for (const auto& q : sys.equalities) {
            if (std::abs(q.evaluate(value_of)) > cfg.eq_tol * (1.0 + q.coefficient_norm())) {
                return false;
            }
        }
        for (const auto& q : sys.inequalities) {
            if (q.evaluate(value_of) < -cfg.ineq_tol * (1.0 + q.coefficient_norm())) return false;
        }
        for (int v = 0; v < sys.registry->count(); ++v) {
            if (std::abs(point(v)) > sys.registry->bound(v) * sys.bounding_radius * (1.0 + 1e-9)) {
                return false;
            }
        }
    }
    PseudoExpectation pe = PseudoExpectation::from_points(sys.registry, cfg.degree,
                                                          sys.tracked_monomials(), cand.support,
                                                          cand.weights);
    for (const auto& blk : sys.psd_blocks) {
        const int k = static_cast<int>(blk.entries.size());
        Eigen::MatrixXd m(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) m(a, b) = pe(blk.entries[a][b]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
        if (es.eigenvalues().minCoeff() < -cfg.psd_tol * (1.0 + std::abs(m.trace()))) return false;
    }
    // moment blocks of a mixture of point masses are PSD by construction
    for (const auto& oracle : sys.custom_oracles) {
        if (oracle(pe).has_value()) return false;
    }
    if (out_pe) *out_pe = std::move(pe);
    return true;
}

SatisfactionReport check_approx_satisfaction(const PseudoExpectation& pe,
                                             const ConstraintSystem& sys, double tau, int T,
                                             int degree, int samples, std::uint64_t seed) {
    SatisfactionReport report;
    Rng rng(seed, "check_approx_satisfaction");
    const double slack = tau * std::max(T, 1);
    const double nfloor = 1e-6;  // numeric floor above the solver tolerances

    auto note = [&](const std::string& clause, double value, double threshold) {
        ++report.clauses_checked;
        if (value < threshold) {
            report.ok = false;
            report.violations.push_back({clause, value, threshold});
        }
    };

    // clause 2: nonnegativity of squares, via block eigenvalues and sampled p
    for (std::size_t b = 0; b < sys.moment_blocks.size(); ++b) {
        const auto& basis = sys.moment_blocks[b];
        Eigen::MatrixXd m = pe.moment_matrix(basis);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        const double scale = 1.0 + std::abs(m.trace());
        note("moment-psd[" + std::to_string(b) + "]", es.eigenvalues().minCoeff(),
             -(slack + nfloor) * scale);
        for (int t = 0; t < samples; ++t) {
            Eigen::VectorXd p(m.rows());
            for (int i = 0; i < p.size(); ++i) p(i) = rng.next_gaussian();
            p.normalize();
            note("sampled-square[" + std::to_string(b) + "]", p.dot(m * p),
                 -(slack + nfloor) * scale);
        }
    }

    // clause 3: inequality constraints times tracked square multipliers
    std::set<Monomial> tracked_set;
    for (const auto& m : pe.tracked()) tracked_set.insert(m);
    for (std::size_t qi = 0; qi < sys.inequalities.size(); ++qi) {
        const auto& q = sys.inequalities[qi];
        const double qscale = 1.0 + q.coefficient_norm();
        note("inequality[" + std::to_string(qi) + "]", pe(q), -(slack + nfloor) * qscale);
        for (const auto& basis : sys.moment_blocks) {
            for (const auto& mult : basis) {
                if (mult.is_one()) continue;
                Polynomial prod;
                bool ok = true;
                for (const auto& [qm, qc] : q.terms()) {
                    Monomial full = pe.registry().mul(pe.registry().mul(mult, mult), qm);
                    if (full.degree() > degree || !(full.is_one() || tracked_set.count(full))) {
                        ok = false;
                        break;
                    }
                    prod.add(full, qc);
                }
                if (!ok) continue;
                const double mb = pe.registry().monomial_bound(mult);
                note("inequality-mult[" + std::to_string(qi) + "]", pe(prod),
                     -(slack + nfloor) * qscale * (1.0 + mb * mb));
            }
        }
    }

    // clause 4: counting constraint with its widened slack
    if (!sys.w_vars.empty() && sys.n_samples > 0) {
        Polynomial counting(static_cast<double>(-(sys.n_samples - T)));
        for (const int w : sys.w_vars) counting.add(Monomial::var(w), 1.0);
        note("counting", pe(counting), -5.0 * tau * T * sys.n_samples - nfloor);
        for (const int w : sys.w_vars) {
            // p = w_j keeps every product tracked (w idempotent)
            Polynomial prod;
            bool ok = true;
            for (const auto& [qm, qc] : counting.terms()) {
                Monomial full = pe.registry().mul(Monomial::var(w), qm);
                if (!(full.is_one() || tracked_set.count(full))) {
                    ok = false;
                    break;
                }
                prod.add(full, qc);
            }
            if (ok) note("counting-mult", pe(prod), -5.0 * tau * std::max(T, 1) * sys.n_samples - nfloor);
        }
    }

    // equalities at tracked multipliers
    for (std::size_t qi = 0; qi < sys.equalities.size(); ++qi) {
        const auto& q = sys.equalities[qi];
        const double qscale = 1.0 + q.coefficient_norm();
        const double v = pe(q);
        ++report.clauses_checked;
        if (std::abs(v) > (slack + 1e-6) * qscale) {
            report.ok = false;
            report.violations.push_back({"equality[" + std::to_string(qi) + "]", v,
                                         (slack + 1e-6) * qscale});
        }
    }
    return report;
}

}  // namespace estlab
