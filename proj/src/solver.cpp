#include "estlab/constraint_system.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace estlab {

namespace {

struct SparseRow {
    std::vector<std::pair<int, double>> coeffs;  // tracked index -> coefficient
    double constant = 0.0;
    double scale = 1.0;
    std::string name;
};

struct IndexedBlock {
    // entry (a, b) is either a tracked index or the constant monomial
    Eigen::MatrixXi idx;        // -1 for constant
    Eigen::MatrixXd consts;     // additive constants
    std::vector<std::vector<std::vector<std::pair<int, double>>>> poly_entries;  // for psd blocks
    bool polynomial = false;
    std::string name;
};

// compiles a polynomial to (constant, sparse coefficients over tracked set)
SparseRow compile_poly(const Polynomial& p,
                       const std::unordered_map<Monomial, int, MonomialHash>& index) {
    SparseRow row;
    std::map<int, double> acc;
    for (const auto& [m, c] : p.terms()) {
        if (m.is_one()) {
            row.constant += c;
        } else {
            acc[index.at(m)] += c;
        }
    }
    for (const auto& [k, v] : acc) row.coeffs.push_back({k, v});
    row.scale = 1.0 + p.coefficient_norm();
    return row;
}

double eval_row(const SparseRow& row, const Eigen::VectorXd& y) {
    double v = row.constant;
    for (const auto& [k, c] : row.coeffs) v += c * y(k);
    return v;
}

}  // namespace

SolveResult solve_pseudoexpectation(const ConstraintSystem& sys, const SolverConfig& cfg) {
    sys.validate();
    const auto tracked = sys.tracked_monomials();
    if (tracked.size() > cfg.basis_cap) {
        throw std::length_error("tracked moment set exceeds cap (" + std::to_string(tracked.size()) +
                                " > " + std::to_string(cfg.basis_cap) + ")");
    }
    const int m = static_cast<int>(tracked.size());
    std::unordered_map<Monomial, int, MonomialHash> index;
    for (int i = 0; i < m; ++i) index[tracked[i]] = i;

    SolveResult result;
    result.pe = PseudoExpectation(sys.registry, cfg.degree, tracked);

    // fast path: exact candidate witnesses
    if (cfg.try_candidates) {
        for (const auto& cand : sys.candidates) {
            PseudoExpectation pe;
            if (candidate_feasible(sys, cand, cfg, &pe)) {
                result.status = SolveStatus::Feasible;
                result.pe = std::move(pe);
                result.detail = "candidate witness";
                return result;
            }
        }
    }

    // equality rows: each equality times every tracked multiplier that stays
    // within the tracked set
    std::vector<SparseRow> eq_rows;
    {
        std::set<std::vector<std::pair<int, double>>> seen;
        std::vector<Monomial> multipliers;
        multipliers.push_back(Monomial::one());
        std::set<Monomial> mult_seen;
        for (const auto& basis : sys.moment_blocks) {
            for (const auto& b : basis) {
                if (!b.is_one() && mult_seen.insert(b).second) multipliers.push_back(b);
            }
        }
        for (const auto& q : sys.equalities) {
            for (const auto& mult : multipliers) {
                Polynomial prod;
                bool ok = true;
                for (const auto& [qm, qc] : q.terms()) {
                    Monomial full = sys.registry->mul(qm, mult);
                    if (!full.is_one() && !index.count(full)) {
                        ok = false;
                        break;
                    }
                    prod.add(full, qc);
                }
                if (!ok) continue;
                SparseRow row = compile_poly(prod, index);
                if (row.coeffs.empty()) {
                    if (std::abs(row.constant) > cfg.eq_tol) {
                        result.status = SolveStatus::Infeasible;
                        result.detail = "inconsistent constant equality";
                        return result;
                    }
                    continue;
                }
                // normalize and dedupe
                const double norm = std::sqrt([&] {
                    double s = row.constant * row.constant;
                    for (const auto& [k, c] : row.coeffs) s += c * c;
                    return s;
                }());
                for (auto& [k, c] : row.coeffs) c /= norm;
                row.constant /= norm;
                if (seen.insert(row.coeffs).second) eq_rows.push_back(row);
            }
        }
    }

    const int r = static_cast<int>(eq_rows.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(r);
    for (int i = 0; i < r; ++i) {
        for (const auto& [k, c] : eq_rows[i].coeffs) a(i, k) = c;
        b(i) = -eq_rows[i].constant;
    }

    Eigen::VectorXd y0;
    Eigen::MatrixXd nullbasis;
    int nz = m;
    if (r > 0) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
        const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        const double rank_tol = std::max(1e-11, 1e-12 * smax);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i) {
            if (svd.singularValues()(i) > rank_tol) ++rank;
        }
        Eigen::VectorXd s_inv = Eigen::VectorXd::Zero(svd.singularValues().size());
        for (int i = 0; i < rank; ++i) s_inv(i) = 1.0 / svd.singularValues()(i);
        y0 = svd.matrixV().leftCols(s_inv.size()) * s_inv.asDiagonal() *
             (svd.matrixU().transpose() * b).head(s_inv.size());
        if ((a * y0 - b).norm() > 1e-6 * (1.0 + b.norm())) {
            result.status = SolveStatus::Infeasible;
            result.detail = "equality system inconsistent";
            return result;
        }
        nz = m - rank;
        nullbasis = svd.matrixV().rightCols(nz);
    } else {
        y0 = Eigen::VectorXd::Zero(m);
        nullbasis = Eigen::MatrixXd::Identity(m, m);
    }

    // compiled oracle structures
    std::vector<SparseRow> ineq_rows;
    for (const auto& q : sys.inequalities) {
        SparseRow row = compile_poly(q, index);
        row.name = "inequality";
        ineq_rows.push_back(row);
    }
    struct CompiledBlock {
        Eigen::MatrixXi idx;
        Eigen::MatrixXd consts;
        std::vector<std::vector<SparseRow>> entries;
        bool polynomial = false;
        std::string name;
        int size = 0;
    };
    std::vector<CompiledBlock> blocks;
    for (std::size_t bi = 0; bi < sys.moment_blocks.size(); ++bi) {
        const auto& basis = sys.moment_blocks[bi];
        CompiledBlock cb;
        cb.size = static_cast<int>(basis.size());
        cb.idx.resize(cb.size, cb.size);
        cb.consts = Eigen::MatrixXd::Zero(cb.size, cb.size);
        for (int x = 0; x < cb.size; ++x) {
            for (int yj = 0; yj < cb.size; ++yj) {
                Monomial prod = sys.registry->mul(basis[x], basis[yj]);
                if (prod.is_one()) {
                    cb.idx(x, yj) = -1;
                    cb.consts(x, yj) = 1.0;
                } else {
                    cb.idx(x, yj) = index.at(prod);
                }
            }
        }
        cb.name = "moment-block[" + std::to_string(bi) + "]";
        blocks.push_back(std::move(cb));
    }
    for (const auto& pb : sys.psd_blocks) {
        CompiledBlock cb;
        cb.polynomial = true;
        cb.size = static_cast<int>(pb.entries.size());
        cb.name = pb.name;
        cb.entries.resize(cb.size);
        for (int x = 0; x < cb.size; ++x) {
            for (int yj = 0; yj < cb.size; ++yj) {
                cb.entries[x].push_back(compile_poly(pb.entries[x][yj], index));
            }
        }
        blocks.push_back(std::move(cb));
    }

    // oracle: returns a violated cut g.y <= h at the current point, if any
    std::vector<double> box_bounds(m);
    for (int k = 0; k < m; ++k) {
        box_bounds[k] = sys.registry->monomial_bound(tracked[k]) * sys.bounding_radius;
    }
    Eigen::VectorXd y(m);
    PseudoExpectation& probe = result.pe;
    auto oracle = [&](Eigen::VectorXd* cut_g, double* cut_h, std::string* which) -> bool {
        // side-constraint oracles first: they carry the deepest cuts when a
        // score query is far from feasibility
        for (const auto& custom : sys.custom_oracles) {
            probe.raw() = y;
            auto maybe = custom(probe);
            if (maybe) {
                cut_g->setZero(m);
                for (const auto& [k, c] : maybe->coeffs) (*cut_g)(k) = c;
                *cut_h = maybe->rhs;
                *which = maybe->source;
                return true;
            }
        }
        // variable-wise box bounds
        for (int k = 0; k < m; ++k) {
            const double bound = box_bounds[k];
            if (y(k) > bound) {
                *cut_g = Eigen::VectorXd::Unit(m, k);
                *cut_h = bound;
                *which = "box";
                return true;
            }
            if (y(k) < -bound) {
                *cut_g = -Eigen::VectorXd::Unit(m, k);
                *cut_h = bound;
                *which = "box";
                return true;
            }
        }
        for (const auto& row : ineq_rows) {
            const double v = eval_row(row, y);
            if (v < -cfg.ineq_tol * row.scale) {
                cut_g->setZero(m);
                for (const auto& [k, c] : row.coeffs) (*cut_g)(k) = -c;
                *cut_h = row.constant;
                *which = row.name;
                return true;
            }
        }
        for (const auto& blk : blocks) {
            Eigen::MatrixXd mat(blk.size, blk.size);
            if (blk.polynomial) {
                for (int x = 0; x < blk.size; ++x)
                    for (int yj = 0; yj < blk.size; ++yj) mat(x, yj) = eval_row(blk.entries[x][yj], y);
                mat = 0.5 * (mat + mat.transpose()).eval();
            } else {
                for (int x = 0; x < blk.size; ++x)
                    for (int yj = 0; yj < blk.size; ++yj)
                        mat(x, yj) = blk.idx(x, yj) >= 0 ? y(blk.idx(x, yj)) : blk.consts(x, yj);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
            const double tol = cfg.psd_tol * (1.0 + std::abs(mat.trace()));
            if (es.eigenvalues().minCoeff() < -tol) {
                const Eigen::VectorXd v = es.eigenvectors().col(0);
                cut_g->setZero(m);
                double h = 0.0;
                if (blk.polynomial) {
                    for (int x = 0; x < blk.size; ++x) {
                        for (int yj = 0; yj < blk.size; ++yj) {
                            const double w = v(x) * v(yj);
                            for (const auto& [k, c] : blk.entries[x][yj].coeffs) (*cut_g)(k) -= w * c;
                            h += w * blk.entries[x][yj].constant;
                        }
                    }
                } else {
                    for (int x = 0; x < blk.size; ++x) {
                        for (int yj = 0; yj < blk.size; ++yj) {
                            const double w = v(x) * v(yj);
                            if (blk.idx(x, yj) >= 0) {
                                (*cut_g)(blk.idx(x, yj)) -= w;
                            } else {
                                h += w * blk.consts(x, yj);
                            }
                        }
                    }
                }
                *cut_h = h;  // cut: -(v' M(y) v) <= v' C v  i.e. v'M(y)v >= 0
                *which = blk.name;
                return true;
            }
        }
        return false;
    };

    // ellipsoid over the equality null space
    double r0 = 1.0 + y0.squaredNorm();
    for (int k = 0; k < m; ++k) r0 += box_bounds[k] * box_bounds[k];
    r0 = std::sqrt(r0);

    Eigen::VectorXd zc = Eigen::VectorXd::Zero(nz);
    Eigen::MatrixXd ell = Eigen::MatrixXd::Identity(nz, nz) * (r0 * r0);
    double log_vol_ratio = 0.0;
    const double stop_log = cfg.volume_log2_ratio * std::log(2.0);

    Eigen::VectorXd cut_g(m);
    double cut_h = 0.0;
    std::string which;
    for (long it = 0; it < cfg.iteration_budget; ++it) {
        y = y0 + nullbasis * zc;
        if (!oracle(&cut_g, &cut_h, &which)) {
            result.status = SolveStatus::Feasible;
            result.pe.raw() = y;
            result.iterations = it;
            result.detail = "ellipsoid interior point";
            // contract: the returned functional passes the clause checker
            auto rep = check_approx_satisfaction(result.pe, sys, cfg.tau, sys.budget_T, cfg.degree);
            if (!rep.ok) result.detail += " (checker flagged " + rep.violations.front().clause + ")";
            return result;
        }
        if (nz == 0) {
            result.status = SolveStatus::Infeasible;
            result.detail = "pinned point violates " + which;
            result.iterations = it;
            return result;
        }
        Eigen::VectorXd gz = nullbasis.transpose() * cut_g;
        const double gn2 = gz.dot(ell * gz);
        if (gn2 <= 1e-300) {
            // cut orthogonal to the remaining search space: constraint cannot move
            result.status = SolveStatus::Infeasible;
            result.detail = "null-space cut on " + which;
            result.iterations = it;
            return result;
        }
        const double gn = std::sqrt(gn2);
        const double viol = cut_g.dot(y) - cut_h;  // > 0 since violated
        double gamma = viol / gn;
        if (gamma >= 1.0) {
            result.status = SolveStatus::Infeasible;
            result.detail = "deep cut excludes ellipsoid (" + which + ")";
            result.iterations = it;
            result.log_volume_ratio = log_vol_ratio / std::log(2.0);
            return result;
        }
        if (gamma < 0.0) gamma = 0.0;
        if (nz == 1) {
            const double radius = std::sqrt(ell(0, 0));
            const double gsign = gz(0) > 0 ? 1.0 : -1.0;
            // feasible half-line: gz * z <= cut_h - g.y0 side; shrink interval
            double lo = zc(0) - radius, hi = zc(0) + radius;
            const double boundary = zc(0) - viol / (gz(0) != 0 ? gz(0) : 1.0);
            if (gsign > 0) hi = boundary; else lo = boundary;
            if (hi <= lo) {
                result.status = SolveStatus::Infeasible;
                result.detail = "interval emptied (" + which + ")";
                result.iterations = it;
                return result;
            }
            const double nr = 0.5 * (hi - lo);
            log_vol_ratio += std::log(nr / radius);
            zc(0) = 0.5 * (hi + lo);
            ell(0, 0) = nr * nr;
        } else {
            const double dn = static_cast<double>(nz);
            const Eigen::VectorXd eg = ell * gz / gn;
            const double tau_step = (1.0 + dn * gamma) / (dn + 1.0);
            const double sigma = 2.0 * (1.0 + dn * gamma) / ((dn + 1.0) * (1.0 + gamma));
            const double delta = dn * dn * (1.0 - gamma * gamma) / (dn * dn - 1.0);
            zc -= tau_step * eg;
            ell = delta * (ell - sigma * eg * eg.transpose());
            ell = 0.5 * (ell + ell.transpose()).eval();
            log_vol_ratio += 0.5 * (dn * std::log(delta) + std::log1p(-sigma));
        }
        if (log_vol_ratio < stop_log) {
            result.status = SolveStatus::Infeasible;
            result.iterations = it;
            result.log_volume_ratio = log_vol_ratio / std::log(2.0);
            result.detail = "volume certificate (last cut " + which + ")";
            return result;
        }
        result.iterations = it;
    }
    result.status = SolveStatus::Budget;
    result.detail = "iteration budget exhausted";
    result.log_volume_ratio = log_vol_ratio / std::log(2.0);
    return result;
}

}  // namespace estlab
