#include "estlab/systems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "estlab/goodness.hpp"

namespace estlab {

namespace {

// unit-Frobenius symmetric basis index pairs for dimension d
std::vector<std::pair<int, int>> sym_pairs(int d) {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a < d; ++a) {
        out.push_back({a, a});
        for (int b = a + 1; b < d; ++b) out.push_back({a, b});
    }
    return out;
}

Polynomial sym_flat_entry(const std::vector<int>& mat_ids, int d, std::pair<int, int> idx) {
    const double w = idx.first == idx.second ? 1.0 : std::sqrt(2.0);
    return Polynomial::mono(Monomial::var(mat_ids[idx.first * d + idx.second]), w);
}

// <E_I, x x^T> as a polynomial in the vector ids
Polynomial sym_flat_quad(const std::vector<int>& vec_ids, std::pair<int, int> idx) {
    if (idx.first == idx.second) {
        return Polynomial::mono(Monomial::var(vec_ids[idx.first], 2), 1.0);
    }
    const int lo = std::min(vec_ids[idx.first], vec_ids[idx.second]);
    const int hi = std::max(vec_ids[idx.first], vec_ids[idx.second]);
    Monomial m;
    m.factors.push_back({lo, 1});
    m.factors.push_back({hi, 1});
    return Polynomial::mono(m, std::sqrt(2.0));
}

Vector least_squares_theta(const Matrix& x, const Vector& y, const std::vector<int>& rows) {
    const int d = static_cast<int>(x.cols());
    Matrix g = Matrix::Zero(d, d);
    Vector c = Vector::Zero(d);
    for (const int i : rows) {
        g += x.row(i).transpose() * x.row(i);
        c += x.row(i).transpose() * y(i);
    }
    return g.ldlt().solve(c);
}

// "exists an SoS proof in v" for the hypercontractivity constraint, encoded
// exactly with Gram auxiliary variables over the pair basis {v_a v_b, a <= b}:
// coefficient-matching equalities tie the Gram entries to the slack quartic
// hc (v'Sigma'v)^2 - (1/n) sum <z_i, v>^4, and the Gram matrix is a PSD block.
struct HyperGramHandles {
    std::vector<int> g;  // dd x dd shared upper-triangle ids
    int dd = 0;
    std::vector<std::pair<int, int>> pairs;
};

HyperGramHandles add_hyper_gram_constraint(ConstraintSystem& sys, const std::vector<int>& sigma,
                                           int d, const std::vector<std::vector<int>>& zvars,
                                           double hc, double gbound, const std::string& name) {
    auto& reg = *sys.registry;
    const int n = static_cast<int>(zvars.size());
    HyperGramHandles out;
    out.pairs = sym_pairs(d);
    out.dd = static_cast<int>(out.pairs.size());
    out.g = reg.add_symmetric_matrix(name, out.dd, gbound);

    std::map<std::vector<int>, Polynomial> rows;  // quartic monomial -> lhs - rhs
    auto key_of = [](int a, int b, int c, int e) {
        std::vector<int> k{a, b, c, e};
        std::sort(k.begin(), k.end());
        return k;
    };
    for (int i = 0; i < out.dd; ++i) {
        for (int j = 0; j < out.dd; ++j) {
            const auto key = key_of(out.pairs[i].first, out.pairs[i].second, out.pairs[j].first,
                                    out.pairs[j].second);
            rows[key].add(Monomial::var(out.g[i * out.dd + j]), 1.0);
        }
    }
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            for (int c = 0; c < d; ++c) {
                for (int e = 0; e < d; ++e) {
                    const auto key = key_of(a, b, c, e);
                    rows[key].add(
                        reg.mul(Monomial::var(sigma[a * d + b]), Monomial::var(sigma[c * d + e])),
                        -hc);
                    for (int i = 0; i < n; ++i) {
                        const Monomial quart = reg.mul(
                            reg.mul(Monomial::var(zvars[i][a]), Monomial::var(zvars[i][b])),
                            reg.mul(Monomial::var(zvars[i][c]), Monomial::var(zvars[i][e])));
                        rows[key].add(quart, 1.0 / n);
                    }
                }
            }
        }
    }
    for (auto& [key, poly] : rows) sys.equalities.push_back(poly);

    PsdBlockExpr blk;
    blk.name = name;
    blk.entries.resize(out.dd);
    for (int i = 0; i < out.dd; ++i) {
        for (int j = 0; j < out.dd; ++j) {
            blk.entries[i].push_back(Polynomial::var(out.g[i * out.dd + j]));
        }
    }
    sys.psd_blocks.push_back(blk);
    return out;
}

// writes a PSD Gram value into a candidate point; false when no completion
bool fill_hyper_gram(Eigen::VectorXd& point, const HyperGramHandles& hg, const Matrix& second,
                     const Matrix& centered_rows, double hc) {
    const HyperGram best = hyper_gram_completion(second, centered_rows, hc);
    if (best.margin < -1e-10 * (1.0 + std::abs(best.gram_unitf.trace()))) return false;
    // unit-Frobenius basis -> plain pair basis: G_plain = W G W
    Vector wts(hg.dd);
    for (int i = 0; i < hg.dd; ++i) {
        wts(i) = hg.pairs[i].first == hg.pairs[i].second ? 1.0 : std::sqrt(2.0);
    }
    for (int i = 0; i < hg.dd; ++i) {
        for (int j = 0; j < hg.dd; ++j) {
            point(hg.g[i * hg.dd + j]) = wts(i) * wts(j) * best.gram_unitf(i, j);
        }
    }
    return true;
}

}  // namespace

Vector extract_vector(const PseudoExpectation& pe, const std::vector<int>& ids) {
    Vector out(static_cast<int>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) out(static_cast<int>(i)) = pe.value(Monomial::var(ids[i]));
    return out;
}

Matrix extract_matrix(const PseudoExpectation& pe, const std::vector<int>& ids, int dim) {
    Matrix out(dim, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) out(a, b) = pe.value(Monomial::var(ids[a * dim + b]));
    return out;
}

BuiltSystem build_regression_system(const LabeledDataset& data, const RegressionSystemConfig& cfg) {
    const int n = data.n();
    const int d = data.d();
    const int T = cfg.budget_T >= 0
                      ? cfg.budget_T
                      : n - static_cast<int>(std::ceil((1.0 - cfg.eta) * n));
    const double eta_eff = cfg.eta > 0 ? cfg.eta : std::max(1.0, static_cast<double>(T)) / n;
    const double noise2 = cfg.noise_second > 0 ? cfg.noise_second : 1.0 + 2.0 * cfg.eta;
    const double hc = cfg.hyper_constant > 0
                          ? cfg.hyper_constant
                          : 3.0 + eta_eff * log1e(eta_eff) * log1e(eta_eff);

    const double xmax = std::max(1.0, data.x.rowwise().norm().maxCoeff());
    const double ymax = std::max(1.0, data.y.cwiseAbs().maxCoeff());
    const double btheta = cfg.theta_bound > 0 ? cfg.theta_bound : 4.0 * (ymax / std::max(0.1, xmax) + ymax);
    const double brho = 2.0 * (ymax + btheta * xmax) + 4.0;

    BuiltSystem built;
    ConstraintSystem& sys = built.system;
    auto& reg = *sys.registry;
    sys.bounding_radius = 1.0;
    sys.n_samples = n;
    sys.budget_T = T;

    std::vector<int> w(n);
    std::vector<std::vector<int>> xp(n);
    std::vector<int> rho(n);
    for (int i = 0; i < n; ++i) {
        w[i] = reg.add_scalar("w[" + std::to_string(i) + "]", 1.0, true);
        xp[i] = reg.add_vector("x'[" + std::to_string(i) + "]", d, 2.0 * xmax);
        rho[i] = reg.add_scalar("rho[" + std::to_string(i) + "]", brho);
    }
    std::vector<int> theta = reg.add_vector("theta'", d, btheta);
    std::vector<int> sigma = reg.add_symmetric_matrix("Sigma'", d, 4.0 * xmax * xmax + 1.0);
    std::vector<int> q;
    int bvar = -1, dvar = -1;
    if (cfg.with_inverse) q = reg.add_symmetric_matrix("Q", d, cfg.q_bound);
    if (cfg.with_sqrt_witness) {
        if (d != 1) throw std::invalid_argument("square-root witnesses are built for d = 1 only");
        bvar = reg.add_scalar("B", 2.0 * xmax + 1.0);
        dvar = reg.add_scalar("D", std::sqrt(cfg.q_bound) + 1.0);
    }
    sys.w_vars = w;

    built.handles.theta = theta;
    built.handles.sigma = sigma;
    built.handles.q = q;
    built.handles.dim = d;

    // moment blocks
    for (int i = 0; i < n; ++i) {
        std::vector<Monomial> a_block{Monomial::one(), Monomial::var(w[i]), Monomial::var(rho[i])};
        for (int c = 0; c < d; ++c) a_block.push_back(Monomial::var(xp[i][c]));
        for (int c = 0; c < d; ++c) a_block.push_back(Monomial::var(theta[c]));
        a_block.push_back(reg.mul(Monomial::var(w[i]), Monomial::var(rho[i])));
        for (int c = 0; c < d; ++c)
            a_block.push_back(reg.mul(Monomial::var(w[i]), Monomial::var(xp[i][c])));
        for (int c = 0; c < d; ++c)
            a_block.push_back(reg.mul(Monomial::var(w[i]), Monomial::var(theta[c])));
        sys.moment_blocks.push_back(a_block);

        std::vector<Monomial> b_block{Monomial::one(), Monomial::var(rho[i], 2)};
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b)
                b_block.push_back(reg.mul(Monomial::var(xp[i][a]), Monomial::var(xp[i][b])));
        for (int a = 0; a < d; ++a)
            b_block.push_back(reg.mul(Monomial::var(xp[i][a]), Monomial::var(rho[i])));
        for (int a = 0; a < d; ++a) b_block.push_back(Monomial::var(theta[a]));
        sys.moment_blocks.push_back(b_block);
    }
    {
        std::vector<int> globals = theta;
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) globals.push_back(sigma[a * d + b]);
        for (int a = 0; a < d && cfg.with_inverse; ++a)
            for (int b = a; b < d; ++b) globals.push_back(q[a * d + b]);
        if (bvar >= 0) {
            globals.push_back(bvar);
            globals.push_back(dvar);
        }
        sys.moment_blocks.push_back(enumerate_basis(reg, globals, 2));
    }

    // data-matching in residual form, gradient condition, Sigma' definition
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            Polynomial match;
            match.add(reg.mul(Monomial::var(w[i]), Monomial::var(xp[i][a])), 1.0);
            match.add(Monomial::var(w[i]), -data.x(i, a));
            sys.equalities.push_back(match);
        }
        Polynomial matchy;
        matchy.add(reg.mul(Monomial::var(w[i]), Monomial::var(rho[i])), 1.0);
        for (int a = 0; a < d; ++a) {
            matchy.add(reg.mul(Monomial::var(w[i]), Monomial::var(theta[a])), data.x(i, a));
        }
        matchy.add(Monomial::var(w[i]), -data.y(i));
        sys.equalities.push_back(matchy);
    }
    for (int a = 0; a < d; ++a) {
        Polynomial grad;
        for (int i = 0; i < n; ++i)
            grad.add(reg.mul(Monomial::var(rho[i]), Monomial::var(xp[i][a])), 1.0 / n);
        sys.equalities.push_back(grad);
    }
    for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) {
            Polynomial def;
            def.add(Monomial::var(sigma[a * d + b]), 1.0);
            for (int i = 0; i < n; ++i)
                def.add(reg.mul(Monomial::var(xp[i][a]), Monomial::var(xp[i][b])), -1.0 / n);
            sys.equalities.push_back(def);
        }
    }
    if (cfg.with_inverse) {
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                Polynomial qs, sq;
                for (int c = 0; c < d; ++c) {
                    qs.add(reg.mul(Monomial::var(q[a * d + c]), Monomial::var(sigma[c * d + b])), 1.0);
                    sq.add(reg.mul(Monomial::var(sigma[a * d + c]), Monomial::var(q[c * d + b])), 1.0);
                }
                const double delta = a == b ? 1.0 : 0.0;
                qs.add(Monomial::one(), -delta);
                sq.add(Monomial::one(), -delta);
                sys.equalities.push_back(qs);
                sys.equalities.push_back(sq);
            }
        }
        // Q Sigma' Q = Q
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b) {
                Polynomial qsq;
                for (int c = 0; c < d; ++c) {
                    for (int e = 0; e < d; ++e) {
                        Monomial m = reg.mul(Monomial::var(q[a * d + c]), Monomial::var(sigma[c * d + e]));
                        qsq.add(reg.mul(m, Monomial::var(q[e * d + b])), 1.0);
                    }
                }
                qsq.add(Monomial::var(q[a * d + b]), -1.0);
                sys.equalities.push_back(qsq);
            }
        }
    }
    if (bvar >= 0) {
        Polynomial bb;
        bb.add(Monomial::var(bvar, 2), 1.0);
        bb.add(Monomial::var(sigma[0]), -1.0);
        sys.equalities.push_back(bb);
        Polynomial ddp;
        ddp.add(Monomial::var(dvar, 2), 1.0);
        ddp.add(Monomial::var(q[0]), -1.0);
        sys.equalities.push_back(ddp);
        Polynomial bd;
        bd.add(reg.mul(Monomial::var(bvar), Monomial::var(dvar)), 1.0);
        bd.add(Monomial::one(), -1.0);
        sys.equalities.push_back(bd);
    }

    // counting, noise bounds
    {
        Polynomial counting(static_cast<double>(-(n - T)));
        for (int i = 0; i < n; ++i) counting.add(Monomial::var(w[i]), 1.0);
        sys.inequalities.push_back(counting);
    }
    {
        Polynomial second(noise2);
        for (int i = 0; i < n; ++i) second.add(Monomial::var(rho[i], 2), -1.0 / n);
        sys.inequalities.push_back(second);
        Polynomial fourth(cfg.noise_fourth);
        for (int i = 0; i < n; ++i) fourth.add(Monomial::var(rho[i], 4), -1.0 / n);
        sys.inequalities.push_back(fourth);
    }

    // certifiable hypercontractivity via Gram auxiliary variables
    std::vector<std::vector<int>> zvars;
    for (int i = 0; i < n; ++i) zvars.push_back(xp[i]);
    const double smax = 4.0 * xmax * xmax + 1.0;
    const double gbound = 8.0 * (hc * smax * smax + std::pow(2.0 * xmax, 4) + 1.0);
    const HyperGramHandles hyper = add_hyper_gram_constraint(sys, sigma, d, zvars, hc, gbound, "G");

    // candidate witnesses: least-squares point masses over trimmed subsets,
    // with one freed slot absorbing the gradient when theta' is pulled off
    // the subset least-squares solution
    {
        const int nv = reg.count();
        std::vector<Vector> anchors = cfg.theta_anchors;
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        anchors.push_back(least_squares_theta(data.x, data.y, all));
        const int drops = std::min(cfg.max_candidate_drops >= 0 ? std::min(cfg.max_candidate_drops, T)
                                                                : T,
                                   n - 1);

        auto push_candidate = [&](const std::vector<int>& kept, const Vector& th) {
            if (th.norm() > btheta) return;
            std::vector<bool> in(n, false);
            for (const int i : kept) in[i] = true;

            Eigen::VectorXd point = Eigen::VectorXd::Zero(nv);
            Vector grad = Vector::Zero(d);
            Matrix second = Matrix::Zero(d, d);
            int absorb_slot = -1;
            for (int i = 0; i < n; ++i) {
                if (in[i]) {
                    point(w[i]) = 1.0;
                    for (int a = 0; a < d; ++a) point(xp[i][a]) = data.x(i, a);
                    const double r = data.y(i) - data.x.row(i).dot(th);
                    point(rho[i]) = r;
                    grad += r * data.x.row(i).transpose();
                    second += data.x.row(i).transpose() * data.x.row(i);
                } else if (absorb_slot < 0) {
                    absorb_slot = i;  // freed rows default to x' = 0, rho = 0
                }
            }
            if (grad.norm() > 1e-10) {
                if (absorb_slot < 0) return;  // no slot, gradient must vanish
                const double b = std::sqrt(grad.norm());
                const Vector a_vec = -grad / b;
                if (a_vec.norm() > 2.0 * xmax || std::abs(b) > brho) return;
                for (int a = 0; a < d; ++a) point(xp[absorb_slot][a]) = a_vec(a);
                point(rho[absorb_slot]) = b;
                second += a_vec * a_vec.transpose();
            }
            second /= n;
            for (int a = 0; a < d; ++a) point(theta[a]) = th(a);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) point(sigma[a * d + b]) = second(a, b);
            if (cfg.with_inverse) {
                Eigen::FullPivLU<Matrix> lu(second);
                if (!lu.isInvertible()) return;
                Matrix inv = lu.inverse();
                if (inv.cwiseAbs().maxCoeff() > cfg.q_bound) return;
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) point(q[a * d + b]) = inv(a, b);
            }
            if (bvar >= 0) {
                point(bvar) = std::sqrt(std::max(second(0, 0), 0.0));
                point(dvar) = point(bvar) > 1e-12 ? 1.0 / point(bvar) : 0.0;
            }
            Matrix zrows(n, d);
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < d; ++a) zrows(i, a) = point(xp[i][a]);
            if (!fill_hyper_gram(point, hyper, second, zrows, hc)) return;
            sys.candidates.push_back({{point}, {1.0}});
        };

        auto subset_variants = [&](const std::vector<int>& s, int drop) {
            const Vector th = least_squares_theta(data.x, data.y, s);
            push_candidate(s, th);
            // pull theta' toward each anchor while noise bounds allow it;
            // a freed slot absorbs the induced gradient
            if (drop < 1) return;
            for (const Vector& anchor : anchors) {
                Vector dir = anchor - th;
                if (dir.norm() <= 1e-12) continue;
                auto feas = [&](double lam) {
                    const Vector t = th + lam * dir;
                    double s2 = 0, s4 = 0;
                    for (const int i : s) {
                        const double r = data.y(i) - data.x.row(i).dot(t);
                        s2 += r * r;
                        s4 += r * r * r * r;
                    }
                    return s2 / n <= noise2 * (1 - 1e-9) &&
                           s4 / n <= cfg.noise_fourth * (1 - 1e-9);
                };
                if (feas(1.0)) {
                    push_candidate(s, anchor);
                } else if (feas(0.0)) {
                    double lo = 0.0, hi = 1.0;
                    for (int step = 0; step < 40; ++step) {
                        const double mid = 0.5 * (lo + hi);
                        (feas(mid) ? lo : hi) = mid;
                    }
                    push_candidate(s, th + lo * dir);
                }
            }
        };

        if (n <= 12 && drops <= 2) {
            // small budgets: every subset of the allowed size
            for (int drop = 0; drop <= drops; ++drop) {
                std::vector<int> mask(n, 0);
                std::fill(mask.begin(), mask.begin() + drop, 1);
                std::sort(mask.begin(), mask.end());
                do {
                    std::vector<int> s;
                    for (int i = 0; i < n; ++i) {
                        if (!mask[i]) s.push_back(i);
                    }
                    subset_variants(s, drop);
                } while (std::next_permutation(mask.begin(), mask.end()));
            }
        } else {
            for (const Vector& anchor : anchors) {
                std::vector<std::pair<double, int>> ranked;
                for (int i = 0; i < n; ++i) {
                    const double r = data.y(i) - data.x.row(i).dot(anchor);
                    ranked.push_back({std::abs(r), i});
                }
                std::sort(ranked.begin(), ranked.end());
                std::vector<int> kept;
                for (const auto& [r, i] : ranked) kept.push_back(i);
                for (int drop = 0; drop <= drops; ++drop) {
                    std::vector<int> s(kept.begin(), kept.end() - drop);
                    std::sort(s.begin(), s.end());
                    subset_variants(s, drop);
                }
            }
            // leverage-ranked trims
            std::vector<std::pair<double, int>> by_norm;
            for (int i = 0; i < n; ++i) by_norm.push_back({data.x.row(i).norm(), i});
            std::sort(by_norm.begin(), by_norm.end());
            for (int drop = 1; drop <= drops; ++drop) {
                std::vector<int> s;
                for (int i = 0; i < n - drop; ++i) s.push_back(by_norm[i].second);
                std::sort(s.begin(), s.end());
                subset_variants(s, drop);
            }
        }
        // all-free synthetic witnesses when the whole sample may be replaced:
        // alternating +-c designs at several scales, exact parameter match
        if (T >= n) {
            for (const Vector& th : anchors) {
                if (th.size() != d || th.norm() > btheta) continue;
                for (const double c : {1.0, 0.5, 0.25}) {
                    Eigen::VectorXd point = Eigen::VectorXd::Zero(nv);
                    Matrix cov = Matrix::Zero(d, d);
                    const int pairs2 = n - (n % 2);
                    for (int i = 0; i < pairs2; ++i) {
                        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
                        const int coord = (i / 2) % d;
                        point(xp[i][coord]) = sign * c;
                        cov(coord, coord) += c * c;
                    }
                    cov /= n;
                    for (int a = 0; a < d; ++a) point(theta[a]) = th(a);
                    for (int a = 0; a < d; ++a)
                        for (int b2 = 0; b2 < d; ++b2) point(sigma[a * d + b2]) = cov(a, b2);
                    Matrix zrows(n, d);
                    for (int i = 0; i < n; ++i)
                        for (int a = 0; a < d; ++a) zrows(i, a) = point(xp[i][a]);
                    if (!fill_hyper_gram(point, hyper, cov, zrows, hc)) continue;
                    if (cfg.with_inverse) {
                        Eigen::FullPivLU<Matrix> lu(cov);
                        if (!lu.isInvertible()) continue;
                        Matrix inv = lu.inverse();
                        if (inv.cwiseAbs().maxCoeff() > cfg.q_bound) continue;
                        for (int a = 0; a < d; ++a)
                            for (int b2 = 0; b2 < d; ++b2) point(q[a * d + b2]) = inv(a, b2);
                        if (bvar >= 0) {
                            point(bvar) = std::sqrt(std::max(cov(0, 0), 0.0));
                            point(dvar) = point(bvar) > 1e-12 ? 1.0 / point(bvar) : 0.0;
                        }
                    }
                    sys.candidates.push_back({{point}, {1.0}});
                }
            }
        }
    }

    return built;
}

BuiltSystem build_mean_system(const PointDataset& points, const MeanSystemConfig& cfg) {
    const int n = points.n();
    const int d = points.d();
    const int T = cfg.budget_T >= 0 ? cfg.budget_T
                                    : n - static_cast<int>(std::ceil((1.0 - cfg.eta) * n));
    const double eta_eff = cfg.eta > 0 ? cfg.eta : std::max(1.0, static_cast<double>(T)) / n;
    const double hc = cfg.hyper_constant > 0
                          ? cfg.hyper_constant
                          : 3.0 + eta_eff * log1e(eta_eff) * log1e(eta_eff);
    const double xmax = std::max(1.0, points.x.rowwise().norm().maxCoeff());
    const double bmu = cfg.mu_bound > 0 ? cfg.mu_bound : 2.0 * xmax;
    const double bdelta = 4.0 * xmax;

    BuiltSystem built;
    ConstraintSystem& sys = built.system;
    auto& reg = *sys.registry;
    sys.bounding_radius = 1.0;
    sys.n_samples = n;
    sys.budget_T = T;

    std::vector<int> w(n);
    std::vector<std::vector<int>> delta(n);
    for (int i = 0; i < n; ++i) {
        w[i] = reg.add_scalar("w[" + std::to_string(i) + "]", 1.0, true);
        delta[i] = reg.add_vector("delta[" + std::to_string(i) + "]", d, bdelta);
    }
    std::vector<int> mu = reg.add_vector("mu'", d, bmu);
    std::vector<int> sigma = reg.add_symmetric_matrix("Sigma'", d, 4.0 * xmax * xmax + 1.0);
    sys.w_vars = w;
    built.handles.mu = mu;
    built.handles.sigma = sigma;
    built.handles.dim = d;

    for (int i = 0; i < n; ++i) {
        std::vector<Monomial> a_block{Monomial::one(), Monomial::var(w[i])};
        for (int a = 0; a < d; ++a) a_block.push_back(Monomial::var(delta[i][a]));
        for (int a = 0; a < d; ++a) a_block.push_back(Monomial::var(mu[a]));
        for (int a = 0; a < d; ++a)
            a_block.push_back(reg.mul(Monomial::var(w[i]), Monomial::var(delta[i][a])));
        for (int a = 0; a < d; ++a)
            a_block.push_back(reg.mul(Monomial::var(w[i]), Monomial::var(mu[a])));
        sys.moment_blocks.push_back(a_block);

        std::vector<Monomial> b_block{Monomial::one()};
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b)
                b_block.push_back(reg.mul(Monomial::var(delta[i][a]), Monomial::var(delta[i][b])));
        for (int a = 0; a < d; ++a) b_block.push_back(Monomial::var(mu[a]));
        sys.moment_blocks.push_back(b_block);
    }
    {
        std::vector<int> globals = mu;
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) globals.push_back(sigma[a * d + b]);
        sys.moment_blocks.push_back(enumerate_basis(reg, globals, 2));
    }

    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            Polynomial match;
            match.add(reg.mul(Monomial::var(w[i]), Monomial::var(delta[i][a])), 1.0);
            match.add(reg.mul(Monomial::var(w[i]), Monomial::var(mu[a])), 1.0);
            match.add(Monomial::var(w[i]), -points.x(i, a));
            sys.equalities.push_back(match);
        }
    }
    for (int a = 0; a < d; ++a) {
        Polynomial centered;
        for (int i = 0; i < n; ++i) centered.add(Monomial::var(delta[i][a]), 1.0 / n);
        sys.equalities.push_back(centered);
    }
    for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) {
            Polynomial def;
            def.add(Monomial::var(sigma[a * d + b]), 1.0);
            for (int i = 0; i < n; ++i)
                def.add(reg.mul(Monomial::var(delta[i][a]), Monomial::var(delta[i][b])), -1.0 / n);
            sys.equalities.push_back(def);
        }
    }
    {
        Polynomial counting(static_cast<double>(-(n - T)));
        for (int i = 0; i < n; ++i) counting.add(Monomial::var(w[i]), 1.0);
        sys.inequalities.push_back(counting);
    }
    std::vector<std::vector<int>> zvars;
    for (int i = 0; i < n; ++i) zvars.push_back(delta[i]);
    const double smax = 4.0 * xmax * xmax + 1.0;
    const double gbound = 8.0 * (hc * smax * smax + std::pow(bdelta, 4) + 1.0);
    const HyperGramHandles hyper = add_hyper_gram_constraint(sys, sigma, d, zvars, hc, gbound, "G");

    // candidates: subset means with freed slots either collapsed onto the
    // candidate mean or spread in alternating pairs to inflate Sigma'
    {
        const int nv = reg.count();
        std::vector<Vector> anchors = cfg.mu_anchors;
        anchors.push_back(points.x.colwise().mean().transpose());
        const int drops = std::min(T, n - 1);

        auto push_candidate = [&](const std::vector<int>& kept, const Vector& m, double spread) {
            if (m.norm() > bmu) return;
            std::vector<bool> in(n, false);
            for (const int i : kept) in[i] = true;
            Eigen::VectorXd point = Eigen::VectorXd::Zero(nv);
            Matrix cov = Matrix::Zero(d, d);
            Vector dsum = Vector::Zero(d);
            std::vector<int> freed;
            for (int i = 0; i < n; ++i) {
                if (in[i]) {
                    point(w[i]) = 1.0;
                    Vector dv = points.x.row(i).transpose() - m;
                    for (int a = 0; a < d; ++a) point(delta[i][a]) = dv(a);
                    cov += dv * dv.transpose();
                    dsum += dv;
                } else {
                    freed.push_back(i);
                }
            }
            // freed slots: absorb the pinned-delta imbalance, then add
            // alternating +-spread pairs (their own sum stays zero)
            if (freed.empty()) {
                if (dsum.norm() > 1e-9) return;  // mean must match exactly
            } else {
                const int j0 = freed[0];
                const Vector absorb = -dsum;
                if (absorb.norm() > bdelta) return;
                for (int a = 0; a < d; ++a) point(delta[j0][a]) = absorb(a);
                cov += absorb * absorb.transpose();
                for (std::size_t k = 1; k + 1 < freed.size(); k += 2) {
                    const int ja = freed[k], jb = freed[k + 1];
                    point(delta[ja][0]) = spread;
                    point(delta[jb][0]) = -spread;
                    cov(0, 0) += 2.0 * spread * spread;
                }
            }
            cov /= n;
            for (int a = 0; a < d; ++a) point(mu[a]) = m(a);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) point(sigma[a * d + b]) = cov(a, b);
            Matrix zrows(n, d);
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < d; ++a) zrows(i, a) = point(delta[i][a]);
            if (!fill_hyper_gram(point, hyper, cov, zrows, hc)) return;
            sys.candidates.push_back({{point}, {1.0}});
        };

        auto subset_variants = [&](const std::vector<int>& kept, int drop) {
            Vector m = Vector::Zero(d);
            for (const int i : kept) m += points.x.row(i).transpose();
            m /= static_cast<double>(kept.size());
            push_candidate(kept, m, 0.0);
            if (drop >= 1) {
                for (const Vector& anchor : anchors) {
                    // pull mu' toward the anchor, the first freed slot absorbs
                    push_candidate(kept, anchor, 0.0);
                    for (int step = 1; step <= 2; ++step) {
                        push_candidate(kept, m + (anchor - m) * (step / 3.0), 0.0);
                    }
                }
            }
            if (cfg.spread_candidates && drop >= 3) {
                for (const double s : {0.5 * xmax, xmax}) push_candidate(kept, m, s);
            }
        };
        if (n <= 12 && drops <= 2) {
            for (int drop = 0; drop <= drops; ++drop) {
                std::vector<int> mask(n, 0);
                std::fill(mask.begin(), mask.begin() + drop, 1);
                std::sort(mask.begin(), mask.end());
                do {
                    std::vector<int> kept;
                    for (int i = 0; i < n; ++i) {
                        if (!mask[i]) kept.push_back(i);
                    }
                    subset_variants(kept, drop);
                } while (std::next_permutation(mask.begin(), mask.end()));
            }
        } else {
            for (const Vector& anchor : anchors) {
                std::vector<std::pair<double, int>> ranked;
                for (int i = 0; i < n; ++i)
                    ranked.push_back({(points.x.row(i).transpose() - anchor).norm(), i});
                std::sort(ranked.begin(), ranked.end());
                for (int drop = 0; drop <= drops; ++drop) {
                    std::vector<int> kept;
                    for (int i = 0; i < n - drop; ++i) kept.push_back(ranked[i].second);
                    std::sort(kept.begin(), kept.end());
                    subset_variants(kept, drop);
                }
            }
        }
        if (T >= n) {
            // all-free witnesses reproducing in-domain parameters exactly
            for (const Vector& m : anchors) {
                if (m.size() != d || m.norm() > bmu) continue;
                for (const double c : {1.0, 0.5, 2.0}) {
                    Eigen::VectorXd point = Eigen::VectorXd::Zero(nv);
                    Matrix cov = Matrix::Zero(d, d);
                    const int pairs2 = n - (n % 2);
                    for (int i = 0; i < pairs2; ++i) {
                        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
                        const int coord = (i / 2) % d;
                        point(delta[i][coord]) = sign * c;
                        cov(coord, coord) += c * c;
                    }
                    cov /= n;
                    for (int a = 0; a < d; ++a) point(mu[a]) = m(a);
                    for (int a = 0; a < d; ++a)
                        for (int b2 = 0; b2 < d; ++b2) point(sigma[a * d + b2]) = cov(a, b2);
                    Matrix zrows(n, d);
                    for (int i = 0; i < n; ++i)
                        for (int a = 0; a < d; ++a) zrows(i, a) = point(delta[i][a]);
                    if (fill_hyper_gram(point, hyper, cov, zrows, hc)) {
                        sys.candidates.push_back({{point}, {1.0}});
                    }
                }
            }
        }
    }

    return built;
}

BuiltSystem build_cov_system(const PointDataset& points, const CovSystemConfig& cfg) {
    const int n = points.n();
    const int d = points.d();
    const int T = cfg.budget_T >= 0 ? cfg.budget_T
                                    : n - static_cast<int>(std::ceil((1.0 - cfg.eta) * n));
    const double eta_eff = cfg.eta > 0 ? cfg.eta : std::max(1.0, static_cast<double>(T)) / n;
    const double hc = cfg.hyper_constant > 0
                          ? cfg.hyper_constant
                          : 3.0 + eta_eff * log1e(eta_eff) * log1e(eta_eff);
    const double fc = cfg.frobenius_constant > 0
                          ? cfg.frobenius_constant
                          : 2.0 + eta_eff * log1e(eta_eff) * log1e(eta_eff);
    const double xmax = std::max(1.0, points.x.rowwise().norm().maxCoeff());

    BuiltSystem built;
    ConstraintSystem& sys = built.system;
    auto& reg = *sys.registry;
    sys.bounding_radius = 1.0;
    sys.n_samples = n;
    sys.budget_T = T;

    std::vector<int> w(n);
    std::vector<std::vector<int>> xp(n);
    for (int i = 0; i < n; ++i) {
        w[i] = reg.add_scalar("w[" + std::to_string(i) + "]", 1.0, true);
        xp[i] = reg.add_vector("x'[" + std::to_string(i) + "]", d, 2.0 * xmax);
    }
    std::vector<int> sigma = reg.add_symmetric_matrix("Sigma'", d, 4.0 * xmax * xmax + 1.0);
    sys.w_vars = w;
    built.handles.sigma = sigma;
    built.handles.dim = d;

    for (int i = 0; i < n; ++i) {
        std::vector<Monomial> a_block{Monomial::one(), Monomial::var(w[i])};
        for (int a = 0; a < d; ++a) a_block.push_back(Monomial::var(xp[i][a]));
        for (int a = 0; a < d; ++a)
            a_block.push_back(reg.mul(Monomial::var(w[i]), Monomial::var(xp[i][a])));
        sys.moment_blocks.push_back(a_block);

        std::vector<Monomial> b_block{Monomial::one()};
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b)
                b_block.push_back(reg.mul(Monomial::var(xp[i][a]), Monomial::var(xp[i][b])));
        if (cfg.frobenius) {
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) b_block.push_back(Monomial::var(sigma[a * d + b]));
        }
        sys.moment_blocks.push_back(b_block);
    }
    {
        std::vector<int> globals;
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) globals.push_back(sigma[a * d + b]);
        sys.moment_blocks.push_back(enumerate_basis(reg, globals, 2));
    }

    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            Polynomial match;
            match.add(reg.mul(Monomial::var(w[i]), Monomial::var(xp[i][a])), 1.0);
            match.add(Monomial::var(w[i]), -points.x(i, a));
            sys.equalities.push_back(match);
        }
    }
    for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) {
            Polynomial def;
            def.add(Monomial::var(sigma[a * d + b]), 1.0);
            for (int i = 0; i < n; ++i)
                def.add(reg.mul(Monomial::var(xp[i][a]), Monomial::var(xp[i][b])), -1.0 / n);
            sys.equalities.push_back(def);
        }
    }
    {
        Polynomial counting(static_cast<double>(-(n - T)));
        for (int i = 0; i < n; ++i) counting.add(Monomial::var(w[i]), 1.0);
        sys.inequalities.push_back(counting);
    }

    const auto pairs = sym_pairs(d);
    std::vector<std::vector<int>> zvars;
    for (int i = 0; i < n; ++i) zvars.push_back(xp[i]);
    const double smax = 4.0 * xmax * xmax + 1.0;
    HyperGramHandles hyper;
    if (!cfg.frobenius) {
        const double gbound = 8.0 * (hc * smax * smax + std::pow(2.0 * xmax, 4) + 1.0);
        hyper = add_hyper_gram_constraint(sys, sigma, d, zvars, hc, gbound, "G");
    } else {
        // (2 + O(eta log^2)) I - (1/n) sum vec(x x' - Sigma') vec(x x' - Sigma')'
        PsdBlockExpr blk;
        blk.name = "frobenius-concentration";
        blk.entries.resize(pairs.size());
        for (std::size_t ii = 0; ii < pairs.size(); ++ii) {
            for (std::size_t jj = 0; jj < pairs.size(); ++jj) {
                Polynomial e(ii == jj ? fc : 0.0);
                for (int i = 0; i < n; ++i) {
                    Polynomial di = sym_flat_quad(xp[i], pairs[ii]) - sym_flat_entry(sigma, d, pairs[ii]);
                    Polynomial dj = sym_flat_quad(xp[i], pairs[jj]) - sym_flat_entry(sigma, d, pairs[jj]);
                    e = e - di.mul(dj, reg) * (1.0 / n);
                }
                blk.entries[ii].push_back(e);
            }
        }
        sys.psd_blocks.push_back(blk);
    }

    // candidates: norm-trimmed subsets
    {
        const int nv = reg.count();
        std::vector<std::pair<double, int>> ranked;
        for (int i = 0; i < n; ++i) ranked.push_back({points.x.row(i).norm(), i});
        std::sort(ranked.begin(), ranked.end());
        for (int drop = 0; drop <= T; ++drop) {
            Eigen::VectorXd point = Eigen::VectorXd::Zero(nv);
            Matrix second = Matrix::Zero(d, d);
            for (int i = 0; i < n - drop; ++i) {
                const int row = ranked[i].second;
                point(w[row]) = 1.0;
                for (int a = 0; a < d; ++a) point(xp[row][a]) = points.x(row, a);
                second += points.x.row(row).transpose() * points.x.row(row);
            }
            second /= n;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) point(sigma[a * d + b]) = second(a, b);
            if (!cfg.frobenius) {
                Matrix zrows(n, d);
                for (int i = 0; i < n; ++i)
                    for (int a = 0; a < d; ++a) zrows(i, a) = point(xp[i][a]);
                if (!fill_hyper_gram(point, hyper, second, zrows, hc)) continue;
            }
            sys.candidates.push_back({{point}, {1.0}});
        }
    }

    return built;
}

}  // namespace estlab
