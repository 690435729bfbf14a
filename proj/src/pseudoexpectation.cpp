#include "estlab/pseudoexpectation.hpp"

#include <algorithm>
#include <cmath>

namespace estlab {

PseudoExpectation::PseudoExpectation(std::shared_ptr<const VariableRegistry> reg, int degree,
                                     std::vector<Monomial> tracked)
    : reg_(std::move(reg)), degree_(degree), tracked_(std::move(tracked)) {
    std::sort(tracked_.begin(), tracked_.end());
    tracked_.erase(std::remove_if(tracked_.begin(), tracked_.end(),
                                  [](const Monomial& m) { return m.is_one(); }),
                   tracked_.end());
    tracked_.erase(std::unique(tracked_.begin(), tracked_.end()), tracked_.end());
    for (std::size_t i = 0; i < tracked_.size(); ++i) index_[tracked_[i]] = static_cast<int>(i);
    values_ = Eigen::VectorXd::Zero(static_cast<int>(tracked_.size()));
}

bool PseudoExpectation::knows(const Monomial& m) const {
    return m.is_one() || index_.count(m) > 0;
}

int PseudoExpectation::index_of(const Monomial& m) const {
    if (m.is_one()) return -1;
    auto it = index_.find(m);
    if (it == index_.end()) throw std::out_of_range("monomial outside the tracked set");
    return it->second;
}

double PseudoExpectation::value(const Monomial& m) const {
    if (m.is_one()) return 1.0;
    return values_(index_of(m));
}

void PseudoExpectation::set_value(const Monomial& m, double v) {
    if (m.is_one()) {
        if (std::abs(v - 1.0) > 1e-12) throw std::invalid_argument("pE[1] must equal 1");
        return;
    }
    values_(index_of(m)) = v;
}

double PseudoExpectation::operator()(const Polynomial& p) const {
    double total = 0.0;
    for (const auto& [m, c] : p.terms()) total += c * value(m);
    return total;
}

Eigen::MatrixXd PseudoExpectation::moment_matrix(const std::vector<Monomial>& basis) const {
    const int k = static_cast<int>(basis.size());
    Eigen::MatrixXd m(k, k);
    for (int a = 0; a < k; ++a) {
        for (int b = a; b < k; ++b) {
            const Monomial prod = reg_->mul(basis[a], basis[b]);
            if (prod.degree() > degree_) throw std::length_error("degree overflow in moment matrix");
            m(a, b) = m(b, a) = value(prod);
        }
    }
    return m;
}

Eigen::MatrixXd PseudoExpectation::localizing_matrix(const Polynomial& g,
                                                     const std::vector<Monomial>& basis) const {
    const int k = static_cast<int>(basis.size());
    Eigen::MatrixXd m(k, k);
    for (int a = 0; a < k; ++a) {
        for (int b = a; b < k; ++b) {
            const Monomial prod = reg_->mul(basis[a], basis[b]);
            double total = 0.0;
            for (const auto& [gm, gc] : g.terms()) {
                const Monomial full = reg_->mul(prod, gm);
                if (full.degree() > degree_) throw std::length_error("degree overflow in localizing matrix");
                total += gc * value(full);
            }
            m(a, b) = m(b, a) = total;
        }
    }
    return m;
}

PseudoExpectation PseudoExpectation::from_points(std::shared_ptr<const VariableRegistry> reg,
                                                 int degree, const std::vector<Monomial>& tracked,
                                                 const std::vector<Eigen::VectorXd>& support,
                                                 const std::vector<double>& weights) {
    if (support.size() != weights.size() || support.empty()) {
        throw std::invalid_argument("support and weights must be nonempty and equal length");
    }
    double wsum = 0.0;
    for (const double w : weights) wsum += w;
    if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
    PseudoExpectation pe(reg, degree, tracked);
    for (const Monomial& m : pe.tracked_) {
        double total = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) {
            double t = weights[s];
            for (const auto& [v, e] : m.factors) t *= std::pow(support[s](v), e);
            total += t;
        }
        pe.set_value(m, total);
    }
    return pe;
}

PseudoExpectation PseudoExpectation::product(const PseudoExpectation& b) const {
    if (degree_ != b.degree_) throw std::invalid_argument("product requires equal degrees");
    auto joint = std::make_shared<VariableRegistry>();
    const int na = reg_->count();
    for (int v = 0; v < na; ++v) {
        joint->add_scalar(reg_->name(v) + "(1)", reg_->bound(v), reg_->idempotent(v));
    }
    for (int v = 0; v < b.reg_->count(); ++v) {
        joint->add_scalar(b.reg_->name(v) + "(2)", b.reg_->bound(v), b.reg_->idempotent(v));
    }
    auto shift = [na](const Monomial& m, int offset) {
        Monomial out = m;
        for (auto& [v, e] : out.factors) v += offset;
        (void)na;
        return out;
    };

    std::vector<Monomial> tracked;
    for (const Monomial& ma : tracked_) tracked.push_back(ma);  // ids preserved for side 1
    for (const Monomial& mb : b.tracked_) tracked.push_back(shift(mb, na));
    std::vector<std::pair<Monomial, double>> cross;
    for (const Monomial& ma : tracked_) {
        for (const Monomial& mb : b.tracked_) {
            if (ma.degree() + mb.degree() > degree_) continue;
            Monomial joint_m = joint->mul(ma, shift(mb, na));
            tracked.push_back(joint_m);
            cross.push_back({joint_m, value(ma) * b.value(mb)});
        }
    }

    PseudoExpectation out(joint, degree_, tracked);
    for (const Monomial& ma : tracked_) out.set_value(ma, value(ma));
    for (const Monomial& mb : b.tracked_) out.set_value(shift(mb, na), b.value(mb));
    for (const auto& [m, v] : cross) out.set_value(m, v);
    return out;
}

}  // namespace estlab
