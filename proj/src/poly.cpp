#include "estlab/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace estlab {

int VariableRegistry::add_scalar(const std::string& name, double bound, bool idempotent) {
    if (lookup_.count(name)) throw std::invalid_argument("variable already registered: " + name);
    const int id = count();
    names_.push_back(name);
    bounds_.push_back(bound);
    idempotent_.push_back(idempotent ? 1 : 0);
    lookup_[name] = id;
    return id;
}

std::vector<int> VariableRegistry::add_vector(const std::string& name, int dim, double bound) {
    std::vector<int> ids;
    for (int i = 0; i < dim; ++i) ids.push_back(add_scalar(name + "[" + std::to_string(i) + "]", bound));
    return ids;
}

std::vector<int> VariableRegistry::add_symmetric_matrix(const std::string& name, int dim,
                                                        double bound) {
    std::vector<int> upper(dim * dim, -1);
    for (int a = 0; a < dim; ++a) {
        for (int b = a; b < dim; ++b) {
            const int id =
                add_scalar(name + "[" + std::to_string(a) + "," + std::to_string(b) + "]", bound);
            upper[a * dim + b] = id;
            upper[b * dim + a] = id;
        }
    }
    return upper;
}

int VariableRegistry::id(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) throw std::out_of_range("unregistered variable: " + name);
    return it->second;
}

Monomial VariableRegistry::reduce(Monomial m) const {
    for (auto& [v, e] : m.factors) {
        if (idempotent(v)) e = 1;
    }
    return m;
}

Monomial VariableRegistry::mul(const Monomial& a, const Monomial& b) const {
    Monomial out;
    out.factors.reserve(a.factors.size() + b.factors.size());
    std::size_t i = 0, j = 0;
    while (i < a.factors.size() || j < b.factors.size()) {
        if (j == b.factors.size() || (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
            out.factors.push_back(a.factors[i++]);
        } else if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
            out.factors.push_back(b.factors[j++]);
        } else {
            out.factors.push_back({a.factors[i].first, a.factors[i].second + b.factors[j].second});
            ++i;
            ++j;
        }
    }
    return reduce(std::move(out));
}

double VariableRegistry::monomial_bound(const Monomial& m) const {
    double b = 1.0;
    for (const auto& [v, e] : m.factors) b *= std::pow(bound(v), e);
    return b;
}

Polynomial& Polynomial::add(const Monomial& m, double c) {
    if (c == 0.0) return *this;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_[m] = c;
    } else {
        it->second += c;
        if (std::abs(it->second) < 1e-300) terms_.erase(it);
    }
    return *this;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [m, c] : o.terms_) out.add(m, c);
    return out;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [m, c] : o.terms_) out.add(m, -c);
    return out;
}

Polynomial Polynomial::operator*(double s) const {
    Polynomial out;
    if (s == 0.0) return out;
    for (const auto& [m, c] : terms_) out.terms_[m] = c * s;
    return out;
}

Polynomial Polynomial::mul(const Polynomial& o, const VariableRegistry& reg) const {
    Polynomial out;
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            out.add(reg.mul(ma, mb), ca * cb);
        }
    }
    return out;
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
}

double Polynomial::coefficient_norm() const {
    double s = 0.0;
    for (const auto& [m, c] : terms_) s += c * c;
    return std::sqrt(s);
}

double Polynomial::evaluate(const std::function<double(int)>& value_of) const {
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
        double t = c;
        for (const auto& [v, e] : m.factors) t *= std::pow(value_of(v), e);
        total += t;
    }
    return total;
}

std::string Polynomial::to_string(const VariableRegistry& reg) const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        out << (first ? "" : " + ") << c;
        for (const auto& [v, e] : m.factors) {
            out << "*" << reg.name(v);
            if (e > 1) out << "^" << e;
        }
        first = false;
    }
    if (first) out << "0";
    return out.str();
}

std::vector<Monomial> enumerate_basis(const VariableRegistry& reg, const std::vector<int>& vars,
                                      int degree, std::size_t cap) {
    if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
    std::vector<Monomial> basis;
    basis.push_back(Monomial::one());
    std::vector<Monomial> frontier = basis;
    for (int d = 1; d <= degree; ++d) {
        std::vector<Monomial> next;
        for (const Monomial& m : frontier) {
            for (const int v : vars) {
                // keep variables in nondecreasing order to avoid duplicates
                if (!m.factors.empty() && m.factors.back().first > v) continue;
                if (reg.idempotent(v) && m.contains(v)) continue;
                Monomial grown = reg.mul(m, Monomial::var(v));
                if (grown.degree() != d) continue;  // idempotent reduction collapsed it
                next.push_back(grown);
            }
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        basis.insert(basis.end(), next.begin(), next.end());
        if (basis.size() > cap) {
            throw std::length_error("monomial basis exceeds cap of " + std::to_string(cap));
        }
        frontier = std::move(next);
    }
    std::sort(basis.begin(), basis.end());
    return basis;
}

}  // namespace estlab
