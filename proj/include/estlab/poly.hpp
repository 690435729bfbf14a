#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace estlab {

// A monomial is a sorted list of (variable id, exponent) pairs.
struct Monomial {
    std::vector<std::pair<int, int>> factors;

    static Monomial one() { return {}; }
    static Monomial var(int id, int exp = 1) {
        Monomial m;
        if (exp > 0) m.factors.push_back({id, exp});
        return m;
    }

    int degree() const {
        int d = 0;
        for (const auto& [v, e] : factors) d += e;
        return d;
    }
    bool is_one() const { return factors.empty(); }
    bool contains(int var) const {
        for (const auto& [v, e] : factors)
            if (v == var) return true;
        return false;
    }

    bool operator==(const Monomial& o) const { return factors == o.factors; }
    // graded lexicographic
    bool operator<(const Monomial& o) const {
        const int da = degree(), db = o.degree();
        if (da != db) return da < db;
        return factors < o.factors;
    }
};

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const {
        std::size_t h = 1469598103934665603ULL;
        for (const auto& [v, e] : m.factors) {
            h ^= static_cast<std::size_t>(v) * 0x9e3779b97f4a7c15ULL + e;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

enum class VarKind { Scalar, Vector, Matrix };

// Registered problem variables. Boolean indicator variables are flagged
// idempotent so that monomial arithmetic reduces w^k to w.
class VariableRegistry {
public:
    int add_scalar(const std::string& name, double bound = 1.0, bool idempotent = false);
    std::vector<int> add_vector(const std::string& name, int dim, double bound = 1.0);
    // symmetric matrix: returns row-major ids with shared upper triangle
    std::vector<int> add_symmetric_matrix(const std::string& name, int dim, double bound = 1.0);

    int count() const { return static_cast<int>(names_.size()); }
    const std::string& name(int id) const { return names_.at(id); }
    double bound(int id) const { return bounds_.at(id); }
    bool idempotent(int id) const { return idempotent_.at(id) != 0; }
    bool has(const std::string& name) const { return lookup_.count(name) > 0; }
    int id(const std::string& name) const;

    Monomial reduce(Monomial m) const;
    Monomial mul(const Monomial& a, const Monomial& b) const;
    double monomial_bound(const Monomial& m) const;

private:
    std::vector<std::string> names_;
    std::vector<double> bounds_;
    std::vector<char> idempotent_;
    std::unordered_map<std::string, int> lookup_;
};

// Sparse polynomial over registered variables.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(double c) {
        if (c != 0.0) terms_[Monomial::one()] = c;
    }
    static Polynomial var(int id) {
        Polynomial p;
        p.terms_[Monomial::var(id)] = 1.0;
        return p;
    }
    static Polynomial mono(const Monomial& m, double c = 1.0) {
        Polynomial p;
        if (c != 0.0) p.terms_[m] = c;
        return p;
    }

    Polynomial& add(const Monomial& m, double c);
    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(double s) const;
    // product with idempotent reduction through the registry
    Polynomial mul(const Polynomial& o, const VariableRegistry& reg) const;

    const std::map<Monomial, double>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    int degree() const;
    double coefficient_norm() const;
    double evaluate(const std::function<double(int)>& value_of) const;
    std::string to_string(const VariableRegistry& reg) const;

private:
    std::map<Monomial, double> terms_;
};

// Graded-lex monomial basis over a variable subset; idempotent variables are
// capped at exponent one. Throws when the basis would exceed the cap.
std::vector<Monomial> enumerate_basis(const VariableRegistry& reg, const std::vector<int>& vars,
                                      int degree, std::size_t cap = 5000);

}  // namespace estlab
