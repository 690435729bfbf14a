#pragma once

#include <Eigen/Dense>
#include <memory>
#include <unordered_map>
#include <vector>

#include "estlab/poly.hpp"

namespace estlab {

// A linear functional on the tracked monomial set (the constant monomial is
// implicit with value 1). Moment and localizing matrices are taken over
// caller-supplied bases whose pairwise products must be tracked.
class PseudoExpectation {
public:
    PseudoExpectation() = default;
    PseudoExpectation(std::shared_ptr<const VariableRegistry> reg, int degree,
                      std::vector<Monomial> tracked);

    int degree() const { return degree_; }
    const std::vector<Monomial>& tracked() const { return tracked_; }
    const VariableRegistry& registry() const { return *reg_; }
    std::shared_ptr<const VariableRegistry> registry_ptr() const { return reg_; }

    bool knows(const Monomial& m) const;
    int index_of(const Monomial& m) const;  // -1 for the constant monomial
    double value(const Monomial& m) const;
    void set_value(const Monomial& m, double v);
    double operator()(const Polynomial& p) const;

    Eigen::VectorXd& raw() { return values_; }
    const Eigen::VectorXd& raw() const { return values_; }

    Eigen::MatrixXd moment_matrix(const std::vector<Monomial>& basis) const;
    Eigen::MatrixXd localizing_matrix(const Polynomial& g, const std::vector<Monomial>& basis) const;

    // moments of a weighted point mixture; weights must sum to 1
    static PseudoExpectation from_points(std::shared_ptr<const VariableRegistry> reg, int degree,
                                         const std::vector<Monomial>& tracked,
                                         const std::vector<Eigen::VectorXd>& support,
                                         const std::vector<double>& weights);

    // product functional on disjoint registries; variables of `b` are renamed
    PseudoExpectation product(const PseudoExpectation& b) const;

private:
    std::shared_ptr<const VariableRegistry> reg_;
    int degree_ = 0;
    std::vector<Monomial> tracked_;
    std::unordered_map<Monomial, int, MonomialHash> index_;
    Eigen::VectorXd values_;
};

}  // namespace estlab
