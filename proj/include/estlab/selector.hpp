#pragma once

#include <cstdint>
#include <vector>

namespace estlab {

// Degree-2 certificate that sum_i z_i a_i <= B over 0 <= z_i <= 1,
// sum z_i = k, where B is the best size-k subset sum. The identity
//   B - sum z_i a_i = sum_{i<=k} (1-z_i)(a_i - a_k)
//                   + sum_{i>k} z_i (a_k - a_i) + a_k (k - sum z_i)
// is stored term by term in sorted order.
struct SelectorCertificate {
    std::vector<int> sorted_order;   // permutation, descending a
    std::vector<double> a_sorted;
    int k = 0;
    double bound = 0.0;              // B
    double pivot = 0.0;              // a_k in sorted order
    // slack term coefficients: (constraint kind, index, coefficient)
    // kind 0: (1 - z_i), kind 1: z_i, kind 2: (k - sum z)
    struct Term {
        int kind;
        int index;  // original index, -1 for the counting term
        double coeff;
    };
    std::vector<Term> terms;
};

// brute force over subsets for n <= 20, sorted top-k otherwise (equal values)
double best_subset_sum(const std::vector<double>& a, int k);

SelectorCertificate selector_certificate(const std::vector<double>& a, int k);

// evaluates the stored identity at `samples` random feasible z; returns the
// largest absolute residual observed
double verify_selector(const SelectorCertificate& cert, int n, int samples, std::uint64_t seed);

}  // namespace estlab
