#pragma once

#include <string>
#include <vector>

#include "estlab/score.hpp"

namespace estlab {

struct ComplexityResult {
    double n0 = 0.0;                 // max of the displayed terms, constants 1
    std::vector<double> terms;
    std::vector<std::string> term_names;
    double suppressed_polylog = 1.0;  // log(1/alpha), reported, not folded in
};

// Displayed pure-DP sample-complexity terms with hidden constants 1:
//   (d^2 + log^2(1/beta)) / alpha^2
//   (d + log(1/beta)) / (alpha epsilon)
//   (d log R + d log L) / epsilon
ComplexityResult sample_complexity_pure(Task task, int d, double alpha, double epsilon,
                                        double beta, double R, double L);

// Approximate-DP variant; the last term becomes (d + log(1/delta)) / epsilon.
ComplexityResult sample_complexity_approx(Task task, int d, double alpha, double epsilon,
                                          double delta, double beta);

}  // namespace estlab
