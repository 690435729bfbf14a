#include "estlab/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "estlab/model.hpp"

namespace estlab {

ComplexityResult sample_complexity_pure(Task task, int d, double alpha, double epsilon,
                                        double beta, double R, double L) {
    (void)task;  // regression and mean estimation share the displayed shape
    if (d < 1 || alpha <= 0 || alpha >= 1 || epsilon <= 0 || beta <= 0 || beta >= 1) {
        throw std::invalid_argument("invalid parameters");
    }
    const double lb = std::log(1.0 / beta);
    ComplexityResult out;
    out.terms = {(d * static_cast<double>(d) + lb * lb) / (alpha * alpha),
                 (d + lb) / (alpha * epsilon),
                 (d * std::log(std::max(R, 1e-300)) + d * std::log(std::max(L, 1e-300))) / epsilon};
    out.term_names = {"statistical", "fine-estimation", "domain"};
    out.terms[2] = std::max(0.0, out.terms[2]);
    out.n0 = *std::max_element(out.terms.begin(), out.terms.end());
    out.suppressed_polylog = log1e(alpha);
    return out;
}

ComplexityResult sample_complexity_approx(Task task, int d, double alpha, double epsilon,
                                          double delta, double beta) {
    (void)task;
    if (d < 1 || alpha <= 0 || alpha >= 1 || epsilon <= 0 || beta <= 0 || beta >= 1 ||
        delta <= 0 || delta >= 1) {
        throw std::invalid_argument("invalid parameters");
    }
    const double lb = std::log(1.0 / beta);
    ComplexityResult out;
    out.terms = {(d * static_cast<double>(d) + lb * lb) / (alpha * alpha),
                 (d + lb) / (alpha * epsilon),
                 (d + std::log(1.0 / delta)) / epsilon};
    out.term_names = {"statistical", "fine-estimation", "privacy-tail"};
    out.n0 = *std::max_element(out.terms.begin(), out.terms.end());
    out.suppressed_polylog = log1e(alpha);
    return out;
}

}  // namespace estlab
