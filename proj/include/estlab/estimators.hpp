#pragma once

#include <optional>
#include <string>

#include "estlab/constraint_system.hpp"
#include "estlab/model.hpp"
#include "estlab/systems.hpp"

namespace estlab {

struct SolverStats {
    std::string status;
    long iterations = 0;
    std::string detail;
};

struct EstimateReport {
    Vector estimate_vector;
    Matrix estimate_matrix;
    double mahalanobis_error = -1.0;  // filled when ground truth is known
    double spectral_error = -1.0;
    double frobenius_error = -1.0;
    std::string method;
    bool converged = true;
    SolverStats solver;
    Vector weights;  // weighted path
};

Vector least_squares(const LabeledDataset& data);
double least_squares_gradient_residual(const LabeledDataset& data, const Vector& theta);

struct SosEstimatorConfig {
    int degree = 4;
    SolverConfig solver;
    double hyper_constant = -1.0;
    double noise_second = -1.0;
    // tiny-scale guard: the curated relaxation is built for n <= 12, d <= 2
    int max_n = 12;
    int max_d = 2;
};

EstimateReport robust_regression_sos(const LabeledDataset& data, double eta,
                                     const SosEstimatorConfig& cfg = {});
EstimateReport robust_mean_sos(const PointDataset& points, double eta,
                               const SosEstimatorConfig& cfg = {});
EstimateReport robust_cov_spectral_sos(const PointDataset& points, double eta,
                                       const SosEstimatorConfig& cfg = {});
EstimateReport robust_cov_frobenius_sos(const PointDataset& points, double eta,
                                        const SosEstimatorConfig& cfg = {});

struct WeightedConfig {
    int max_rounds = 50;
    double trim_multiplier = 1.5;  // trims the worst trim_multiplier * eta fraction
    double tol = 1e-9;
    int cov_rounds = 12;
};

EstimateReport robust_regression_weighted(const LabeledDataset& data, double eta,
                                          const WeightedConfig& cfg = {});
EstimateReport robust_mean_weighted(const PointDataset& points, double eta,
                                    const WeightedConfig& cfg = {});

}  // namespace estlab
