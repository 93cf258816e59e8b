#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an OpenMP
// version; both sum per-point terms in index order, so they agree bit for bit.

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace bayesev::kernels {

/// Per-component constants for a mixture evaluated at fixed parameters.
/// log_norm[s] = ln(pi_s) + 0.5 ln(precision_s / 2 pi)
struct MixtureTerms {
    std::span<const double> mean;
    std::span<const double> precision;
    std::span<const double> log_norm;
};

/// Variational E-step inputs: r_is ∝ exp(log_weight[s] - 0.5 expected_precision[s] ((D_i - mean[s])^2 + mean_var[s]))
struct ResponsibilityTerms {
    std::span<const double> mean;
    std::span<const double> mean_var;
    std::span<const double> expected_precision;
    std::span<const double> log_weight;
};

namespace serial {

double sum_sq_residuals(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                        std::span<const double> ordinates);
double mixture_log_likelihood(std::span<const double> data, const MixtureTerms& terms);
/// Fills `resp` (I x S) with normalized rows; returns sum_i ln(sum_s unnormalized r_is).
double responsibilities(std::span<const double> data, const ResponsibilityTerms& terms,
                        Eigen::MatrixXd& resp);

}  // namespace serial

namespace parallel {

double sum_sq_residuals(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                        std::span<const double> ordinates);
double mixture_log_likelihood(std::span<const double> data, const MixtureTerms& terms);
double responsibilities(std::span<const double> data, const ResponsibilityTerms& terms,
                        Eigen::MatrixXd& resp);

}  // namespace parallel

/// Below this many points the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = 4096;

double sum_sq_residuals(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                        std::span<const double> ordinates);
double mixture_log_likelihood(std::span<const double> data, const MixtureTerms& terms);
double responsibilities(std::span<const double> data, const ResponsibilityTerms& terms,
                        Eigen::MatrixXd& resp);

}  // namespace bayesev::kernels
