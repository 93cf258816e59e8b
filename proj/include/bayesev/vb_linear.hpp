#pragma once

// Mean-field variational Bayes for polynomial regression:
//   D_i = sum_n w_n x_i^(n-1) + noise,  noise ~ N(0, 1/gamma)
//   w ~ N(0, a_w^-1 I),  gamma ~ Gamma(rate a_gamma, shape b_gamma)
// with Q(w, gamma) = N(w | w_mean, w_precision^-1) Gamma(gamma | gamma_rate, gamma_shape).

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesev/models.hpp"

namespace bayesev {

struct VbLinearPrior {
    double a_w = 1e-3;
    double a_gamma = 1e-3;
    double b_gamma = 1e-3;

    void validate() const;
};

struct VbLinearState {
    Eigen::MatrixXd w_precision;
    Eigen::VectorXd w_mean;
    double gamma_rate = 1.0;
    double gamma_shape = 1.0;
    std::vector<double> bound_trace;

    double expected_gamma() const { return gamma_shape / gamma_rate; }
    /// Noise scale reported for the fit, (rate / shape)^(1/2).
    double sigma() const;
};

struct VbLinearOptions {
    double tol = 1e-6;
    int max_iter = 500;
    /// <gamma> used for the first weight update.
    double initial_gamma = 1.0;
};

struct VbLinearFit {
    VbLinearState state;
    double bound = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string warning;
};

VbLinearFit vb_linear_fit(const Dataset& data, int order, const VbLinearPrior& prior,
                          const VbLinearOptions& options = {});

/// Negative KL cost: E_Q[ln L] + E_Q[ln prior] - E_Q[ln Q].
double vb_linear_bound(const VbLinearState& state, const Dataset& data, const VbLinearPrior& prior);

/// One coordinate-ascent sweep from the current <gamma>; exposed for fixed-point checks.
VbLinearState vb_linear_update(const VbLinearState& state, const Dataset& data, const VbLinearPrior& prior);

struct VbModelScore {
    int order = 0;
    double log_likelihood_at_mean = 0.0;
    double occam = 0.0;
    double bound = 0.0;
};

std::vector<VbModelScore> vb_model_scores(const Dataset& data, std::span<const int> orders,
                                          const VbLinearPrior& prior, const VbLinearOptions& options = {});

}  // namespace bayesev
