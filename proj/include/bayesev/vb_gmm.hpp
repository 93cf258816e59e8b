#pragma once

// Mean-field variational Bayes for a one-dimensional Gaussian mixture.
//
// Priors (independent across components):
//   mu_s   ~ N(m0, 1/tau0)
//   beta_s ~ Gamma(rate b0, shape c0)      beta_s is the component precision
//   pi     ~ Dirichlet(lambda0, ..., lambda0)
// Factors: q(mu_s) = N(m_s, 1/tau_s), q(beta_s) = Gamma(b_s, c_s),
// q(pi) = Dirichlet(lambda), q(s_i) = Categorical(r_i).

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesev/models.hpp"
#include "bayesev/stats.hpp"

namespace bayesev {

struct VbGmmPrior {
    double m0 = 0.0;
    double tau0 = 1e-2;
    double b0 = 1e-2;
    double c0 = 1e-2;
    double lambda0 = 1.0;

    void validate() const;
    /// Broad defaults with the prior mean placed at the data mean.
    static VbGmmPrior defaults(const Dataset& data);
};

struct VbGmmState {
    std::vector<double> m;
    std::vector<double> tau;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> lambda;
    Eigen::MatrixXd resp;  // I x S
    std::vector<double> bound_trace;

    int n_components() const { return static_cast<int>(m.size()); }
    /// Posterior means: m_s, (b_s / c_s)^(1/2), lambda_s / sum(lambda).
    MixtureParams point_estimate() const;
    /// Reorders components by ascending m_s, permuting responsibility columns too.
    void sort_by_mean();
};

struct VbGmmOptions {
    double tol = 1e-6;
    int max_iter = 1000;
    int restarts = 5;
};

struct VbGmmFit {
    VbGmmState state;
    double bound = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string warning;
};

/// Quantile-spread means with a small random jitter, turned into soft assignments.
VbGmmState vb_gmm_init(const Dataset& data, int n_components, RngHandle& rng);

/// Best of `options.restarts` coordinate-ascent runs; components sorted by mean.
VbGmmFit vb_gmm_fit(const Dataset& data, int n_components, const VbGmmPrior& prior,
                    const VbGmmOptions& options, RngHandle& rng);

/// Coordinate ascent from a given state until the bound settles.
VbGmmFit vb_gmm_refine(const Dataset& data, VbGmmState state, const VbGmmPrior& prior,
                       const VbGmmOptions& options);

double vb_gmm_bound(const VbGmmState& state, const Dataset& data, const VbGmmPrior& prior);

void vb_gmm_e_step(VbGmmState& state, const Dataset& data);
void vb_gmm_m_step(VbGmmState& state, const Dataset& data, const VbGmmPrior& prior);

}  // namespace bayesev
