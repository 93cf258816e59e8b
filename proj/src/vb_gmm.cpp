#include "bayesev/vb_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bayesev/kernels.hpp"

namespace bayesev {

namespace {

double data_mean(const Dataset& data) {
    return std::accumulate(data.ordinates.begin(), data.ordinates.end(), 0.0) / static_cast<double>(data.count());
}

double data_variance(const Dataset& data) {
    const double mu = data_mean(data);
    double acc = 0.0;
    for (double v : data.ordinates) acc += (v - mu) * (v - mu);
    return acc / static_cast<double>(data.count());
}

void check_state(const VbGmmState& st, const Dataset& data) {
    const auto S = st.m.size();
    if (S == 0 || st.tau.size() != S || st.b.size() != S || st.c.size() != S || st.lambda.size() != S ||
        st.resp.rows() != static_cast<Eigen::Index>(data.count()) ||
        st.resp.cols() != static_cast<Eigen::Index>(S)) {
        throw DomainError("invalid VB mixture state");
    }
    for (std::size_t s = 0; s < S; ++s) {
        if (!(st.tau[s] > 0.0) || !(st.b[s] > 0.0) || !(st.c[s] > 0.0) || !(st.lambda[s] > 0.0)) {
            throw DomainError("invalid VB mixture state: non-positive hyperparameter");
        }
    }
}

VbGmmFit refine(const Dataset& data, VbGmmState state, const VbGmmPrior& prior, const VbGmmOptions& options) {
    VbGmmFit fit;
    vb_gmm_m_step(state, data, prior);
    double previous = vb_gmm_bound(state, data, prior);
    state.bound_trace.push_back(previous);
    for (int it = 1; it <= options.max_iter; ++it) {
        vb_gmm_e_step(state, data);
        vb_gmm_m_step(state, data, prior);
        const double bound = vb_gmm_bound(state, data, prior);
        state.bound_trace.push_back(bound);
        fit.iterations = it;
        if (std::abs(bound - previous) < options.tol) {
            fit.converged = true;
            previous = bound;
            break;
        }
        previous = bound;
    }
    fit.bound = previous;
    state.sort_by_mean();
    fit.state = std::move(state);
    if (!fit.converged) {
        fit.warning = "bound did not converge within " + std::to_string(options.max_iter) + " iterations";
    }
    return fit;
}

}  // namespace

void VbGmmPrior::validate() const {
    if (!std::isfinite(m0)) throw DomainError("non-finite input");
    if (!(tau0 > 0.0) || !(b0 > 0.0) || !(c0 > 0.0) || !(lambda0 > 0.0)) {
        throw DomainError("VB mixture prior hyperparameters must be positive");
    }
}

VbGmmPrior VbGmmPrior::defaults(const Dataset& data) {
    data.validate();
    VbGmmPrior p;
    p.m0 = data_mean(data);
    return p;
}

MixtureParams VbGmmState::point_estimate() const {
    MixtureParams p;
    const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    for (std::size_t s = 0; s < m.size(); ++s) {
        p.means.push_back(m[s]);
        p.sigmas.push_back(std::sqrt(b[s] / c[s]));
        p.weights.push_back(lambda[s] / total);
    }
    return p;
}

void VbGmmState::sort_by_mean() {
    std::vector<std::size_t> order(m.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [this](std::size_t x, std::size_t y) { return m[x] < m[y]; });
    auto permute = [&order](std::vector<double>& v) {
        std::vector<double> out;
        out.reserve(v.size());
        for (std::size_t k : order) out.push_back(v[k]);
        v = std::move(out);
    };
    permute(m);
    permute(tau);
    permute(b);
    permute(c);
    permute(lambda);
    if (resp.size() > 0) {
        Eigen::MatrixXd sorted(resp.rows(), resp.cols());
        for (std::size_t k = 0; k < order.size(); ++k) {
            sorted.col(static_cast<Eigen::Index>(k)) = resp.col(static_cast<Eigen::Index>(order[k]));
        }
        resp = std::move(sorted);
    }
}

VbGmmState vb_gmm_init(const Dataset& data, int n_components, RngHandle& rng) {
    data.validate();
    if (n_components < 1) throw DomainError("mixture needs at least one component");
    const auto S = static_cast<std::size_t>(n_components);
    const auto I = data.count();
    std::vector<double> sorted = data.ordinates;
    std::sort(sorted.begin(), sorted.end());
    const double sd = std::sqrt(std::max(data_variance(data), 1e-300));
    const double width = sd / static_cast<double>(S);

    VbGmmState st;
    st.m.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        const double q = (static_cast<double>(s) + 0.5) / static_cast<double>(S);
        const auto idx = std::min(I - 1, static_cast<std::size_t>(q * static_cast<double>(I)));
        st.m[s] = sorted[idx] + (S > 1 ? 0.1 * width * sample_gaussian(rng, GaussianParams{0.0, 1.0}) : 0.0);
    }
    // component precisions start at the width implied by the quantile spacing
    st.tau.assign(S, 1.0);
    st.c.assign(S, 1.0);
    st.b.assign(S, width * width);
    st.lambda.assign(S, 1.0);
    st.resp.resize(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(S));
    for (std::size_t i = 0; i < I; ++i) {
        double total = 0.0;
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < S; ++s) {
            const double d = (data.ordinates[i] - st.m[s]) / width;
            hi = std::max(hi, -0.5 * d * d);
        }
        for (std::size_t s = 0; s < S; ++s) {
            const double d = (data.ordinates[i] - st.m[s]) / width;
            const double v = std::exp(-0.5 * d * d - hi);
            st.resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = v;
            total += v;
        }
        st.resp.row(static_cast<Eigen::Index>(i)) /= total;
    }
    return st;
}

void vb_gmm_e_step(VbGmmState& st, const Dataset& data) {
    const auto S = st.m.size();
    std::vector<double> log_weight(S), mean_var(S), beta(S);
    const double psi_total = digamma(std::accumulate(st.lambda.begin(), st.lambda.end(), 0.0));
    for (std::size_t s = 0; s < S; ++s) {
        const double log_pi = digamma(st.lambda[s]) - psi_total;
        const double log_beta = digamma(st.c[s]) - std::log(st.b[s]);
        beta[s] = st.c[s] / st.b[s];
        mean_var[s] = 1.0 / st.tau[s];
        log_weight[s] = log_pi + 0.5 * log_beta - 0.5 * kLn2Pi;
    }
    kernels::responsibilities(data.ordinates, kernels::ResponsibilityTerms{st.m, mean_var, beta, log_weight},
                              st.resp);
}

void vb_gmm_m_step(VbGmmState& st, const Dataset& data, const VbGmmPrior& prior) {
    const auto S = st.m.size();
    const Eigen::Map<const Eigen::VectorXd> d(data.ordinates.data(), static_cast<Eigen::Index>(data.count()));
    for (std::size_t s = 0; s < S; ++s) {
        const auto col = st.resp.col(static_cast<Eigen::Index>(s));
        const double n_s = col.sum();
        const double sum_x = col.dot(d);
        st.lambda[s] = prior.lambda0 + n_s;

        const double beta = st.c[s] / st.b[s];
        st.tau[s] = prior.tau0 + beta * n_s;
        st.m[s] = (prior.tau0 * prior.m0 + beta * sum_x) / st.tau[s];

        const double sq = col.dot((d.array() - st.m[s]).square().matrix()) + n_s / st.tau[s];
        st.c[s] = prior.c0 + 0.5 * n_s;
        st.b[s] = prior.b0 + 0.5 * sq;
    }
}

double vb_gmm_bound(const VbGmmState& st, const Dataset& data, const VbGmmPrior& prior) {
    data.validate();
    prior.validate();
    check_state(st, data);
    const auto S = st.m.size();
    const Eigen::Map<const Eigen::VectorXd> d(data.ordinates.data(), static_cast<Eigen::Index>(data.count()));
    const double lambda_total = std::accumulate(st.lambda.begin(), st.lambda.end(), 0.0);
    const double psi_total = digamma(lambda_total);

    double e_log_like = 0.0;   // E[ln p(D | s, mu, beta)]
    double e_log_s = 0.0;      // E[ln p(s | pi)]
    double e_log_pi = 0.0;     // E[ln p(pi)]
    double e_log_mu = 0.0;     // E[ln p(mu)]
    double e_log_beta = 0.0;   // E[ln p(beta)]
    double h_s = 0.0;          // -E[ln q(s)]
    double h_pi = 0.0;         // -E[ln q(pi)]
    double h_mu = 0.0;         // -E[ln q(mu)]
    double h_beta = 0.0;       // -E[ln q(beta)]

    double sum_log_gamma_lambda = 0.0;
    double sum_lambda_term = 0.0;
    double sum_log_pi = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const auto col = st.resp.col(static_cast<Eigen::Index>(s));
        const double n_s = col.sum();
        const double log_pi = digamma(st.lambda[s]) - psi_total;
        const auto [beta, log_beta] = gamma_expectations({st.b[s], st.c[s]});
        const double sq = col.dot((d.array() - st.m[s]).square().matrix()) + n_s / st.tau[s];

        e_log_like += 0.5 * n_s * (log_beta - kLn2Pi) - 0.5 * beta * sq;
        e_log_s += n_s * log_pi;
        sum_log_pi += log_pi;

        const double dm = st.m[s] - prior.m0;
        e_log_mu += 0.5 * (std::log(prior.tau0) - kLn2Pi) - 0.5 * prior.tau0 * (dm * dm + 1.0 / st.tau[s]);
        e_log_beta += prior.c0 * std::log(prior.b0) - log_gamma(prior.c0) + (prior.c0 - 1.0) * log_beta -
                      prior.b0 * beta;

        h_mu += 0.5 * (1.0 + kLn2Pi - std::log(st.tau[s]));
        h_beta += st.c[s] - std::log(st.b[s]) + log_gamma(st.c[s]) + (1.0 - st.c[s]) * digamma(st.c[s]);

        sum_log_gamma_lambda += log_gamma(st.lambda[s]);
        sum_lambda_term += (st.lambda[s] - 1.0) * log_pi;
    }
    const auto Sd = static_cast<double>(S);
    e_log_pi = log_gamma(Sd * prior.lambda0) - Sd * log_gamma(prior.lambda0) + (prior.lambda0 - 1.0) * sum_log_pi;
    h_pi = -(log_gamma(lambda_total) - sum_log_gamma_lambda + sum_lambda_term);
    for (Eigen::Index i = 0; i < st.resp.size(); ++i) {
        const double r = st.resp.data()[i];
        if (r > 0.0) h_s -= r * std::log(r);
    }
    return e_log_like + e_log_s + e_log_pi + e_log_mu + e_log_beta + h_s + h_pi + h_mu + h_beta;
}

VbGmmFit vb_gmm_refine(const Dataset& data, VbGmmState state, const VbGmmPrior& prior,
                       const VbGmmOptions& options) {
    data.validate();
    prior.validate();
    return refine(data, std::move(state), prior, options);
}

VbGmmFit vb_gmm_fit(const Dataset& data, int n_components, const VbGmmPrior& prior, const VbGmmOptions& options,
                    RngHandle& rng) {
    data.validate();
    prior.validate();
    if (n_components < 1) throw DomainError("mixture needs at least one component");
    if (static_cast<std::size_t>(n_components) > data.count()) {
        throw DomainError("more mixture components than data points");
    }
    if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
    if (options.max_iter < 1) throw DomainError("max_iter must be at least 1");
    if (options.restarts < 1) throw DomainError("restarts must be at least 1");

    VbGmmFit best;
    bool have_best = false;
    for (int attempt = 0; attempt < options.restarts; ++attempt) {
        auto fit = refine(data, vb_gmm_init(data, n_components, rng), prior, options);
        if (!have_best || fit.bound > best.bound) {
            best = std::move(fit);
            have_best = true;
        }
    }
    return best;
}

}  // namespace bayesev
