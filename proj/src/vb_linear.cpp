#include "bayesev/vb_linear.hpp"

#include <cmath>

namespace bayesev {

namespace {

Eigen::Map<const Eigen::VectorXd> ordinates_of(const Dataset& data) {
    return {data.ordinates.data(), static_cast<Eigen::Index>(data.count())};
}

void require_polynomial_data(const Dataset& data) {
    data.validate();
    if (!data.has_abscissae()) {
        throw DomainError("polynomial data needs abscissae");
    }
}

Eigen::LLT<Eigen::MatrixXd> factor_precision(const Eigen::MatrixXd& precision) {
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw DomainError("weight posterior precision is singular (degenerate design)");
    }
    return llt;
}

/// <sum_i (D_i - f_i . w)^2>_Q = |D - F w_mean|^2 + tr(F^T F Sigma_w)
double expected_sq_residuals(const Eigen::MatrixXd& design, const Eigen::VectorXd& d,
                             const Eigen::VectorXd& w_mean, const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
    return (d - design * w_mean).squaredNorm() + (gram.cwiseProduct(cov)).sum();
}

VbLinearState update_from_gamma(const Eigen::MatrixXd& design, const Eigen::VectorXd& d, double gamma_mean,
                                const VbLinearPrior& prior) {
    const auto order = design.cols();
    VbLinearState next;
    next.w_precision = prior.a_w * Eigen::MatrixXd::Identity(order, order) +
                       gamma_mean * (design.transpose() * design);
    const auto llt = factor_precision(next.w_precision);
    next.w_mean = llt.solve(gamma_mean * (design.transpose() * d));
    next.gamma_rate = prior.a_gamma + 0.5 * expected_sq_residuals(design, d, next.w_mean, llt);
    next.gamma_shape = prior.b_gamma + 0.5 * static_cast<double>(d.size());
    return next;
}

}  // namespace

void VbLinearPrior::validate() const {
    if (!(a_w > 0.0) || !(a_gamma > 0.0) || !(b_gamma > 0.0)) {
        throw DomainError("VB prior hyperparameters must be positive");
    }
}

double VbLinearState::sigma() const { return std::sqrt(gamma_rate / gamma_shape); }

VbLinearState vb_linear_update(const VbLinearState& state, const Dataset& data, const VbLinearPrior& prior) {
    require_polynomial_data(data);
    prior.validate();
    const Eigen::MatrixXd design = design_matrix(data.abscissae, static_cast<int>(state.w_mean.size()));
    VbLinearState next = update_from_gamma(design, ordinates_of(data), state.expected_gamma(), prior);
    next.bound_trace = state.bound_trace;
    return next;
}

double vb_linear_bound(const VbLinearState& state, const Dataset& data, const VbLinearPrior& prior) {
    require_polynomial_data(data);
    prior.validate();
    const auto order = state.w_mean.size();
    if (order < 1 || state.w_precision.rows() != order || state.w_precision.cols() != order ||
        !(state.gamma_rate > 0.0) || !(state.gamma_shape > 0.0)) {
        throw DomainError("invalid VB linear state");
    }
    const Eigen::MatrixXd design = design_matrix(data.abscissae, static_cast<int>(order));
    const auto llt = factor_precision(state.w_precision);
    const Eigen::VectorXd d = ordinates_of(data);
    const auto count = static_cast<double>(data.count());
    const auto n = static_cast<double>(order);

    const auto [gamma_mean, log_gamma_mean] = gamma_expectations({state.gamma_rate, state.gamma_shape});
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(order, order));
    const Eigen::MatrixXd L = llt.matrixL();
    const double log_det_precision = 2.0 * L.diagonal().array().log().sum();

    // E_Q[ln L(D | w, gamma)]
    const double e_loglike = 0.5 * count * (log_gamma_mean - kLn2Pi) -
                             0.5 * gamma_mean * expected_sq_residuals(design, d, state.w_mean, llt);
    // E_Q[ln N(w | 0, a_w^-1 I)]
    const double e_log_prior_w = 0.5 * n * (std::log(prior.a_w) - kLn2Pi) -
                                 0.5 * prior.a_w * (state.w_mean.squaredNorm() + cov.trace());
    // E_Q[ln Gamma(gamma | a_gamma, b_gamma)]
    const double e_log_prior_gamma = prior.b_gamma * std::log(prior.a_gamma) - log_gamma(prior.b_gamma) +
                                     (prior.b_gamma - 1.0) * log_gamma_mean - prior.a_gamma * gamma_mean;
    // entropies of Q(w) and Q(gamma)
    const double entropy_w = 0.5 * n * (1.0 + kLn2Pi) - 0.5 * log_det_precision;
    const double entropy_gamma = state.gamma_shape - std::log(state.gamma_rate) + log_gamma(state.gamma_shape) +
                                 (1.0 - state.gamma_shape) * digamma(state.gamma_shape);

    return e_loglike + e_log_prior_w + e_log_prior_gamma + entropy_w + entropy_gamma;
}

VbLinearFit vb_linear_fit(const Dataset& data, int order, const VbLinearPrior& prior,
                          const VbLinearOptions& options) {
    require_polynomial_data(data);
    prior.validate();
    if (order < 1) throw DomainError("polynomial order must be at least 1");
    if (!(options.tol > 0.0)) throw DomainError("tol must be positive");
    if (options.max_iter < 1) throw DomainError("max_iter must be at least 1");
    if (!(options.initial_gamma > 0.0)) throw DomainError("initial_gamma must be positive");

    const Eigen::MatrixXd design = design_matrix(data.abscissae, order);
    const Eigen::VectorXd d = ordinates_of(data);

    VbLinearFit fit;
    double gamma_mean = options.initial_gamma;
    double previous = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        auto trace = std::move(fit.state.bound_trace);
        fit.state = update_from_gamma(design, d, gamma_mean, prior);
        fit.state.bound_trace = std::move(trace);
        fit.bound = vb_linear_bound(fit.state, data, prior);
        fit.state.bound_trace.push_back(fit.bound);
        fit.iterations = it;
        gamma_mean = fit.state.expected_gamma();
        if (it > 1 && std::abs(fit.bound - previous) < options.tol) {
            fit.converged = true;
            break;
        }
        previous = fit.bound;
    }
    if (!fit.converged) {
        fit.warning = "bound did not converge within " + std::to_string(options.max_iter) + " iterations";
    }
    return fit;
}

std::vector<VbModelScore> vb_model_scores(const Dataset& data, std::span<const int> orders,
                                          const VbLinearPrior& prior, const VbLinearOptions& options) {
    if (orders.empty()) {
        throw DomainError("order list must not be empty");
    }
    std::vector<VbModelScore> out;
    for (int order : orders) {
        const auto fit = vb_linear_fit(data, order, prior, options);
        const std::vector<double> w(fit.state.w_mean.data(), fit.state.w_mean.data() + fit.state.w_mean.size());
        VbModelScore score;
        score.order = order;
        score.bound = fit.bound;
        score.log_likelihood_at_mean = poly_log_likelihood(data, w, fit.state.expected_gamma());
        score.occam = score.bound - score.log_likelihood_at_mean;
        out.push_back(score);
    }
    return out;
}

}  // namespace bayesev
