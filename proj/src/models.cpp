#include "bayesev/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bayesev/kernels.hpp"

namespace bayesev {

void Dataset::validate() const {
    if (ordinates.empty()) {
        throw DomainError("dataset has no points");
    }
    if (has_abscissae() && abscissae.size() != ordinates.size()) {
        throw DomainError("abscissae and ordinates differ in length");
    }
    for (double v : ordinates) {
        if (!std::isfinite(v)) throw DomainError("non-finite input");
    }
    for (double v : abscissae) {
        if (!std::isfinite(v)) throw DomainError("non-finite input");
    }
}

void PriorBox::validate() const {
    if (lower.size() != upper.size() || lower.empty()) {
        throw DomainError("prior box bounds must be non-empty and of equal length");
    }
    for (std::size_t j = 0; j < lower.size(); ++j) {
        if (!(lower[j] < upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j])) {
            throw DomainError("prior box requires finite lower < upper for parameter " +
                              std::to_string(j));
        }
    }
    if (simplex_offset != npos && simplex_offset > lower.size()) {
        throw DomainError("simplex block starts past the end of the box");
    }
}

void prior_transform(std::span<const double> u, const PriorBox& box, std::span<double> theta) {
    const std::size_t d = box.dimension();
    if (u.size() != d || theta.size() != d) {
        throw DomainError("dimension mismatch");
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (!(u[j] >= 0.0 && u[j] <= 1.0)) {
            throw DomainError("unit-cube coordinate outside [0, 1]");
        }
        theta[j] = box.lower[j] + u[j] * (box.upper[j] - box.lower[j]);
    }
    if (box.simplex_offset == PriorBox::npos || box.simplex_offset == d) {
        return;
    }
    // Stick breaking with Beta(1, k) inverse CDFs: the S weights come out
    // Dirichlet(1,...,1) distributed when the block is uniform on the cube.
    const std::size_t free = d - box.simplex_offset;
    std::vector<double> weights(free + 1);
    double remaining = 1.0;
    for (std::size_t j = 0; j < free; ++j) {
        const double v = std::clamp(theta[box.simplex_offset + j], 0.0, 1.0);
        const double left = static_cast<double>(free - j);
        const double fraction = -std::expm1(std::log1p(-v) / left);
        weights[j] = remaining * fraction;
        remaining -= weights[j];
    }
    weights[free] = std::max(remaining, 0.0);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t j = 0; j < free; ++j) {
        theta[box.simplex_offset + j] = weights[j] / total;
    }
}

ParameterVector prior_transform(std::span<const double> u, const PriorBox& box) {
    ParameterVector theta(box.dimension());
    prior_transform(u, box, theta);
    return theta;
}

Eigen::MatrixXd design_matrix(std::span<const double> abscissae, int order) {
    if (order < 1) {
        throw DomainError("polynomial order must be at least 1");
    }
    if (abscissae.empty()) {
        throw DomainError("design matrix needs at least one abscissa");
    }
    const auto rows = static_cast<Eigen::Index>(abscissae.size());
    Eigen::MatrixXd f(rows, order);
    for (Eigen::Index i = 0; i < rows; ++i) {
        double power = 1.0;
        for (int n = 0; n < order; ++n) {
            f(i, n) = power;
            power *= abscissae[static_cast<std::size_t>(i)];
        }
    }
    return f;
}

namespace {

double poly_log_likelihood_from_design(const Eigen::MatrixXd& design, std::span<const double> ordinates,
                                       std::span<const double> w, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("noise precision gamma must be positive");
    }
    if (w.size() != static_cast<std::size_t>(design.cols())) {
        throw DomainError("coefficient count does not match the model order");
    }
    const double ss = kernels::sum_sq_residuals(design, w, ordinates);
    const auto count = static_cast<double>(ordinates.size());
    return 0.5 * count * (std::log(gamma) - kLn2Pi) - 0.5 * gamma * ss;
}

}  // namespace

double poly_log_likelihood(const Dataset& data, std::span<const double> w, double gamma) {
    data.validate();
    if (!data.has_abscissae()) {
        throw DomainError("polynomial data needs abscissae");
    }
    const Eigen::MatrixXd f = design_matrix(data.abscissae, static_cast<int>(w.size()));
    return poly_log_likelihood_from_design(f, data.ordinates, w, gamma);
}

PolynomialModel::PolynomialModel(Dataset data, int order)
    : PolynomialModel(std::move(data), order, default_prior(order)) {}

PolynomialModel::PolynomialModel(Dataset data, int order, PriorBox prior)
    : data_(std::move(data)), order_(order), prior_(std::move(prior)) {
    data_.validate();
    if (!data_.has_abscissae()) {
        throw DomainError("polynomial data needs abscissae");
    }
    design_ = design_matrix(data_.abscissae, order_);
    prior_.validate();
    if (prior_.dimension() != dimension()) {
        throw DomainError("prior box dimension does not match the polynomial model");
    }
}

PriorBox PolynomialModel::default_prior(int order) {
    if (order < 1) {
        throw DomainError("polynomial order must be at least 1");
    }
    PriorBox box;
    box.lower.assign(static_cast<std::size_t>(order), -10.0);
    box.upper.assign(static_cast<std::size_t>(order), 10.0);
    box.lower.push_back(0.01);
    box.upper.push_back(10.0);
    return box;
}

std::string PolynomialModel::id() const { return std::to_string(order_); }

std::vector<std::string> PolynomialModel::parameter_names() const {
    std::vector<std::string> names;
    for (int n = 1; n <= order_; ++n) {
        names.push_back("w" + std::to_string(n));
    }
    names.emplace_back("gamma");
    return names;
}

double PolynomialModel::log_likelihood(std::span<const double> theta) const {
    const auto n = static_cast<std::size_t>(order_);
    return poly_log_likelihood_from_design(design_, data_.ordinates, theta.first(n), theta[n]);
}

ParameterVector PolynomialModel::report(std::span<const double> theta) const {
    const auto n = static_cast<std::size_t>(order_);
    ParameterVector out(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(n));
    out.push_back(1.0 / std::sqrt(theta[n]));
    return out;
}

std::vector<std::string> PolynomialModel::report_names() const {
    auto names = parameter_names();
    names.back() = "sigma";
    return names;
}

void MixtureParams::validate() const {
    if (means.empty() || sigmas.size() != means.size() || weights.size() != means.size()) {
        throw DomainError("mixture parameter blocks must be non-empty and of equal length");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < size(); ++s) {
        if (!std::isfinite(means[s])) throw DomainError("non-finite input");
        if (!(sigmas[s] > 0.0) || !std::isfinite(sigmas[s])) {
            throw DomainError("mixture sigma must be positive");
        }
        if (!(weights[s] >= 0.0)) {
            throw DomainError("simplex violation: negative weight");
        }
        total += weights[s];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DomainError("simplex violation: weights do not sum to one");
    }
}

void MixtureParams::sort_by_mean() {
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [this](std::size_t a, std::size_t b) { return means[a] < means[b]; });
    MixtureParams sorted;
    for (std::size_t k : order) {
        sorted.means.push_back(means[k]);
        sorted.sigmas.push_back(sigmas[k]);
        sorted.weights.push_back(weights[k]);
    }
    *this = std::move(sorted);
}

MixtureParams decode_mixture(std::span<const double> theta, int n_components) {
    if (n_components < 1) {
        throw DomainError("mixture needs at least one component");
    }
    const auto S = static_cast<std::size_t>(n_components);
    if (theta.size() != 3 * S - 1) {
        throw DomainError("mixture parameter vector has the wrong length");
    }
    MixtureParams p;
    p.means.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(S));
    p.sigmas.assign(theta.begin() + static_cast<std::ptrdiff_t>(S),
                    theta.begin() + static_cast<std::ptrdiff_t>(2 * S));
    double rest = 1.0;
    for (std::size_t s = 0; s + 1 < S; ++s) {
        p.weights.push_back(theta[2 * S + s]);
        rest -= theta[2 * S + s];
    }
    if (rest < 0.0 && rest > -1e-12) {
        rest = 0.0;
    }
    p.weights.push_back(rest);
    return p;
}

ParameterVector encode_mixture(const MixtureParams& params) {
    ParameterVector theta(params.means);
    theta.insert(theta.end(), params.sigmas.begin(), params.sigmas.end());
    theta.insert(theta.end(), params.weights.begin(), params.weights.end() - 1);
    return theta;
}

double gmm_log_likelihood(const Dataset& data, const MixtureParams& params) {
    params.validate();
    const std::size_t S = params.size();
    std::vector<double> precision(S);
    std::vector<double> log_norm(S);
    for (std::size_t s = 0; s < S; ++s) {
        precision[s] = 1.0 / (params.sigmas[s] * params.sigmas[s]);
        log_norm[s] = std::log(params.weights[s]) + 0.5 * (std::log(precision[s]) - kLn2Pi);
    }
    return kernels::mixture_log_likelihood(data.ordinates,
                                           kernels::MixtureTerms{params.means, precision, log_norm});
}

double gmm_log_likelihood(const Dataset& data, std::span<const double> theta, int n_components) {
    return gmm_log_likelihood(data, decode_mixture(theta, n_components));
}

GmmModel::GmmModel(Dataset data, int n_components)
    : GmmModel(data, n_components, default_prior(data, n_components)) {}

GmmModel::GmmModel(Dataset data, int n_components, PriorBox prior)
    : data_(std::move(data)), n_components_(n_components), prior_(std::move(prior)) {
    data_.validate();
    if (n_components_ < 1) {
        throw DomainError("mixture needs at least one component");
    }
    prior_.validate();
    if (prior_.dimension() != dimension()) {
        throw DomainError("prior box dimension does not match the mixture model");
    }
}

PriorBox GmmModel::default_prior(const Dataset& data, int n_components) {
    data.validate();
    if (n_components < 1) {
        throw DomainError("mixture needs at least one component");
    }
    const auto [lo, hi] = std::minmax_element(data.ordinates.begin(), data.ordinates.end());
    const auto S = static_cast<std::size_t>(n_components);
    PriorBox box;
    box.lower.assign(S, *lo - 2.0);
    box.upper.assign(S, *hi + 2.0);
    box.lower.insert(box.lower.end(), S, 0.05);
    box.upper.insert(box.upper.end(), S, 5.0);
    box.lower.insert(box.lower.end(), S - 1, 0.0);
    box.upper.insert(box.upper.end(), S - 1, 1.0);
    box.simplex_offset = 2 * S;
    return box;
}

std::string GmmModel::id() const { return std::to_string(n_components_); }

std::vector<std::string> GmmModel::parameter_names() const {
    std::vector<std::string> names;
    for (int s = 1; s <= n_components_; ++s) names.push_back("mu" + std::to_string(s));
    for (int s = 1; s <= n_components_; ++s) names.push_back("sigma" + std::to_string(s));
    for (int s = 1; s < n_components_; ++s) names.push_back("pi" + std::to_string(s));
    return names;
}

double GmmModel::log_likelihood(std::span<const double> theta) const {
    return gmm_log_likelihood(data_, theta, n_components_);
}

ParameterVector GmmModel::report(std::span<const double> theta) const {
    MixtureParams p = decode_mixture(theta, n_components_);
    p.sort_by_mean();
    ParameterVector out(p.means);
    out.insert(out.end(), p.sigmas.begin(), p.sigmas.end());
    out.insert(out.end(), p.weights.begin(), p.weights.end());
    return out;
}

void GmmModel::canonicalize(std::span<double> u) const {
    const auto S = static_cast<std::size_t>(n_components_);
    if (S < 2 || u.size() != dimension()) return;
    const auto& lo = prior_.lower;
    const auto& hi = prior_.upper;
    // relabelling only preserves the prior when every component shares its box
    for (std::size_t s = 1; s < S; ++s) {
        if (lo[s] != lo[0] || hi[s] != hi[0] || lo[S + s] != lo[S] || hi[S + s] != hi[S]) return;
    }
    for (std::size_t j = 2 * S; j < u.size(); ++j) {
        if (lo[j] != 0.0 || hi[j] != 1.0) return;
    }
    if (std::is_sorted(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(S))) return;

    std::vector<double> theta(u.size());
    transform(u, theta);
    const MixtureParams p = decode_mixture(theta, n_components_);
    std::vector<std::size_t> order(S);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });

    const std::vector<double> old(u.begin(), u.end());
    double remaining = 1.0;
    for (std::size_t k = 0; k < S; ++k) {
        u[k] = old[order[k]];
        u[S + k] = old[S + order[k]];
        if (k + 1 < S) {
            // inverse of the stick-breaking map in prior_transform
            const double w = p.weights[order[k]];
            const double fraction = remaining > 0.0 ? std::clamp(w / remaining, 0.0, 1.0) : 0.0;
            const double left = static_cast<double>(S - 1 - k);
            u[2 * S + k] = std::clamp(-std::expm1(left * std::log1p(-fraction)), 0.0, 1.0);
            remaining -= w;
        }
    }
}

std::vector<std::string> GmmModel::report_names() const {
    auto names = parameter_names();
    names.push_back("pi" + std::to_string(n_components_));
    return names;
}

}  // namespace bayesev
