#include "bayesev/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bayesev {

namespace {

void require_finite(double x) {
    if (!std::isfinite(x)) {
        throw DomainError("non-finite input");
    }
}

}  // namespace

void GaussianParams::validate() const {
    require_finite(mean);
    if (!(inv_variance > 0.0) || !std::isfinite(inv_variance)) {
        throw DomainError("gaussian inv_variance must be positive and finite");
    }
}

double GaussianParams::sigma() const { return 1.0 / std::sqrt(inv_variance); }

void GammaParams::validate() const {
    if (!(rate > 0.0) || !(shape > 0.0) || !std::isfinite(rate) || !std::isfinite(shape)) {
        throw DomainError("gamma rate and shape must be positive and finite");
    }
}

void DirichletParams::validate() const {
    if (concentrations.empty()) {
        throw DomainError("dirichlet needs at least one concentration");
    }
    for (double c : concentrations) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw DomainError("dirichlet concentrations must be positive");
        }
    }
}

double gaussian_log_pdf(double x, const GaussianParams& p) {
    require_finite(x);
    p.validate();
    const double d = x - p.mean;
    return 0.5 * (std::log(p.inv_variance) - kLn2Pi) - 0.5 * p.inv_variance * d * d;
}

double mvn_log_pdf(const Eigen::VectorXd& x, const MultivariateGaussianParams& p) {
    const auto d = p.mean.size();
    if (x.size() != d || p.inv_covariance.rows() != d || p.inv_covariance.cols() != d) {
        throw DomainError("dimension mismatch");
    }
    if (!x.allFinite()) {
        throw DomainError("non-finite input");
    }
    if (!p.inv_covariance.isApprox(p.inv_covariance.transpose(), 1e-12)) {
        throw DomainError("inverse covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(p.inv_covariance);
    if (llt.info() != Eigen::Success) {
        throw DomainError("inverse covariance is not positive definite");
    }
    // ln det = 2 sum ln diag(L)
    const Eigen::MatrixXd L = llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const Eigen::VectorXd r = x - p.mean;
    const double quad = (L.transpose() * r).squaredNorm();
    return 0.5 * (log_det - static_cast<double>(d) * kLn2Pi) - 0.5 * quad;
}

double gamma_log_pdf(double x, const GammaParams& p) {
    require_finite(x);
    p.validate();
    if (!(x > 0.0)) {
        throw DomainError("gamma density requires x > 0");
    }
    return p.shape * std::log(p.rate) + (p.shape - 1.0) * std::log(x) - p.rate * x -
           log_gamma(p.shape);
}

double dirichlet_log_pdf(std::span<const double> pi, const DirichletParams& p) {
    p.validate();
    if (pi.size() != p.concentrations.size()) {
        throw DomainError("dimension mismatch");
    }
    double total = 0.0;
    for (double v : pi) {
        require_finite(v);
        if (v < 0.0) {
            throw DomainError("simplex violation: negative weight");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw DomainError("simplex violation: weights do not sum to one");
    }
    double sum_conc = 0.0;
    double out = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s) {
        const double lambda = p.concentrations[s];
        sum_conc += lambda;
        out -= log_gamma(lambda);
        if (lambda == 1.0) {
            continue;
        }
        if (pi[s] == 0.0) {
            if (lambda < 1.0) {
                throw DensityOverflow("dirichlet density is infinite at a zero weight");
            }
            return -std::numeric_limits<double>::infinity();
        }
        out += (lambda - 1.0) * std::log(pi[s]);
    }
    return out + log_gamma(sum_conc);
}

double log_gamma(double x) { return std::lgamma(x); }

double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("digamma requires a positive finite argument");
    }
    double shift = 0.0;
    while (x < 6.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli-number tail: 1/12, 1/120, 1/252, 1/240, 1/132, 691/32760, 1/12
    const double tail =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 -
                                        inv2 * (1.0 / 132.0 -
                                                inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    return shift + std::log(x) - 0.5 * inv - tail;
}

GammaExpectations gamma_expectations(const GammaParams& p) {
    p.validate();
    return {p.shape / p.rate, -std::log(p.rate) + digamma(p.shape)};
}

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    const double hi = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(hi)) {
        return hi;
    }
    double acc = 0.0;
    for (double v : values) {
        acc += std::exp(v - hi);
    }
    return hi + std::log(acc);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngHandle::RngHandle(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngHandle RngHandle::derive(std::uint64_t stream) const {
    return RngHandle(mix_seed(seed_, stream));
}

double RngHandle::uniform01() {
    // 53 random mantissa bits
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RngHandle::index(std::size_t n) {
    if (n == 0) {
        throw DomainError("index range must be non-empty");
    }
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
}

double sample_uniform(RngHandle& rng, double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw DomainError("uniform sampling requires finite lo < hi");
    }
    return lo + (hi - lo) * rng.uniform01();
}

double sample_gaussian(RngHandle& rng, const GaussianParams& p) {
    p.validate();
    std::normal_distribution<double> dist(p.mean, p.sigma());
    return dist(rng.engine());
}

double sample_gamma(RngHandle& rng, const GammaParams& p) {
    p.validate();
    std::gamma_distribution<double> dist(p.shape, 1.0 / p.rate);
    return dist(rng.engine());
}

std::vector<double> sample_dirichlet(RngHandle& rng, const DirichletParams& p) {
    p.validate();
    std::vector<double> out(p.concentrations.size());
    double total = 0.0;
    for (std::size_t s = 0; s < out.size(); ++s) {
        out[s] = sample_gamma(rng, GammaParams{1.0, p.concentrations[s]});
        total += out[s];
    }
    if (!(total > 0.0)) {
        // every gamma draw underflowed; fall back to the largest concentration
        const auto big = std::max_element(p.concentrations.begin(), p.concentrations.end()) -
                         p.concentrations.begin();
        std::fill(out.begin(), out.end(), 0.0);
        out[static_cast<std::size_t>(big)] = 1.0;
        return out;
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

}  // namespace bayesev
