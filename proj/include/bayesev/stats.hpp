#pragma once

// Densities, special functions and seeded sampling shared by every backend.
//
// Gamma densities use the rate/shape form p(x) = a^b x^(b-1) e^(-a x) / Gamma(b)
// throughout; `rate` is always a and `shape` is always b.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bayesev {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a density is infinite at the requested point.
class DensityOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

struct GaussianParams {
    double mean = 0.0;
    double inv_variance = 1.0;

    void validate() const;
    double sigma() const;
};

struct MultivariateGaussianParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd inv_covariance;
};

struct GammaParams {
    double rate = 1.0;
    double shape = 1.0;

    void validate() const;
};

struct DirichletParams {
    std::vector<double> concentrations;

    void validate() const;
};

struct GammaExpectations {
    double mean;
    double mean_log;
};

inline constexpr double kLn2Pi = 1.8378770664093454836;

double gaussian_log_pdf(double x, const GaussianParams& p);
double mvn_log_pdf(const Eigen::VectorXd& x, const MultivariateGaussianParams& p);
double gamma_log_pdf(double x, const GammaParams& p);
double dirichlet_log_pdf(std::span<const double> pi, const DirichletParams& p);

double log_gamma(double x);
/// Psi(x) for x > 0. Shifts by recurrence to x >= 6, then uses the asymptotic series.
double digamma(double x);

GammaExpectations gamma_expectations(const GammaParams& p);

/// ln(exp(a) + exp(b)) without overflow; -inf is the identity.
double log_add_exp(double a, double b);
double log_sum_exp(std::span<const double> values);

/// Single-owner random stream. Equal seeds give equal sequences on one platform.
class RngHandle {
public:
    static constexpr const char* kAlgorithm = "mt19937_64";

    explicit RngHandle(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::string algorithm() const { return kAlgorithm; }

    /// Independent handle for sub-stream `stream`; deterministic in (seed, stream).
    RngHandle derive(std::uint64_t stream) const;

    std::mt19937_64& engine() { return engine_; }

    /// Uniform on [0, 1).
    double uniform01();
    std::size_t index(std::size_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

double sample_uniform(RngHandle& rng, double lo, double hi);
double sample_gaussian(RngHandle& rng, const GaussianParams& p);
double sample_gamma(RngHandle& rng, const GammaParams& p);
std::vector<double> sample_dirichlet(RngHandle& rng, const DirichletParams& p);

}  // namespace bayesev
