#include "bayesev/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bayesev::kernels {

namespace {

inline double residual_sq(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                          std::span<const double> ordinates, Eigen::Index i) {
    double fit = 0.0;
    for (Eigen::Index n = 0; n < design.cols(); ++n) {
        fit += design(i, n) * coeffs[static_cast<std::size_t>(n)];
    }
    const double r = ordinates[static_cast<std::size_t>(i)] - fit;
    return r * r;
}

inline double point_log_mixture(double x, const MixtureTerms& t) {
    const std::size_t S = t.mean.size();
    double hi = -std::numeric_limits<double>::infinity();
    // S is small; two passes avoid a heap buffer
    for (std::size_t s = 0; s < S; ++s) {
        const double d = x - t.mean[s];
        hi = std::max(hi, t.log_norm[s] - 0.5 * t.precision[s] * d * d);
    }
    if (!std::isfinite(hi)) {
        return hi;
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double d = x - t.mean[s];
        acc += std::exp(t.log_norm[s] - 0.5 * t.precision[s] * d * d - hi);
    }
    return hi + std::log(acc);
}

inline double point_responsibilities(double x, const ResponsibilityTerms& t, Eigen::MatrixXd& resp,
                                     Eigen::Index i) {
    const auto S = static_cast<Eigen::Index>(t.mean.size());
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < S; ++s) {
        const auto k = static_cast<std::size_t>(s);
        const double d = x - t.mean[k];
        const double v = t.log_weight[k] - 0.5 * t.expected_precision[k] * (d * d + t.mean_var[k]);
        resp(i, s) = v;
        hi = std::max(hi, v);
    }
    double acc = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) {
        resp(i, s) = std::exp(resp(i, s) - hi);
        acc += resp(i, s);
    }
    for (Eigen::Index s = 0; s < S; ++s) {
        resp(i, s) /= acc;
    }
    return hi + std::log(acc);
}

std::vector<double>& scratch(std::size_t n) {
    thread_local std::vector<double> buffer;
    buffer.resize(n);
    return buffer;
}

double ordered_sum(const std::vector<double>& terms) {
    double total = 0.0;
    for (double v : terms) {
        total += v;
    }
    return total;
}

bool use_parallel(std::size_t n) {
#ifdef _OPENMP
    return n >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel();
#else
    (void)n;
    return false;
#endif
}

}  // namespace

namespace serial {

double sum_sq_residuals(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                        std::span<const double> ordinates) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        total += residual_sq(design, coeffs, ordinates, i);
    }
    return total;
}

double mixture_log_likelihood(std::span<const double> data, const MixtureTerms& terms) {
    double total = 0.0;
    for (double x : data) {
        total += point_log_mixture(x, terms);
    }
    return total;
}

double responsibilities(std::span<const double> data, const ResponsibilityTerms& terms,
                        Eigen::MatrixXd& resp) {
    resp.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(terms.mean.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        total += point_responsibilities(data[i], terms, resp, static_cast<Eigen::Index>(i));
    }
    return total;
}

}  // namespace serial

namespace parallel {

double sum_sq_residuals(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                        std::span<const double> ordinates) {
    const auto n = design.rows();
    auto& terms = scratch(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        terms[static_cast<std::size_t>(i)] = residual_sq(design, coeffs, ordinates, i);
    }
    return ordered_sum(terms);
}

double mixture_log_likelihood(std::span<const double> data, const MixtureTerms& terms) {
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    auto& per_point = scratch(data.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        per_point[static_cast<std::size_t>(i)] = point_log_mixture(data[static_cast<std::size_t>(i)], terms);
    }
    return ordered_sum(per_point);
}

double responsibilities(std::span<const double> data, const ResponsibilityTerms& terms,
                        Eigen::MatrixXd& resp) {
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    resp.resize(n, static_cast<Eigen::Index>(terms.mean.size()));
    auto& per_point = scratch(data.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        per_point[static_cast<std::size_t>(i)] =
            point_responsibilities(data[static_cast<std::size_t>(i)], terms, resp, i);
    }
    return ordered_sum(per_point);
}

}  // namespace parallel

double sum_sq_residuals(const Eigen::MatrixXd& design, std::span<const double> coeffs,
                        std::span<const double> ordinates) {
    return use_parallel(static_cast<std::size_t>(design.rows()))
               ? parallel::sum_sq_residuals(design, coeffs, ordinates)
               : serial::sum_sq_residuals(design, coeffs, ordinates);
}

double mixture_log_likelihood(std::span<const double> data, const MixtureTerms& terms) {
    return use_parallel(data.size()) ? parallel::mixture_log_likelihood(data, terms)
                                     : serial::mixture_log_likelihood(data, terms);
}

double responsibilities(std::span<const double> data, const ResponsibilityTerms& terms,
                        Eigen::MatrixXd& resp) {
    return use_parallel(data.size()) ? parallel::responsibilities(data, terms, resp)
                                     : serial::responsibilities(data, terms, resp);
}

}  // namespace bayesev::kernels
