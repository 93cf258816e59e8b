#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayesev/stats.hpp"

namespace bayesev {

using ParameterVector = std::vector<double>;

/// Observations. Polynomial data carries abscissae; mixture data leaves them empty.
struct Dataset {
    std::vector<double> abscissae;
    std::vector<double> ordinates;

    std::size_t count() const { return ordinates.size(); }
    bool has_abscissae() const { return !abscissae.empty(); }
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Uniform box prior. Coordinates from `simplex_offset` on are mixture weights
/// decoded onto the simplex by `prior_transform`.
struct PriorBox {
    std::vector<double> lower;
    std::vector<double> upper;
    std::size_t simplex_offset = npos;

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::size_t dimension() const { return lower.size(); }
    void validate() const;
};

/// Maps a unit-cube point to parameters: lo + u (hi - lo), then simplex decoding of
/// the weight block so the implied weights are uniform (Dirichlet(1,...,1)) on the simplex.
ParameterVector prior_transform(std::span<const double> u, const PriorBox& box);
void prior_transform(std::span<const double> u, const PriorBox& box, std::span<double> theta);

/// Anything the nested sampler can integrate.
class Model {
public:
    virtual ~Model() = default;

    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<std::string> parameter_names() const = 0;
    virtual const PriorBox& prior() const = 0;
    virtual double log_likelihood(std::span<const double> theta) const = 0;

    virtual void transform(std::span<const double> u, std::span<double> theta) const {
        prior_transform(u, prior(), theta);
    }
    /// Reporting representation of a parameter vector, shared by every backend
    /// fitting this model family. Exchangeable labels are put in canonical order.
    virtual ParameterVector report(std::span<const double> theta) const {
        return {theta.begin(), theta.end()};
    }
    virtual std::vector<std::string> report_names() const { return parameter_names(); }
    /// Moves `u` to a canonical representative of the points that prior and
    /// likelihood cannot tell apart. Identity unless the model has such symmetry.
    virtual void canonicalize(std::span<double> u) const { (void)u; }
};

Eigen::MatrixXd design_matrix(std::span<const double> abscissae, int order);

double poly_log_likelihood(const Dataset& data, std::span<const double> w, double gamma);

/// Polynomial regression with Gaussian noise of precision gamma.
/// Parameters: (w_1 .. w_N, gamma), w_n multiplying x^(n-1).
class PolynomialModel final : public Model {
public:
    PolynomialModel(Dataset data, int order);
    PolynomialModel(Dataset data, int order, PriorBox prior);

    static PriorBox default_prior(int order);

    std::string id() const override;
    std::size_t dimension() const override { return static_cast<std::size_t>(order_) + 1; }
    std::vector<std::string> parameter_names() const override;
    const PriorBox& prior() const override { return prior_; }
    double log_likelihood(std::span<const double> theta) const override;
    /// (w_1 .. w_N, sigma) with sigma = gamma^(-1/2)
    ParameterVector report(std::span<const double> theta) const override;
    std::vector<std::string> report_names() const override;

    int order() const { return order_; }
    const Dataset& data() const { return data_; }
    const Eigen::MatrixXd& design() const { return design_; }

private:
    Dataset data_;
    int order_;
    Eigen::MatrixXd design_;
    PriorBox prior_;
};

/// Decoded mixture parameters, one entry per component.
struct MixtureParams {
    std::vector<double> means;
    std::vector<double> sigmas;
    std::vector<double> weights;

    std::size_t size() const { return means.size(); }
    void validate() const;
    /// Reorders components by ascending mean.
    void sort_by_mean();
};

/// Layout (mu_1..mu_S, sigma_1..sigma_S, pi_1..pi_{S-1}); pi_S = 1 - sum of the others.
MixtureParams decode_mixture(std::span<const double> theta, int n_components);
ParameterVector encode_mixture(const MixtureParams& params);

double gmm_log_likelihood(const Dataset& data, std::span<const double> theta, int n_components);
double gmm_log_likelihood(const Dataset& data, const MixtureParams& params);

class GmmModel final : public Model {
public:
    GmmModel(Dataset data, int n_components);
    GmmModel(Dataset data, int n_components, PriorBox prior);

    static PriorBox default_prior(const Dataset& data, int n_components);

    std::string id() const override;
    std::size_t dimension() const override { return 3 * static_cast<std::size_t>(n_components_) - 1; }
    std::vector<std::string> parameter_names() const override;
    const PriorBox& prior() const override { return prior_; }
    double log_likelihood(std::span<const double> theta) const override;
    /// (mu_1..mu_S, sigma_1..sigma_S, pi_1..pi_S), sorted by ascending mean
    ParameterVector report(std::span<const double> theta) const override;
    std::vector<std::string> report_names() const override;
    /// Relabels components in ascending mean order.
    void canonicalize(std::span<double> u) const override;

    int n_components() const { return n_components_; }
    const Dataset& data() const { return data_; }

private:
    Dataset data_;
    int n_components_;
    PriorBox prior_;
};

}  // namespace bayesev
