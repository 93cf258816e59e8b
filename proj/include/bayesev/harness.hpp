#pragma once

// Model-selection sweeps and method comparisons over the polynomial and mixture
// families, for either backend.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bayesev/models.hpp"
#include "bayesev/nested_sampling.hpp"
#include "bayesev/vb_gmm.hpp"
#include "bayesev/vb_linear.hpp"

namespace bayesev {

enum class Method { vb, ns };
enum class Family { polynomial, gmm };

std::string to_string(Method m);
std::string to_string(Family f);
/// Throws DomainError on unknown names.
Method parse_method(const std::string& name);
Family parse_family(const std::string& name);

struct HarnessConfig {
    NsConfig ns_polynomial = NsConfig::polynomial_defaults();
    NsConfig ns_gmm = NsConfig::mixture_defaults();
    VbLinearPrior vb_linear_prior;
    VbLinearOptions vb_linear_options;
    /// Unset means VbGmmPrior::defaults(data).
    std::optional<VbGmmPrior> vb_gmm_prior;
    VbGmmOptions vb_gmm_options;
    /// Run sweep entries on an OpenMP team.
    bool parallel = true;

    void validate() const;
    /// Stable text rendering of every field; the config hash is taken over this.
    std::string canonical_text() const;
};

/// 16 hex digits of FNV-1a over `text`.
std::string hash_text(const std::string& text);
std::string config_hash(const HarnessConfig& cfg, Family family, Method method);

struct SweepRecord {
    int model_id = 0;
    Method method = Method::vb;
    /// Log-evidence estimate (ns) or evidence bound (vb).
    double score = 0.0;
    /// sqrt(H/N) for ns, 0 for vb.
    double score_uncertainty = 0.0;
    /// Plug-in log-likelihood at the reported parameters.
    double log_likelihood = 0.0;
    /// score - log_likelihood
    double occam = 0.0;
    std::vector<std::string> parameter_names;
    /// Polynomial: (w_1..w_N, sigma). Mixture: means, sigmas, weights sorted by mean.
    ParameterVector parameters;
    double wall_time = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string warning;
    std::string error;

    bool ok() const { return error.empty(); }
    friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct SweepReport {
    Family family = Family::polynomial;
    Method method = Method::vb;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<SweepRecord> records;
    /// Model id with the highest score among successful records; -1 if none.
    int argmax = -1;

    static int compute_argmax(const std::vector<SweepRecord>& records);
    const SweepRecord* best() const;
    bool any_failed() const;
    /// Throws DomainError if argmax disagrees with the stored scores.
    void validate() const;
    friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// Seed used for one sweep entry.
std::uint64_t entry_seed(std::uint64_t seed, int model_id);

/// Fits one model and fills a record; backend failures land in `record.error`.
SweepRecord fit_model(const Dataset& data, Family family, int model_id, Method method, const HarnessConfig& cfg,
                      std::uint64_t seed);

SweepReport sweep_polynomial(const Dataset& data, std::span<const int> orders, Method method,
                             const HarnessConfig& cfg, std::uint64_t seed);
SweepReport sweep_gmm(const Dataset& data, std::span<const int> components, Method method,
                      const HarnessConfig& cfg, std::uint64_t seed);

/// 100 |a - b| / max(|a|, |b|, 0.1)
double percentage_disagreement(double a, double b);

struct ParameterComparison {
    std::string name;
    double reference = 0.0;
    double other = 0.0;
    double disagreement = 0.0;
    /// Part of the averaged disagreement.
    bool averaged = false;
    friend bool operator==(const ParameterComparison&, const ParameterComparison&) = default;
};

struct ComparisonReport {
    Family family = Family::polynomial;
    int model_id = 0;
    Method reference_method = Method::vb;
    Method other_method = Method::ns;
    std::vector<std::uint64_t> seeds;
    std::string config_hash;
    std::vector<ParameterComparison> parameters;
    double averaged_disagreement = 0.0;
    /// Mean wall time per run.
    double reference_time = 0.0;
    double other_time = 0.0;
    /// ns time over vb time when both backends appear, else other over reference.
    double timing_ratio = 0.0;

    friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

/// Runs both methods once per seed at the given model, averages the reported
/// parameters per method and compares them. Coefficients (polynomial) or all
/// mixture parameters with |reference| >= 0.1 enter the average.
ComparisonReport compare_methods(const Dataset& data, Family family, int model_id, Method reference,
                                 Method other, const HarnessConfig& cfg, std::span<const std::uint64_t> seeds);

class ComparisonFailure : public std::runtime_error {
public:
    ComparisonFailure(const std::string& what, ComparisonReport partial);
    const ComparisonReport& partial() const { return partial_; }

private:
    ComparisonReport partial_;
};

}  // namespace bayesev
