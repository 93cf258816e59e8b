#pragma once

// Nested sampling over any `Model`: N live points, the worst is replaced by a
// likelihood-constrained random walk in the unit cube, the prior mass shrinks
// deterministically by N/(N+1) per iteration, and evidence and information are
// accumulated in log space.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "bayesev/models.hpp"
#include "bayesev/stats.hpp"

namespace bayesev {

struct NsConfig {
    int n_live = 36;
    std::int64_t max_iterations = 2'000'000;
    int steps_per_replacement = 20;
    /// Per-parameter unit-cube step sizes; empty means 1.0 scaled by the live-point shape.
    std::vector<double> initial_step_sizes;
    double target_acceptance = 0.5;
    double stop_delta_logz = 1e-6;
    /// Iterations must exceed stop_info_factor * N * H before stopping.
    double stop_info_factor = 2.0;
    /// Restarts from another survivor when a walk accepts nothing.
    int retry_budget = 5;
    std::uint64_t seed = 0;

    void validate(std::size_t dimension) const;

    static NsConfig polynomial_defaults() { return NsConfig{}; }
    static NsConfig mixture_defaults() {
        NsConfig cfg;
        cfg.n_live = 50;
        return cfg;
    }
};

struct LivePoint {
    ParameterVector u;
    ParameterVector theta;
    double log_like = 0.0;
    /// Secondary sort key so that likelihood plateaus still have a strict order.
    double tiebreak = 0.0;

    bool above(double log_l_min, double tiebreak_min) const {
        return log_like > log_l_min || (log_like == log_l_min && tiebreak > tiebreak_min);
    }
};

struct TraceRecord {
    std::int64_t k;
    double log_prior_mass;
    double log_like;
    double log_z;
    double delta_log_z;
};

struct WeightedSample {
    ParameterVector theta;
    double log_like;
    double weight;
};

struct EvidenceEstimate {
    double log_z = 0.0;
    double log_z_uncertainty = 0.0;
    double info_h = 0.0;
    std::int64_t n_iterations = 0;
    int n_live = 0;
    std::vector<TraceRecord> trace;
    /// Dead points then final live points; weights are normalized posterior weights.
    std::vector<WeightedSample> samples;
    double wall_time = 0.0;
    bool converged = false;
};

class ExplorationFailure : public std::runtime_error {
public:
    ExplorationFailure(double constraint, std::int64_t iteration);
    double constraint() const { return constraint_; }

private:
    double constraint_;
};

class IterationLimitReached : public std::runtime_error {
public:
    explicit IterationLimitReached(EvidenceEstimate partial);
    const EvidenceEstimate& partial() const { return partial_; }

private:
    EvidenceEstimate partial_;
};

struct ExploreResult {
    LivePoint point;
    int accepted = 0;
    int rejected = 0;
};

/// Metropolis random walk with reflecting cube walls. A step is kept iff the new
/// point lies above the constraint. After the batch every step size is scaled by
/// e^(1/accepted) when the acceptance rate beats `target_acceptance`, else by
/// e^(-1/rejected).
ExploreResult explore(const Model& model, const LivePoint& start, double log_l_min, double tiebreak_min,
                      std::vector<double>& step_sizes, int n_steps, double target_acceptance,
                      RngHandle& rng, const Eigen::MatrixXd* shape = nullptr);

inline ExploreResult explore(const Model& model, const LivePoint& start, double log_l_min,
                             std::vector<double>& step_sizes, int n_steps, double target_acceptance,
                             RngHandle& rng) {
    return explore(model, start, log_l_min, -1.0, step_sizes, n_steps, target_acceptance, rng);
}

/// ln(N / (N + 1)), the expected log shrinkage per iteration.
double shrinkage_log_t(int n_live);

EvidenceEstimate run_nested(const Model& model, const NsConfig& cfg);

struct PosteriorSummary {
    std::vector<WeightedSample> samples;
    /// Weighted means of `Model::report` applied to every sample.
    ParameterVector mean;
    ParameterVector stddev;
};

std::vector<WeightedSample> posterior_samples(const EvidenceEstimate& estimate);
PosteriorSummary summarize_posterior(const EvidenceEstimate& estimate, const Model& model);

/// Tab-separated trace: header line then k, ln chi, ln L0, ln Z, delta ln Z per iteration.
void write_trace(const EvidenceEstimate& estimate, const std::filesystem::path& path);

}  // namespace bayesev
