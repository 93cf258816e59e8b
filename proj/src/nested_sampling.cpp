#include "bayesev/nested_sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <fstream>
#include <limits>

#include "bayesev/datagen.hpp"

namespace bayesev {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinStep = 1e-12;
constexpr double kMaxStep = 1.0;

double reflect_unit(double v) {
    v = std::fmod(std::abs(v), 2.0);
    return v > 1.0 ? 2.0 - v : v;
}

LivePoint draw_from_prior(const Model& model, RngHandle& rng) {
    LivePoint p;
    const std::size_t d = model.dimension();
    p.u.resize(d);
    p.theta.resize(d);
    for (double& u : p.u) {
        u = rng.uniform01();
    }
    model.canonicalize(p.u);
    model.transform(p.u, p.theta);
    p.log_like = model.log_likelihood(p.theta);
    p.tiebreak = rng.uniform01();
    if (!std::isfinite(p.log_like)) {
        throw DomainError("log-likelihood is not finite on the prior support");
    }
    return p;
}

/// Running log-evidence and information, updated one weighted point at a time.
struct Accumulator {
    double log_z = kNegInf;
    double info_h = 0.0;

    void add(double log_weight, double log_like) {
        const double log_z_new = log_add_exp(log_z, log_weight);
        if (log_z == kNegInf) {
            info_h = std::exp(log_weight - log_z_new) * log_like - log_z_new;
        } else {
            info_h = std::exp(log_weight - log_z_new) * log_like +
                     std::exp(log_z - log_z_new) * (info_h + log_z) - log_z_new;
        }
        log_z = log_z_new;
    }
};

struct DeadPoint {
    ParameterVector theta;
    double log_like;
    double log_weight;
};

EvidenceEstimate finish(const std::vector<DeadPoint>& dead, const std::vector<LivePoint>& live,
                        double log_prior_mass, Accumulator acc, std::vector<TraceRecord> trace,
                        std::int64_t iterations, int n_live) {
    const double live_log_share = log_prior_mass - std::log(static_cast<double>(live.size()));
    for (const auto& p : live) {
        acc.add(p.log_like + live_log_share, p.log_like);
    }
    EvidenceEstimate est;
    est.log_z = acc.log_z;
    est.info_h = acc.info_h;
    est.log_z_uncertainty = std::sqrt(std::max(acc.info_h, 0.0) / static_cast<double>(n_live));
    est.n_iterations = iterations;
    est.n_live = n_live;
    est.trace = std::move(trace);
    est.samples.reserve(dead.size() + live.size());
    double total = 0.0;
    for (const auto& d : dead) {
        est.samples.push_back({d.theta, d.log_like, std::exp(d.log_weight - acc.log_z)});
        total += est.samples.back().weight;
    }
    for (const auto& p : live) {
        est.samples.push_back({p.theta, p.log_like, std::exp(p.log_like + live_log_share - acc.log_z)});
        total += est.samples.back().weight;
    }
    for (auto& s : est.samples) {
        s.weight /= total;
    }
    return est;
}

Eigen::MatrixXd live_shape(const std::vector<LivePoint>& live) {
    const auto d = static_cast<Eigen::Index>(live.front().u.size());
    const auto n = static_cast<double>(live.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& p : live) mean += Eigen::Map<const Eigen::VectorXd>(p.u.data(), d);
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& p : live) {
        const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(p.u.data(), d) - mean;
        cov.noalias() += r * r.transpose();
    }
    cov /= n;
    cov.diagonal().array() += 1e-14;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    return llt.matrixL();
}

}  // namespace

void NsConfig::validate(std::size_t dimension) const {
    if (n_live < 2) throw DomainError("n_live must be at least 2");
    if (steps_per_replacement < 1) throw DomainError("steps_per_replacement must be at least 1");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
        throw DomainError("target_acceptance must lie in (0, 1)");
    }
    if (max_iterations < 1) throw DomainError("max_iterations must be positive");
    if (!(stop_delta_logz > 0.0)) throw DomainError("stop_delta_logz must be positive");
    if (!(stop_info_factor >= 0.0)) throw DomainError("stop_info_factor must be non-negative");
    if (retry_budget < 0) throw DomainError("retry_budget must be non-negative");
    if (!initial_step_sizes.empty()) {
        if (initial_step_sizes.size() != dimension) {
            throw DomainError("initial_step_sizes must have one entry per parameter");
        }
        for (double s : initial_step_sizes) {
            if (!(s > 0.0)) throw DomainError("step sizes must be positive");
        }
    }
}

ExplorationFailure::ExplorationFailure(double constraint, std::int64_t iteration)
    : std::runtime_error("exploration failed to find a point with log-likelihood above " +
                         format_double(constraint) + " at iteration " + std::to_string(iteration)),
      constraint_(constraint) {}

IterationLimitReached::IterationLimitReached(EvidenceEstimate partial)
    : std::runtime_error("nested sampling reached max_iterations (" + std::to_string(partial.n_iterations) +
                         ") before its stopping conditions held"),
      partial_(std::move(partial)) {}

double shrinkage_log_t(int n_live) {
    if (n_live < 1) {
        throw DomainError("n_live must be at least 1");
    }
    return -std::log1p(1.0 / static_cast<double>(n_live));
}

ExploreResult explore(const Model& model, const LivePoint& start, double log_l_min, double tiebreak_min,
                      std::vector<double>& step_sizes, int n_steps, double target_acceptance,
                      RngHandle& rng, const Eigen::MatrixXd* shape) {
    const std::size_t d = model.dimension();
    if (step_sizes.size() != d || start.u.size() != d) {
        throw DomainError("dimension mismatch");
    }
    ExploreResult res{start, 0, 0};
    LivePoint trial = start;
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    // the tiebreak coordinate walks too, otherwise a long plateau starves the chain
    const double tiebreak_step = std::accumulate(step_sizes.begin(), step_sizes.end(), 0.0) / static_cast<double>(d);
    for (int step = 0; step < n_steps; ++step) {
        for (std::size_t j = 0; j < d; ++j) {
            z[static_cast<Eigen::Index>(j)] = step_sizes[j] * normal(rng.engine());
        }
        if (shape != nullptr) {
            z = (*shape) * z;
        }
        bool inside = true;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = res.point.u[j] + z[static_cast<Eigen::Index>(j)];
            if (shape == nullptr) {
                trial.u[j] = reflect_unit(v);
            } else {
                // Reflection is not symmetric for a correlated step; leaving the cube is a rejection.
                inside = inside && v >= 0.0 && v <= 1.0;
                trial.u[j] = v;
            }
        }
        if (!inside) {
            ++res.rejected;
            continue;
        }
        model.transform(trial.u, trial.theta);
        trial.log_like = model.log_likelihood(trial.theta);
        trial.tiebreak = reflect_unit(res.point.tiebreak + tiebreak_step * normal(rng.engine()));
        if (std::isfinite(trial.log_like) && trial.above(log_l_min, tiebreak_min)) {
            std::swap(res.point, trial);
            ++res.accepted;
        } else {
            ++res.rejected;
        }
    }
    const double rate = static_cast<double>(res.accepted) / static_cast<double>(n_steps);
    const double factor = rate > target_acceptance ? std::exp(1.0 / res.accepted)
                                                   : std::exp(-1.0 / res.rejected);
    for (double& s : step_sizes) {
        s = std::clamp(s * factor, kMinStep, kMaxStep);
    }
    return res;
}

EvidenceEstimate run_nested(const Model& model, const NsConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t d = model.dimension();
    cfg.validate(d);
    RngHandle rng(cfg.seed);
    const int n = cfg.n_live;

    std::vector<LivePoint> live;
    live.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        live.push_back(draw_from_prior(model, rng));
    }
    std::vector<double> steps = cfg.initial_step_sizes.empty() ? std::vector<double>(d, 1.0)
                                                               : cfg.initial_step_sizes;

    const double log_t = shrinkage_log_t(n);
    const double log_one_minus_t = -std::log1p(static_cast<double>(n));  // ln(1/(N+1))
    Accumulator acc;
    std::vector<DeadPoint> dead;
    std::vector<TraceRecord> trace;
    double log_chi = 0.0;
    std::int64_t k = 0;
    bool stopped = false;

    while (k < cfg.max_iterations) {
        ++k;
        const auto worst_it = std::min_element(live.begin(), live.end(), [](const LivePoint& a, const LivePoint& b) {
            return a.log_like < b.log_like || (a.log_like == b.log_like && a.tiebreak < b.tiebreak);
        });
        const auto worst = static_cast<std::size_t>(worst_it - live.begin());
        const double log_l0 = live[worst].log_like;
        const double tb0 = live[worst].tiebreak;

        // h_k = chi_{k-1} - chi_k = chi_{k-1} (1 - t)
        const double log_h = log_chi + log_one_minus_t;
        log_chi = static_cast<double>(k) * log_t;
        const double log_weight = log_l0 + log_h;
        const double before = acc.log_z;
        acc.add(log_weight, log_l0);
        const double delta = acc.log_z - before;
        dead.push_back({live[worst].theta, log_l0, log_weight});
        trace.push_back({k, log_chi, log_l0, acc.log_z, delta});

        bool replaced = false;
        for (int attempt = 0; attempt <= cfg.retry_budget && !replaced; ++attempt) {
            if (attempt > 0) {
                // a batch with no acceptance barely moves the adaptive steps; cut harder on retry
                for (double& s : steps) s = std::max(0.5 * s, kMinStep);
            }
            std::size_t from = rng.index(static_cast<std::size_t>(n - 1));
            if (from >= worst) {
                ++from;
            }
            const Eigen::MatrixXd shape = live_shape(live);
            auto res = explore(model, live[from], log_l0, tb0, steps, cfg.steps_per_replacement,
                               cfg.target_acceptance, rng, &shape);
            if (res.accepted > 0 && res.point.above(log_l0, tb0)) {
                // relabelling leaves the likelihood unchanged, so log_like is kept
                model.canonicalize(res.point.u);
                model.transform(res.point.u, res.point.theta);
                live[worst] = std::move(res.point);
                replaced = true;
            }
        }
        if (!replaced) {
            throw ExplorationFailure(log_l0, k);
        }

        if (delta < cfg.stop_delta_logz &&
            static_cast<double>(k) > cfg.stop_info_factor * static_cast<double>(n) * acc.info_h) {
            stopped = true;
            break;
        }
    }

    EvidenceEstimate est = finish(dead, live, log_chi, acc, std::move(trace), k, n);
    est.converged = stopped;
    est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!stopped) {
        throw IterationLimitReached(std::move(est));
    }
    return est;
}

std::vector<WeightedSample> posterior_samples(const EvidenceEstimate& estimate) {
    if (estimate.samples.empty()) {
        throw DomainError("evidence estimate has an empty trace");
    }
    return estimate.samples;
}

PosteriorSummary summarize_posterior(const EvidenceEstimate& estimate, const Model& model) {
    PosteriorSummary out;
    out.samples = posterior_samples(estimate);
    std::vector<ParameterVector> reported;
    reported.reserve(out.samples.size());
    for (const auto& s : out.samples) {
        reported.push_back(model.report(s.theta));
    }
    const std::size_t m = reported.front().size();
    out.mean.assign(m, 0.0);
    out.stddev.assign(m, 0.0);
    for (std::size_t i = 0; i < reported.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out.mean[j] += out.samples[i].weight * reported[i][j];
        }
    }
    for (std::size_t i = 0; i < reported.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double dv = reported[i][j] - out.mean[j];
            out.stddev[j] += out.samples[i].weight * dv * dv;
        }
    }
    for (double& v : out.stddev) {
        v = std::sqrt(v);
    }
    return out;
}

void write_trace(const EvidenceEstimate& estimate, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "k\tlog_prior_mass\tlog_like\tlog_z\tdelta_log_z\n";
    for (const auto& r : estimate.trace) {
        out << r.k << '\t' << format_double(r.log_prior_mass) << '\t' << format_double(r.log_like) << '\t'
            << format_double(r.log_z) << '\t' << format_double(r.delta_log_z) << '\n';
    }
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

}  // namespace bayesev
