#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bayesev/datagen.hpp"
#include "bayesev/nested_sampling.hpp"
#include "poly_evidence.hpp"
#include "toy_models.hpp"

using namespace bayesev;
using toy::ConstantModel;
using toy::GaussianToy;

namespace {

/// Reasonable likelihood for the first `budget` calls, -inf afterwards.
class ExhaustingModel final : public Model {
public:
    explicit ExhaustingModel(int budget) : budget_(budget), box_{{0.0}, {1.0}} {}
    std::string id() const override { return "exhausting"; }
    std::size_t dimension() const override { return 1; }
    std::vector<std::string> parameter_names() const override { return {"x"}; }
    const PriorBox& prior() const override { return box_; }
    double log_likelihood(std::span<const double> theta) const override {
        return ++calls_ <= budget_ ? -theta[0] * theta[0] : -INFINITY;
    }

private:
    int budget_;
    mutable int calls_ = 0;
    PriorBox box_;
};

/// Only the exact start point has log-likelihood 0; everything else -1.
class SpikeModel final : public Model {
public:
    explicit SpikeModel(double at) : at_(at), box_{{0.0, 0.0}, {1.0, 1.0}} {}
    std::string id() const override { return "spike"; }
    std::size_t dimension() const override { return 2; }
    std::vector<std::string> parameter_names() const override { return {"a", "b"}; }
    const PriorBox& prior() const override { return box_; }
    double log_likelihood(std::span<const double> theta) const override {
        return theta[0] == at_ && theta[1] == at_ ? 0.0 : -1.0;
    }

private:
    double at_;
    PriorBox box_;
};

LivePoint point_at(const Model& m, std::vector<double> u) {
    LivePoint p;
    p.u = std::move(u);
    p.theta.resize(p.u.size());
    m.transform(p.u, p.theta);
    p.log_like = m.log_likelihood(p.theta);
    p.tiebreak = 0.5;
    return p;
}

/// Largest gap between the empirical CDF of `v` and the uniform CDF.
double ks_uniform(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        d = std::max({d, (i + 1) / n - v[i], v[i] - i / n});
    }
    return d;
}

}  // namespace

TEST_CASE("shrinkage factor") {
    CHECK(shrinkage_log_t(36) == doctest::Approx(std::log(36.0 / 37.0)).epsilon(1e-14));
    CHECK(shrinkage_log_t(36) == doctest::Approx(-0.027399).epsilon(1e-4));
    CHECK(shrinkage_log_t(1) == doctest::Approx(std::log(0.5)));
    CHECK_THROWS_AS(shrinkage_log_t(0), DomainError);

    // E[ln max of N uniforms] = -1/N
    RngHandle rng(1);
    const int n = 10, trials = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int t = 0; t < trials; ++t) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m = std::max(m, rng.uniform01());
        const double l = std::log(m);
        s += l;
        s2 += l * l;
    }
    const double mean = s / trials, se = std::sqrt((s2 / trials - mean * mean) / trials);
    CHECK(std::abs(mean + 1.0 / n) < 4 * se);
}

TEST_CASE("constant likelihood") {
    for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
        for (std::size_t dim : {1u, 3u}) {
            CAPTURE(seed);
            CAPTURE(dim);
            NsConfig cfg;
            cfg.n_live = 20;
            cfg.seed = seed;
            const auto est = run_nested(ConstantModel(std::log(0.37), dim), cfg);
            CHECK(std::abs(est.log_z - std::log(0.37)) < 1e-6);
            CHECK(std::abs(est.info_h) < 1e-6);
            // dead points carry h_k / Z, all close to uniform
            const auto samples = posterior_samples(est);
            const double expected = 1.0 / static_cast<double>(cfg.n_live);
            CHECK(samples.front().weight == doctest::Approx(expected / (1 + 1.0 / cfg.n_live)).epsilon(0.05));
        }
    }
}

TEST_CASE("conjugate toy evidence and posterior mean") {
    const GaussianToy toy(0.3, 0.1, 5.0);
    int within = 0;
    const int runs = 20;
    for (int r = 0; r < runs; ++r) {
        NsConfig cfg;
        cfg.n_live = 100;
        cfg.seed = 1000 + static_cast<std::uint64_t>(r);
        const auto est = run_nested(toy, cfg);
        within += std::abs(est.log_z - toy.analytic_log_z()) < 3 * est.log_z_uncertainty;
        const auto post = summarize_posterior(est, toy);
        CHECK(std::abs(post.mean[0] - 0.3) < 3 * 0.1);
        CHECK(post.stddev[0] == doctest::Approx(0.1).epsilon(0.2));
    }
    CHECK(within >= runs - 1);
}

TEST_CASE("polynomial evidence against semi-analytic integration") {
    const Dataset data = generate_polynomial(PolyGenSpec::canonical(7));
    for (int order : {1, 3, 6}) {
        CAPTURE(order);
        NsConfig cfg;
        cfg.n_live = 400;
        cfg.seed = 5;
        const auto est = run_nested(PolynomialModel(data, order), cfg);
        const double exact = oracle::polynomial_log_evidence(data, order);
        CAPTURE(est.log_z);
        CAPTURE(exact);
        CHECK(std::abs(est.log_z - exact) < 3 * est.log_z_uncertainty);
    }
}

TEST_CASE("property: run invariants") {
    const Dataset data = generate_polynomial(PolyGenSpec::canonical(3));
    const PolynomialModel model(data, 4);
    NsConfig cfg;
    cfg.seed = 17;
    const auto est = run_nested(model, cfg);
    const double log_t = shrinkage_log_t(cfg.n_live);
    REQUIRE(!est.trace.empty());
    for (std::size_t i = 0; i < est.trace.size(); ++i) {
        const auto& r = est.trace[i];
        CHECK(r.k == static_cast<std::int64_t>(i + 1));
        CHECK(r.log_prior_mass == doctest::Approx(static_cast<double>(r.k) * log_t).epsilon(1e-12));
        CHECK(r.delta_log_z >= 0.0);
        if (i > 0) {
            CHECK(r.log_prior_mass < est.trace[i - 1].log_prior_mass);
            CHECK(r.log_z >= est.trace[i - 1].log_z);
            // every replacement beat the constraint it was drawn under
            CHECK(r.log_like >= est.trace[i - 1].log_like);
        }
    }
    CHECK(est.info_h >= 0.0);
    CHECK(est.log_z_uncertainty == doctest::Approx(std::sqrt(est.info_h / cfg.n_live)));
    CHECK(est.n_iterations > cfg.stop_info_factor * cfg.n_live * est.info_h);
    CHECK(est.converged);
    const auto samples = posterior_samples(est);
    double total = 0.0;
    for (const auto& s : samples) total += s.weight;
    CHECK(std::abs(total - 1.0) < 1e-10);
    CHECK(samples.size() == static_cast<std::size_t>(est.n_iterations + cfg.n_live));

    // same seed, same run
    const auto again = run_nested(model, cfg);
    CHECK(again.log_z == est.log_z);
    CHECK(again.n_iterations == est.n_iterations);
}

TEST_CASE("explore") {
    SUBCASE("unconstrained walk samples the cube uniformly") {
        const ConstantModel flat(0.0, 2);
        RngHandle rng(3);
        LivePoint p = point_at(flat, {0.2, 0.9});
        std::vector<double> steps{0.3, 0.3};
        std::vector<double> xs, ys;
        for (int i = 0; i < 2000; ++i) {
            p = explore(flat, p, -INFINITY, steps, 20, 0.5, rng).point;
            xs.push_back(p.u[0]);
            ys.push_back(p.u[1]);
        }
        const double critical = 1.628 / std::sqrt(2000.0);  // 1% level
        CHECK(ks_uniform(xs) < critical);
        CHECK(ks_uniform(ys) < critical);
    }
    SUBCASE("result always satisfies the constraint") {
        const Dataset data = generate_polynomial(PolyGenSpec::canonical(2));
        const PolynomialModel model(data, 3);
        RngHandle rng(4);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> u(4);
            for (double& v : u) v = rng.uniform01();
            const LivePoint start = point_at(model, u);
            std::vector<double> steps(4, 0.1);
            const double constraint = start.log_like - 1e-9;
            const auto res = explore(model, start, constraint, steps, 20, 0.5, rng);
            CHECK(res.point.log_like > constraint);
            CHECK(res.accepted + res.rejected == 20);
        }
    }
    SUBCASE("all rejections shrink every step") {
        const SpikeModel spike(0.5);
        RngHandle rng(5);
        const LivePoint start = point_at(spike, {0.5, 0.5});
        std::vector<double> steps{0.2, 0.05};
        const auto before = steps;
        const auto res = explore(spike, start, -0.5, steps, 20, 0.5, rng);
        CHECK(res.accepted == 0);
        CHECK(steps[0] < before[0]);
        CHECK(steps[1] < before[1]);
        CHECK(steps[0] == doctest::Approx(before[0] * std::exp(-1.0 / 20)));
    }
    SUBCASE("all acceptances grow every step") {
        const ConstantModel flat(0.0, 2);
        RngHandle rng(6);
        std::vector<double> steps{0.01, 0.02};
        explore(flat, point_at(flat, {0.5, 0.5}), -INFINITY, steps, 10, 0.5, rng);
        CHECK(steps[0] == doctest::Approx(0.01 * std::exp(0.1)));
        CHECK(steps[1] == doctest::Approx(0.02 * std::exp(0.1)));
    }
}

TEST_CASE("failures") {
    SUBCASE("walk finds nothing above the constraint") {
        NsConfig cfg;
        cfg.n_live = 10;
        cfg.seed = 1;
        try {
            run_nested(ExhaustingModel(10), cfg);
            FAIL("expected ExplorationFailure");
        } catch (const ExplorationFailure& e) {
            CHECK(std::isfinite(e.constraint()));
            CHECK(std::string(e.what()).find("log-likelihood above") != std::string::npos);
        }
    }
    SUBCASE("iteration cap returns the partial run") {
        NsConfig cfg;
        cfg.max_iterations = 10;
        cfg.seed = 1;
        const Dataset data = generate_polynomial(PolyGenSpec::canonical(1));
        try {
            run_nested(PolynomialModel(data, 2), cfg);
            FAIL("expected IterationLimitReached");
        } catch (const IterationLimitReached& e) {
            CHECK(e.partial().n_iterations == 10);
            CHECK_FALSE(e.partial().converged);
            CHECK(e.partial().trace.size() == 10);
        }
    }
    SUBCASE("invalid configuration") {
        const ConstantModel flat(0.0, 1);
        NsConfig cfg;
        cfg.n_live = 1;
        CHECK_THROWS_AS(run_nested(flat, cfg), DomainError);
        cfg = NsConfig{};
        cfg.steps_per_replacement = 0;
        CHECK_THROWS_AS(run_nested(flat, cfg), DomainError);
        cfg = NsConfig{};
        cfg.target_acceptance = 1.0;
        CHECK_THROWS_AS(run_nested(flat, cfg), DomainError);
        cfg = NsConfig{};
        cfg.initial_step_sizes = {0.1, 0.1};
        CHECK_THROWS_AS(run_nested(flat, cfg), DomainError);
    }
    SUBCASE("empty estimate") { CHECK_THROWS_AS(posterior_samples(EvidenceEstimate{}), DomainError); }
}

TEST_CASE("trace file") {
    NsConfig cfg;
    cfg.n_live = 10;
    cfg.seed = 2;
    const auto est = run_nested(GaussianToy(0.0, 0.5, 2.0), cfg);
    const auto path = std::filesystem::temp_directory_path() / "bayesev_trace_test.tsv";
    write_trace(est, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "k\tlog_prior_mass\tlog_like\tlog_z\tdelta_log_z");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == est.trace.size());
}
