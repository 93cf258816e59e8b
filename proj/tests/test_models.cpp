#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bayesev/datagen.hpp"
#include "bayesev/models.hpp"

using namespace bayesev;

TEST_CASE("design matrix") {
    const std::vector<double> two{2.0};
    const auto a = design_matrix(two, 3);
    REQUIRE(a.rows() == 1);
    REQUIRE(a.cols() == 3);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(0, 1) == 2.0);
    CHECK(a(0, 2) == 4.0);

    const std::vector<double> xs{-2.0, 0.0, 2.0};
    const auto ones = design_matrix(xs, 1);
    CHECK(ones.cols() == 1);
    CHECK(ones.col(0).isOnes());
    const auto lin = design_matrix(xs, 2);
    CHECK(lin.col(0).isOnes());
    CHECK(lin(0, 1) == -2.0);
    CHECK(lin(1, 1) == 0.0);
    CHECK(lin(2, 1) == 2.0);

    CHECK_THROWS_AS(design_matrix(xs, 0), DomainError);
    CHECK_THROWS_AS(design_matrix(std::vector<double>{}, 2), DomainError);
}

TEST_CASE("property: design columns are powers of the abscissae") {
    const Dataset d = generate_polynomial(PolyGenSpec::canonical(4));
    const auto f = design_matrix(d.abscissae, 7);
    for (int n = 0; n < 7; ++n) {
        for (std::size_t i = 0; i < d.count(); ++i) {
            CHECK(f(static_cast<Eigen::Index>(i), n) == doctest::Approx(std::pow(d.abscissae[i], n)).epsilon(1e-14));
        }
    }
}

TEST_CASE("polynomial log-likelihood") {
    SUBCASE("zero residuals") {
        const std::vector<double> w{0.5, -1.0, 0.25};
        Dataset d;
        for (double x = -1.0; x <= 1.0; x += 0.25) {
            d.abscissae.push_back(x);
            d.ordinates.push_back(evaluate_polynomial(w, x));
        }
        for (double gamma : {0.1, 1.0, 7.0}) {
            CHECK(poly_log_likelihood(d, w, gamma) ==
                  doctest::Approx(0.5 * static_cast<double>(d.count()) * std::log(gamma / (2 * M_PI))));
        }
    }
    SUBCASE("single point at zero") {
        const Dataset d{{0.0}, {0.0}};
        const std::vector<double> w{0.0};
        CHECK(poly_log_likelihood(d, w, 1.0) == doctest::Approx(-0.5 * std::log(2 * M_PI)));
    }
    SUBCASE("canonical data against a residual-sum formula") {
        const Dataset d = generate_polynomial(PolyGenSpec::canonical(1));
        const std::vector<double> w{0, 0, 0, 0, 0, 1};
        const double gamma = 0.25;
        double ss = 0.0;
        for (std::size_t i = 0; i < d.count(); ++i) {
            const double r = d.ordinates[i] - std::pow(d.abscissae[i], 5);
            ss += r * r;
        }
        const double expected = 0.5 * 40 * std::log(gamma / (2 * M_PI)) - 0.5 * gamma * ss;
        CHECK(std::abs(poly_log_likelihood(d, w, gamma) - expected) < 1e-10);
    }
    SUBCASE("errors") {
        const Dataset d{{0.0, 1.0}, {0.0, 1.0}};
        const std::vector<double> w{0.0, 1.0};
        CHECK_THROWS_AS(poly_log_likelihood(d, w, 0.0), DomainError);
        CHECK_THROWS_AS(poly_log_likelihood(d, w, -1.0), DomainError);
    }
}

TEST_CASE("property: polynomial log-likelihood ignores point order") {
    Dataset d = generate_polynomial(PolyGenSpec::canonical(2));
    const std::vector<double> w{0.1, -0.3, 0.0, 0.2, 0.0, 0.9};
    const double before = poly_log_likelihood(d, w, 0.3);
    RngHandle rng(4);
    std::vector<std::size_t> perm(d.count());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    Dataset p;
    for (auto i : perm) {
        p.abscissae.push_back(d.abscissae[i]);
        p.ordinates.push_back(d.ordinates[i]);
    }
    CHECK(poly_log_likelihood(p, w, 0.3) == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("mixture log-likelihood") {
    const Dataset d = generate_gmm(GmmGenSpec::easy(3));

    SUBCASE("single component is a sum of Gaussian log densities") {
        const MixtureParams p{{0.4}, {1.3}, {1.0}};
        double expected = 0.0;
        for (double y : d.ordinates) expected += gaussian_log_pdf(y, {0.4, 1.0 / (1.3 * 1.3)});
        CHECK(gmm_log_likelihood(d, p) == doctest::Approx(expected).epsilon(1e-13));
        const std::vector<double> theta{0.4, 1.3};
        CHECK(gmm_log_likelihood(d, theta, 1) == doctest::Approx(expected).epsilon(1e-13));
    }
    SUBCASE("duplicate components collapse") {
        const MixtureParams one{{0.4}, {1.3}, {1.0}};
        const MixtureParams two{{0.4, 0.4}, {1.3, 1.3}, {0.27, 0.73}};
        CHECK(gmm_log_likelihood(d, two) == doctest::Approx(gmm_log_likelihood(d, one)).epsilon(1e-13));
    }
    SUBCASE("direct evaluation on 20 points") {
        RngHandle rng(8);
        Dataset small;
        small.ordinates.assign(d.ordinates.begin(), d.ordinates.begin() + 20);
        for (int trial = 0; trial < 10; ++trial) {
            MixtureParams p;
            const auto w = sample_dirichlet(rng, {{1.0, 1.0, 1.0}});
            for (int s = 0; s < 3; ++s) {
                p.means.push_back(sample_uniform(rng, -2, 4));
                p.sigmas.push_back(sample_uniform(rng, 0.3, 2));
            }
            p.weights = w;
            double direct = 0.0;
            for (double y : small.ordinates) {
                double mix = 0.0;
                for (int s = 0; s < 3; ++s) {
                    const double z = (y - p.means[s]) / p.sigmas[s];
                    mix += p.weights[s] * std::exp(-0.5 * z * z) / (p.sigmas[s] * std::sqrt(2 * M_PI));
                }
                direct += std::log(mix);
            }
            CHECK(gmm_log_likelihood(small, p) == doctest::Approx(direct).epsilon(1e-12));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(gmm_log_likelihood(d, MixtureParams{{0, 1}, {1, 0}, {0.5, 0.5}}), DomainError);
        CHECK_THROWS_AS(gmm_log_likelihood(d, MixtureParams{{0, 1}, {1, 1}, {0.5, 0.6}}), DomainError);
        CHECK_THROWS_AS(gmm_log_likelihood(d, MixtureParams{{0, 1}, {1, 1}, {1.2, -0.2}}), DomainError);
        const std::vector<double> bad{0.0, 1.0, 1.0, 1.0, 1.5};
        CHECK_THROWS_AS(gmm_log_likelihood(d, bad, 2), DomainError);
    }
}

TEST_CASE("property: mixture log-likelihood is label invariant") {
    const Dataset d = generate_gmm(GmmGenSpec::hard(5));
    const MixtureParams p{{-1.0, 0.2, 1.4}, {0.4, 0.6, 0.3}, {0.2, 0.5, 0.3}};
    const double base = gmm_log_likelihood(d, p);
    std::vector<int> perm{0, 1, 2};
    while (std::next_permutation(perm.begin(), perm.end())) {
        MixtureParams q;
        for (int s : perm) {
            q.means.push_back(p.means[s]);
            q.sigmas.push_back(p.sigmas[s]);
            q.weights.push_back(p.weights[s]);
        }
        CHECK(gmm_log_likelihood(d, q) == doctest::Approx(base).epsilon(1e-13));
    }
}

TEST_CASE("property: dominant weight does not underflow") {
    const Dataset d = generate_gmm(GmmGenSpec::easy(1));
    const MixtureParams p{{0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}, {1.0 - 1e-300, 5e-301, 5e-301}};
    const double v = gmm_log_likelihood(d, p);
    CHECK(std::isfinite(v));
}

TEST_CASE("prior transform") {
    const PriorBox box{{-1.0, 0.0, 2.0}, {1.0, 4.0, 3.0}};
    const std::vector<double> zeros(3, 0.0), halves(3, 0.5);
    CHECK(prior_transform(zeros, box) == std::vector<double>{-1.0, 0.0, 2.0});
    CHECK(prior_transform(halves, box) == std::vector<double>{0.0, 2.0, 2.5});
    const std::vector<double> outside{0.5, 1.5, 0.5};
    CHECK_THROWS_AS(prior_transform(outside, box), DomainError);
    const std::vector<double> short_u{0.5};
    CHECK_THROWS_AS(prior_transform(short_u, box), DomainError);
    CHECK_THROWS_AS(PriorBox({{1.0}, {1.0}}).validate(), DomainError);
}

TEST_CASE("property: mixture weights decode onto the simplex") {
    const Dataset d = generate_gmm(GmmGenSpec::easy(2));
    RngHandle rng(6);
    for (int S : {1, 2, 3, 5}) {
        const GmmModel model(d, S);
        std::vector<double> u(model.dimension()), theta(model.dimension());
        for (int trial = 0; trial < 1000; ++trial) {
            for (double& v : u) v = rng.uniform01();
            model.transform(u, theta);
            const auto p = decode_mixture(theta, S);
            CHECK(std::abs(std::accumulate(p.weights.begin(), p.weights.end(), 0.0) - 1.0) < 1e-12);
            for (double w : p.weights) CHECK(w >= 0.0);
        }
    }
}

TEST_CASE("property: decoded weights are uniform on the simplex") {
    // the first weight of a flat Dirichlet on three components is Beta(1, 2): mean 1/3
    const Dataset d = generate_gmm(GmmGenSpec::easy(2));
    const GmmModel model(d, 3);
    RngHandle rng(12);
    std::vector<double> u(model.dimension()), theta(model.dimension());
    double s1 = 0.0, s3 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        for (double& v : u) v = rng.uniform01();
        model.transform(u, theta);
        const auto p = decode_mixture(theta, 3);
        s1 += p.weights[0];
        s3 += p.weights[2];
    }
    const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 4.0 / n);  // Beta(1,2) sd / sqrt(n)
    CHECK(std::abs(s1 / n - 1.0 / 3.0) < 4 * se);
    CHECK(std::abs(s3 / n - 1.0 / 3.0) < 4 * se);
}

TEST_CASE("model defaults and reporting") {
    const Dataset poly = generate_polynomial(PolyGenSpec::canonical(1));
    const PolynomialModel pm(poly, 6);
    CHECK(pm.dimension() == 7);
    CHECK(pm.prior().lower.front() == -10.0);
    CHECK(pm.prior().upper.front() == 10.0);
    CHECK(pm.prior().lower.back() == 0.01);
    CHECK(pm.prior().upper.back() == 10.0);
    const std::vector<double> theta{0, 0, 0, 0, 0, 1, 0.25};
    const auto rep = pm.report(theta);
    CHECK(rep.back() == doctest::Approx(2.0));
    CHECK(pm.report_names().back() == "sigma");

    const Dataset mix = generate_gmm(GmmGenSpec::easy(1));
    const GmmModel gm(mix, 3);
    CHECK(gm.dimension() == 8);
    const double lo = *std::min_element(mix.ordinates.begin(), mix.ordinates.end());
    CHECK(gm.prior().lower[0] == doctest::Approx(lo - 2));
    CHECK(gm.prior().lower[3] == 0.05);
    CHECK(gm.prior().upper[3] == 5.0);
    // unsorted components come back sorted by mean with all three weights
    const std::vector<double> t{3.0, -1.0, 1.0, 0.7, 0.4, 0.3, 0.35, 0.3};
    const auto r = gm.report(t);
    REQUIRE(r.size() == 9);
    CHECK(r[0] == -1.0);
    CHECK(r[1] == 1.0);
    CHECK(r[2] == 3.0);
    CHECK(r[3] == 0.4);
    CHECK(r[5] == 0.7);
    CHECK(r[6] == doctest::Approx(0.3));
    CHECK(r[8] == doctest::Approx(0.35));
    CHECK_THROWS_AS(GmmModel(mix, 0), DomainError);
    CHECK_THROWS_AS(PolynomialModel(mix, 2), DomainError);
}

TEST_CASE("property: relabelling sorts means and keeps the likelihood") {
    const Dataset data = generate_gmm(GmmGenSpec::easy(1));
    const GmmModel model(data, 4);
    RngHandle rng(8);
    const std::size_t d = model.dimension();
    std::vector<double> u(d), theta(d), folded_theta(d);
    for (int trial = 0; trial < 500; ++trial) {
        for (double& v : u) v = rng.uniform01();
        model.transform(u, theta);
        auto folded = u;
        model.canonicalize(folded);
        for (double v : folded) CHECK((v >= 0.0 && v <= 1.0));
        model.transform(folded, folded_theta);
        CHECK(std::is_sorted(folded_theta.begin(), folded_theta.begin() + 4));
        CHECK(model.log_likelihood(folded_theta) ==
              doctest::Approx(model.log_likelihood(theta)).epsilon(1e-12));
        // same mixture, relabelled
        const auto before = model.report(theta), after = model.report(folded_theta);
        for (std::size_t j = 0; j < before.size(); ++j) CHECK(after[j] == doctest::Approx(before[j]).epsilon(1e-10));
        // already canonical points stay put
        auto again = folded;
        model.canonicalize(again);
        CHECK(again == folded);
    }
    // one component: nothing to relabel
    const GmmModel single(data, 1);
    std::vector<double> one{0.3, 0.6};
    single.canonicalize(one);
    CHECK(one == std::vector<double>{0.3, 0.6});
}

TEST_CASE("property: relabelling keeps the weight coordinates uniform") {
    const GmmModel model(generate_gmm(GmmGenSpec::easy(1)), 3);
    RngHandle rng(9);
    const int n = 4000;
    std::vector<std::vector<double>> coords(2);
    std::vector<double> u(model.dimension());
    for (int i = 0; i < n; ++i) {
        for (double& v : u) v = rng.uniform01();
        model.canonicalize(u);
        coords[0].push_back(u[6]);
        coords[1].push_back(u[7]);
    }
    for (auto& c : coords) {
        std::sort(c.begin(), c.end());
        double ks = 0.0;
        for (int i = 0; i < n; ++i) ks = std::max({ks, (i + 1.0) / n - c[i], c[i] - i / static_cast<double>(n)});
        CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));  // 1% level
    }
}
