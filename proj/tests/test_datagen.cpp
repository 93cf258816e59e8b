#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bayesev/datagen.hpp"

using namespace bayesev;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "bayesev_test_datagen";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }
}  // namespace

TEST_CASE("canonical polynomial data") {
    const auto spec = PolyGenSpec::canonical(3);
    CHECK(spec.coefficients == std::vector<double>{0, 0, 0, 0, 0, 1});
    CHECK(spec.interval_lo == -2.0);
    CHECK(spec.interval_hi == 2.0);
    CHECK(spec.n_points == 40);
    CHECK(spec.noise_sigma == 2.0);
    const Dataset d = generate_polynomial(spec);
    REQUIRE(d.count() == 40);
    CHECK(d.abscissae.front() == -2.0);
    CHECK(d.abscissae.back() == 2.0);
    for (std::size_t i = 1; i < d.count(); ++i) {
        CHECK(d.abscissae[i] - d.abscissae[i - 1] == doctest::Approx(4.0 / 39));
    }
    CHECK(generate_polynomial(spec) == d);
    CHECK_FALSE(generate_polynomial(PolyGenSpec::canonical(4)) == d);
}

TEST_CASE("vanishing noise reproduces the curve") {
    PolyGenSpec spec = PolyGenSpec::canonical(1);
    spec.noise_sigma = 1e-300;
    const Dataset d = generate_polynomial(spec);
    for (std::size_t i = 0; i < d.count(); ++i) {
        CHECK(std::abs(d.ordinates[i] - std::pow(d.abscissae[i], 5)) < 1e-9);
    }
}

TEST_CASE("noise variance") {
    PolyGenSpec spec = PolyGenSpec::canonical(5);
    spec.n_points = 10000;
    const Dataset d = generate_polynomial(spec);
    double ss = 0.0;
    for (std::size_t i = 0; i < d.count(); ++i) {
        const double r = d.ordinates[i] - evaluate_polynomial(spec.coefficients, d.abscissae[i]);
        ss += r * r;
    }
    CHECK(std::abs(ss / 10000 / 4.0 - 1.0) < 0.05);
}

TEST_CASE("mixture data sets") {
    const auto easy = GmmGenSpec::easy(1);
    CHECK(easy.means == std::vector<double>{-1, 1, 3});
    CHECK(easy.sigmas == std::vector<double>{0.4, 0.3, 0.7});
    CHECK(easy.weights == std::vector<double>{0.3, 0.35, 0.35});
    CHECK(easy.n_points == 300);
    const auto hard = GmmGenSpec::hard(1);
    CHECK(hard.means == std::vector<double>{-1, 0, 1});
    CHECK(hard.sigmas == easy.sigmas);
    CHECK(hard.weights == easy.weights);
    CHECK(hard.n_points == 600);
    const Dataset d = generate_gmm(easy);
    CHECK(d.count() == 300);
    CHECK_FALSE(d.has_abscissae());
    CHECK(generate_gmm(easy) == d);
}

TEST_CASE("single component sample mean") {
    const GmmGenSpec spec{{1.5}, {0.4}, {1.0}, 5000, 21};
    const Dataset d = generate_gmm(spec);
    const double mean = std::accumulate(d.ordinates.begin(), d.ordinates.end(), 0.0) / 5000;
    CHECK(std::abs(mean - 1.5) < 3 * 0.4 / std::sqrt(5000.0));
}

TEST_CASE("property: component counts follow the weights") {
    // well separated components so each draw can be attributed by position
    const std::vector<double> w{0.2, 0.5, 0.3};
    const GmmGenSpec spec{{-100, 0, 100}, {1, 1, 1}, w, 100000, 3};
    const Dataset d = generate_gmm(spec);
    std::vector<int> counts(3, 0);
    for (double y : d.ordinates) ++counts[y < -50 ? 0 : (y < 50 ? 1 : 2)];
    for (int s = 0; s < 3; ++s) {
        const double sd = std::sqrt(100000 * w[s] * (1 - w[s]));
        CHECK(std::abs(counts[s] - 100000 * w[s]) < 3 * sd);
    }
}

TEST_CASE("invalid specs") {
    PolyGenSpec p = PolyGenSpec::canonical(1);
    p.n_points = 0;
    CHECK_THROWS_AS(generate_polynomial(p), DomainError);
    p = PolyGenSpec::canonical(1);
    p.noise_sigma = 0;
    CHECK_THROWS_AS(generate_polynomial(p), DomainError);
    p = PolyGenSpec::canonical(1);
    p.interval_lo = 3;
    CHECK_THROWS_AS(generate_polynomial(p), DomainError);
    CHECK_THROWS_AS(generate_gmm({{0, 1}, {1}, {0.5, 0.5}, 10, 1}), DomainError);
    CHECK_THROWS_AS(generate_gmm({{0, 1}, {1, 1}, {0.5, 0.6}, 10, 1}), DomainError);
    CHECK_THROWS_AS(generate_gmm({{0, 1}, {1, -1}, {0.5, 0.5}, 10, 1}), DomainError);
}

TEST_CASE("dataset files") {
    SUBCASE("round trip at full precision") {
        const Dataset poly = generate_polynomial(PolyGenSpec::canonical(9));
        write_dataset(poly, scratch("poly.tsv"));
        CHECK(read_dataset(scratch("poly.tsv")) == poly);
        const Dataset mix = generate_gmm(GmmGenSpec::easy(9));
        write_dataset(mix, scratch("mix.tsv"));
        CHECK(read_dataset(scratch("mix.tsv")) == mix);
    }
    SUBCASE("empty file names the line") {
        write_file(scratch("empty.tsv"), "");
        CHECK_THROWS_WITH_AS(read_dataset(scratch("empty.tsv")), doctest::Contains("empty.tsv:1: empty file"),
                             DatasetFormatError);
    }
    SUBCASE("header only") {
        write_file(scratch("header.tsv"), "# x\ty\n");
        CHECK_THROWS_WITH_AS(read_dataset(scratch("header.tsv")), doctest::Contains("zero data rows"),
                             DatasetFormatError);
    }
    SUBCASE("malformed rows name the line") {
        write_file(scratch("bad.tsv"), "# x\ty\n1\t2\n3\tabc\n");
        CHECK_THROWS_WITH_AS(read_dataset(scratch("bad.tsv")), doctest::Contains("bad.tsv:3"), DatasetFormatError);
        write_file(scratch("ragged.tsv"), "1\t2\n3\n");
        CHECK_THROWS_WITH_AS(read_dataset(scratch("ragged.tsv")), doctest::Contains("ragged.tsv:2"),
                             DatasetFormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH(read_dataset(scratch("nope.tsv")), doctest::Contains("nope.tsv"));
    }
}
