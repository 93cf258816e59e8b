#include "doctest.h"

#include <cmath>
#include <vector>

#include <omp.h>

#include "bayesev/datagen.hpp"
#include "bayesev/kernels.hpp"

using namespace bayesev;

namespace {
struct Terms {
    std::vector<double> mean{-1.0, 1.0, 3.0};
    std::vector<double> precision{6.25, 11.1, 2.04};
    std::vector<double> log_norm;
    std::vector<double> mean_var{0.01, 0.02, 0.03};
    std::vector<double> log_weight{-1.2, -1.05, -1.05};
    Terms() {
        for (int s = 0; s < 3; ++s) log_norm.push_back(std::log(1.0 / 3) + 0.5 * std::log(precision[s] / (2 * M_PI)));
    }
};

std::vector<double> mixture_data(int n) {
    GmmGenSpec spec = GmmGenSpec::easy(4);
    spec.n_points = n;
    return generate_gmm(spec).ordinates;
}
}  // namespace

TEST_CASE("parallel kernels agree with the serial reference bit for bit") {
    // several threads even on a single core so the parallel path really splits the work
    omp_set_num_threads(4);
    const Terms t;
    for (int n : {1, 17, 5000, 40000}) {
        CAPTURE(n);
        const auto data = mixture_data(n);
        const kernels::MixtureTerms mt{t.mean, t.precision, t.log_norm};
        CHECK(kernels::parallel::mixture_log_likelihood(data, mt) == kernels::serial::mixture_log_likelihood(data, mt));

        const kernels::ResponsibilityTerms rt{t.mean, t.mean_var, t.precision, t.log_weight};
        Eigen::MatrixXd a, b;
        const double za = kernels::serial::responsibilities(data, rt, a);
        const double zb = kernels::parallel::responsibilities(data, rt, b);
        CHECK(za == zb);
        CHECK((a.array() == b.array()).all());

        PolyGenSpec ps = PolyGenSpec::canonical(2);
        ps.n_points = n;
        const Dataset pd = generate_polynomial(ps);
        const auto design = design_matrix(pd.abscissae, 6);
        const std::vector<double> w{0.1, 0.2, 0.0, -0.3, 0.0, 1.0};
        CHECK(kernels::parallel::sum_sq_residuals(design, w, pd.ordinates) ==
              kernels::serial::sum_sq_residuals(design, w, pd.ordinates));
        CHECK(kernels::sum_sq_residuals(design, w, pd.ordinates) ==
              kernels::serial::sum_sq_residuals(design, w, pd.ordinates));
    }
    omp_set_num_threads(1);
}

TEST_CASE("serial kernels against direct formulas") {
    const Terms t;
    const auto data = mixture_data(50);
    double direct = 0.0;
    for (double y : data) {
        double mix = 0.0;
        for (int s = 0; s < 3; ++s) {
            mix += std::exp(t.log_norm[s] - 0.5 * t.precision[s] * (y - t.mean[s]) * (y - t.mean[s]));
        }
        direct += std::log(mix);
    }
    CHECK(kernels::serial::mixture_log_likelihood(data, {t.mean, t.precision, t.log_norm}) ==
          doctest::Approx(direct).epsilon(1e-13));

    Eigen::MatrixXd r;
    kernels::serial::responsibilities(data, {t.mean, t.mean_var, t.precision, t.log_weight}, r);
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        CHECK(std::abs(r.row(i).sum() - 1.0) < 1e-12);
        double un[3], tot = 0;
        for (int s = 0; s < 3; ++s) {
            const double d = data[static_cast<std::size_t>(i)] - t.mean[s];
            un[s] = std::exp(t.log_weight[s] - 0.5 * t.precision[s] * (d * d + t.mean_var[s]));
            tot += un[s];
        }
        for (int s = 0; s < 3; ++s) CHECK(r(i, s) == doctest::Approx(un[s] / tot).epsilon(1e-12));
    }
}
