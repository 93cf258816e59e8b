#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "bayesev/models.hpp"

namespace bayesev {

struct PolyGenSpec {
    std::vector<double> coefficients;  // ascending powers
    double interval_lo = -2.0;
    double interval_hi = 2.0;
    int n_points = 40;
    double noise_sigma = 2.0;
    std::uint64_t seed = 0;

    void validate() const;
    /// Quintic, 40 gridded points on [-2, 2], noise sigma 2.
    static PolyGenSpec canonical(std::uint64_t seed);
};

struct GmmGenSpec {
    std::vector<double> means;
    std::vector<double> sigmas;
    std::vector<double> weights;
    int n_points = 300;
    std::uint64_t seed = 0;

    void validate() const;
    /// Three well separated components, 300 points.
    static GmmGenSpec easy(std::uint64_t seed);
    /// Same widths and ratios with means (-1, 0, 1), 600 points.
    static GmmGenSpec hard(std::uint64_t seed);
};

double evaluate_polynomial(std::span<const double> coefficients, double x);

Dataset generate_polynomial(const PolyGenSpec& spec);
Dataset generate_gmm(const GmmGenSpec& spec);

class DatasetFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text format: `#` comment lines, then one `x<TAB>y` (polynomial) or `y`
/// (mixture) record per line, 17 significant digits.
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace bayesev
