#include "bayesev/datagen.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bayesev {

void PolyGenSpec::validate() const {
    if (coefficients.empty()) throw DomainError("polynomial needs at least one coefficient");
    if (n_points < 1) throw DomainError("n_points must be at least 1");
    if (!(noise_sigma > 0.0)) throw DomainError("noise_sigma must be positive");
    if (!(interval_lo < interval_hi)) throw DomainError("interval requires a < b");
}

PolyGenSpec PolyGenSpec::canonical(std::uint64_t seed) {
    return PolyGenSpec{{0, 0, 0, 0, 0, 1}, -2.0, 2.0, 40, 2.0, seed};
}

void GmmGenSpec::validate() const {
    if (means.empty() || sigmas.size() != means.size() || weights.size() != means.size()) {
        throw DomainError("means, sigmas and weights must be non-empty and of equal length");
    }
    if (n_points < 1) throw DomainError("n_points must be at least 1");
    double total = 0.0;
    for (std::size_t s = 0; s < means.size(); ++s) {
        if (!(sigmas[s] > 0.0)) throw DomainError("sigmas must be positive");
        if (!(weights[s] >= 0.0)) throw DomainError("weights must be non-negative");
        total += weights[s];
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("weights must sum to one");
}

GmmGenSpec GmmGenSpec::easy(std::uint64_t seed) {
    return GmmGenSpec{{-1.0, 1.0, 3.0}, {0.4, 0.3, 0.7}, {0.3, 0.35, 0.35}, 300, seed};
}

GmmGenSpec GmmGenSpec::hard(std::uint64_t seed) {
    return GmmGenSpec{{-1.0, 0.0, 1.0}, {0.4, 0.3, 0.7}, {0.3, 0.35, 0.35}, 600, seed};
}

double evaluate_polynomial(std::span<const double> coefficients, double x) {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
        acc = acc * x + *it;
    }
    return acc;
}

Dataset generate_polynomial(const PolyGenSpec& spec) {
    spec.validate();
    RngHandle rng(spec.seed);
    Dataset data;
    const auto n = static_cast<std::size_t>(spec.n_points);
    data.abscissae.resize(n);
    data.ordinates.resize(n);
    const double step = n > 1 ? (spec.interval_hi - spec.interval_lo) / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = n > 1 ? spec.interval_lo + step * static_cast<double>(i)
                               : 0.5 * (spec.interval_lo + spec.interval_hi);
        data.abscissae[i] = x;
        // scaled standard draw: a tiny sigma must not overflow the precision
        data.ordinates[i] = evaluate_polynomial(spec.coefficients, x) + spec.noise_sigma * sample_gaussian(rng, {});
    }
    return data;
}

Dataset generate_gmm(const GmmGenSpec& spec) {
    spec.validate();
    RngHandle rng(spec.seed);
    std::vector<double> cumulative(spec.weights.size());
    std::partial_sum(spec.weights.begin(), spec.weights.end(), cumulative.begin());
    Dataset data;
    data.ordinates.reserve(static_cast<std::size_t>(spec.n_points));
    for (int i = 0; i < spec.n_points; ++i) {
        const double u = rng.uniform01() * cumulative.back();
        std::size_t s = 0;
        while (s + 1 < cumulative.size() && u >= cumulative[s]) {
            ++s;
        }
        const double sigma = spec.sigmas[s];
        data.ordinates.push_back(sample_gaussian(rng, GaussianParams{spec.means[s], 1.0 / (sigma * sigma)}));
    }
    return data;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    if (data.has_abscissae()) {
        out << "# x\ty\n";
        for (std::size_t i = 0; i < data.count(); ++i) {
            out << format_double(data.abscissae[i]) << '\t' << format_double(data.ordinates[i]) << '\n';
        }
    } else {
        out << "# y\n";
        for (double y : data.ordinates) {
            out << format_double(y) << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

namespace {

double parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw DatasetFormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse number '" +
                                 std::string(field) + "'");
    }
    return v;
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open dataset " + path.string());
    }
    Dataset data;
    std::string line;
    std::size_t line_no = 0;
    int columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        const int here = tab == std::string::npos ? 1 : 2;
        if (columns == 0) {
            columns = here;
        } else if (columns != here) {
            throw DatasetFormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(columns) + " column(s)");
        }
        const std::string_view view(line);
        if (here == 1) {
            data.ordinates.push_back(parse_field(view, path, line_no));
        } else {
            if (view.find('\t', tab + 1) != std::string_view::npos) {
                throw DatasetFormatError(path.string() + ":" + std::to_string(line_no) + ": too many columns");
            }
            data.abscissae.push_back(parse_field(view.substr(0, tab), path, line_no));
            data.ordinates.push_back(parse_field(view.substr(tab + 1), path, line_no));
        }
    }
    if (in.bad()) {
        throw std::runtime_error("failed reading " + path.string());
    }
    if (line_no == 0) {
        throw DatasetFormatError(path.string() + ":1: empty file");
    }
    if (data.ordinates.empty()) {
        throw DatasetFormatError(path.string() + ":" + std::to_string(line_no) + ": zero data rows");
    }
    return data;
}

}  // namespace bayesev
