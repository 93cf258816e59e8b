#pragma once

// Independent numerical references used by the unit tests.

#include <cmath>
#include <functional>

namespace oracle {

/// Composite trapezoid rule on [a, b] with n intervals.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) acc += f(a + i * h);
    return acc * h;
}

/// Composite Simpson rule; n is rounded up to an even count.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 != 0 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

/// Central difference of lgamma.
inline double digamma_fd(double x, double h = 1e-6) {
    return (std::lgamma(x + h) - std::lgamma(x - h)) / (2.0 * h);
}

}  // namespace oracle
