#pragma once

// Test-side reference values, computed without the library's numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

constexpr double pi = 3.14159265358979323846;

// -lap h = 1 on the unit disk, h = 0 on the circle.
inline double disk_poisson(double x, double y) { return 0.25 * (1.0 - x * x - y * y); }

// Curvature of the ellipse (a cos t, b sin t).
inline double ellipse_curvature(double a, double b, double t) {
    const double s = std::sin(t), c = std::cos(t);
    return a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
}

inline double ramp_cutoff(double d, double sigma) {
    if (d < sigma) return 0.0;
    if (d >= 2.0 * sigma) return 1.0;
    return (d - sigma) / sigma;
}

// (b c^p area)^(1/p) for constant fields.
inline double constant_weighted_norm(double c, double b, double area, double p) {
    return std::pow(b * std::pow(std::abs(c), p) * area, 1.0 / p);
}

// (1/theta) * integral over [t - theta, t] of the piecewise linear
// interpolant of clipped snapshot values, zero (or the first value when
// initial_prehistory is set) before the first stamp; fine midpoint sampling.
inline double clipped_window_average(const std::vector<std::pair<double, double>>& samples, double t, double theta,
                                     double R, bool initial_prehistory, int m = 200000) {
    auto clip = [R](double x) { return std::max(-R, std::min(R, x)); };
    auto value = [&](double s) {
        if (s < samples.front().first) return initial_prehistory ? clip(samples.front().second) : 0.0;
        if (s >= samples.back().first) return clip(samples.back().second);
        for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
            const double a = samples[k].first, b = samples[k + 1].first;
            if (s >= a && s <= b) {
                const double w = (s - a) / (b - a);
                return (1.0 - w) * clip(samples[k].second) + w * clip(samples[k + 1].second);
            }
        }
        return 0.0;
    };
    const double h = theta / m;
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += value(t - theta + (k + 0.5) * h);
    return acc * h / theta;
}

// Upper bound of the lagged Gronwall lemma for constant coefficients.
inline double gronwall_closed_form(double y0, double D, double B, double t) {
    if (D == 0.0) return 2.0 * (y0 + B * t);
    return 2.0 * std::exp(D * t) * (y0 + B * (1.0 - std::exp(-D * t)) / D);
}

// Brute-force solution of the integral equation
//   y(t) = y0 + int_0^t D(s) (u(s) + y(s)) + B(s) ds,
//   u(s) = (1/theta) int_{s-theta}^s y,  y = 0 for s < 0,
// by Heun steps on m intervals. Returns y at the m + 1 grid points.
inline std::vector<double> lagged_gronwall_solution(double y0, const std::function<double(double)>& D,
                                                    const std::function<double(double)>& B, double theta, double T,
                                                    int m) {
    const double dt = T / m;
    const int lag = static_cast<int>(std::lround(theta / dt));
    std::vector<double> y(m + 1, 0.0), C(m + 1, 0.0);
    y[0] = y0;
    auto window = [&](int k, double Ck) { return (Ck - C[std::max(0, k - lag)]) / theta; };
    for (int k = 0; k < m; ++k) {
        const double t0 = k * dt, t1 = (k + 1) * dt;
        const double r0 = D(t0) * (window(k, C[k]) + y[k]) + B(t0);
        const double yp = y[k] + dt * r0;
        const double Cp = C[k] + 0.5 * dt * (y[k] + yp);
        const double r1 = D(t1) * (window(k + 1, Cp) + yp) + B(t1);
        y[k + 1] = y[k] + 0.5 * dt * (r0 + r1);
        C[k + 1] = C[k] + 0.5 * dt * (y[k] + y[k + 1]);
    }
    return y;
}

struct Exponents {
    double p_tilde, p2, p3;
};

inline Exponents exponents(double p, double eps) {
    const double inf = std::numeric_limits<double>::infinity();
    Exponents e{};
    if (p > 2.0) {
        e.p_tilde = p;
        e.p2 = inf;
    } else if (p == 2.0) {
        e.p_tilde = 2.0 + eps;
        e.p2 = 2.0 + 4.0 / eps;
    } else {
        e.p_tilde = p / (p - 1.0);
        e.p2 = p / (2.0 - p);
    }
    e.p3 = std::isinf(p) ? 1.0 : p / (p - 1.0);
    return e;
}

}  // namespace oracle
