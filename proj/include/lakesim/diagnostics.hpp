#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lakesim/solver.hpp"

namespace lakesim {

// (sum b|w|^p dA)^{1/p}; p = infinity gives max |w|.
double weighted_lp_norm(const Domain& domain, const Field& omega, const Field& b, double p);

// literal: the inequality exactly as printed (coefficient 1 on the
// (v.grad_perp)(A/b) term, +b a |w_G|^q on the inflow). corrected: factor q,
// the source variant's field, and the inflow term with |a|.
enum class GronwallForm { literal, corrected };

struct GronwallSeries {
    GronwallForm form = GronwallForm::corrected;
    double q = 2.0;
    std::vector<double> times, lhs, rhs, slack, scale;
    double worst_relative_slack = 0.0;  // min over t of slack/scale (0 when scale is 0)
    bool pass = true;
};

GronwallSeries gronwall_monitor(const Trajectory& traj, const ScenarioData& scenario, const SolverConfig& config,
                                double q, GronwallForm form = GronwallForm::corrected, double tol_slack = 1e-8);

struct MaxPrincipleSeries {
    std::vector<double> times, sup_omega, reference, running_reference;
    bool clean = true;  // G = 0, A = 0, kappa >= 0 at every stamp
    bool pass = true;
};

MaxPrincipleSeries max_principle_monitor(const Trajectory& traj, const ScenarioData& scenario,
                                         const SolverConfig& config, double tol = 1e-10);

// psi(x, t) = phi(x) (1 - t/T)^2 for t < T, zero afterwards.
struct TestFunction {
    std::string name;
    std::function<double(Vec2)> phi;
    std::function<Vec2(Vec2)> grad_phi;
    double T = 1.0;

    double time_factor(double t) const;
    double time_derivative(double t) const;
    bool zero() const { return !phi; }
};

TestFunction zero_test_function(double T);
// Smooth bump exp(1 - 1/(1 - r^2/rho^2)) around center.
TestFunction bump_test_function(Vec2 center, double radius, double T);
// Bump centered on the strongest inflow node, with radius below the distance
// to any node outside the inflow part. Throws when there is no inflow.
TestFunction inflow_test_function(const Domain& domain, const BoundaryField& a, double T, double max_radius,
                                  double eps_a = -1.0);

enum class WeakForm { classical, kernel };

struct WeakResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

// Symmetric part of the bilinear form w -> sum_x b w (v_h[w] . grad phi) dA,
// where v_h is the stream part of the discrete velocity generated by w.
struct KernelForm {
    int n = 0;
    std::vector<int> cells;
    std::vector<double> m;  // row-major n*n
    double apply(const Field& omega, bool swap_xy = false) const;
};

KernelForm kernel_form(const EllipticSystem& sys, const GreenKernel& k, const TestFunction& psi);

WeakResidual weak_residual(const Trajectory& traj, const ScenarioData& scenario, const SolverConfig& config,
                           const TestFunction& psi, WeakForm form = WeakForm::classical, int kernel_cell_cap = 4096);

struct TraceRow {
    double sigma = 0.0;
    double boundary_layer = 0.0;  // (1/s) int int_{s<d<2s} b (v.grad d)|w - w_ext|^q psi
    double initial_layer = 0.0;   // (1/s) int_0^s int b|w - w_0|^q psi
};

struct TraceReport {
    std::vector<TraceRow> rows;
    bool boundary_nonincreasing = true;  // along the given sigma order
    bool initial_nonincreasing = true;
};

TraceReport boundary_trace_monitor(const Trajectory& traj, const ScenarioData& scenario, const SolverConfig& config,
                                   const std::vector<double>& sigmas, double q, const TestFunction& psi);

struct ExponentTable {
    double p = 2.0;
    double p_tilde = 0.0;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    double p_star = 0.0;
    double holder_sum = 0.0;  // 1/p1 + 1/p2 + 1/p3
};

ExponentTable exponent_table(double p, double epsilon = 0.5);

}  // namespace lakesim
