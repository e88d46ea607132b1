#include "lakesim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lakesim/errors.hpp"

namespace lakesim {

double weighted_lp_norm(const Domain& domain, const Field& omega, const Field& b, double p) {
    return weighted_lp(domain, omega, b, p);
}

namespace {

double powq(double x, double q) { return std::pow(std::abs(x), q); }

// Integrand of the right-hand side on [t_n, t_{n+1}]: vorticity from the
// start of the interval, velocity, boundary values and data from its end.
double gronwall_rate(const EllipticSystem& sys, const ScenarioData& s, const SolverConfig& cfg, const Field& omega,
                     const StateFields& end, double q, GronwallForm form) {
    const Domain& d = *s.domain;
    const double t = end.t;
    const double area = d.grid.cell_area();
    const Field& b = s.depth;
    const Field A = s.source(t);
    const Field kappa = s.friction(t);
    const Field rg = s.forcing_curl(t);
    const BoundaryField a = s.through_flow(t);

    const bool literal = form == GronwallForm::literal;
    Field Q = (literal || cfg.source_variant == SourceVariant::source) ? A : kappa;
    for (int c = 0; c < d.grid.size(); ++c) Q[c] = d.active[c] ? Q[c] / b[c] : 0.0;
    const Field adv = perp_advection(d, end.v.u, end.v.v, Q);
    const double c3 = literal ? 1.0 : q;

    double r = 0.0;
    for (int c : d.active_cells) {
        const double w = std::abs(omega[c]);
        r += (q * (std::abs(A[c]) + std::abs(kappa[c])) * std::pow(w, q) +
              q * std::abs(rg[c]) * std::pow(w, q - 1.0) + c3 * std::abs(adv[c]) * std::pow(w, q - 1.0)) *
             area;
    }
    const BoundaryPartition part = partition_boundary(d, a, cfg.eps_a);
    if (!part.inflow.empty()) {
        const BoundaryField bc =
            boundary_vorticity(sys.tangential_velocity(end.h, end.H), boundary_vorticity_data(s, t));
        for (int k : part.inflow) {
            const double term = s.depth_nodes[k] * a[k] * powq(bc[k], q) * d.nodes[k].ds;
            r += literal ? term : -term;
        }
    }
    return r;
}

double weighted_power(const Domain& d, const Field& omega, const Field& b, double q) {
    double s = 0.0;
    for (int c : d.active_cells) s += b[c] * powq(omega[c], q);
    return s * d.grid.cell_area();
}

}  // namespace

GronwallSeries gronwall_monitor(const Trajectory& traj, const ScenarioData& s, const SolverConfig& cfg, double q,
                                GronwallForm form, double tol_slack) {
    if (!(q > 1.0) || std::isinf(q)) throw std::invalid_argument("q must be finite and exceed 1");
    const Domain& d = *s.domain;
    EllipticSystem sys(s.domain, s.depth, s.depth_nodes, cfg.linear);
    GronwallSeries out;
    out.form = form;
    out.q = q;
    const double y0 = weighted_power(d, traj.states.front().omega, s.depth, q);
    double rhs = 0.0;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        if (n > 0) {
            const double dt = traj.states[n].t - traj.states[n - 1].t;
            rhs += dt * gronwall_rate(sys, s, cfg, traj.states[n - 1].omega, traj.states[n], q, form);
        }
        const double y = weighted_power(d, traj.states[n].omega, s.depth, q);
        const double lhs = y - y0;
        const double scale = std::max({y, y0, std::abs(rhs)});
        out.times.push_back(traj.states[n].t);
        out.lhs.push_back(lhs);
        out.rhs.push_back(rhs);
        out.slack.push_back(rhs - lhs);
        out.scale.push_back(scale);
        if (rhs - lhs < -tol_slack * scale) out.pass = false;
        if (scale > 0.0) out.worst_relative_slack = std::min(out.worst_relative_slack, (rhs - lhs) / scale);
    }
    return out;
}

MaxPrincipleSeries max_principle_monitor(const Trajectory& traj, const ScenarioData& s, const SolverConfig& cfg,
                                         double tol) {
    const Domain& d = *s.domain;
    EllipticSystem sys(s.domain, s.depth, s.depth_nodes, cfg.linear);
    MaxPrincipleSeries out;
    double w0 = 0.0;
    for (int c : d.active_cells) w0 = std::max(w0, std::abs(s.initial_vorticity[c]));
    double running = 0.0;
    for (const StateFields& st : traj.states) {
        const double t = st.t;
        const BoundaryField gamma = s.gamma(t), g = s.g(t);
        double vmax = 0.0, gm = 0.0, gg = 0.0, wmax = 0.0;
        for (int c : d.active_cells) {
            vmax = std::max(vmax, std::hypot(st.v.u[c], st.v.v[c]));
            wmax = std::max(wmax, std::abs(st.omega[c]));
        }
        for (double x : sys.tangential_velocity(st.h, st.H)) vmax = std::max(vmax, std::abs(x));
        for (double x : gamma) gm = std::max(gm, std::abs(x));
        for (double x : g) gg = std::max(gg, std::abs(x));
        const double k = std::max(w0, gm * vmax + gg);
        running = std::max(running, k);

        const Field A = s.source(t), kappa = s.friction(t), rg = s.forcing_curl(t);
        for (int c : d.active_cells)
            if (A[c] != 0.0 || rg[c] != 0.0 || kappa[c] < 0.0) out.clean = false;

        out.times.push_back(t);
        out.sup_omega.push_back(wmax);
        out.reference.push_back(k);
        out.running_reference.push_back(running);
        if (wmax > running + tol) out.pass = false;
    }
    return out;
}

double TestFunction::time_factor(double t) const {
    if (t >= T) return 0.0;
    const double r = 1.0 - t / T;
    return r * r;
}

double TestFunction::time_derivative(double t) const {
    if (t >= T) return 0.0;
    return -2.0 / T * (1.0 - t / T);
}

TestFunction zero_test_function(double T) {
    TestFunction f;
    f.name = "zero";
    f.T = T;
    return f;
}

TestFunction bump_test_function(Vec2 center, double radius, double T) {
    if (!(radius > 0.0) || !(T > 0.0)) throw std::invalid_argument("bump needs positive radius and horizon");
    TestFunction f;
    f.name = "bump";
    f.T = T;
    const double r2 = radius * radius;
    f.phi = [center, r2](Vec2 x) {
        const Vec2 e = x - center;
        const double s = dot(e, e) / r2;
        return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
    };
    f.grad_phi = [center, r2](Vec2 x) {
        const Vec2 e = x - center;
        const double s = dot(e, e) / r2;
        if (s >= 1.0) return Vec2{0.0, 0.0};
        const double scale = std::exp(1.0 - 1.0 / (1.0 - s)) * (-2.0 / (r2 * (1.0 - s) * (1.0 - s)));
        return Vec2{scale * e.x, scale * e.y};
    };
    return f;
}

TestFunction inflow_test_function(const Domain& d, const BoundaryField& a, double T, double max_radius,
                                  double eps_a) {
    const BoundaryPartition part = partition_boundary(d, a, eps_a);
    if (part.inflow.empty()) throw std::invalid_argument("no inflow nodes for an inflow test function");
    int best = part.inflow.front();
    for (int k : part.inflow)
        if (a[k] < a[best]) best = k;
    const Vec2 c = d.nodes[best].position;
    double radius = max_radius;
    for (int k = 0; k < d.num_nodes(); ++k)
        if (part.label[k] != -1) radius = std::min(radius, 0.9 * norm(d.nodes[k].position - c));
    TestFunction f = bump_test_function(c, radius, T);
    f.name = "inflow_bump";
    return f;
}

double KernelForm::apply(const Field& omega, bool swap_xy) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double wi = omega[cells[i]];
        for (int j = 0; j < n; ++j) {
            const double mij = swap_xy ? m[static_cast<std::size_t>(j) * n + i] : m[static_cast<std::size_t>(i) * n + j];
            s += wi * mij * omega[cells[j]];
        }
    }
    return s;
}

KernelForm kernel_form(const EllipticSystem& sys, const GreenKernel& k, const TestFunction& psi) {
    const Domain& d = sys.domain();
    const Grid& g = d.grid;
    const Field& b = sys.depth();
    const double area = g.cell_area();
    KernelForm kf;
    kf.n = k.n;
    kf.cells = k.cells;
    kf.m.assign(static_cast<std::size_t>(k.n) * k.n, 0.0);
    if (psi.zero()) return kf;
    std::vector<Vec2> grad(k.n);
    for (int i = 0; i < k.n; ++i) grad[i] = psi.grad_phi(g.center(k.cells[i]));
    const Field zero(g.size(), 0.0);
    const BoundaryField zero_a(d.num_nodes(), 0.0);
    std::vector<double> raw(static_cast<std::size_t>(k.n) * k.n, 0.0);
    for (int j = 0; j < k.n; ++j) {
        Field h(g.size(), 0.0);
        for (int i = 0; i < k.n; ++i) h[k.cells[i]] = k(i, j);
        const VelocityField v = sys.reconstruct_velocity(h, zero, zero_a);
        const double bj = b[k.cells[j]];
        for (int i = 0; i < k.n; ++i) {
            const int c = k.cells[i];
            raw[static_cast<std::size_t>(i) * k.n + j] =
                area * b[c] * (v.u[c] * grad[i].x + v.v[c] * grad[i].y) * bj;
        }
    }
    for (int i = 0; i < k.n; ++i)
        for (int j = 0; j < k.n; ++j)
            kf.m[static_cast<std::size_t>(i) * k.n + j] =
                0.5 * (raw[static_cast<std::size_t>(i) * k.n + j] + raw[static_cast<std::size_t>(j) * k.n + i]);
    return kf;
}

WeakResidual weak_residual(const Trajectory& traj, const ScenarioData& s, const SolverConfig& cfg,
                           const TestFunction& psi, WeakForm form, int kernel_cell_cap) {
    WeakResidual out;
    if (psi.zero()) return out;
    const Domain& d = *s.domain;
    const Grid& g = d.grid;
    const double area = g.cell_area();
    const Field& b = s.depth;
    EllipticSystem sys(s.domain, s.depth, s.depth_nodes, cfg.linear);

    std::vector<double> phi(g.size(), 0.0);
    std::vector<Vec2> grad(g.size(), Vec2{0.0, 0.0});
    for (int c : d.active_cells) {
        phi[c] = psi.phi(g.center(c));
        grad[c] = psi.grad_phi(g.center(c));
    }
    BoundaryField phi_nodes(d.num_nodes());
    for (int k = 0; k < d.num_nodes(); ++k) phi_nodes[k] = psi.phi(d.nodes[k].position);

    KernelForm kf;
    if (form == WeakForm::kernel) kf = kernel_form(sys, greens_kernel(sys, kernel_cell_cap), psi);

    const BoundaryField zero_a(d.num_nodes(), 0.0);
    const Field zero_h(g.size(), 0.0);
    std::vector<double> lhs_t, rhs_t;
    for (const StateFields& st : traj.states) {
        const double t = st.t;
        const double tau = psi.time_factor(t), tau_t = psi.time_derivative(t);
        const BoundaryField a = s.through_flow(t);
        const Field S = assemble_source(st.omega, st.v, s, t, cfg.source_variant);
        VelocityField vel = st.v;
        if (form == WeakForm::kernel) vel = sys.reconstruct_velocity(zero_h, st.H, a);
        double l = 0.0;
        for (int c : d.active_cells) {
            const double vg = vel.u[c] * grad[c].x + vel.v[c] * grad[c].y;
            l += (b[c] * st.omega[c] * (phi[c] * tau_t + vg * tau) + S[c] * phi[c] * tau) * area;
        }
        if (form == WeakForm::kernel) l += tau * kf.apply(st.omega);
        double r = 0.0;
        const BoundaryPartition part = partition_boundary(d, a, cfg.eps_a);
        if (!part.inflow.empty() && tau != 0.0) {
            const BoundaryField bc =
                boundary_vorticity(sys.tangential_velocity(st.h, st.H), boundary_vorticity_data(s, t));
            for (int k : part.inflow) r += s.depth_nodes[k] * a[k] * bc[k] * phi_nodes[k] * tau * d.nodes[k].ds;
        }
        lhs_t.push_back(l);
        rhs_t.push_back(r);
    }
    for (std::size_t n = 1; n < traj.states.size(); ++n) {
        const double dt = traj.states[n].t - traj.states[n - 1].t;
        out.lhs += 0.5 * dt * (lhs_t[n] + lhs_t[n - 1]);
        out.rhs += 0.5 * dt * (rhs_t[n] + rhs_t[n - 1]);
    }
    double init = 0.0;
    const double tau0 = psi.time_factor(traj.states.front().t);
    for (int c : d.active_cells) init += b[c] * traj.states.front().omega[c] * phi[c] * tau0 * area;
    out.rhs -= init;
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

namespace {

Field interpolate_state(const Trajectory& traj, double t) {
    const auto& st = traj.states;
    if (t <= st.front().t) return st.front().omega;
    for (std::size_t n = 1; n < st.size(); ++n)
        if (t <= st[n].t) {
            const double w = (t - st[n - 1].t) / (st[n].t - st[n - 1].t);
            Field out(st[n].omega.size());
            for (std::size_t c = 0; c < out.size(); ++c) out[c] = (1.0 - w) * st[n - 1].omega[c] + w * st[n].omega[c];
            return out;
        }
    return st.back().omega;
}

}  // namespace

TraceReport boundary_trace_monitor(const Trajectory& traj, const ScenarioData& s, const SolverConfig& cfg,
                                   const std::vector<double>& sigmas, double q, const TestFunction& psi) {
    const Domain& d = *s.domain;
    const Grid& g = d.grid;
    const double area = g.cell_area();
    const double hmax = std::max(g.dx, g.dy);
    const Field& b = s.depth;
    for (double sg : sigmas)
        if (sg < 2.0 * hmax * (1.0 - 1e-12) || sg > 0.5 * d.sigma0 * (1.0 + 1e-12))
            throw std::invalid_argument("sigma " + std::to_string(sg) + " outside [2h, sigma0/2]");
    if (!(q > 1.0) || std::isinf(q)) throw std::invalid_argument("q must be finite and exceed 1");
    EllipticSystem sys(s.domain, s.depth, s.depth_nodes, cfg.linear);

    // Nearest boundary node and inward distance gradient for cells near the boundary.
    const double reach = 2.0 * (sigmas.empty() ? 0.0 : *std::max_element(sigmas.begin(), sigmas.end()));
    std::vector<int> nearest(g.size(), -1);
    for (int c : d.active_cells) {
        if (d.distance[c] >= reach) continue;
        const Vec2 x = g.center(c);
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < d.num_nodes(); ++k) {
            const double r = norm(d.nodes[k].position - x);
            if (r < best) {
                best = r;
                nearest[c] = k;
            }
        }
    }
    std::vector<double> phi(g.size(), 0.0);
    if (!psi.zero())
        for (int c : d.active_cells) phi[c] = psi.phi(g.center(c));

    // Boundary-layer integrand per stored state, per sigma.
    TraceReport rep;
    std::vector<std::vector<double>> layer(sigmas.size(), std::vector<double>(traj.states.size(), 0.0));
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const StateFields& st = traj.states[n];
        const double tau = psi.zero() ? 0.0 : psi.time_factor(st.t);
        if (tau == 0.0) continue;
        const BoundaryField a = s.through_flow(st.t);
        const BoundaryPartition part = partition_boundary(d, a, cfg.eps_a);
        BoundaryField bc;
        if (!part.inflow.empty())
            bc = boundary_vorticity(sys.tangential_velocity(st.h, st.H), boundary_vorticity_data(s, st.t));
        for (int c : d.active_cells) {
            const int k = nearest[c];
            if (k < 0 || phi[c] == 0.0) continue;
            const Vec2 gd = -1.0 * d.nodes[k].normal;
            const double vd = st.v.u[c] * gd.x + st.v.v[c] * gd.y;
            const double ext = part.label[k] == -1 ? bc[k] : st.omega[d.nodes[k].cell];
            const double val = b[c] * vd * powq(st.omega[c] - ext, q) * phi[c] * tau * area;
            for (std::size_t m = 0; m < sigmas.size(); ++m)
                if (d.distance[c] > sigmas[m] && d.distance[c] < 2.0 * sigmas[m]) layer[m][n] += val;
        }
    }
    for (std::size_t m = 0; m < sigmas.size(); ++m) {
        TraceRow row;
        row.sigma = sigmas[m];
        for (std::size_t n = 1; n < traj.states.size(); ++n)
            row.boundary_layer +=
                0.5 * (traj.states[n].t - traj.states[n - 1].t) * (layer[m][n] + layer[m][n - 1]) / sigmas[m];

        // Initial layer on [0, sigma]: trapezoid over stored times plus the interpolated end point.
        std::vector<double> ts;
        for (const StateFields& st : traj.states)
            if (st.t < sigmas[m]) ts.push_back(st.t);
        ts.push_back(std::min(sigmas[m], traj.states.back().t));
        const Field& w0 = traj.states.front().omega;
        auto integrand = [&](double t) {
            if (psi.zero()) return 0.0;
            const Field w = interpolate_state(traj, t);
            double acc = 0.0;
            for (int c : d.active_cells) acc += b[c] * powq(w[c] - w0[c], q) * phi[c] * area;
            return acc * psi.time_factor(t);
        };
        double prev = integrand(ts.front());
        for (std::size_t n = 1; n < ts.size(); ++n) {
            const double cur = integrand(ts[n]);
            row.initial_layer += 0.5 * (ts[n] - ts[n - 1]) * (cur + prev) / sigmas[m];
            prev = cur;
        }
        rep.rows.push_back(row);
    }
    for (std::size_t m = 0; m + 1 < rep.rows.size(); ++m) {
        if (std::abs(rep.rows[m + 1].boundary_layer) > std::abs(rep.rows[m].boundary_layer) * (1.0 + 1e-12) + 1e-300)
            rep.boundary_nonincreasing = false;
        if (rep.rows[m + 1].initial_layer > rep.rows[m].initial_layer * (1.0 + 1e-12) + 1e-300)
            rep.initial_nonincreasing = false;
    }
    return rep;
}

ExponentTable exponent_table(double p, double epsilon) {
    if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const double inf = std::numeric_limits<double>::infinity();
    ExponentTable e;
    e.p = p;
    if (p > 2.0) {
        e.p_tilde = p;
        e.p2 = inf;
    } else if (p == 2.0) {
        e.p_tilde = 2.0 + epsilon;
        e.p2 = 2.0 + 4.0 / epsilon;
    } else {
        e.p_tilde = p / (p - 1.0);
        e.p2 = p / (2.0 - p);
    }
    e.p1 = e.p_tilde;
    e.p3 = std::isinf(p) ? 1.0 : p / (p - 1.0);
    e.p_star = e.p3;
    auto inv = [](double x) { return std::isinf(x) ? 0.0 : 1.0 / x; };
    e.holder_sum = inv(e.p1) + inv(e.p2) + inv(e.p3);
    return e;
}

}  // namespace lakesim
