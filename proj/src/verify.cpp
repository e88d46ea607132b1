#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "lakesim/commands.hpp"
#include "lakesim/errors.hpp"

namespace lakesim {

namespace {

using Clock = std::chrono::steady_clock;

std::string short_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

double max_error(const Domain& d, const Field& f, const std::function<double(Vec2)>& exact, bool mean_free = false) {
    double mf = 0.0, me = 0.0;
    if (mean_free) {
        for (int c : d.active_cells) {
            mf += f[c];
            me += exact(d.grid.center(c));
        }
        mf /= d.num_active();
        me /= d.num_active();
    }
    double e = 0.0;
    for (int c : d.active_cells) e = std::max(e, std::abs((f[c] - mf) - (exact(d.grid.center(c)) - me)));
    return e;
}

double disk_poisson_error(int n) {
    const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), n);
    Field b(d->grid.size(), 1.0), rhs(d->grid.size(), 0.0);
    for (int c : d->active_cells) rhs[c] = 1.0;
    const Field h = solve_dirichlet_weighted(d, b, rhs);
    return max_error(*d, h, [](Vec2 p) { return 0.25 * (1.0 - p.x * p.x - p.y * p.y); });
}

double square_dirichlet_error(int n) {
    const DomainPtr d = build_domain(ShapeDescriptor::rectangle({0.0, 0.0}, {1.0, 1.0}), n);
    const double pi = M_PI;
    Field b(d->grid.size(), 1.0), rhs(d->grid.size(), 0.0);
    for (int c = 0; c < d->grid.size(); ++c) b[c] = 2.0 + d->grid.center(c).x;
    for (int c : d->active_cells) {
        const Vec2 p = d->grid.center(c);
        const double bb = 2.0 + p.x;
        rhs[c] = 2.0 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y) / bb +
                 pi * std::cos(pi * p.x) * std::sin(pi * p.y) / (bb * bb);
    }
    const Field h = solve_dirichlet_weighted(d, b, rhs);
    return max_error(*d, h, [pi](Vec2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); });
}

// H* = cos(pi x) + y^2/2 - y^3/3 on the unit square: a = dH/dn, A = lap H, balanced.
double square_neumann_error(int n, bool linear) {
    const DomainPtr d = build_domain(ShapeDescriptor::rectangle({0.0, 0.0}, {1.0, 1.0}), n);
    const double pi = M_PI;
    Field b(d->grid.size(), 1.0), A(d->grid.size(), 0.0);
    BoundaryField bn(d->num_nodes(), 1.0), a(d->num_nodes(), 0.0);
    auto exact = [&](Vec2 p) { return linear ? p.x : std::cos(pi * p.x) + 0.5 * p.y * p.y - p.y * p.y * p.y / 3.0; };
    for (int k = 0; k < d->num_nodes(); ++k) {
        const Vec2 p = d->nodes[k].position, nn = d->nodes[k].normal;
        a[k] = linear ? nn.x : -pi * std::sin(pi * p.x) * nn.x + (p.y - p.y * p.y) * nn.y;
    }
    if (!linear)
        for (int c : d->active_cells) {
            const Vec2 p = d->grid.center(c);
            A[c] = -pi * pi * std::cos(pi * p.x) + 1.0 - 2.0 * p.y;
        }
    EllipticSystem sys(d, b, bn);
    const double shift = sys.compatibility_residual(A, a) / d->active_area();
    for (int c : d->active_cells) A[c] += shift;
    return max_error(*d, sys.solve_neumann(A, a), exact, true);
}

VerifyCase rate_case(const std::string& name, const std::function<double(int)>& err, double lo, double hi) {
    VerifyCase v;
    v.name = name;
    const double e1 = err(64), e2 = err(128);
    v.value = e1 / e2;
    v.limit = lo;
    v.pass = v.value >= lo && v.value <= hi;
    v.detail = "errors " + short_number(e1) + " -> " + short_number(e2) + ", ratio in [" + short_number(lo) + ", " +
               short_number(hi) + "]";
    return v;
}

VerifyCase bounded(const std::string& name, double value, double limit, const std::string& detail = "") {
    VerifyCase v;
    v.name = name;
    v.value = value;
    v.limit = limit;
    v.pass = std::isfinite(value) && value <= limit;
    v.detail = detail;
    return v;
}

// Brute-force solution of y = y0 + int_0^t D (u + y) + B with u the trailing
// average of y over theta and y = 0 before 0; constant D, B.
double lagged_gronwall_excess(double y0, double D, double B, double theta, double T) {
    const int m = 20000;
    const double dt = T / m;
    const int lag = static_cast<int>(std::lround(theta / dt));
    std::vector<double> y(m + 1, 0.0), C(m + 1, 0.0);
    y[0] = y0;
    auto rate = [&](int k, double yk, double Ck) {
        return D * ((Ck - C[std::max(0, k - lag)]) / theta + yk) + B;
    };
    for (int k = 0; k < m; ++k) {
        // Heun step; the window start is frozen over the step.
        const double r0 = rate(k, y[k], C[k]);
        const double yp = y[k] + dt * r0;
        const double Cp = C[k] + 0.5 * dt * (y[k] + yp);
        y[k + 1] = y[k] + 0.5 * dt * (r0 + rate(k, yp, Cp));
        C[k + 1] = C[k] + 0.5 * dt * (y[k] + y[k + 1]);
    }
    std::vector<double> times(101), Ds(101, D), Bs(101, B);
    for (int k = 0; k <= 100; ++k) times[k] = T * k / 100.0;
    const std::vector<double> bound = discrete_gronwall_bound(y0, times, Ds, Bs, theta);
    double worst = -INFINITY;
    for (int k = 0; k <= 100; ++k) worst = std::max(worst, y[k * (m / 100)] - bound[k]);
    return worst;
}

}  // namespace

std::vector<VerifyCase> verify_suite(std::ostream* log) {
    std::vector<VerifyCase> out;
    auto add = [&](VerifyCase v, Clock::time_point t0) {
        v.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        if (log) {
            *log << (v.pass ? "PASS " : "FAIL ") << v.name << "  value " << short_number(v.value) << "  limit "
                 << short_number(v.limit);
            if (!v.detail.empty()) *log << "  " << v.detail;
            *log << '\n';
            log->flush();
        }
        out.push_back(std::move(v));
    };

    auto t0 = Clock::now();
    add(rate_case("disk Poisson second order", disk_poisson_error, 3.2, 4.8), t0);

    t0 = Clock::now();
    add(rate_case("square Dirichlet manufactured second order", square_dirichlet_error, 3.2, 4.8), t0);

    t0 = Clock::now();
    add(bounded("square Neumann H = x exact", std::max(square_neumann_error(64, true), square_neumann_error(128, true)),
                1e-8),
        t0);

    t0 = Clock::now();
    add(rate_case("square Neumann manufactured second order", [](int n) { return square_neumann_error(n, false); },
                  3.2, 4.8),
        t0);

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 64);
        EllipticSystem sys(d, Field(d->grid.size(), 1.0), BoundaryField(d->num_nodes(), 1.0));
        double residual = 0.0;
        try {
            sys.solve_neumann(Field(d->grid.size(), 0.0), BoundaryField(d->num_nodes(), 1.0));
        } catch (const CompatibilityError& e) {
            residual = e.residual();
        }
        add(bounded("incompatible Neumann data rejected with residual 2 pi", std::abs(residual - 2.0 * M_PI), 1e-6),
            t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 128);
        const ScenarioData s = rigid_rotation_scenario(d);
        SolverConfig cfg;
        cfg.T = 1.0;
        cfg.prehistory = Prehistory::initial;
        cfg.policy = TimeStepPolicy::adaptive;
        cfg.dt = 0.05;
        cfg.cfl_target = 0.8;
        const Trajectory tr = run_simulation(s, cfg);
        double drift = tr.complete ? 0.0 : INFINITY;
        for (const StateFields& st : tr.states)
            for (int c : d->active_cells) drift = std::max(drift, std::abs(st.omega[c] - 2.0));
        add(bounded("rigid rotation steady at 128", drift, 1e-6), t0);
        t0 = Clock::now();
        Simulation sim(s, cfg);
        const BoundaryField wg = sim.boundary_values(tr.states.back(), tr.states.back().t);
        double e = 0.0;
        for (double w : wg) e = std::max(e, std::abs(w - 2.0));
        add(bounded("rigid rotation boundary vorticity equals 2", e, 1e-3), t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 32);
        const ScenarioData s = friction_decay_scenario(d, 1.0, 1.5);
        SolverConfig cfg;
        cfg.T = 1.0;
        cfg.dt = 1e-3;
        cfg.cadence = 100;
        const Trajectory tr = run_simulation(s, cfg);
        double e = tr.complete ? 0.0 : INFINITY;
        for (int c : d->active_cells) e = std::max(e, std::abs(tr.states.back().omega[c] - 1.5 * std::exp(-1.0)));
        bool monotone = true;
        for (std::size_t k = 1; k < tr.reports.size(); ++k)
            monotone = monotone && tr.reports[k].norm_max < tr.reports[k - 1].norm_max;
        add(bounded("friction decay matches exp(-t)", e, 1e-3), t0);
        t0 = Clock::now();
        add(bounded("friction decay sup norm decreasing", monotone ? 0.0 : 1.0, 0.0), t0);

        t0 = Clock::now();
        const GronwallSeries g = gronwall_monitor(tr, s, cfg, 2.0);
        double worst = INFINITY;
        for (std::size_t k = 1; k < g.slack.size(); ++k) worst = std::min(worst, g.slack[k]);
        VerifyCase v = bounded("Gronwall slack positive under decay", -worst, 0.0);
        v.pass = v.pass && -worst < 0.0;
        add(v, t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 24);
        ScenarioData s = zero_scenario(d);
        for (int c : d->active_cells) s.initial_vorticity[c] = 0.0;
        SolverConfig cfg;
        cfg.T = 0.2;
        cfg.dt = 0.05;
        const Trajectory tr = run_simulation(s, cfg);
        const GronwallSeries g = gronwall_monitor(tr, s, cfg, 2.0);
        double e = 0.0;
        for (double x : g.slack) e = std::max(e, std::abs(x));
        add(bounded("Gronwall slack zero when frozen", e, 0.0), t0);
    }

    t0 = Clock::now();
    {
        // Closed form for constant coefficients and the lagged equation below it.
        const double y0 = 1.0, D = 0.5, B = 0.3, T = 1.0, theta = 0.5;
        std::vector<double> times(201), Ds(201, D), Bs(201, B);
        for (int k = 0; k <= 200; ++k) times[k] = T * k / 200.0;
        const std::vector<double> bound = discrete_gronwall_bound(y0, times, Ds, Bs, theta);
        double rel = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double t = times[k];
            const double exact = 2.0 * std::exp(D * t) * (y0 + B * (1.0 - std::exp(-D * t)) / D);
            rel = std::max(rel, std::abs(bound[k] - exact) / exact);
        }
        add(bounded("Gronwall bound matches closed form", rel, 1e-4), t0);
        t0 = Clock::now();
        const double excess = lagged_gronwall_excess(y0, D, B, theta, T);
        add(bounded("lagged Gronwall solution below bound", excess, 0.0), t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::rectangle({0.0, 0.0}, {1.0, 1.0}), 32);
        Field w(d->grid.size(), 2.0), b(d->grid.size(), 3.0);
        add(bounded("weighted norm 2 sqrt 3", std::abs(weighted_lp_norm(*d, w, b, 2.0) - 2.0 * std::sqrt(3.0)), 1e-12),
            t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 64);
        ScenarioData s = zero_scenario(d);
        BoundaryField a(d->num_nodes());
        for (int k = 0; k < d->num_nodes(); ++k) a[k] = std::sin(d->nodes[k].s);
        s.through_flow = TimeField<BoundaryField>(a);
        const double r0 = compatibility_residual(s, 0.0);
        s.through_flow = TimeField<BoundaryField>(BoundaryField(d->num_nodes(), 1.0));
        const double r1 = compatibility_residual(s, 0.0);
        add(bounded("compatibility of periodic flux", r0, 1e-10), t0);
        t0 = Clock::now();
        add(bounded("compatibility of unit flux is 2 pi", std::abs(r1 - 2.0 * M_PI), 1e-10), t0);
    }

    t0 = Clock::now();
    {
        double e = 0.0;
        const ExponentTable a = exponent_table(3.0), b = exponent_table(2.0, 0.5), c = exponent_table(1.5);
        e = std::max({std::abs(a.p_tilde - 3.0), std::abs(1.0 / a.p2), std::abs(a.p3 - 1.5),
                      std::abs(b.p_tilde - 2.5), std::abs(b.p2 - 10.0), std::abs(b.p3 - 2.0),
                      std::abs(c.p_tilde - 3.0), std::abs(c.p2 - 3.0), std::abs(c.p3 - 3.0),
                      std::abs(a.holder_sum - 1.0), std::abs(b.holder_sum - 1.0), std::abs(c.holder_sum - 1.0)});
        add(bounded("exponent table", e, 1e-12), t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 16);
        Field b(d->grid.size());
        BoundaryField bn(d->num_nodes());
        for (int c = 0; c < d->grid.size(); ++c) b[c] = 1.2 + 0.3 * std::sin(2.0 * d->grid.center(c).x);
        for (int k = 0; k < d->num_nodes(); ++k) bn[k] = 1.2 + 0.3 * std::sin(2.0 * d->nodes[k].position.x);
        EllipticSystem sys(d, b, bn);
        const GreenKernel k = greens_kernel(sys);
        double e = 0.0;
        for (int i = 0; i < k.n; ++i)
            for (int j = 0; j < k.n; ++j) e = std::max(e, std::abs(k(i, j) - k(j, i)));
        add(bounded("Green kernel symmetric", e, 1e-10), t0);
    }

    t0 = Clock::now();
    {
        const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 32);
        const ScenarioData s = random_scenario(d, 1, RandomFamily::clean);
        SolverConfig cfg;
        cfg.T = 0.5;
        cfg.policy = TimeStepPolicy::adaptive;
        cfg.dt = 0.02;
        const Trajectory tr = run_simulation(s, cfg);
        add(bounded("clean scenario stays in [-1, 1]", tr.complete ? tr.sup_omega - 1.0 : INFINITY, 1e-10), t0);
        t0 = Clock::now();
        const MaxPrincipleSeries mp = max_principle_monitor(tr, s, cfg);
        add(bounded("max principle monitor", mp.pass && mp.clean ? 0.0 : 1.0, 0.0), t0);
        t0 = Clock::now();
        const WeakResidual w = weak_residual(tr, s, cfg, zero_test_function(cfg.T));
        add(bounded("weak residual of zero test function", w.residual, 0.0), t0);
    }

    t0 = Clock::now();
    {
        const ParsedConfig pc = parse_config("[domain]\nshape = rectangle\nresolution = 16\n[data]\nb = 2 + x\n");
        const Domain& d = *pc.scenario.domain;
        double e = 0.0;
        for (int c : d.active_cells) e = std::max(e, std::abs(pc.scenario.depth[c] - (2.0 + d.grid.center(c).x)));
        add(bounded("config depth expression", e, 1e-15), t0);
        t0 = Clock::now();
        bool rejected = false;
        try {
            parse_config("[domain]\nshape = rectangle\nresolution = 16\n[data]\nb = x\n");
        } catch (const ConfigError&) {
            rejected = true;
        }
        add(bounded("config rejects non-positive depth", rejected ? 0.0 : 1.0, 0.0), t0);
    }
    return out;
}

}  // namespace lakesim
