#include <doctest.h>

#include <random>

#include "lakesim/diagnostics.hpp"
#include "oracles.hpp"

using namespace lakesim;

namespace {

DomainPtr unit_disk(int n) { return build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), n); }

double active_area(const Domain& d) { return d.num_active() * d.grid.cell_area(); }

Trajectory decay_run(const DomainPtr& d, SolverConfig& cfg, ScenarioData& s) {
    s = friction_decay_scenario(d, 1.0, 1.5);
    cfg.T = 0.5;
    cfg.dt = 5e-3;
    cfg.cadence = 10;
    return run_simulation(s, cfg);
}

}  // namespace

TEST_CASE("weighted norm examples") {
    const DomainPtr d = unit_disk(32);
    const double area = active_area(*d);
    Field w(d->grid.size(), 1.5), b(d->grid.size(), 2.0);
    for (double p : {1.5, 2.0, 3.0, 8.0})
        CHECK(weighted_lp_norm(*d, w, b, p) ==
              doctest::Approx(oracle::constant_weighted_norm(1.5, 2.0, area, p)).epsilon(1e-12));
    CHECK(weighted_lp_norm(*d, w, b, std::numeric_limits<double>::infinity()) == 1.5);
    CHECK_THROWS(weighted_lp_norm(*d, w, b, 1.0));
}

TEST_CASE("norms grow with p toward the max norm for probability weights") {
    const DomainPtr d = unit_disk(64);
    Field w(d->grid.size(), 0.0), b(d->grid.size(), 1.0 / active_area(*d));
    double mx = 0.0;
    for (int c : d->active_cells) {
        const Vec2 p = d->grid.center(c);
        w[c] = (2.0 + std::cos(p.x)) * (1.0 - 0.1 * p.y * p.y);
        mx = std::max(mx, std::abs(w[c]));
    }
    double prev = 0.0;
    for (double p : {2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        const double n = weighted_lp_norm(*d, w, b, p);
        CHECK(n >= prev);
        CHECK(n <= mx * (1.0 + 1e-12));
        prev = n;
    }
    CHECK(std::abs(prev - mx) <= 0.05 * mx);
}

TEST_CASE("compatibility residual examples") {
    const DomainPtr d = unit_disk(64);
    ScenarioData s = zero_scenario(d);
    CHECK(compatibility_residual(s, 0.0) == 0.0);
    BoundaryField a(d->num_nodes());
    for (int k = 0; k < d->num_nodes(); ++k) a[k] = std::sin(d->nodes[k].s);
    s.through_flow = TimeField<BoundaryField>(a);
    CHECK(std::abs(compatibility_residual(s, 0.0)) <= 1e-10);
    s.through_flow = TimeField<BoundaryField>(BoundaryField(d->num_nodes(), 1.0));
    CHECK(std::abs(compatibility_residual(s, 0.0) - 2.0 * oracle::pi) <= 1e-10);
    const ScenarioData bal = balance_compatibility(s, BalanceMode::source);
    CHECK(std::abs(compatibility_residual(bal, 0.0)) <= 1e-12);
}

TEST_CASE("Gronwall monitor is tight when frozen and slack under decay") {
    const DomainPtr d = unit_disk(24);
    SolverConfig cfg;
    cfg.T = 0.2;
    cfg.dt = 0.05;
    const ScenarioData z = zero_scenario(d);
    const Trajectory tz = run_simulation(z, cfg);
    for (GronwallForm form : {GronwallForm::corrected, GronwallForm::literal}) {
        const GronwallSeries g = gronwall_monitor(tz, z, cfg, 2.0, form);
        for (double x : g.slack) CHECK(x == 0.0);
        CHECK(g.pass);
    }

    ScenarioData s;
    SolverConfig dc;
    const Trajectory tr = decay_run(d, dc, s);
    REQUIRE(tr.complete);
    for (double q : {2.0, 4.0}) {
        const GronwallSeries g = gronwall_monitor(tr, s, dc, q);
        CHECK(g.pass);
        for (std::size_t k = 1; k < g.slack.size(); ++k) CHECK(g.slack[k] > 0.0);
        for (std::size_t k = 1; k < g.lhs.size(); ++k) CHECK(g.lhs[k] < g.lhs[k - 1]);
    }
}

TEST_CASE("max principle monitor") {
    const DomainPtr d = unit_disk(32);
    SolverConfig cfg;
    cfg.T = 0.3;
    cfg.dt = 0.02;
    cfg.policy = TimeStepPolicy::adaptive;
    const ScenarioData s = random_scenario(d, 5, RandomFamily::clean);
    const Trajectory tr = run_simulation(s, cfg);
    const MaxPrincipleSeries mp = max_principle_monitor(tr, s, cfg);
    CHECK(mp.clean);
    CHECK(mp.pass);
    for (std::size_t k = 0; k < mp.times.size(); ++k) CHECK(mp.sup_omega[k] <= mp.running_reference[k] + 1e-10);

    const ScenarioData g = random_scenario(d, 5, RandomFamily::general);
    const Trajectory tg = run_simulation(g, cfg);
    CHECK_FALSE(max_principle_monitor(tg, g, cfg).clean);
}

TEST_CASE("weak residual") {
    const DomainPtr d = unit_disk(32);
    ScenarioData s;
    SolverConfig cfg;
    const Trajectory tr = decay_run(d, cfg, s);
    const WeakResidual z = weak_residual(tr, s, cfg, zero_test_function(cfg.T));
    CHECK(z.residual == 0.0);
    const WeakResidual w = weak_residual(tr, s, cfg, bump_test_function({0.1, -0.2}, 0.5, cfg.T));
    CHECK(std::isfinite(w.residual));
    CHECK(std::abs(w.residual) <= 1e-2 * (std::abs(w.lhs) + std::abs(w.rhs)));
}

TEST_CASE("kernel form is symmetric under the point swap") {
    const DomainPtr d = unit_disk(16);
    Field b(d->grid.size());
    BoundaryField bn(d->num_nodes());
    for (int c = 0; c < d->grid.size(); ++c) b[c] = 1.0 + 0.2 * d->grid.center(c).y;
    for (int k = 0; k < d->num_nodes(); ++k) bn[k] = 1.0 + 0.2 * d->nodes[k].position.y;
    EllipticSystem sys(d, b, bn);
    const GreenKernel k = greens_kernel(sys);
    const KernelForm f = kernel_form(sys, k, bump_test_function({0.1, 0.0}, 0.6, 1.0));
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.n; ++j) CHECK(f.m[i * f.n + j] == doctest::Approx(f.m[j * f.n + i]).epsilon(1e-10));
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    Field w(d->grid.size(), 0.0);
    for (int c : d->active_cells) w[c] = n01(rng);
    CHECK(f.apply(w) == doctest::Approx(f.apply(w, true)).epsilon(1e-10));
}

TEST_CASE("trace monitor vanishes for a uniform vorticity") {
    const DomainPtr d = unit_disk(64);
    const ScenarioData s = rigid_rotation_scenario(d);
    SolverConfig cfg;
    cfg.T = 0.2;
    cfg.dt = 0.05;
    cfg.prehistory = Prehistory::initial;
    const Trajectory tr = run_simulation(s, cfg);
    const double h = d->grid.dx;
    const TraceReport r = boundary_trace_monitor(tr, s, cfg, {8.0 * h, 4.0 * h, 2.0 * h}, 2.0,
                                                 bump_test_function({0.0, 0.0}, 2.0 * std::sqrt(2.0), cfg.T));
    REQUIRE(r.rows.size() == 3);
    for (const TraceRow& row : r.rows) {
        CHECK(std::abs(row.boundary_layer) <= 1e-8);
        CHECK(std::abs(row.initial_layer) <= 1e-8);
    }
}

TEST_CASE("exponent table matches the reference") {
    for (double p : {1.25, 1.5, 2.0, 3.0, 6.0}) {
        const ExponentTable t = exponent_table(p, 0.5);
        const oracle::Exponents e = oracle::exponents(p, 0.5);
        CHECK(t.p_tilde == doctest::Approx(e.p_tilde));
        if (std::isinf(e.p2))
            CHECK(std::isinf(t.p2));
        else
            CHECK(t.p2 == doctest::Approx(e.p2));
        CHECK(t.p3 == doctest::Approx(e.p3));
    }
}

TEST_CASE("exponent table satisfies the Hoelder identity") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> up(1.01, 20.0), ue(0.05, 2.0);
    for (int k = 0; k < 200; ++k) {
        const ExponentTable t = exponent_table(up(rng), ue(rng));
        CHECK(std::abs(t.holder_sum - 1.0) <= 1e-12);
    }
}
