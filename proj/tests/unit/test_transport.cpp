#include <doctest.h>

#include <random>

#include "lakesim/errors.hpp"
#include "lakesim/transport.hpp"
#include "oracles.hpp"

using namespace lakesim;

namespace {

DomainPtr unit_disk(int n) { return build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), n); }
DomainPtr unit_square(int n) { return build_domain(ShapeDescriptor::rectangle({0.0, 0.0}, {1.0, 1.0}), n); }

// Divergence-free velocity from a smooth stream potential vanishing on the boundary.
VelocityField swirl(const EllipticSystem& sys, double strength) {
    const Domain& d = sys.domain();
    Field rhs(d.grid.size(), 0.0);
    for (int c : d.active_cells) {
        const Vec2 p = d.grid.center(c);
        rhs[c] = strength * (1.0 + std::sin(3.0 * p.x) * std::cos(2.0 * p.y));
    }
    const Field h = sys.solve_dirichlet(rhs);
    return sys.reconstruct_velocity(h, Field(d.grid.size(), 0.0), BoundaryField(d.num_nodes(), 0.0));
}

Field smooth_field(const Domain& d, double lo, double hi) {
    Field f(d.grid.size(), 0.0);
    for (int c : d.active_cells) {
        const Vec2 p = d.grid.center(c);
        const double s = 0.5 + 0.5 * std::sin(4.0 * p.x + 1.0) * std::cos(3.0 * p.y - 0.5);
        f[c] = lo + (hi - lo) * s;
    }
    return f;
}

}  // namespace

TEST_CASE("boundary vorticity examples") {
    const DomainPtr d = unit_disk(32);
    const int m = d->num_nodes();
    BoundaryVorticityData data{BoundaryField(m, 0.0), BoundaryField(m, 0.0)};
    for (double w : boundary_vorticity(BoundaryField(m, 0.7), data)) CHECK(w == 0.0);
    data.gamma.assign(m, 1.5);
    data.g.assign(m, 1.0);
    for (double w : boundary_vorticity(BoundaryField(m, 1.0), data)) CHECK(w == doctest::Approx(2.5));
}

TEST_CASE("rigid rotation boundary vorticity equals the interior value") {
    const DomainPtr d = unit_disk(128);
    const ScenarioData s = rigid_rotation_scenario(d);
    EllipticSystem sys(d, s.depth, s.depth_nodes);
    Field rhs(d->grid.size(), 0.0);
    for (int c : d->active_cells) rhs[c] = s.depth[c] * s.initial_vorticity[c];
    const Field h = sys.solve_dirichlet(rhs);
    const BoundaryField vs = sys.tangential_velocity(h, Field(d->grid.size(), 0.0));
    const BoundaryField w = boundary_vorticity(vs, boundary_vorticity_data(s, 0.0));
    for (double x : w) CHECK(std::abs(x - 2.0) <= 1e-3);
}

TEST_CASE("source assembly examples") {
    const DomainPtr d = unit_disk(32);
    const int n = d->grid.size();
    ScenarioData s = zero_scenario(d);
    VelocityField v{Field(n, 0.0), Field(n, 0.0), {}};
    const Field omega = smooth_field(*d, -1.0, 2.0);
    const Field S0 = assemble_source(omega, v, s, 0.0, SourceVariant::friction);
    for (int c : d->active_cells) CHECK(S0[c] == 0.0);

    s.friction = TimeField<Field>(Field(n, 1.0));
    const Field S1 = assemble_source(omega, v, s, 0.0, SourceVariant::friction);
    for (int c : d->active_cells) CHECK(S1[c] == doctest::Approx(-omega[c]));

    s = zero_scenario(d);
    s.forcing_curl = TimeField<Field>(Field(n, 1.0));
    const Field S2 = assemble_source(omega, v, s, 0.0, SourceVariant::friction);
    for (int c : d->active_cells) CHECK(S2[c] == doctest::Approx(1.0));
}

TEST_CASE("constants are preserved by transport and diffusion") {
    const DomainPtr d = unit_disk(48);
    const int n = d->grid.size(), m = d->num_nodes();
    EllipticSystem sys(d, Field(n, 1.0), BoundaryField(m, 1.0));
    const VelocityField v = swirl(sys, 1.0);
    TransportOperator op(d, Field(n, 1.0), BoundaryField(m, 1.0));
    const double dt = 0.5 * op.stable_dt(v, BoundaryField(m, 0.0), Field(n, 0.0), 0.9);
    for (double nu : {0.0, 1e-2}) {
        const StepResult r = op.step(Field(n, 0.75), v, BoundaryField(m, 0.0), Field(n, 0.0), Field(n, 0.0),
                                     Field(n, 0.0), nu, dt, BoundaryField(m, 0.75));
        for (int c : d->active_cells) CHECK(r.omega[c] == doctest::Approx(0.75).epsilon(1e-12));
    }
}

TEST_CASE("history average examples") {
    const int n = 3;
    VorticityHistory hc(n, 1.0, Prehistory::initial, Field(n, 0.4));
    for (int k = 0; k <= 30; ++k) hc.push(0.1 * k, Field(n, 0.4));
    for (double x : hc.average(3.0, 10.0)) CHECK(x == doctest::Approx(0.4));
    VorticityHistory hi(n, 1.0, Prehistory::initial, Field(n, 0.4));
    for (int k = 0; k <= 5; ++k) hi.push(0.1 * k, Field(n, 0.4));
    for (double x : hi.average(0.5, 10.0)) CHECK(x == doctest::Approx(0.4));

    VorticityHistory hz(n, 1.0, Prehistory::zero);
    for (int k = 0; k <= 5; ++k) hz.push(0.1 * k, Field(n, 0.4));
    for (double x : hz.average(0.5, 10.0)) CHECK(x == doctest::Approx(0.2));

    VorticityHistory hr(n, 1.0, Prehistory::initial, Field(n, 5.0));
    for (int k = 0; k <= 10; ++k) hr.push(0.1 * k, Field(n, 5.0));
    for (double x : hr.average(1.0, 3.0)) CHECK(x == doctest::Approx(3.0));

    VorticityHistory hl(n, 1.0, Prehistory::zero);
    for (int k = 0; k <= 20; ++k) hl.push(0.1 * k, Field(n, 0.1 * k));
    for (double x : hl.average(2.0, 10.0)) CHECK(x == doctest::Approx(1.5));
}

TEST_CASE("history average agrees with the window oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> val(-3.0, 3.0), step(0.02, 0.2), th(0.1, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double theta = th(rng), R = 1.0 + 0.5 * (trial % 3);
        const bool initial = trial % 2 == 0;
        std::vector<std::pair<double, double>> samples;
        double t = 0.0;
        for (int k = 0; k < 15; ++k) {
            samples.emplace_back(t, val(rng));
            t += step(rng);
        }
        VorticityHistory h(1, theta, initial ? Prehistory::initial : Prehistory::zero,
                           Field(1, samples.front().second));
        for (auto& [s, w] : samples) h.push(s, Field(1, w));
        const double tq = samples.back().first;
        const double got = h.average(tq, R)[0];
        const double want = oracle::clipped_window_average(samples, tq, theta, R, initial);
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("history average is monotone and 1-Lipschitz") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> val(-2.0, 2.0), bump(0.0, 1.0);
    const int n = 40;
    for (int trial = 0; trial < 10; ++trial) {
        VorticityHistory h1(n, 0.3, Prehistory::zero), h2(n, 0.3, Prehistory::zero);
        double gap = 0.0;
        for (int k = 0; k <= 12; ++k) {
            Field a(n), b(n);
            for (int i = 0; i < n; ++i) {
                a[i] = val(rng);
                b[i] = a[i] + bump(rng);
                gap = std::max(gap, b[i] - a[i]);
            }
            h1.push(0.05 * k, a);
            h2.push(0.05 * k, b);
        }
        const Field u1 = h1.average(0.6, 1.0), u2 = h2.average(0.6, 1.0);
        for (int i = 0; i < n; ++i) {
            CHECK(u1[i] <= u2[i] + 1e-15);
            CHECK(u2[i] - u1[i] <= gap + 1e-15);
            CHECK(std::abs(u1[i]) <= 1.0 + 1e-15);
        }
    }
}

TEST_CASE("mass balance without through-flow") {
    const DomainPtr d = unit_disk(48);
    const int n = d->grid.size(), m = d->num_nodes();
    Field b(n);
    for (int c = 0; c < n; ++c) b[c] = 1.0 + 0.3 * d->grid.center(c).x;
    EllipticSystem sys(d, b, BoundaryField(m, 1.0));
    const VelocityField v = swirl(sys, 1.0);
    TransportOperator op(d, b, BoundaryField(m, 1.0));
    const double dt = op.stable_dt(v, BoundaryField(m, 0.0), Field(n, 0.0), 0.5);
    const Field omega = smooth_field(*d, -1.0, 1.0);
    const StepResult r =
        op.step(omega, v, BoundaryField(m, 0.0), Field(n, 0.0), Field(n, 0.0), Field(n, 0.0), 0.0, dt, BoundaryField(m, 0.0));
    CHECK(std::abs(r.mass_after - r.mass_before) <= 1e-7 * std::abs(r.mass_before) + 1e-12);
}

TEST_CASE("maximum principle for transport with diffusion") {
    const DomainPtr d = unit_disk(48);
    const int n = d->grid.size(), m = d->num_nodes();
    EllipticSystem sys(d, Field(n, 1.0), BoundaryField(m, 1.0));
    const VelocityField v = swirl(sys, 2.0);
    TransportOperator op(d, Field(n, 1.0), BoundaryField(m, 1.0));
    const double dt = op.stable_dt(v, BoundaryField(m, 0.0), Field(n, 0.0), 0.8);
    Field omega = smooth_field(*d, -0.5, 0.9);
    Field kappa(n, 0.3);
    for (int k = 0; k < 20; ++k) {
        BoundaryField bc(m);
        for (int q = 0; q < m; ++q) bc[q] = 0.8 * std::sin(d->nodes[q].s + k);
        omega = op.step(omega, v, BoundaryField(m, 0.0), Field(n, 0.0), kappa, Field(n, 0.0), 1e-3, dt, bc).omega;
        for (int c : d->active_cells) {
            CHECK(omega[c] <= 0.9 + 1e-12);
            CHECK(omega[c] >= -0.8 - 1e-12);
        }
    }
}

TEST_CASE("steps beyond the CFL limit are rejected") {
    const DomainPtr d = unit_disk(32);
    const int n = d->grid.size(), m = d->num_nodes();
    EllipticSystem sys(d, Field(n, 1.0), BoundaryField(m, 1.0));
    const VelocityField v = swirl(sys, 1.0);
    TransportOperator op(d, Field(n, 1.0), BoundaryField(m, 1.0));
    const double dt = 2.0 * op.stable_dt(v, BoundaryField(m, 0.0), Field(n, 0.0), 0.9);
    CHECK_THROWS_AS(op.step(Field(n, 1.0), v, BoundaryField(m, 0.0), Field(n, 0.0), Field(n, 0.0), Field(n, 0.0), 0.0,
                            dt, BoundaryField(m, 0.0)),
                    CflViolation);
}

TEST_CASE("upwind advection converges at first order") {
    auto profile = [](double s) { return std::sin(2.0 * oracle::pi * s) + 0.5 * std::cos(oracle::pi * s); };
    const double T = 0.25;
    std::vector<double> err;
    for (int N : {32, 64, 128}) {
        const DomainPtr d = unit_square(N);
        const int n = d->grid.size(), m = d->num_nodes();
        EllipticSystem sys(d, Field(n, 1.0), BoundaryField(m, 1.0));
        Field H(n, 0.0);
        BoundaryField a(m);
        for (int c : d->active_cells) H[c] = d->grid.center(c).x;
        for (int k = 0; k < m; ++k) a[k] = d->nodes[k].normal.x;
        const VelocityField v = sys.reconstruct_velocity(Field(n, 0.0), H, a);
        TransportOperator op(d, Field(n, 1.0), BoundaryField(m, 1.0));
        const int steps = 2 * N * T;
        const double dt = T / steps;
        Field omega(n, 0.0);
        for (int c : d->active_cells) omega[c] = profile(d->grid.center(c).x);
        for (int k = 0; k < steps; ++k) {
            const double t1 = (k + 1) * dt;
            BoundaryField bc(m);
            for (int q = 0; q < m; ++q) bc[q] = profile(d->nodes[q].position.x - t1);
            omega = op.step(omega, v, a, Field(n, 0.0), Field(n, 0.0), Field(n, 0.0), 0.0, dt, bc).omega;
        }
        double e = 0.0;
        for (int c : d->active_cells) e += std::pow(omega[c] - profile(d->grid.center(c).x - T), 2) * d->grid.cell_area();
        err.push_back(std::sqrt(e));
    }
    for (std::size_t k = 1; k < err.size(); ++k) {
        const double r = err[k - 1] / err[k];
        CHECK(r >= 1.6);
        CHECK(r <= 2.4);
    }
}

TEST_CASE("implicit diffusion converges at second order") {
    const double pi = oracle::pi, T = 0.05;
    std::vector<double> err;
    for (int N : {16, 32, 64}) {
        const DomainPtr d = unit_square(N);
        const int n = d->grid.size(), m = d->num_nodes();
        TransportOperator op(d, Field(n, 1.0), BoundaryField(m, 1.0));
        const VelocityField v{Field(n, 0.0), Field(n, 0.0), FaceVelocity{std::vector<double>((N + 1) * N, 0.0),
                                                                         std::vector<double>((N + 1) * N, 0.0),
                                                                         std::vector<double>(N * (N + 1), 0.0),
                                                                         std::vector<double>(N * (N + 1), 0.0)}};
        const int steps = static_cast<int>(std::lround(T * N * N));
        const double dt = T / steps;
        Field omega(n, 0.0);
        for (int c : d->active_cells) {
            const Vec2 p = d->grid.center(c);
            omega[c] = std::sin(pi * p.x) * std::sin(pi * p.y);
        }
        for (int k = 0; k < steps; ++k)
            omega = op.step(omega, v, BoundaryField(m, 0.0), Field(n, 0.0), Field(n, 0.0), Field(n, 0.0), 1.0, dt,
                            BoundaryField(m, 0.0))
                        .omega;
        double e = 0.0;
        for (int c : d->active_cells) {
            const Vec2 p = d->grid.center(c);
            e = std::max(e, std::abs(omega[c] - std::exp(-2.0 * pi * pi * T) * std::sin(pi * p.x) * std::sin(pi * p.y)));
        }
        err.push_back(e);
    }
    for (std::size_t k = 1; k < err.size(); ++k) {
        const double r = err[k - 1] / err[k];
        CHECK(r >= 3.2);
        CHECK(r <= 4.8);
    }
}
