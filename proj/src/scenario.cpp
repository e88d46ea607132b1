#include "lakesim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lakesim {

BoundaryField arc_derivative(const Domain& d, const BoundaryField& f) {
    const int m = d.num_nodes();
    BoundaryField out(m, 0.0);
    for (int k = 0; k < m; ++k) {
        const int kp = (k + 1) % m, km = (k + m - 1) % m;
        double span = d.nodes[kp].s - d.nodes[km].s;
        if (span <= 0.0) span += d.perimeter;
        out[k] = (f[kp] - f[km]) / span;
    }
    return out;
}

BoundaryField ScenarioData::gamma(double t) const {
    if (gamma_override) return (*gamma_override)(t);
    BoundaryField al = slip_alpha(t);
    BoundaryField out(domain->num_nodes());
    for (int k = 0; k < domain->num_nodes(); ++k)
        out[k] = (2.0 * domain->nodes[k].curvature - al[k]) / depth_nodes[k];
    return out;
}

BoundaryField ScenarioData::g(double t) const {
    if (g_override) return (*g_override)(t);
    BoundaryField et = slip_eta(t);
    BoundaryField da = arc_derivative(*domain, through_flow(t));
    BoundaryField out(domain->num_nodes());
    for (int k = 0; k < domain->num_nodes(); ++k) out[k] = (et[k] - 2.0 * da[k]) / depth_nodes[k];
    return out;
}

ScenarioData zero_scenario(DomainPtr domain) {
    ScenarioData s;
    const int nc = domain->grid.size(), m = domain->num_nodes();
    s.domain = domain;
    s.depth.assign(nc, 1.0);
    s.depth_nodes.assign(m, 1.0);
    s.through_flow = TimeField<BoundaryField>(BoundaryField(m, 0.0));
    s.slip_alpha = TimeField<BoundaryField>(BoundaryField(m, 0.0));
    s.slip_eta = TimeField<BoundaryField>(BoundaryField(m, 0.0));
    s.friction = TimeField<Field>(Field(nc, 0.0));
    s.source = TimeField<Field>(Field(nc, 0.0));
    s.forcing_curl = TimeField<Field>(Field(nc, 0.0));
    s.initial_vorticity.assign(nc, 0.0);
    return s;
}

double compatibility_residual(const ScenarioData& s, double t) {
    const Domain& d = *s.domain;
    const BoundaryField a = s.through_flow(t);
    const Field A = s.source(t);
    double flux = 0.0;
    for (int k = 0; k < d.num_nodes(); ++k) flux += s.depth_nodes[k] * a[k] * d.nodes[k].ds;
    return std::abs(flux - integrate(d, A));
}

namespace {

double signed_residual(const ScenarioData& s, const Field& A, const BoundaryField& a) {
    const Domain& d = *s.domain;
    double flux = 0.0;
    for (int k = 0; k < d.num_nodes(); ++k) flux += s.depth_nodes[k] * a[k] * d.nodes[k].ds;
    return flux - integrate(d, A);
}

template <class F>
TimeField<F> map_field(const TimeField<F>& src, std::function<F(const F&, double)> op) {
    if (!src.time_dependent()) return TimeField<F>(op(src(0.0), 0.0));
    return TimeField<F>(std::function<F(double)>([src, op](double t) { return op(src(t), t); }));
}

}  // namespace

ScenarioData balance_compatibility(const ScenarioData& s, BalanceMode mode) {
    if (mode == BalanceMode::none) return s;
    ScenarioData out = s;
    const Domain& d = *s.domain;
    auto a_src = s.through_flow;
    auto A_src = s.source;
    const bool dynamic = a_src.time_dependent() || A_src.time_dependent();
    if (mode == BalanceMode::source) {
        auto fix = [s, a_src, &d](const Field& A, double t) {
            Field r = A;
            const double shift = signed_residual(s, A, a_src(t)) / d.active_area();
            for (int c : d.active_cells) r[c] += shift;
            return r;
        };
        if (dynamic)
            out.source = TimeField<Field>(std::function<Field(double)>([fix, A_src](double t) { return fix(A_src(t), t); }));
        else
            out.source = TimeField<Field>(fix(A_src(0.0), 0.0));
    } else {
        double bsum = 0.0;
        for (int k = 0; k < d.num_nodes(); ++k) bsum += s.depth_nodes[k] * d.nodes[k].ds;
        auto fix = [s, A_src, bsum](const BoundaryField& a, double t) {
            BoundaryField r = a;
            const double shift = signed_residual(s, A_src(t), a) / bsum;
            for (double& v : r) v -= shift;
            return r;
        };
        if (dynamic)
            out.through_flow = TimeField<BoundaryField>(
                std::function<BoundaryField(double)>([fix, a_src](double t) { return fix(a_src(t), t); }));
        else
            out.through_flow = TimeField<BoundaryField>(fix(a_src(0.0), 0.0));
    }
    return out;
}

ScenarioData mollify_scenario(const ScenarioData& s, double theta) {
    ScenarioData out = s;
    const DomainPtr dom = s.domain;
    auto interior = std::function<Field(const Field&, double)>(
        [dom, theta](const Field& f, double) { return mollify_data(*dom, f, theta, MollifyMode::interior).values; });
    out.friction = map_field(s.friction, interior);
    out.source = map_field(s.source, interior);
    out.forcing_curl = map_field(s.forcing_curl, interior);
    out.initial_vorticity = mollify_data(*dom, s.initial_vorticity, theta, MollifyMode::initial).values;

    const BoundaryField bn = s.depth_nodes;
    out.through_flow = map_field(s.through_flow, std::function<BoundaryField(const BoundaryField&, double)>(
                                                     [dom, theta, bn](const BoundaryField& a, double) {
                                                         BoundaryField flux(a.size());
                                                         for (std::size_t k = 0; k < a.size(); ++k) flux[k] = bn[k] * a[k];
                                                         flux = mollify_data(*dom, flux, theta, MollifyMode::boundary).values;
                                                         for (std::size_t k = 0; k < a.size(); ++k) flux[k] /= bn[k];
                                                         return flux;
                                                     }));

    ScenarioData base = s;
    base.through_flow = out.through_flow;
    auto boundary_zeroed = [dom, theta](std::function<BoundaryField(double)> src) {
        return TimeField<BoundaryField>(std::function<BoundaryField(double)>([dom, theta, src](double t) {
            if (t <= theta) return BoundaryField(dom->num_nodes(), 0.0);
            return mollify_data(*dom, src(t), theta, MollifyMode::boundary).values;
        }));
    };
    out.gamma_override = boundary_zeroed([base](double t) { return base.gamma(t); });
    out.g_override = boundary_zeroed([base](double t) { return base.g(t); });
    return out;
}

ScenarioData rigid_rotation_scenario(DomainPtr domain) {
    ScenarioData s = zero_scenario(domain);
    for (int c : domain->active_cells) s.initial_vorticity[c] = 2.0;
    return s;
}

ScenarioData friction_decay_scenario(DomainPtr domain, double kappa, double omega0) {
    ScenarioData s = zero_scenario(domain);
    s.friction = TimeField<Field>(Field(domain->grid.size(), kappa));
    for (int c : domain->active_cells) s.initial_vorticity[c] = omega0;
    return s;
}

namespace {

// Sum of three plane waves, normalised to max |f| = 1 over the active cells.
class SmoothRandom {
public:
    SmoothRandom(std::mt19937_64& rng, const Domain& d) {
        const double L = std::max(d.grid.nx * d.grid.dx, d.grid.ny * d.grid.dy);
        std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * M_PI);
        for (int m = 0; m < 3; ++m) {
            const double kmax = 2.0 * M_PI * (m + 1) / L;
            kx_[m] = kmax * u(rng);
            ky_[m] = kmax * u(rng);
            ph_[m] = ph(rng);
            amp_[m] = u(rng) / (m + 1);
        }
        double mx = 0.0;
        for (int c : d.active_cells) mx = std::max(mx, std::abs(raw(d.grid.center(c))));
        for (const auto& n : d.nodes) mx = std::max(mx, std::abs(raw(n.position)));
        scale_ = mx > 0.0 ? 1.0 / mx : 0.0;
    }
    double operator()(Vec2 x) const { return scale_ * raw(x); }

private:
    double raw(Vec2 x) const {
        double s = 0.0;
        for (int m = 0; m < 3; ++m) s += amp_[m] * std::sin(kx_[m] * x.x + ky_[m] * x.y + ph_[m]);
        return s;
    }
    double kx_[3], ky_[3], ph_[3], amp_[3];
    double scale_ = 1.0;
};

Field cell_field(const Domain& d, const std::function<double(Vec2)>& f) {
    Field out(d.grid.size(), 0.0);
    for (int c = 0; c < d.grid.size(); ++c) out[c] = f(d.grid.center(c));
    return out;
}

BoundaryField node_field(const Domain& d, const std::function<double(Vec2)>& f) {
    BoundaryField out(d.num_nodes());
    for (int k = 0; k < d.num_nodes(); ++k) out[k] = f(d.nodes[k].position);
    return out;
}

}  // namespace

ScenarioData random_scenario(DomainPtr domain, std::uint64_t seed, RandomFamily family) {
    const Domain& d = *domain;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ScenarioData s = zero_scenario(domain);

    const SmoothRandom fb(rng, d), fa(rng, d), fg(rng, d), fw(rng, d);
    auto depth = [&fb](Vec2 x) { return 1.25 + 0.25 * fb(x); };
    s.depth = cell_field(d, depth);
    s.depth_nodes = node_field(d, depth);

    const double amp_a = 0.3 + 0.7 * u01(rng);
    BoundaryField a = node_field(d, [&](Vec2 x) { return amp_a * fa(x); });
    Field w0 = cell_field(d, [&](Vec2 x) { return 0.95 * fw(x); });
    for (int c = 0; c < d.grid.size(); ++c)
        if (!d.active[c]) w0[c] = 0.0;
    s.initial_vorticity = w0;

    if (family == RandomFamily::clean) {
        double flux = 0.0, wsum = 0.0;
        for (int k = 0; k < d.num_nodes(); ++k) {
            flux += s.depth_nodes[k] * a[k] * d.nodes[k].ds;
            wsum += s.depth_nodes[k] * d.nodes[k].ds;
        }
        for (double& x : a) x -= flux / wsum;
        const double c = 0.2 + 0.8 * u01(rng);
        Field kappa(d.grid.size());
        for (int i = 0; i < d.grid.size(); ++i) kappa[i] = c * s.depth[i];
        s.friction = TimeField<Field>(kappa);
        s.through_flow = TimeField<BoundaryField>(a);
        BoundaryField alpha(d.num_nodes()), eta(d.num_nodes());
        const BoundaryField g = node_field(d, [&](Vec2 x) { return 0.95 * fg(x); });
        const BoundaryField da = arc_derivative(d, a);
        for (int k = 0; k < d.num_nodes(); ++k) {
            alpha[k] = 2.0 * d.nodes[k].curvature;
            eta[k] = s.depth_nodes[k] * g[k] + 2.0 * da[k];
        }
        s.slip_alpha = TimeField<BoundaryField>(alpha);
        s.slip_eta = TimeField<BoundaryField>(eta);
        return s;
    }

    const SmoothRandom fk(rng, d), fA(rng, d), fG(rng, d), fal(rng, d);
    s.friction = TimeField<Field>(cell_field(d, [&](Vec2 x) { return 0.2 + 0.3 * (1.0 + fk(x)); }));
    Field A = cell_field(d, [&](Vec2 x) { return 0.5 * fA(x); });
    s.source = TimeField<Field>(A);
    s.forcing_curl = TimeField<Field>(cell_field(d, [&](Vec2 x) { return 0.5 * fG(x); }));
    s.through_flow = TimeField<BoundaryField>(a);
    s.slip_alpha = TimeField<BoundaryField>(node_field(d, [&](Vec2 x) { return 1.0 + 0.5 * fal(x); }));
    s.slip_eta = TimeField<BoundaryField>(node_field(d, [&](Vec2 x) { return 0.5 * fg(x); }));
    return balance_compatibility(s, BalanceMode::source);
}

}  // namespace lakesim
