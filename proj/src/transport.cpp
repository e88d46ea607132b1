#include "lakesim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lakesim/errors.hpp"

namespace lakesim {

BoundaryVorticityData boundary_vorticity_data(const ScenarioData& s, double t) {
    return {s.gamma(t), s.g(t)};
}

BoundaryField boundary_vorticity(const BoundaryField& vs, const BoundaryVorticityData& data) {
    BoundaryField out(vs.size());
    for (std::size_t k = 0; k < vs.size(); ++k) out[k] = data.gamma[k] * vs[k] + data.g[k];
    return out;
}

Field perp_advection(const Domain& d, const Field& u, const Field& v, const Field& f) {
    const Grid& g = d.grid;
    Field out(g.size(), 0.0);
    auto act = [&](int i, int j) { return g.inside(i, j) && d.active[g.index(i, j)]; };
    auto diff = [&](int i, int j, int di, int dj, double h) {
        const bool p = act(i + di, j + dj), m = act(i - di, j - dj);
        const double fc = f[g.index(i, j)];
        if (p && m) return (f[g.index(i + di, j + dj)] - f[g.index(i - di, j - dj)]) / (2.0 * h);
        if (p) return (f[g.index(i + di, j + dj)] - fc) / h;
        if (m) return (fc - f[g.index(i - di, j - dj)]) / h;
        return 0.0;
    };
    for (int c : d.active_cells) {
        const int i = c % g.nx, j = c / g.nx;
        out[c] = -u[c] * diff(i, j, 0, 1, g.dy) + v[c] * diff(i, j, 1, 0, g.dx);
    }
    return out;
}

Field explicit_source(const ScenarioData& s, const VelocityField& v, double t, SourceVariant variant) {
    const Domain& d = *s.domain;
    Field q = variant == SourceVariant::friction ? s.friction(t) : s.source(t);
    for (int c = 0; c < d.grid.size(); ++c) q[c] = d.active[c] ? q[c] / s.depth[c] : 0.0;
    Field adv = perp_advection(d, v.u, v.v, q);
    Field rg = s.forcing_curl(t);
    Field out(d.grid.size(), 0.0);
    for (int c : d.active_cells) out[c] = -adv[c] + rg[c];
    return out;
}

Field assemble_source(const Field& omega, const VelocityField& v, const ScenarioData& s, double t,
                      SourceVariant variant) {
    Field out = explicit_source(s, v, t, variant);
    const Field kappa = s.friction(t);
    for (int c : s.domain->active_cells) out[c] -= kappa[c] * omega[c];
    return out;
}

VorticityHistory::VorticityHistory(int field_size, double theta, Prehistory mode, Field initial)
    : n_(field_size), theta_(theta), mode_(mode), initial_(std::move(initial)) {
    if (!(theta > 0.0)) throw SolverError("time lag must be positive");
    if (mode_ == Prehistory::initial && static_cast<int>(initial_.size()) != n_)
        throw SolverError("initial prehistory needs the initial field");
}

void VorticityHistory::push(double t, const Field& omega) {
    if (!entries_.empty() && !(t > entries_.back().first)) throw SolverError("history times must increase");
    entries_.emplace_back(t, omega);
    // Keep one snapshot at or before the window start.
    while (entries_.size() >= 2 && entries_[1].first <= t - theta_) entries_.pop_front();
}

Field VorticityHistory::average(double t, double R, const Field* candidate) const {
    Field out(n_, 0.0);
    std::vector<const std::pair<double, Field>*> pts;
    for (const auto& e : entries_)
        if (e.first <= t) pts.push_back(&e);
    std::pair<double, Field> cand;
    if (candidate) {
        cand = {t, *candidate};
        if (!pts.empty() && pts.back()->first == t) pts.pop_back();
        pts.push_back(&cand);
    }
    auto clip = [R](double x) { return std::clamp(x, -R, R); };
    const double lo = t - theta_;
    // Prehistory part, tau in [lo, 0).
    const double pre = std::clamp(0.0, lo, t) - lo;
    if (pre > 0.0 && mode_ == Prehistory::initial)
        for (int c = 0; c < n_; ++c) out[c] += pre * clip(initial_[c]);
    // Piecewise linear part on [max(lo,0), t], held constant outside the
    // snapshot range.
    const double start = std::max(lo, 0.0);
    auto constant = [&](const Field& f, double a, double b) {
        if (b > a)
            for (int c = 0; c < n_; ++c) out[c] += (b - a) * clip(f[c]);
    };
    if (!pts.empty()) {
        constant(pts.front()->second, start, std::min(pts.front()->first, t));
        constant(pts.back()->second, std::max(pts.back()->first, start), t);
    }
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double t0 = pts[k]->first, t1 = pts[k + 1]->first;
        const double a = std::max(t0, start), b = std::min(t1, t);
        if (!(b > a)) continue;
        const double wm = (0.5 * (a + b) - t0) / (t1 - t0);
        const Field& f0 = pts[k]->second;
        const Field& f1 = pts[k + 1]->second;
        for (int c = 0; c < n_; ++c) out[c] += (b - a) * ((1.0 - wm) * clip(f0[c]) + wm * clip(f1[c]));
    }
    for (double& x : out) x /= theta_;
    return out;
}

Field timelag_cutoff_average(const VorticityHistory& history, double t, double theta, double R) {
    if (theta != history.theta()) throw SolverError("history window does not match the requested lag");
    return history.average(t, R);
}

TransportOperator::TransportOperator(DomainPtr domain, Field b, BoundaryField b_nodes, TransportOptions opt)
    : domain_(std::move(domain)), b_(std::move(b)), bn_(std::move(b_nodes)), opt_(opt) {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    std::vector<double> extra(g.size(), 0.0);
    for (const Crossing& cr : d.crossings) {
        const double h = cr.axis == 0 ? g.dx : g.dy;
        extra[cr.cell] += 1.0 / (cr.theta * h * h);
    }
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int r = 0; r < d.num_active(); ++r) {
        const int c = d.active_cells[r];
        const int i = c % g.nx, j = c / g.nx;
        std::vector<std::pair<int, double>> row;
        double diag = extra[c];
        for (int q = 0; q < 4; ++q) {
            const int ci = i + di[q], cj = j + dj[q];
            if (!g.inside(ci, cj) || !d.active[g.index(ci, cj)]) continue;
            const double h = q < 2 ? g.dx : g.dy;
            diag += 1.0 / (h * h);
            row.push_back({d.compact[g.index(ci, cj)], -1.0 / (h * h)});
        }
        row.push_back({r, diag});
        std::sort(row.begin(), row.end());
        for (auto& [col, v] : row) laplace_.push(col, v);
        laplace_.end_row();
    }
}

void TransportOperator::inflow_rates(const VelocityField& v, const BoundaryField& a, std::vector<double>& rate) const {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    rate.assign(g.size(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const int f = g.xface(i, j);
            if (d.xface_kind[f] != FaceKind::interior) continue;
            const double F = 0.5 * (b_[g.index(i - 1, j)] + b_[g.index(i, j)]) * v.faces.x_normal[f] * g.dy;
            if (F > 0.0) rate[g.index(i, j)] += F;
            else rate[g.index(i - 1, j)] -= F;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int f = g.yface(i, j);
            if (d.yface_kind[f] != FaceKind::interior) continue;
            const double F = 0.5 * (b_[g.index(i, j - 1)] + b_[g.index(i, j)]) * v.faces.y_normal[f] * g.dx;
            if (F > 0.0) rate[g.index(i, j)] += F;
            else rate[g.index(i, j - 1)] -= F;
        }
    const BoundaryPartition part = partition_boundary(d, a, opt_.eps_a);
    for (int k : part.inflow) rate[d.nodes[k].cell] += bn_[k] * (-a[k]) * d.nodes[k].ds;
}

double TransportOperator::cfl_number(const VelocityField& v, const BoundaryField& a, const Field& A,
                                     double dt) const {
    const Domain& d = *domain_;
    std::vector<double> rate;
    inflow_rates(v, a, rate);
    const double area = d.grid.cell_area();
    double worst = 0.0;
    for (int c : d.active_cells) worst = std::max(worst, dt * (rate[c] / area + std::max(A[c], 0.0)) / b_[c]);
    return worst;
}

double TransportOperator::stable_dt(const VelocityField& v, const BoundaryField& a, const Field& A,
                                    double target) const {
    const double c1 = cfl_number(v, a, A, 1.0);
    return c1 > 0.0 ? target / c1 : std::numeric_limits<double>::infinity();
}

StepResult TransportOperator::step(const Field& omega, const VelocityField& v, const BoundaryField& a, const Field& A,
                                   const Field& kappa, const Field& source, double nu, double dt,
                                   const BoundaryField& bc) const {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    const double area = g.cell_area();
    StepResult res;
    if (!(dt > 0.0)) throw SolverError("time step must be positive");
    if (nu < 0.0) throw SolverError("viscosity must be non-negative");

    std::vector<double> rate(g.size(), 0.0), mix(g.size(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const int f = g.xface(i, j);
            if (d.xface_kind[f] != FaceKind::interior) continue;
            const int L = g.index(i - 1, j), R = g.index(i, j);
            const double F = 0.5 * (b_[L] + b_[R]) * v.faces.x_normal[f] * g.dy;
            if (F > 0.0) {
                rate[R] += F;
                mix[R] += F * omega[L];
            } else {
                rate[L] -= F;
                mix[L] -= F * omega[R];
            }
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int f = g.yface(i, j);
            if (d.yface_kind[f] != FaceKind::interior) continue;
            const int B = g.index(i, j - 1), T = g.index(i, j);
            const double F = 0.5 * (b_[B] + b_[T]) * v.faces.y_normal[f] * g.dx;
            if (F > 0.0) {
                rate[T] += F;
                mix[T] += F * omega[B];
            } else {
                rate[B] -= F;
                mix[B] -= F * omega[T];
            }
        }
    const BoundaryPartition part = partition_boundary(d, a, opt_.eps_a);
    for (int k : part.inflow) {
        const double F = bn_[k] * (-a[k]) * d.nodes[k].ds;
        rate[d.nodes[k].cell] += F;
        mix[d.nodes[k].cell] += F * bc[k];
        res.boundary_inflow += F * bc[k];
    }
    for (int k : part.outflow) res.boundary_outflow += bn_[k] * a[k] * d.nodes[k].ds * omega[d.nodes[k].cell];

    Field bw(g.size(), 0.0);
    for (int c : d.active_cells) {
        res.cfl = std::max(res.cfl, dt * (rate[c] / area + std::max(A[c], 0.0)) / b_[c]);
        bw[c] = b_[c] * omega[c] - dt / area * (rate[c] * omega[c] - mix[c]) - dt * A[c] * omega[c] + dt * source[c];
        res.mass_before += b_[c] * omega[c] * area;
        res.source_integral += (source[c] - A[c] * omega[c]) * area;
    }
    if (res.cfl > opt_.cfl_max)
        throw CflViolation("CFL condition violated: " + std::to_string(res.cfl) + " > " + std::to_string(opt_.cfl_max),
                           res.cfl);

    res.omega.assign(g.size(), 0.0);
    if (nu == 0.0) {
        for (int c : d.active_cells) res.omega[c] = bw[c] / (b_[c] + dt * kappa[c]);
    } else {
        SparseMatrix m = laplace_;
        for (double& x : m.val) x *= nu;
        std::vector<double> rhs(d.num_active()), x(d.num_active());
        for (int r = 0; r < d.num_active(); ++r) {
            const int c = d.active_cells[r];
            for (int k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
                if (m.col[k] == r) m.val[k] += b_[c] / dt + kappa[c];
            rhs[r] = bw[c] / dt;
            x[r] = bw[c] / b_[c];
        }
        for (const Crossing& cr : d.crossings) {
            const double h = cr.axis == 0 ? g.dx : g.dy;
            rhs[d.compact[cr.cell]] += nu * d.interpolate(bc, cr) / (cr.theta * h * h);
        }
        LinearSolverOptions lo;
        lo.tolerance = opt_.diffusion_tolerance;
        lo.max_iterations = 10000;
        SolveStats st = pcg(m, rhs, x, lo, false);
        res.diffusion_iterations = st.iterations;
        for (int r = 0; r < d.num_active(); ++r) res.omega[d.active_cells[r]] = x[r];
        for (const Crossing& cr : d.crossings) {
            const double h = cr.axis == 0 ? g.dx : g.dy;
            res.diffusion_flux += nu * (d.interpolate(bc, cr) - res.omega[cr.cell]) / (cr.theta * h * h) * area;
        }
    }
    for (int c : d.active_cells) {
        res.mass_after += b_[c] * res.omega[c] * area;
        res.friction_integral -= kappa[c] * res.omega[c] * area;
    }
    return res;
}

Field step_vorticity(const Field& omega, const VelocityField& v, const ScenarioData& s, double t, double nu,
                     double dt, const BoundaryField& bc, SourceVariant variant, const TransportOptions& opt) {
    TransportOperator op(s.domain, s.depth, s.depth_nodes, opt);
    const Field src = explicit_source(s, v, t, variant);
    return op.step(omega, v, s.through_flow(t), s.source(t), s.friction(t), src, nu, dt, bc).omega;
}

}  // namespace lakesim
