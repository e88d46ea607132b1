#include "lakesim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "lakesim/errors.hpp"

namespace lakesim {

void SolverConfig::validate() const {
    if (!(nu >= 0.0)) throw ConfigError("nu must be non-negative");
    if (!(theta > 0.0)) throw ConfigError("theta must be positive");
    if (!R_auto && !(R > 0.0)) throw ConfigError("R must be positive");
    if (!(p > 1.0)) throw ConfigError("p must exceed 1");
    if (!(T >= 0.0)) throw ConfigError("T must be non-negative");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(cfl_target > 0.0) || !(cfl_max > 0.0)) throw ConfigError("CFL limits must be positive");
    if (!(tol_fp > 0.0)) throw ConfigError("tol_fp must be positive");
    if (max_picard < 1) throw ConfigError("max_picard must be at least 1");
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
    if (cadence < 1) throw ConfigError("cadence must be at least 1");
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

double velocity_change(const VelocityField& a, const VelocityField& b) {
    double m = 0.0;
    m = std::max(m, max_abs_diff(a.u, b.u));
    m = std::max(m, max_abs_diff(a.v, b.v));
    m = std::max(m, max_abs_diff(a.faces.x_normal, b.faces.x_normal));
    m = std::max(m, max_abs_diff(a.faces.y_normal, b.faces.y_normal));
    m = std::max(m, max_abs_diff(a.faces.x_tangential, b.faces.x_tangential));
    m = std::max(m, max_abs_diff(a.faces.y_tangential, b.faces.y_tangential));
    return m;
}

double sup_abs(const Domain& d, const Field& f) {
    double m = 0.0;
    for (int c : d.active_cells) m = std::max(m, std::abs(f[c]));
    return m;
}

}  // namespace

Simulation::Simulation(const ScenarioData& scenario, const SolverConfig& config)
    : scenario_(scenario), config_(config) {
    config_.validate();
    for (int c : scenario_.domain->active_cells)
        if (!(scenario_.depth[c] > 0.0)) throw ConfigError("depth must be positive");
    elliptic_ = std::make_shared<EllipticSystem>(scenario_.domain, scenario_.depth, scenario_.depth_nodes,
                                                 config_.linear);
    TransportOptions to;
    to.cfl_max = config_.cfl_max;
    to.diffusion_tolerance = config_.diffusion_tolerance;
    to.eps_a = config_.eps_a;
    transport_ = std::make_shared<TransportOperator>(scenario_.domain, scenario_.depth, scenario_.depth_nodes, to);
    static_flux_ = !scenario_.source.time_dependent() && !scenario_.through_flow.time_dependent();
    if (static_flux_) cached_H_ = elliptic_->solve_neumann(scenario_.source(0.0), scenario_.through_flow(0.0),
                                                           config_.tol_comp);
}

VorticityHistory Simulation::make_history() const {
    return VorticityHistory(scenario_.domain->grid.size(), config_.theta, config_.prehistory,
                            scenario_.initial_vorticity);
}

Field Simulation::flux_potential(double t) const {
    if (static_flux_) return cached_H_;
    return elliptic_->solve_neumann(scenario_.source(t), scenario_.through_flow(t), config_.tol_comp);
}

BoundaryField Simulation::boundary_values(const StateFields& state, double t) const {
    const BoundaryField vs = elliptic_->tangential_velocity(state.h, state.H);
    return boundary_vorticity(vs, boundary_vorticity_data(scenario_, t));
}

StateFields Simulation::initial_state(VorticityHistory& history) const {
    const Domain& d = *scenario_.domain;
    StateFields s;
    s.t = 0.0;
    s.omega.assign(d.grid.size(), 0.0);
    for (int c : d.active_cells) s.omega[c] = scenario_.initial_vorticity[c];
    history.push(0.0, s.omega);
    const Field avg = history.average(0.0, config_.R);
    Field rhs(d.grid.size(), 0.0);
    for (int c : d.active_cells) rhs[c] = scenario_.depth[c] * avg[c];
    s.h = elliptic_->solve_dirichlet(rhs);
    s.H = flux_potential(0.0);
    s.v = elliptic_->reconstruct_velocity(s.h, s.H, scenario_.through_flow(0.0));
    return s;
}

StateFields Simulation::step(const StateFields& state, VorticityHistory& history, double dt, StepInfo* info) const {
    const Domain& d = *scenario_.domain;
    const double t1 = state.t + dt;
    const BoundaryField a = scenario_.through_flow(t1);
    const Field A = scenario_.source(t1);
    const Field kappa = scenario_.friction(t1);
    const BoundaryVorticityData bvd = boundary_vorticity_data(scenario_, t1);

    StepInfo local;
    local.t = t1;
    local.dt = dt;

    StateFields next;
    next.t = t1;
    next.H = flux_potential(t1);
    Field candidate = state.omega;
    VelocityField v_prev = state.v;
    Field h_guess = state.h;

    for (int k = 0; k < config_.max_picard; ++k) {
        const Field avg = history.average(t1, config_.R, &candidate);
        Field rhs(d.grid.size(), 0.0);
        for (int c : d.active_cells) rhs[c] = scenario_.depth[c] * avg[c];
        Field h = elliptic_->solve_dirichlet(rhs, nullptr, &h_guess);
        VelocityField v = elliptic_->reconstruct_velocity(h, next.H, a);
        const BoundaryField bc = boundary_vorticity(elliptic_->tangential_velocity(h, next.H), bvd);
        const Field src = explicit_source(scenario_, v, t1, config_.source_variant);
        StepResult r = transport_->step(state.omega, v, a, A, kappa, src, config_.nu, dt, bc);
        local.cfl = r.cfl;

        const double res = velocity_change(v, v_prev);
        local.residuals.push_back(res);
        if (local.residuals.size() >= 2 && res > local.residuals[local.residuals.size() - 2])
            local.monotone = false;

        next.h = std::move(h);
        next.v = std::move(v);
        next.omega = std::move(r.omega);
        local.picard_iterations = k + 1;
        if (res <= config_.tol_fp) {
            history.push(t1, next.omega);
            if (info) *info = local;
            return next;
        }
        if (config_.relaxation == 1.0) {
            candidate = next.omega;
        } else {
            for (int c : d.active_cells)
                candidate[c] = (1.0 - config_.relaxation) * candidate[c] + config_.relaxation * next.omega[c];
        }
        v_prev = next.v;
        h_guess = next.h;
    }
    if (info) *info = local;
    throw SolverError("fixed-point iteration did not converge at t = " + std::to_string(t1), local.residuals);
}

StateFields solve_viscous_step(const StateFields& state, VorticityHistory& history, const ScenarioData& scenario,
                               const SolverConfig& config, double dt, StepInfo* info) {
    SolverConfig cfg = config;
    if (cfg.R_auto) {
        cfg.R = estimate_cutoff(scenario, config);
        cfg.R_auto = false;
    }
    Simulation sim(scenario, cfg);
    return sim.step(state, history, dt, info);
}

double weighted_lp(const Domain& d, const Field& omega, const Field& b, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1");
    if (std::isinf(p)) return sup_abs(d, omega);
    const double area = d.grid.cell_area();
    double s = 0.0;
    for (int c : d.active_cells) s += b[c] * std::pow(std::abs(omega[c]), p) * area;
    return std::pow(s, 1.0 / p);
}

double l2_difference(const Domain& d, const Field& a, const Field& b) {
    const double area = d.grid.cell_area();
    double s = 0.0;
    for (int c : d.active_cells) s += (a[c] - b[c]) * (a[c] - b[c]) * area;
    return std::sqrt(s);
}

namespace {

StampDiagnostics stamp(const Simulation& sim, const StateFields& s, const StepInfo* info) {
    const ScenarioData& sc = sim.scenario();
    const Domain& d = *sc.domain;
    StampDiagnostics r;
    r.t = s.t;
    r.norm_l2 = weighted_lp(d, s.omega, sc.depth, 2.0);
    r.norm_l4 = weighted_lp(d, s.omega, sc.depth, 4.0);
    r.norm_l8 = weighted_lp(d, s.omega, sc.depth, 8.0);
    r.norm_max = sup_abs(d, s.omega);
    r.compatibility = std::abs(sim.elliptic().compatibility_residual(sc.source(s.t), sc.through_flow(s.t)));
    if (info) {
        r.picard_iterations = info->picard_iterations;
        r.picard_monotone = info->monotone;
    }
    return r;
}

void check_compatibility(const Simulation& sim, double T) {
    const ScenarioData& sc = sim.scenario();
    const int samples = (sc.source.time_dependent() || sc.through_flow.time_dependent()) ? 9 : 1;
    for (int k = 0; k < samples; ++k) {
        const double t = samples == 1 ? 0.0 : T * k / (samples - 1);
        const Field A = sc.source(t);
        const BoundaryField a = sc.through_flow(t);
        const double res = sim.elliptic().compatibility_residual(A, a);
        double tol = sim.config().tol_comp;
        if (tol < 0.0) tol = sim.elliptic().compatibility_tolerance(A, a);
        if (std::abs(res) > tol)
            throw CompatibilityError("incompatible data at t = " + std::to_string(t) + ": residual " +
                                         std::to_string(std::abs(res)),
                                     std::abs(res), tol);
    }
}

}  // namespace

Trajectory run_simulation(const ScenarioData& scenario, const SolverConfig& config) {
    SolverConfig cfg = config;
    cfg.validate();
    if (cfg.R_auto) {
        cfg.R = estimate_cutoff(scenario, config);
        cfg.R_auto = false;
    }
    const Simulation sim(scenario, cfg);
    check_compatibility(sim, cfg.T);
    const Domain& d = *scenario.domain;

    Trajectory traj;
    traj.R = cfg.R;
    VorticityHistory history = sim.make_history();
    StateFields state = sim.initial_state(history);
    traj.times.push_back(state.t);
    traj.states.push_back(state);
    traj.reports.push_back(stamp(sim, state, nullptr));
    traj.sup_omega = sup_abs(d, state.omega);

    const double eps_t = 1e-12 * std::max(1.0, cfg.T);
    int n = 0;
    while (state.t < cfg.T - eps_t) {
        double dt = std::min(cfg.dt, cfg.T - state.t);
        if (cfg.policy == TimeStepPolicy::adaptive) {
            const double t1 = state.t + dt;
            const double sdt = sim.transport().stable_dt(state.v, scenario.through_flow(t1), scenario.source(t1),
                                                         cfg.cfl_target);
            dt = std::min(dt, sdt);
        }
        StepInfo info;
        StateFields next;
        try {
            for (int attempt = 0;; ++attempt) {
                VorticityHistory trial = history;
                try {
                    next = sim.step(state, trial, dt, &info);
                    history = std::move(trial);
                    break;
                } catch (const CflViolation&) {
                    if (cfg.policy != TimeStepPolicy::adaptive || attempt >= 30) throw;
                    dt *= 0.5;
                }
            }
        } catch (const std::exception& e) {
            traj.complete = false;
            traj.error = e.what();
            break;
        }
        state = std::move(next);
        ++n;
        traj.steps.push_back(info);
        traj.sup_omega = std::max(traj.sup_omega, sup_abs(d, state.omega));
        const bool last = !(state.t < cfg.T - eps_t);
        if (last) state.t = std::max(state.t, cfg.T);
        if (n % cfg.cadence == 0 || last) {
            traj.times.push_back(state.t);
            traj.states.push_back(state);
            traj.reports.push_back(stamp(sim, state, &info));
        }
    }
    return traj;
}

double estimate_cutoff(const ScenarioData& scenario, const SolverConfig& config) {
    SolverConfig pilot = config;
    pilot.R_auto = false;
    pilot.R = std::numeric_limits<double>::infinity();
    pilot.policy = TimeStepPolicy::adaptive;
    pilot.cfl_target = 0.8;
    pilot.dt = 4.0 * config.dt;
    pilot.cadence = std::numeric_limits<int>::max();
    const Trajectory t = run_simulation(scenario, pilot);
    const double B = t.sup_omega;
    return B > 0.0 ? 2.0 * B : 1.0;
}

int study_threads() {
    const char* env = std::getenv("LAKESIM_THREADS");
    int n = 0;
    if (env) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

namespace {

template <class Fn>
void run_parallel(int count, Fn fn) {
    const int threads = std::min(study_threads(), count);
    if (threads <= 1) {
        for (int k = 0; k < count; ++k) fn(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int k = w; k < count; k += threads) fn(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

StudyRun summarize(const Trajectory& traj, const Domain& d, const Field& b, double p, double parameter) {
    StudyRun r;
    r.parameter = parameter;
    r.complete = traj.complete;
    r.error = traj.error;
    r.final_omega = traj.states.back().omega;
    r.final_norm_l2 = weighted_lp(d, r.final_omega, b, 2.0);
    r.final_norm_max = sup_abs(d, r.final_omega);
    for (const StateFields& s : traj.states) {
        r.sup_norm_max = std::max(r.sup_norm_max, sup_abs(d, s.omega));
        r.sup_norm_p = std::max(r.sup_norm_p, weighted_lp(d, s.omega, b, p));
    }
    return r;
}

void finish(StudyReport& rep, const Domain& d) {
    for (std::size_t k = 0; k + 1 < rep.runs.size(); ++k)
        rep.differences.push_back(l2_difference(d, rep.runs[k].final_omega, rep.runs[k + 1].final_omega));
    for (std::size_t k = 0; k + 1 < rep.differences.size(); ++k)
        if (rep.differences[k + 1] > rep.differences[k]) rep.differences_nonincreasing = false;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const StudyRun& r : rep.runs) {
        lo = std::min(lo, r.sup_norm_max);
        hi = std::max(hi, r.sup_norm_max);
    }
    rep.bound_variation = hi > 0.0 ? (hi - lo) / hi : 0.0;
}

void check_decreasing(const std::vector<double>& xs, const char* name) {
    for (std::size_t k = 0; k + 1 < xs.size(); ++k)
        if (!(xs[k + 1] < xs[k])) throw std::invalid_argument(std::string(name) + " list must be strictly decreasing");
}

}  // namespace

StudyReport viscosity_study(const ScenarioData& scenario, const SolverConfig& config, const std::vector<double>& nus) {
    if (nus.empty()) throw std::invalid_argument("empty viscosity list");
    check_decreasing(nus, "viscosity");
    SolverConfig base = config;
    if (base.R_auto) {
        base.R = estimate_cutoff(scenario, config);
        base.R_auto = false;
    }
    StudyReport rep;
    rep.kind = "nu";
    rep.runs.resize(nus.size());
    const double q = std::isinf(config.p) ? 8.0 : config.p;
    run_parallel(static_cast<int>(nus.size()), [&](int k) {
        SolverConfig c = base;
        c.nu = nus[k];
        const Trajectory t = run_simulation(scenario, c);
        rep.runs[k] = summarize(t, *scenario.domain, scenario.depth, q, nus[k]);
    });
    finish(rep, *scenario.domain);
    return rep;
}

std::vector<double> discrete_gronwall_bound(double y0, const std::vector<double>& times, const std::vector<double>& D,
                                            const std::vector<double>& B, double theta, bool check_theta0) {
    if (times.size() != D.size() || times.size() != B.size()) throw std::invalid_argument("series lengths differ");
    if (y0 < 0.0) throw std::invalid_argument("y0 must be non-negative");
    double supD = 0.0;
    for (std::size_t k = 0; k < D.size(); ++k) {
        if (D[k] < 0.0 || B[k] < 0.0) throw std::invalid_argument("D and B must be non-negative");
        supD = std::max(supD, D[k]);
    }
    if (check_theta0 && 2.0 * theta * supD > 0.5)
        throw std::invalid_argument("theta exceeds the admissible lag: 2 theta sup D > 1/2");
    std::vector<double> out(times.size());
    double intD = 0.0, intB = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0) {
            const double h = times[k] - times[k - 1];
            const double prevD = intD;
            intD += 0.5 * h * (D[k] + D[k - 1]);
            intB += 0.5 * h * (B[k] * std::exp(-intD) + B[k - 1] * std::exp(-prevD));
        }
        out[k] = 2.0 * std::exp(intD) * (y0 + intB);
    }
    return out;
}

GronwallCoefficients gronwall_coefficients(const Trajectory& traj, const ScenarioData& scenario,
                                           const SolverConfig& config, double p) {
    if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument("p must be finite and exceed 1");
    const Domain& d = *scenario.domain;
    const double area = d.grid.cell_area();
    const Field& b = scenario.depth;
    EllipticSystem sys(scenario.domain, scenario.depth, scenario.depth_nodes, config.linear);
    // Young's inequality p|f||w|^{p-1} <= eps (p-1) b|w|^p + eps^{1-p} b^{1-p}|f|^p,
    // with eps fixed so the two forcing terms add 1/2 to D.
    const double eps = 0.25 / (p - 1.0);
    GronwallCoefficients gc;
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        const StateFields& s = traj.states[n];
        const double t = s.t;
        const Field A = scenario.source(t);
        const Field kappa = scenario.friction(t);
        const Field rg = scenario.forcing_curl(t);
        const BoundaryField a = scenario.through_flow(t);
        Field q = config.source_variant == SourceVariant::friction ? kappa : A;
        for (int c = 0; c < d.grid.size(); ++c) q[c] = d.active[c] ? q[c] / b[c] : 0.0;
        const Field adv = perp_advection(d, s.v.u, s.v.v, q);

        double y = 0.0, Dv = 0.0, Bv = 0.0;
        for (int c : d.active_cells) {
            y += b[c] * std::pow(std::abs(s.omega[c]), p) * area;
            Dv = std::max(Dv, p * (std::abs(A[c]) + std::abs(kappa[c])) / b[c]);
            Bv += std::pow(eps, 1.0 - p) * std::pow(b[c], 1.0 - p) *
                  (std::pow(std::abs(rg[c]), p) + std::pow(std::abs(adv[c]), p)) * area;
        }
        Dv += 2.0 * eps * (p - 1.0);
        const BoundaryField bc =
            boundary_vorticity(sys.tangential_velocity(s.h, s.H), boundary_vorticity_data(scenario, t));
        const BoundaryPartition part = partition_boundary(d, a, config.eps_a);
        for (int k : part.inflow)
            Bv += scenario.depth_nodes[k] * std::abs(a[k]) * std::pow(std::abs(bc[k]), p) * d.nodes[k].ds;
        gc.times.push_back(t);
        gc.y.push_back(y);
        gc.D.push_back(Dv);
        gc.B.push_back(Bv);
    }
    return gc;
}

StudyReport theta_study(const ScenarioData& scenario, const SolverConfig& config, const std::vector<double>& thetas) {
    if (thetas.empty()) throw std::invalid_argument("empty lag list");
    check_decreasing(thetas, "lag");
    SolverConfig base = config;
    if (base.R_auto) {
        base.R = estimate_cutoff(scenario, config);
        base.R_auto = false;
    }
    const double q = std::isinf(config.p) ? 8.0 : config.p;
    StudyReport rep;
    rep.kind = "theta";
    rep.runs.resize(thetas.size());
    run_parallel(static_cast<int>(thetas.size()), [&](int k) {
        SolverConfig c = base;
        c.theta = thetas[k];
        const ScenarioData sk = mollify_scenario(scenario, thetas[k]);
        const Trajectory t = run_simulation(sk, c);
        StudyRun r = summarize(t, *scenario.domain, scenario.depth, q, thetas[k]);
        const GronwallCoefficients gc = gronwall_coefficients(t, sk, c, q);
        for (double x : gc.D) r.sup_D = std::max(r.sup_D, x);
        r.theta0_ok = 2.0 * thetas[k] * r.sup_D <= 0.5;
        const std::vector<double> bound = discrete_gronwall_bound(gc.y.front(), gc.times, gc.D, gc.B, thetas[k], false);
        r.bound = *std::max_element(bound.begin(), bound.end());
        rep.runs[k] = std::move(r);
    });
    finish(rep, *scenario.domain);
    for (const StudyRun& r : rep.runs)
        if (r.sup_norm_p > 2.0 * std::pow(r.bound, 1.0 / q)) rep.bound_ok = false;
    return rep;
}

}  // namespace lakesim
