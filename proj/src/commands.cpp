#include "lakesim/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include "lakesim/errors.hpp"

namespace fs = std::filesystem;

namespace lakesim {

namespace {

std::string q_label(double q) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", q);
    return buf;
}

// Bounding-box center and half diagonal.
void extent(const Domain& d, Vec2& center, double& half_diagonal) {
    Vec2 lo, hi;
    d.shape->bounding_box(lo, hi);
    center = 0.5 * (lo + hi);
    half_diagonal = 0.5 * norm(hi - lo);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::vector<MonitorOutput> evaluate_monitors(const Trajectory& traj, const ScenarioData& s, const SolverConfig& cfg,
                                             const OutputConfig& out, const std::vector<std::string>& monitors) {
    const Domain& d = *s.domain;
    std::vector<MonitorOutput> res;

    MonitorOutput norms{"norms", "norms.csv", {}, true, ""};
    norms.table.columns = {"t", "l2", "l4", "l8", "max", "compatibility", "picard_iterations", "picard_monotone"};
    for (const StateFields& st : traj.states) {
        const double r = compatibility_residual(s, st.t);
        norms.table.rows.push_back({st.t, weighted_lp_norm(d, st.omega, s.depth, 2.0),
                                    weighted_lp_norm(d, st.omega, s.depth, 4.0),
                                    weighted_lp_norm(d, st.omega, s.depth, 8.0),
                                    weighted_lp_norm(d, st.omega, s.depth, INFINITY), r, 0.0, 1.0});
        if (!std::isfinite(norms.table.rows.back()[4])) norms.pass = false;
    }
    // Picard statistics come from the solver and are absent when re-reading snapshots.
    for (std::size_t k = 0; k < traj.reports.size() && k < norms.table.rows.size(); ++k) {
        norms.table.rows[k][6] = traj.reports[k].picard_iterations;
        norms.table.rows[k][7] = traj.reports[k].picard_monotone ? 1.0 : 0.0;
    }
    res.push_back(std::move(norms));

    EllipticSystem sys(s.domain, s.depth, s.depth_nodes, cfg.linear);
    for (const std::string& m : monitors) {
        if (m == "norms") continue;
        if (m == "compatibility") {
            MonitorOutput o{m, "compatibility.csv", {}, true, ""};
            o.table.columns = {"t", "residual", "tolerance", "pass"};
            for (const StateFields& st : traj.states) {
                const Field A = s.source(st.t);
                const BoundaryField a = s.through_flow(st.t);
                const double r = std::abs(sys.compatibility_residual(A, a));
                const double tol = cfg.tol_comp < 0.0 ? sys.compatibility_tolerance(A, a) : cfg.tol_comp;
                const bool ok = r <= tol;
                o.pass = o.pass && ok;
                o.table.rows.push_back({st.t, r, tol, ok ? 1.0 : 0.0});
            }
            res.push_back(std::move(o));
        } else if (m == "max_principle") {
            const MaxPrincipleSeries mp = max_principle_monitor(traj, s, cfg);
            MonitorOutput o{m, "max_principle.csv", {}, mp.pass, mp.clean ? "" : "general data, reported only"};
            o.table.columns = {"t", "sup_omega", "reference", "running_reference"};
            for (std::size_t k = 0; k < mp.times.size(); ++k)
                o.table.rows.push_back({mp.times[k], mp.sup_omega[k], mp.reference[k], mp.running_reference[k]});
            res.push_back(std::move(o));
        } else if (m == "gronwall" || m == "gronwall_literal") {
            const GronwallForm form = m == "gronwall" ? GronwallForm::corrected : GronwallForm::literal;
            for (double q : out.q) {
                const GronwallSeries g = gronwall_monitor(traj, s, cfg, q, form);
                MonitorOutput o{m + "_q" + q_label(q), m + "_q" + q_label(q) + ".csv", {}, g.pass, ""};
                o.table.columns = {"t", "lhs", "rhs", "slack", "scale"};
                for (std::size_t k = 0; k < g.times.size(); ++k)
                    o.table.rows.push_back({g.times[k], g.lhs[k], g.rhs[k], g.slack[k], g.scale[k]});
                res.push_back(std::move(o));
            }
        } else if (m == "weak") {
            MonitorOutput o{m, "weak.csv", {}, true, ""};
            o.table.columns = {"test", "lhs", "rhs", "residual"};
            if (!(cfg.T > 0.0)) {
                o.note = "T = 0, no test functions";
            } else {
                Vec2 c;
                double half = 0.0;
                extent(d, c, half);
                std::vector<TestFunction> family{bump_test_function(c, 0.5 * d.shape->inradius(), cfg.T)};
                try {
                    family.push_back(inflow_test_function(d, s.through_flow(0.0), cfg.T, 0.5 * d.shape->inradius(),
                                                          cfg.eps_a));
                } catch (const std::invalid_argument&) {
                    o.note = "no inflow test function";
                }
                for (std::size_t k = 0; k < family.size(); ++k) {
                    const WeakResidual w = weak_residual(traj, s, cfg, family[k]);
                    o.pass = o.pass && std::isfinite(w.residual);
                    o.table.rows.push_back({static_cast<double>(k), w.lhs, w.rhs, w.residual});
                }
            }
            res.push_back(std::move(o));
        } else if (m == "trace") {
            MonitorOutput o{m, "trace.csv", {}, true, ""};
            o.table.columns = {"sigma", "boundary_layer", "initial_layer"};
            if (!(cfg.T > 0.0)) {
                o.note = "T = 0, no layers";
            } else {
                const double h = std::max(d.grid.dx, d.grid.dy);
                std::vector<double> sig = out.sigmas;
                if (sig.empty()) {
                    for (double f : {8.0, 4.0, 2.0})
                        if (f * h <= 0.5 * d.sigma0) sig.push_back(f * h);
                    if (sig.size() < 3) o.note = "default sigma list clipped to sigma0/2";
                }
                Vec2 c;
                double half = 0.0;
                extent(d, c, half);
                try {
                    const TraceReport tr = boundary_trace_monitor(traj, s, cfg, sig, out.q.front(),
                                                                  bump_test_function(c, 2.0 * half, cfg.T));
                    for (const TraceRow& r : tr.rows) o.table.rows.push_back({r.sigma, r.boundary_layer, r.initial_layer});
                    o.pass = tr.boundary_nonincreasing;
                    if (!tr.initial_nonincreasing)
                        o.note += (o.note.empty() ? "" : "; ") + std::string("initial layer not monotone across sigma");
                } catch (const std::invalid_argument& e) {
                    o.pass = false;
                    o.note = e.what();
                }
            }
            res.push_back(std::move(o));
        } else {
            throw ConfigError("unknown monitor '" + m + "'");
        }
    }
    return res;
}

ScenarioData command_scenario(const ParsedConfig& pc, long long seed, const std::string& family) {
    if (seed < 0) return pc.scenario;
    if (family != "clean" && family != "general") throw ConfigError("family must be clean or general");
    ScenarioData s = random_scenario(pc.scenario.domain, static_cast<std::uint64_t>(seed),
                                     family == "clean" ? RandomFamily::clean : RandomFamily::general);
    s.p = pc.solver.p;
    return s;
}

namespace {

struct Prepared {
    ParsedConfig pc;
    ScenarioData scenario;
    std::string out;
    std::vector<std::string> monitors;
    Manifest manifest;
};

Prepared prepare(const CommandOptions& opt, const std::string& command) {
    Prepared p;
    p.pc = load_config(opt.config_path);
    p.scenario = command_scenario(p.pc, opt.seed, opt.family);
    p.out = opt.out_dir.empty() ? p.pc.output.directory : opt.out_dir;
    p.monitors = opt.monitors.empty() ? p.pc.output.monitors : opt.monitors;
    fs::create_directories(p.out);
    write_text((fs::path(p.out) / "config.ini").string(), p.pc.text);

    const Domain& d = *p.scenario.domain;
    Manifest& m = p.manifest;
    m.command = command;
    m.config_file = "config.ini";
    m.config_hash = p.pc.hash;
    m.shape = p.pc.shape.name();
    m.resolution = p.pc.resolution;
    m.grid = d.grid;
    m.active_cells = d.num_active();
    m.R = p.pc.solver.R;
    m.seed = opt.seed;
    m.family = opt.seed >= 0 ? opt.family : "";
    m.warnings = p.pc.warnings;
    m.complete = false;
    write_manifest((fs::path(p.out) / "manifest.json").string(), m);
    return p;
}

std::string snapshot_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%05zu.csv", k);
    return buf;
}

int report_monitors(const std::vector<MonitorOutput>& mons, const std::string& dir, Manifest& m, std::ostream& log) {
    bool ok = true;
    for (const MonitorOutput& o : mons) {
        write_table((fs::path(dir) / o.file).string(), o.table);
        m.monitors.push_back({o.name, o.file, o.pass, o.note});
        log << (o.pass ? "PASS " : "FAIL ") << o.name << (o.note.empty() ? "" : "  (" + o.note + ")") << '\n';
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}

int study(const CommandOptions& opt, std::ostream& log, bool nu) {
    Prepared p = prepare(opt, nu ? "study-nu" : "study-theta");
    std::vector<double> list = opt.parameters;
    if (list.empty()) list = nu ? std::vector<double>{1e-2, 1e-3, 1e-4} : std::vector<double>{0.2, 0.1, 0.05};
    const std::string path = (fs::path(p.out) / (nu ? "study_nu.csv" : "study_theta.csv")).string();
    const std::string mpath = (fs::path(p.out) / "manifest.json").string();
    StudyReport rep;
    try {
        rep = nu ? viscosity_study(p.scenario, p.pc.solver, list) : theta_study(p.scenario, p.pc.solver, list);
    } catch (const std::exception& e) {
        p.manifest.error = e.what();
        write_manifest(mpath, p.manifest);
        log << "FAIL study: " << e.what() << '\n';
        return 2;
    }
    Table t;
    t.columns = {nu ? "nu" : "theta", "final_norm_l2", "final_norm_max", "sup_norm_max", "sup_norm_p",
                 "bound",         "sup_D",         "theta0_ok",      "complete",     "difference_to_previous"};
    bool complete = true;
    for (std::size_t k = 0; k < rep.runs.size(); ++k) {
        const StudyRun& r = rep.runs[k];
        complete = complete && r.complete;
        if (!r.complete) p.manifest.error += (p.manifest.error.empty() ? "" : "; ") + r.error;
        t.rows.push_back({r.parameter, r.final_norm_l2, r.final_norm_max, r.sup_norm_max, r.sup_norm_p, r.bound,
                          r.sup_D, r.theta0_ok ? 1.0 : 0.0, r.complete ? 1.0 : 0.0,
                          k == 0 ? NAN : rep.differences[k - 1]});
    }
    write_table(path, t);

    bool ok = complete;
    log << (complete ? "PASS" : "FAIL") << " runs complete\n";
    log << (rep.differences_nonincreasing ? "PASS" : "FAIL") << " pairwise differences non-increasing\n";
    ok = ok && rep.differences_nonincreasing;
    std::string note;
    if (nu) {
        const bool v = rep.bound_variation < 0.1;
        log << (v ? "PASS" : "FAIL") << " sup norm variation " << format_number(rep.bound_variation) << " < 0.1\n";
        ok = ok && v;
    } else {
        bool t0 = true;
        for (const StudyRun& r : rep.runs) t0 = t0 && r.theta0_ok;
        log << (rep.bound_ok ? "PASS" : "FAIL") << " lag norm below twice the Gronwall bound\n";
        log << (t0 ? "PASS" : "FAIL") << " lag condition 2 theta sup D <= 1/2\n";
        ok = ok && rep.bound_ok && t0;
    }
    p.manifest.monitors.push_back({nu ? "study_nu" : "study_theta", fs::path(path).filename().string(), ok, note});
    p.manifest.complete = complete;
    write_manifest(mpath, p.manifest);
    return ok ? 0 : 1;
}

}  // namespace

int cmd_run(const CommandOptions& opt, std::ostream& log) {
    Prepared p = prepare(opt, "run");
    const std::string mpath = (fs::path(p.out) / "manifest.json").string();
    for (const auto& w : p.pc.warnings) log << "warning: " << w << '\n';
    Trajectory traj;
    try {
        traj = run_simulation(p.scenario, p.pc.solver);
    } catch (const std::exception& e) {
        p.manifest.error = e.what();
        write_manifest(mpath, p.manifest);
        log << "FAIL run: " << e.what() << '\n';
        return 2;
    }
    p.manifest.R = traj.R;
    const Domain& d = *p.scenario.domain;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const std::string name = snapshot_name(k);
        write_snapshot((fs::path(p.out) / name).string(), d, traj.states[k]);
        p.manifest.snapshots.push_back({name, traj.states[k].t});
    }
    p.manifest.error = traj.error;
    write_manifest(mpath, p.manifest);

    const int status = report_monitors(evaluate_monitors(traj, p.scenario, p.pc.solver, p.pc.output, p.monitors),
                                       p.out, p.manifest, log);
    p.manifest.complete = traj.complete;
    write_manifest(mpath, p.manifest);
    if (!traj.complete) {
        log << "FAIL run stopped at t = " << format_number(traj.times.back()) << ": " << traj.error << '\n';
        return 2;
    }
    return status;
}

int cmd_study_nu(const CommandOptions& opt, std::ostream& log) { return study(opt, log, true); }
int cmd_study_theta(const CommandOptions& opt, std::ostream& log) { return study(opt, log, false); }

int cmd_diag(const CommandOptions& opt, std::ostream& log) {
    const fs::path dir = opt.out_dir.empty() ? fs::path(".") : fs::path(opt.out_dir);
    const Manifest m = read_manifest((dir / "manifest.json").string());
    if (m.command != "run") throw std::runtime_error("diag needs the output of a run");
    const ParsedConfig pc = parse_config(read_text((dir / m.config_file).string()));
    if (pc.hash != m.config_hash) throw std::runtime_error("config hash does not match the manifest");
    const ScenarioData s = command_scenario(pc, m.seed, m.family.empty() ? "clean" : m.family);
    const Domain& d = *s.domain;
    EllipticSystem sys(s.domain, s.depth, s.depth_nodes, pc.solver.linear);

    Trajectory traj;
    traj.R = m.R;
    traj.complete = m.complete;
    traj.error = m.error;
    bool velocity_match = true;
    for (const ManifestEntry& e : m.snapshots) {
        StateFields st = read_snapshot((dir / e.file).string(), d, e.t);
        const VelocityField v = sys.reconstruct_velocity(st.h, st.H, s.through_flow(e.t));
        for (int c : d.active_cells)
            if (v.u[c] != st.v.u[c] || v.v[c] != st.v.v[c]) velocity_match = false;
        st.v = v;
        traj.times.push_back(e.t);
        traj.states.push_back(std::move(st));
    }
    if (traj.states.empty()) throw std::runtime_error("no snapshots listed in the manifest");

    std::vector<std::string> monitors = opt.monitors;
    if (monitors.empty())
        for (const MonitorEntry& e : m.monitors)
            if (e.name != "norms" && e.name.rfind("gronwall", 0) != 0) monitors.push_back(e.name);
    if (opt.monitors.empty()) {
        for (const MonitorEntry& e : m.monitors) {
            const std::string base = e.name.rfind("gronwall_literal", 0) == 0 ? "gronwall_literal"
                                     : e.name.rfind("gronwall", 0) == 0      ? "gronwall"
                                                                             : "";
            if (!base.empty() && !contains(monitors, base)) monitors.push_back(base);
        }
    }

    const fs::path out = dir / "diag";
    fs::create_directories(out);
    std::vector<MonitorOutput> mons = evaluate_monitors(traj, s, pc.solver, pc.output, monitors);
    // Picard columns are solver records; carry them over from the stored table.
    if (fs::exists(dir / "norms.csv")) {
        const Table stored = read_table((dir / "norms.csv").string());
        for (std::size_t k = 0; k < stored.rows.size() && k < mons.front().table.rows.size(); ++k) {
            mons.front().table.rows[k][6] = stored.rows[k][6];
            mons.front().table.rows[k][7] = stored.rows[k][7];
        }
    }
    Manifest dm = m;
    dm.command = "diag";
    dm.monitors.clear();
    int status = report_monitors(mons, out.string(), dm, log);
    log << (velocity_match ? "PASS" : "FAIL") << " stored velocities reproduced\n";
    if (!velocity_match) status = 1;
    for (const MonitorOutput& o : mons) {
        if (!fs::exists(dir / o.file)) continue;
        const bool same = read_text((dir / o.file).string()) == read_text((out / o.file).string());
        log << (same ? "PASS" : "FAIL") << " round trip " << o.file << '\n';
        if (!same) status = 1;
    }
    if (!m.complete) {
        log << "FAIL stored run is incomplete\n";
        status = 2;
    }
    write_manifest((out / "manifest.json").string(), dm);
    return status;
}

int cmd_verify(std::ostream& log) {
    const std::vector<VerifyCase> cases = verify_suite(&log);
    bool ok = true;
    for (const VerifyCase& c : cases) ok = ok && c.pass;
    log << (ok ? "verify: all cases PASS" : "verify: FAIL") << '\n';
    return ok ? 0 : 1;
}

}  // namespace lakesim
