#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "lakesim/commands.hpp"

using namespace lakesim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("lakesim_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

bool bit_equal(const Field& a, const Field& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("numbers round trip exactly") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0})
        CHECK(std::stod(format_number(x)) == x);
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("tables round trip") {
    const fs::path dir = scratch("table");
    Table t{{"t", "value"}, {{0.0, 1.0 / 7.0}, {0.5, -3e-17}, {1.0, std::numeric_limits<double>::infinity()}}};
    write_table((dir / "t.csv").string(), t);
    const Table r = read_table((dir / "t.csv").string());
    CHECK(r.columns == t.columns);
    REQUIRE(r.rows.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::memcmp(r.rows[k].data(), t.rows[k].data(), 2 * sizeof(double)) == 0);
    write_text((dir / "bad.csv").string(), "a,b\n1,2,3\n");
    CHECK_THROWS(read_table((dir / "bad.csv").string()));
}

TEST_CASE("snapshots round trip bit-identically") {
    const fs::path dir = scratch("snapshot");
    const DomainPtr d = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 24);
    SolverConfig cfg;
    cfg.T = 0.1;
    cfg.dt = 0.05;
    cfg.policy = TimeStepPolicy::adaptive;
    const Trajectory tr = run_simulation(random_scenario(d, 3, RandomFamily::general), cfg);
    INFO(tr.error);
    REQUIRE(tr.complete);
    const StateFields& st = tr.states.back();
    write_snapshot((dir / "s.csv").string(), *d, st);
    const StateFields r = read_snapshot((dir / "s.csv").string(), *d, st.t);
    for (int c : d->active_cells) {
        CHECK(std::memcmp(&r.omega[c], &st.omega[c], sizeof(double)) == 0);
        CHECK(std::memcmp(&r.h[c], &st.h[c], sizeof(double)) == 0);
        CHECK(std::memcmp(&r.H[c], &st.H[c], sizeof(double)) == 0);
        CHECK(std::memcmp(&r.v.u[c], &st.v.u[c], sizeof(double)) == 0);
    }
    const DomainPtr other = build_domain(ShapeDescriptor::disk({0.0, 0.0}, 1.0), 32);
    CHECK_THROWS(read_snapshot((dir / "s.csv").string(), *other, st.t));
}

TEST_CASE("manifest round trip") {
    const fs::path dir = scratch("manifest");
    Manifest m;
    m.command = "run";
    m.complete = true;
    m.config_file = "config.ini";
    m.config_hash = "0123456789abcdef";
    m.shape = "disk";
    m.resolution = 24;
    m.active_cells = 400;
    m.R = std::numeric_limits<double>::infinity();
    m.seed = 7;
    m.family = "clean";
    m.snapshots = {{"snapshot_00000.csv", 0.0}, {"snapshot_00001.csv", 0.1}};
    m.monitors = {{"norms", "norms.csv", true, ""}, {"weak", "weak.csv", false, "note"}};
    m.warnings = {"w"};
    write_manifest((dir / "m.json").string(), m);
    const Manifest r = read_manifest((dir / "m.json").string());
    CHECK(r.command == "run");
    CHECK(r.complete);
    CHECK(std::isinf(r.R));
    CHECK(r.seed == 7);
    CHECK(r.family == "clean");
    REQUIRE(r.snapshots.size() == 2);
    CHECK(r.snapshots[1].t == 0.1);
    REQUIRE(r.monitors.size() == 2);
    CHECK_FALSE(r.monitors[1].pass);
    CHECK(r.monitors[1].note == "note");
    CHECK(r.warnings == m.warnings);
}

TEST_CASE("run, diag and studies through the command layer") {
    const fs::path dir = scratch("commands");
    const std::string cfg_path = (dir / "c.ini").string();
    write_text(cfg_path,
               "[domain]\nshape = disk\nresolution = 24\n[data]\nomega0 = exp(-4*(x*x+y*y))\nkappa = 0.5\n"
               "[solver]\nT = 0\ndt = 0.05\n[output]\nmonitors = compatibility, max_principle, gronwall\n");
    CommandOptions opt;
    opt.config_path = cfg_path;
    opt.out_dir = (dir / "zero").string();
    std::ostringstream log;
    CHECK(cmd_run(opt, log) == 0);
    const Manifest m = read_manifest((dir / "zero" / "manifest.json").string());
    CHECK(m.complete);
    CHECK(m.snapshots.size() == 1);
    CHECK(read_table((dir / "zero" / "norms.csv").string()).rows.size() == 1);

    write_text(cfg_path,
               "[domain]\nshape = disk\nresolution = 24\n[data]\nomega0 = exp(-4*(x*x+y*y))\nkappa = 0.5\n"
               "[solver]\nT = 0.2\ndt = 0.05\n[output]\nmonitors = compatibility, max_principle, gronwall\n");
    opt.out_dir = (dir / "run").string();
    CHECK(cmd_run(opt, log) == 0);
    CommandOptions dopt;
    dopt.out_dir = opt.out_dir;
    std::ostringstream dlog;
    CHECK(cmd_diag(dopt, dlog) == 0);
    CHECK(dlog.str().find("FAIL") == std::string::npos);
    for (const char* f : {"norms.csv", "compatibility.csv", "max_principle.csv", "gronwall_q2.csv"})
        CHECK(read_text((dir / "run" / f).string()) == read_text((dir / "run" / "diag" / f).string()));

    opt.out_dir = (dir / "study").string();
    opt.parameters = {1e-2, 1e-3, 1e-4};
    CHECK(cmd_study_nu(opt, log) == 0);
    const Table st = read_table((dir / "study" / "study_nu.csv").string());
    REQUIRE(st.rows.size() == 3);
    CHECK(std::isnan(st.rows[0].back()));
    CHECK(std::isfinite(st.rows[1].back()));
    CHECK(std::isfinite(st.rows[2].back()));

    CommandOptions bad;
    bad.config_path = (dir / "missing.ini").string();
    bad.out_dir = (dir / "bad").string();
    CHECK_THROWS(cmd_run(bad, log));
}

TEST_CASE("seeded data are reproducible") {
    const ParsedConfig pc = parse_config("[domain]\nshape = disk\nresolution = 24\n");
    const ScenarioData a = command_scenario(pc, 9, "general"), b = command_scenario(pc, 9, "general");
    CHECK(bit_equal(a.initial_vorticity, b.initial_vorticity));
    CHECK(bit_equal(a.source(0.3), b.source(0.3)));
    CHECK_THROWS(command_scenario(pc, 9, "other"));
}
