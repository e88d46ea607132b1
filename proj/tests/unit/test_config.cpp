#include <doctest.h>

#include "lakesim/config.hpp"
#include "lakesim/errors.hpp"

using namespace lakesim;

namespace {

const char* kMinimal = "[domain]\nshape = disk\nresolution = 24\n";

ConfigError config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a config error");
    return ConfigError("");
}

}  // namespace

TEST_CASE("minimal config gives the zero scenario") {
    const ParsedConfig pc = parse_config(kMinimal);
    const ScenarioData& s = pc.scenario;
    const Domain& d = *s.domain;
    CHECK(d.grid.nx == 24);
    for (int c : d.active_cells) {
        CHECK(s.depth[c] == 1.0);
        CHECK(s.initial_vorticity[c] == 0.0);
        CHECK(s.friction(0.0)[c] == 0.0);
        CHECK(s.source(0.0)[c] == 0.0);
        CHECK(s.forcing_curl(0.0)[c] == 0.0);
    }
    for (double a : s.through_flow(0.0)) CHECK(a == 0.0);
    CHECK(pc.hash == fnv1a_hex(kMinimal));
    CHECK(pc.hash.size() == 16);
}

TEST_CASE("depth expression and positivity") {
    const ParsedConfig pc = parse_config("[domain]\nshape = rectangle\nresolution = 16\n[data]\nb = 2 + x\n");
    const Domain& d = *pc.scenario.domain;
    for (int c : d.active_cells) CHECK(pc.scenario.depth[c] == doctest::Approx(2.0 + d.grid.center(c).x));
    CHECK_THROWS_AS(parse_config("[domain]\nshape = rectangle\nresolution = 16\n[data]\nb = x\n"), ConfigError);
}

TEST_CASE("forcing curl from G") {
    const ParsedConfig pc =
        parse_config("[domain]\nshape = rectangle\nresolution = 16\n[data]\nG_x = 0\nG_y = x\n");
    const Field r = pc.scenario.forcing_curl(0.0);
    for (int c : pc.scenario.domain->active_cells) CHECK(r[c] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constant expressions and keywords") {
    const ParsedConfig pc = parse_config(std::string(kMinimal) +
                                         "[solver]\ntheta = pi/40\nR = auto\np = inf\ndt_policy = adaptive\n"
                                         "prehistory = initial\n[output]\nmonitors = norms, weak\nq = 2, 3\n");
    CHECK(pc.solver.theta == doctest::Approx(3.14159265358979323846 / 40.0));
    CHECK(pc.solver.R_auto);
    CHECK(std::isinf(pc.solver.p));
    CHECK(pc.solver.policy == TimeStepPolicy::adaptive);
    CHECK(pc.solver.prehistory == Prehistory::initial);
    CHECK(pc.output.monitors == std::vector<std::string>{"norms", "weak"});
    CHECK(pc.output.q == std::vector<double>{2.0, 3.0});
    CHECK(pc.values.at("solver.theta") == "pi/40");
}

TEST_CASE("errors carry line and column") {
    const ConfigError unknown = config_error("[domain]\nshape = disk\nfoo = 1\n");
    CHECK(unknown.line() == 3);
    CHECK(unknown.column() == 1);

    const ConfigError dup = config_error("[domain]\nshape = disk\nshape = disk\n");
    CHECK(dup.line() == 3);

    const ConfigError undef = config_error(std::string(kMinimal) + "[data]\nkappa = 1 + z\n");
    CHECK(undef.line() == 5);
    CHECK(undef.column() > 1);

    const ConfigError section = config_error("[nope]\n");
    CHECK(section.line() == 1);

    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[data]\nb = 1 + t\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[solver]\nnu =\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[output]\nmonitors = bogus\n"), ConfigError);
}

TEST_CASE("incompatible data are reported or balanced") {
    const std::string base = std::string(kMinimal) + "[data]\na = 1\n";
    const ParsedConfig warned = parse_config(base);
    CHECK_FALSE(warned.warnings.empty());
    const ParsedConfig balanced = parse_config(base + "balance = source\n");
    CHECK(std::abs(compatibility_residual(balanced.scenario, 0.0)) <= 1e-12);
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
