#pragma once

#include <map>
#include <string>
#include <vector>

#include "lakesim/scenario.hpp"
#include "lakesim/solver.hpp"

namespace lakesim {

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> monitors{"compatibility", "max_principle", "gronwall"};
    std::vector<double> q{2.0, 4.0};
    std::vector<double> sigmas;  // empty: 8h, 4h, 2h
};

struct ParsedConfig {
    ShapeDescriptor shape;
    int resolution = 64;
    ScenarioData scenario;
    SolverConfig solver;
    OutputConfig output;
    BalanceMode balance = BalanceMode::none;
    std::string text;
    std::string hash;  // FNV-1a of the text, hex
    std::vector<std::string> warnings;
    std::map<std::string, std::string> values;  // "section.key" -> raw value
};

// INI-style document:
//   [domain]  shape, resolution, center, radius, lo, hi, semi_axes, vertices, corner_radius
//   [data]    b, a, alpha, eta, kappa, A, G_x, G_y, rotG_over_b, omega0, balance
//   [solver]  nu, theta, R, p, T, dt, dt_policy, cfl_target, cfl_max, tol_fp, max_picard,
//             relaxation, tol_lin, max_lin_iterations, diffusion_tolerance, tol_comp, eps_a,
//             source_variant, prehistory
//   [output]  directory, cadence, monitors, q, sigma
// Comments start with '#'. Interior expressions see x, y, d, t;
// boundary expressions see x, y, s, t, k, nx, ny; b and omega0 are
// time independent.
ParsedConfig parse_config(const std::string& text);
ParsedConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace lakesim
