#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lakesim/config.hpp"
#include "lakesim/diagnostics.hpp"
#include "lakesim/io.hpp"

namespace lakesim {

struct MonitorOutput {
    std::string name;
    std::string file;
    Table table;
    bool pass = true;
    std::string note;
};

// Monitor tables for a trajectory. "norms" is always first; the others
// follow the requested list (compatibility, max_principle, gronwall,
// gronwall_literal, weak, trace).
std::vector<MonitorOutput> evaluate_monitors(const Trajectory& traj, const ScenarioData& scenario,
                                             const SolverConfig& config, const OutputConfig& output,
                                             const std::vector<std::string>& monitors);

struct CommandOptions {
    std::string config_path;
    std::string out_dir;                    // empty: the config's output directory
    std::vector<std::string> monitors;      // empty: the config's list
    std::vector<double> parameters;         // study lists
    long long seed = -1;                    // non-negative: random data on the config's domain
    std::string family = "clean";
};

// Scenario used by a command: the config's data, or random data when a seed is given.
ScenarioData command_scenario(const ParsedConfig& pc, long long seed, const std::string& family);

int cmd_run(const CommandOptions& opt, std::ostream& log);
int cmd_study_nu(const CommandOptions& opt, std::ostream& log);
int cmd_study_theta(const CommandOptions& opt, std::ostream& log);
int cmd_diag(const CommandOptions& opt, std::ostream& log);

struct VerifyCase {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
    double seconds = 0.0;
    std::string detail;
};

std::vector<VerifyCase> verify_suite(std::ostream* log = nullptr);
int cmd_verify(std::ostream& log);

}  // namespace lakesim
