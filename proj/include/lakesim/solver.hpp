#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lakesim/elliptic.hpp"
#include "lakesim/scenario.hpp"
#include "lakesim/transport.hpp"

namespace lakesim {

enum class TimeStepPolicy { fixed, adaptive };

struct SolverConfig {
    double nu = 0.0;
    double theta = 0.1;
    double R = std::numeric_limits<double>::infinity();
    bool R_auto = false;
    double p = 2.0;
    double T = 1.0;
    TimeStepPolicy policy = TimeStepPolicy::fixed;
    double dt = 1e-2;          // fixed step, or upper bound for the adaptive policy
    double cfl_target = 0.5;   // adaptive policy
    double cfl_max = 0.9;
    double tol_fp = 1e-9;
    int max_picard = 50;
    double relaxation = 1.0;
    LinearSolverOptions linear;
    double diffusion_tolerance = 1e-13;
    double tol_comp = -1.0;    // negative: 1e-8 (||A||_1 + ||b a||_1)
    double eps_a = -1.0;       // negative: 1e-12 max|a|
    SourceVariant source_variant = SourceVariant::friction;
    Prehistory prehistory = Prehistory::zero;
    int cadence = 1;

    void validate() const;
};

struct StepInfo {
    double t = 0.0;
    double dt = 0.0;
    int picard_iterations = 0;
    std::vector<double> residuals;
    bool monotone = true;
    double cfl = 0.0;
};

struct StampDiagnostics {
    double t = 0.0;
    double norm_l2 = 0.0;
    double norm_l4 = 0.0;
    double norm_l8 = 0.0;
    double norm_max = 0.0;
    double compatibility = 0.0;
    int picard_iterations = 0;
    bool picard_monotone = true;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateFields> states;
    std::vector<StampDiagnostics> reports;
    std::vector<StepInfo> steps;   // every step, regardless of cadence
    double R = std::numeric_limits<double>::infinity();
    double sup_omega = 0.0;        // over every step
    bool complete = true;
    std::string error;
};

// Holds the operators for one scenario/config pair.
class Simulation {
public:
    Simulation(const ScenarioData& scenario, const SolverConfig& config);

    const ScenarioData& scenario() const { return scenario_; }
    const SolverConfig& config() const { return config_; }
    const EllipticSystem& elliptic() const { return *elliptic_; }
    const TransportOperator& transport() const { return *transport_; }

    VorticityHistory make_history() const;
    StateFields initial_state(VorticityHistory& history) const;
    Field flux_potential(double t) const;
    BoundaryField boundary_values(const StateFields& state, double t) const;
    StateFields step(const StateFields& state, VorticityHistory& history, double dt, StepInfo* info = nullptr) const;

private:
    ScenarioData scenario_;
    SolverConfig config_;
    std::shared_ptr<EllipticSystem> elliptic_;
    std::shared_ptr<TransportOperator> transport_;
    bool static_flux_ = false;
    Field cached_H_;
};

StateFields solve_viscous_step(const StateFields& state, VorticityHistory& history, const ScenarioData& scenario,
                               const SolverConfig& config, double dt, StepInfo* info = nullptr);

Trajectory run_simulation(const ScenarioData& scenario, const SolverConfig& config);

// Cutoff level from a coarse pilot run: 2 * max |omega| over the pilot.
double estimate_cutoff(const ScenarioData& scenario, const SolverConfig& config);

double weighted_lp(const Domain& domain, const Field& omega, const Field& b, double p);
double l2_difference(const Domain& domain, const Field& a, const Field& b);

struct StudyRun {
    double parameter = 0.0;
    double final_norm_l2 = 0.0;
    double final_norm_max = 0.0;
    double sup_norm_max = 0.0;   // max over stored times of ||omega||_inf
    double sup_norm_p = 0.0;     // max over stored times of weighted L_p norm
    double bound = 0.0;          // theta study: discrete Gronwall bound (for y = ||omega||_p^p)
    double sup_D = 0.0;
    bool theta0_ok = true;
    bool complete = true;
    std::string error;
    Field final_omega;
};

struct StudyReport {
    std::string kind;
    std::vector<StudyRun> runs;
    std::vector<double> differences;   // pairwise L2 of final omega, consecutive runs
    bool differences_nonincreasing = true;
    double bound_variation = 0.0;      // (max - min)/max of sup_norm_max
    bool bound_ok = true;              // theta study: sup_norm_p <= 2 bound^{1/p}
};

StudyReport viscosity_study(const ScenarioData& scenario, const SolverConfig& config, const std::vector<double>& nus);
StudyReport theta_study(const ScenarioData& scenario, const SolverConfig& config, const std::vector<double>& thetas);

// 2 exp(int_0^t D) [y0 + int_0^t B(r) exp(-int_0^r D) dr], trapezoid rule on
// the given times. Throws on negative entries, and on 2 theta sup D > 1/2
// when check_theta0 is set.
std::vector<double> discrete_gronwall_bound(double y0, const std::vector<double>& times,
                                            const std::vector<double>& D, const std::vector<double>& B, double theta,
                                            bool check_theta0 = true);

// Gronwall coefficients for y = int b|omega|^p along a trajectory: per
// stored time, D and B such that y(t) <= y0 + int (D y + B).
struct GronwallCoefficients {
    std::vector<double> times, y, D, B;
};
GronwallCoefficients gronwall_coefficients(const Trajectory& traj, const ScenarioData& scenario,
                                           const SolverConfig& config, double p);

int study_threads();

}  // namespace lakesim
