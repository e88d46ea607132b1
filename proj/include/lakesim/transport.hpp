#pragma once

#include <deque>

#include "lakesim/elliptic.hpp"
#include "lakesim/scenario.hpp"

namespace lakesim {

struct BoundaryVorticityData {
    BoundaryField gamma;
    BoundaryField g;
};

BoundaryVorticityData boundary_vorticity_data(const ScenarioData& s, double t);

// omega_Gamma = gamma (v.s) + g per node.
BoundaryField boundary_vorticity(const BoundaryField& v_dot_s, const BoundaryVorticityData& data);

// (v . grad_perp) f = -u df/dy + v df/dx, one-sided next to the boundary.
Field perp_advection(const Domain& domain, const Field& u, const Field& v, const Field& f);

// -(v.grad_perp)(q/b) + rot(G/b), the part of the source treated explicitly.
Field explicit_source(const ScenarioData& s, const VelocityField& v, double t, SourceVariant variant);

// S = -kappa omega - (v.grad_perp)(q/b) + rot(G/b)
Field assemble_source(const Field& omega, const VelocityField& v, const ScenarioData& s, double t,
                      SourceVariant variant);

enum class Prehistory { zero, initial };

// Snapshots over the trailing window; values before t = 0 come from the
// prehistory (zero, or the initial field).
class VorticityHistory {
public:
    VorticityHistory() = default;
    VorticityHistory(int field_size, double theta, Prehistory mode = Prehistory::zero, Field initial = {});

    void push(double t, const Field& omega);
    bool empty() const { return entries_.empty(); }
    double latest_time() const { return entries_.empty() ? 0.0 : entries_.back().first; }
    double span() const { return entries_.empty() ? 0.0 : entries_.back().first - entries_.front().first; }
    int size() const { return static_cast<int>(entries_.size()); }
    double theta() const { return theta_; }
    Prehistory prehistory() const { return mode_; }
    const std::deque<std::pair<double, Field>>& entries() const { return entries_; }

    // (1/theta) * integral over [t - theta, t] of the clipped, piecewise
    // linear history. An optional candidate snapshot at time t is appended
    // without being stored.
    Field average(double t, double R, const Field* candidate = nullptr) const;

private:
    int n_ = 0;
    double theta_ = 1.0;
    Prehistory mode_ = Prehistory::zero;
    Field initial_;
    std::deque<std::pair<double, Field>> entries_;
};

Field timelag_cutoff_average(const VorticityHistory& history, double t, double theta, double R);

struct StepResult {
    Field omega;
    double cfl = 0.0;
    int diffusion_iterations = 0;
    double mass_before = 0.0;    // integral of b omega
    double mass_after = 0.0;
    double boundary_inflow = 0.0;   // integral over inflow of b|a| omega_Gamma
    double boundary_outflow = 0.0;  // integral over outflow of b a omega
    double source_integral = 0.0;   // integral of explicit source minus A omega
    double friction_integral = 0.0;
    double diffusion_flux = 0.0;
};

struct TransportOptions {
    double cfl_max = 0.9;
    double diffusion_tolerance = 1e-13;
    double eps_a = -1.0;
};

// Explicit first-order upwind advection of b omega written in
// non-conservative inflow form (monotone under CFL), implicit friction and
// implicit diffusion with Dirichlet data on the boundary crossings.
class TransportOperator {
public:
    TransportOperator(DomainPtr domain, Field b, BoundaryField b_nodes, TransportOptions opt = {});

    double cfl_number(const VelocityField& v, const BoundaryField& a, const Field& A, double dt) const;
    // Largest dt with cfl_number <= target (infinity for a resting state).
    double stable_dt(const VelocityField& v, const BoundaryField& a, const Field& A, double target) const;

    StepResult step(const Field& omega, const VelocityField& v, const BoundaryField& a, const Field& A,
                    const Field& kappa, const Field& source, double nu, double dt, const BoundaryField& bc) const;

    const TransportOptions& options() const { return opt_; }

private:
    void inflow_rates(const VelocityField& v, const BoundaryField& a, std::vector<double>& rate) const;

    DomainPtr domain_;
    Field b_;
    BoundaryField bn_;
    TransportOptions opt_;
    SparseMatrix laplace_;  // symmetric embedded-boundary -Laplacian, unit coefficient
};

// Convenience form evaluating the data at time t (the end of the step).
Field step_vorticity(const Field& omega, const VelocityField& v, const ScenarioData& s, double t, double nu,
                     double dt, const BoundaryField& bc, SourceVariant variant = SourceVariant::friction,
                     const TransportOptions& opt = {});

}  // namespace lakesim
