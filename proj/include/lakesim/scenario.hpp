#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "lakesim/domain.hpp"

namespace lakesim {

// A field that is either fixed or evaluated per time.
template <class F>
class TimeField {
public:
    TimeField() = default;
    explicit TimeField(F constant) : constant_(std::move(constant)) {}
    explicit TimeField(std::function<F(double)> fn) : fn_(std::move(fn)) {}

    F operator()(double t) const { return fn_ ? fn_(t) : constant_; }
    bool time_dependent() const { return static_cast<bool>(fn_); }

private:
    F constant_;
    std::function<F(double)> fn_;
};

enum class SourceVariant { friction, source };

// Materialised problem data on a domain. gamma/g are derived from the slip
// coefficients unless overridden.
struct ScenarioData {
    DomainPtr domain;
    Field depth;                   // b at cell centers (all grid cells)
    BoundaryField depth_nodes;     // b at boundary nodes
    TimeField<BoundaryField> through_flow;  // a
    TimeField<BoundaryField> slip_alpha;    // alpha
    TimeField<BoundaryField> slip_eta;      // eta
    TimeField<Field> friction;              // kappa
    TimeField<Field> source;                // A
    TimeField<Field> forcing_curl;          // rot(G/b)
    Field initial_vorticity;
    double p = 2.0;

    std::optional<TimeField<BoundaryField>> gamma_override;
    std::optional<TimeField<BoundaryField>> g_override;

    BoundaryField gamma(double t) const;
    BoundaryField g(double t) const;
};

// Zero data everywhere with b = 1.
ScenarioData zero_scenario(DomainPtr domain);

// Arc-length derivative of a periodic boundary field (centered differences).
BoundaryField arc_derivative(const Domain& domain, const BoundaryField& f);

double compatibility_residual(const ScenarioData& s, double t);

// Shift A (or a) by a constant so the discrete compatibility holds exactly.
enum class BalanceMode { none, source, flux };
ScenarioData balance_compatibility(const ScenarioData& s, BalanceMode mode);

// Data for the theta study: interior fields mollified at scale theta, the
// flux density b a mollified along the arc, omega_0 mollified and zeroed in
// the tube d < theta, gamma and g mollified and zeroed for t <= theta.
ScenarioData mollify_scenario(const ScenarioData& s, double theta);

}  // namespace lakesim

namespace lakesim {

// omega_0 = 2, b = 1, all other data zero; steady under rigid rotation.
ScenarioData rigid_rotation_scenario(DomainPtr domain);

// v = 0 (a = A = 0), kappa constant, constant omega_0.
ScenarioData friction_decay_scenario(DomainPtr domain, double kappa, double omega0);

enum class RandomFamily {
    clean,    // A = 0, G = 0, kappa = c b, gamma = 0, omega_0 and g in [-1, 1]
    general,  // smooth A, G, kappa, alpha, eta and inflow, compatibility balanced through A
};

// Smooth random data built from a few low Fourier modes.
ScenarioData random_scenario(DomainPtr domain, std::uint64_t seed, RandomFamily family);

}  // namespace lakesim
