#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "lakesim/domain.hpp"
#include "lakesim/linalg.hpp"

namespace lakesim {

// Face-staggered velocity. On x-faces the normal component is u and the
// tangential one is v; on y-faces the reverse.
struct FaceVelocity {
    std::vector<double> x_normal, x_tangential;
    std::vector<double> y_normal, y_tangential;
};

struct VelocityField {
    Field u, v;  // cell-centered
    FaceVelocity faces;
};

struct StateFields {
    double t = 0.0;
    Field omega;
    Field h;
    Field H;
    VelocityField v;
};

struct GreenKernel {
    int n = 0;                 // number of active cells
    std::vector<int> cells;    // grid index of each row/column
    std::vector<double> k;     // row-major n*n
    double operator()(int i, int j) const { return k[static_cast<std::size_t>(i) * n + j]; }
};

struct GradientBoundFit {
    double constant = 0.0;
    int samples = 0;
};

// Operators for a fixed domain and depth. The Dirichlet operator is the
// symmetric embedded-boundary discretisation of -div((1/b) grad h) with
// boundary faces weighted by the crossing fraction theta; the Neumann
// operator is the 5-point flux form of div(b grad H) with boundary fluxes
// b a ds delivered to the node's cell.
class EllipticSystem {
public:
    EllipticSystem(DomainPtr domain, Field b, BoundaryField b_nodes, LinearSolverOptions opt = {});

    const Domain& domain() const { return *domain_; }
    const DomainPtr& domain_ptr() const { return domain_; }
    const Field& depth() const { return b_; }
    const BoundaryField& depth_nodes() const { return bn_; }
    const LinearSolverOptions& options() const { return opt_; }
    const SparseMatrix& dirichlet_matrix() const { return dir_; }
    const SparseMatrix& neumann_matrix() const { return neu_; }

    Field solve_dirichlet(const Field& rhs, SolveStats* stats = nullptr, const Field* guess = nullptr) const;
    Field apply_dirichlet(const Field& h) const;

    double compatibility_residual(const Field& A, const BoundaryField& a) const;
    double compatibility_tolerance(const Field& A, const BoundaryField& a) const;
    Field neumann_rhs(const Field& A, const BoundaryField& a) const;
    // Throws CompatibilityError when the discrete residual exceeds tol_comp
    // (negative tol_comp selects the default).
    Field solve_neumann(const Field& A, const BoundaryField& a, double tol_comp = -1.0, SolveStats* stats = nullptr,
                        const Field* guess = nullptr) const;
    Field apply_neumann(const Field& H) const;

    VelocityField reconstruct_velocity(const Field& h, const Field& H, const BoundaryField& a) const;
    Field rot(const VelocityField& v) const;
    Field div_flux(const VelocityField& v, const BoundaryField& a) const;

    // dh/dn at boundary nodes from a Shortley-Weller re-solve of L h and a
    // constrained quadratic fit with h = 0 on the boundary.
    BoundaryField normal_derivative(const Field& h) const;
    BoundaryField tangential_derivative(const Field& H) const;
    // v.s = -(1/b) dh/dn + dH/ds
    BoundaryField tangential_velocity(const Field& h, const Field& H) const;

    double face_depth_x(int i, int j) const;
    double face_depth_y(int i, int j) const;
    double crossing_depth(const Crossing& c) const;

    std::vector<double> to_compact(const Field& f) const;
    Field to_grid(const std::vector<double>& x) const;

private:
    struct NodeStencil {
        std::vector<int> cells;
        std::vector<double> weights;
    };
    void build_operators();
    void build_stencils();
    void factor_shortley_weller() const;

    DomainPtr domain_;
    Field b_;
    BoundaryField bn_;
    LinearSolverOptions opt_;
    SparseMatrix dir_;
    SparseMatrix neu_;
    std::vector<NodeStencil> dn_stencil_;
    std::vector<NodeStencil> ds_stencil_;
    struct SwFactor;
    mutable std::shared_ptr<SwFactor> sw_;
    mutable std::once_flag sw_once_;
};

Field solve_dirichlet_weighted(const DomainPtr& domain, const Field& b, const Field& rhs,
                               const LinearSolverOptions& opt = {});
Field solve_neumann_weighted(const DomainPtr& domain, const Field& b, const BoundaryField& b_nodes, const Field& A,
                             const BoundaryField& a, const LinearSolverOptions& opt = {});

// Unweighted 5-point Poisson solve (b = 1) assembled independently, used as a cross-check.
Field solve_poisson_reference(const Domain& domain, const Field& rhs, const LinearSolverOptions& opt = {});

GreenKernel greens_kernel(const EllipticSystem& sys, int cell_cap = 4096);
Field apply_kernel(const GreenKernel& k, const Field& source, const Domain& domain);
GradientBoundFit fit_kernel_gradient_bound(const GreenKernel& k, const Domain& domain, double min_separation_cells = 4.0);

// Discrete Sobolev proxies: L_q norms of the field and of its first (and
// second) differences over interior stencils.
double w2q_proxy(const Domain& domain, const Field& h, double q);
double w1q_proxy(const Domain& domain, const VelocityField& v, double q);

}  // namespace lakesim
