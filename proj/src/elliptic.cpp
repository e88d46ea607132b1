#include "lakesim/elliptic.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "lakesim/errors.hpp"

namespace lakesim {

struct EllipticSystem::SwFactor {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

EllipticSystem::EllipticSystem(DomainPtr domain, Field b, BoundaryField b_nodes, LinearSolverOptions opt)
    : domain_(std::move(domain)), b_(std::move(b)), bn_(std::move(b_nodes)), opt_(opt) {
    const Domain& d = *domain_;
    if (static_cast<int>(b_.size()) != d.grid.size()) throw SolverError("depth field has wrong size");
    if (static_cast<int>(bn_.size()) != d.num_nodes()) throw SolverError("boundary depth has wrong size");
    for (int c : d.active_cells)
        if (!(b_[c] > 0.0)) throw SolverError("depth must be positive on active cells");
    for (double v : bn_)
        if (!(v > 0.0)) throw SolverError("depth must be positive on the boundary");
    build_operators();
    build_stencils();
}

double EllipticSystem::face_depth_x(int i, int j) const {
    const Grid& g = domain_->grid;
    return 0.5 * (b_[g.index(i - 1, j)] + b_[g.index(i, j)]);
}

double EllipticSystem::face_depth_y(int i, int j) const {
    const Grid& g = domain_->grid;
    return 0.5 * (b_[g.index(i, j - 1)] + b_[g.index(i, j)]);
}

double EllipticSystem::crossing_depth(const Crossing& c) const {
    return 0.5 * (b_[c.cell] + domain_->interpolate(bn_, c));
}

std::vector<double> EllipticSystem::to_compact(const Field& f) const {
    const Domain& d = *domain_;
    std::vector<double> x(d.num_active());
    for (int r = 0; r < d.num_active(); ++r) x[r] = f[d.active_cells[r]];
    return x;
}

Field EllipticSystem::to_grid(const std::vector<double>& x) const {
    const Domain& d = *domain_;
    Field f(d.grid.size(), 0.0);
    for (int r = 0; r < d.num_active(); ++r) f[d.active_cells[r]] = x[r];
    return f;
}

void EllipticSystem::build_operators() {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    const double idx2 = 1.0 / (g.dx * g.dx), idy2 = 1.0 / (g.dy * g.dy);
    std::vector<int> cross_of(4 * g.size(), -1);
    for (int k = 0; k < static_cast<int>(d.crossings.size()); ++k) {
        const Crossing& c = d.crossings[k];
        const int q = c.axis == 0 ? (c.side > 0 ? 0 : 1) : (c.side > 0 ? 2 : 3);
        cross_of[4 * c.cell + q] = k;
    }
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int r = 0; r < d.num_active(); ++r) {
        const int c = d.active_cells[r];
        const int i = c % g.nx, j = c / g.nx;
        double dd = 0.0, nd = 0.0;
        std::vector<std::pair<int, double>> doff, noff;
        for (int q = 0; q < 4; ++q) {
            const double inv2 = q < 2 ? idx2 : idy2;
            const int ci = i + di[q], cj = j + dj[q];
            if (g.inside(ci, cj) && d.active[g.index(ci, cj)]) {
                const int cc = g.index(ci, cj);
                const double bf = 0.5 * (b_[c] + b_[cc]);
                const double kd = inv2 / bf;
                const double kn = inv2 * bf;
                dd += kd;
                nd += kn;
                doff.push_back({d.compact[cc], -kd});
                noff.push_back({d.compact[cc], -kn});
            } else {
                const Crossing& cr = d.crossings[cross_of[4 * c + q]];
                dd += inv2 / (crossing_depth(cr) * cr.theta);
            }
        }
        std::vector<std::pair<int, double>> drow = doff, nrow = noff;
        drow.push_back({r, dd});
        nrow.push_back({r, nd});
        std::sort(drow.begin(), drow.end());
        std::sort(nrow.begin(), nrow.end());
        for (auto& [col, v] : drow) dir_.push(col, v);
        dir_.end_row();
        for (auto& [col, v] : nrow) neu_.push(col, v);
        neu_.end_row();
    }
}

namespace {

Eigen::MatrixXd weighted_pinv(const Eigen::MatrixXd& phi, const Eigen::VectorXd& w) {
    Eigen::MatrixXd m = phi;
    for (int r = 0; r < m.rows(); ++r) m.row(r) *= std::sqrt(w[r]);
    Eigen::MatrixXd p = m.completeOrthogonalDecomposition().pseudoInverse();
    for (int r = 0; r < p.cols(); ++r) p.col(r) *= std::sqrt(w[r]);
    return p;
}

}  // namespace

void EllipticSystem::build_stencils() {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    const double hh = std::max(g.dx, g.dy);
    const int m = d.num_nodes();
    dn_stencil_.resize(m);
    ds_stencil_.resize(m);
    for (int k = 0; k < m; ++k) {
        const BoundaryNode& node = d.nodes[k];
        for (double rho = 3.0 * hh;; rho += hh) {
            std::vector<int> cells;
            std::vector<Vec2> cell_loc, bnd_loc;
            const int ic = static_cast<int>(std::floor((node.position.x - g.x0) / g.dx));
            const int jc = static_cast<int>(std::floor((node.position.y - g.y0) / g.dy));
            const int ri = static_cast<int>(std::ceil(rho / g.dx)) + 1, rj = static_cast<int>(std::ceil(rho / g.dy)) + 1;
            for (int j = jc - rj; j <= jc + rj; ++j)
                for (int i = ic - ri; i <= ic + ri; ++i) {
                    if (!g.inside(i, j) || !d.active[g.index(i, j)]) continue;
                    const Vec2 rel = g.center(i, j) - node.position;
                    if (norm(rel) > rho) continue;
                    cells.push_back(g.index(i, j));
                    cell_loc.push_back({dot(rel, node.normal) / hh, dot(rel, node.tangent) / hh});
                }
            for (int q = 0; q < m; ++q) {
                const Vec2 rel = d.nodes[q].position - node.position;
                if (norm(rel) > rho) continue;
                bnd_loc.push_back({dot(rel, node.normal) / hh, dot(rel, node.tangent) / hh});
            }
            if (cells.size() < 8 && rho < 8.0 * hh) continue;
            const int nc = static_cast<int>(cells.size());
            const int nb = static_cast<int>(bnd_loc.size());

            // Normal derivative: quadratic without constant, h = 0 at boundary nodes.
            Eigen::MatrixXd phi(nc + nb, 5);
            Eigen::VectorXd w(nc + nb);
            auto fill5 = [&](int r, Vec2 p) {
                phi(r, 0) = p.x;
                phi(r, 1) = p.y;
                phi(r, 2) = p.x * p.x;
                phi(r, 3) = p.x * p.y;
                phi(r, 4) = p.y * p.y;
                w[r] = 1.0 / (1.0 + p.x * p.x + p.y * p.y);
            };
            for (int r = 0; r < nc; ++r) fill5(r, cell_loc[r]);
            for (int r = 0; r < nb; ++r) fill5(nc + r, bnd_loc[r]);
            Eigen::MatrixXd p5 = weighted_pinv(phi, w);
            NodeStencil sn;
            sn.cells = cells;
            for (int r = 0; r < nc; ++r) sn.weights.push_back(p5(0, r) / hh);
            dn_stencil_[k] = std::move(sn);

            // Tangential derivative: full quadratic on cells.
            Eigen::MatrixXd phi6(nc, 6);
            Eigen::VectorXd w6(nc);
            for (int r = 0; r < nc; ++r) {
                const Vec2 p = cell_loc[r];
                phi6(r, 0) = 1.0;
                phi6(r, 1) = p.x;
                phi6(r, 2) = p.y;
                phi6(r, 3) = p.x * p.x;
                phi6(r, 4) = p.x * p.y;
                phi6(r, 5) = p.y * p.y;
                w6[r] = 1.0 / (1.0 + p.x * p.x + p.y * p.y);
            }
            Eigen::MatrixXd p6 = weighted_pinv(phi6, w6);
            NodeStencil st;
            st.cells = cells;
            for (int r = 0; r < nc; ++r) st.weights.push_back(p6(2, r) / hh);
            ds_stencil_[k] = std::move(st);
            break;
        }
    }
}

Field EllipticSystem::solve_dirichlet(const Field& rhs, SolveStats* stats, const Field* guess) const {
    std::vector<double> x = guess ? to_compact(*guess) : std::vector<double>(domain_->num_active(), 0.0);
    SolveStats st = pcg(dir_, to_compact(rhs), x, opt_, false);
    if (stats) *stats = st;
    return to_grid(x);
}

Field EllipticSystem::apply_dirichlet(const Field& h) const {
    std::vector<double> y;
    dir_.multiply(to_compact(h), y);
    return to_grid(y);
}

double EllipticSystem::compatibility_residual(const Field& A, const BoundaryField& a) const {
    const Domain& d = *domain_;
    double flux = 0.0;
    for (int k = 0; k < d.num_nodes(); ++k) flux += bn_[k] * a[k] * d.nodes[k].ds;
    return flux - integrate(d, A);
}

double EllipticSystem::compatibility_tolerance(const Field& A, const BoundaryField& a) const {
    const Domain& d = *domain_;
    double l1 = 0.0;
    for (int c : d.active_cells) l1 += std::abs(A[c]);
    l1 *= d.grid.cell_area();
    for (int k = 0; k < d.num_nodes(); ++k) l1 += std::abs(bn_[k] * a[k]) * d.nodes[k].ds;
    return 1e-8 * l1;
}

Field EllipticSystem::neumann_rhs(const Field& A, const BoundaryField& a) const {
    const Domain& d = *domain_;
    const double area = d.grid.cell_area();
    Field r(d.grid.size(), 0.0);
    for (int k = 0; k < d.num_nodes(); ++k) r[d.nodes[k].cell] += bn_[k] * a[k] * d.nodes[k].ds / area;
    for (int c : d.active_cells) r[c] -= A[c];
    return r;
}

Field EllipticSystem::solve_neumann(const Field& A, const BoundaryField& a, double tol_comp, SolveStats* stats,
                                    const Field* guess) const {
    const double res = compatibility_residual(A, a);
    const double tol = tol_comp >= 0.0 ? tol_comp : compatibility_tolerance(A, a);
    if (std::abs(res) > tol)
        throw CompatibilityError("incompatible Neumann data: |boundary flux - source integral| = " +
                                     std::to_string(std::abs(res)),
                                 std::abs(res), tol);
    std::vector<double> x = guess ? to_compact(*guess) : std::vector<double>(domain_->num_active(), 0.0);
    SolveStats st = pcg(neu_, to_compact(neumann_rhs(A, a)), x, opt_, true);
    if (stats) *stats = st;
    return to_grid(x);
}

Field EllipticSystem::apply_neumann(const Field& H) const {
    std::vector<double> y;
    neu_.multiply(to_compact(H), y);
    return to_grid(y);
}

VelocityField EllipticSystem::reconstruct_velocity(const Field& h, const Field& H, const BoundaryField& a) const {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    const int nx = g.nx, ny = g.ny;
    auto act = [&](int i, int j) { return g.inside(i, j) && d.active[g.index(i, j)]; };

    // Node values: h vanishes at any node touching an inactive cell; H is
    // the mean of the active cells around the node.
    std::vector<double> hn((nx + 1) * (ny + 1), 0.0), Hn((nx + 1) * (ny + 1), 0.0);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            int cnt = 0;
            double sh = 0.0, sH = 0.0;
            for (int q = 0; q < 4; ++q) {
                const int ci = i - 1 + (q & 1), cj = j - 1 + (q >> 1);
                if (!act(ci, cj)) continue;
                ++cnt;
                sh += h[g.index(ci, cj)];
                sH += H[g.index(ci, cj)];
            }
            if (cnt == 4) hn[g.node(i, j)] = 0.25 * sh;
            if (cnt > 0) Hn[g.node(i, j)] = sH / cnt;
        }

    VelocityField v;
    FaceVelocity& f = v.faces;
    f.x_normal.assign((nx + 1) * ny, 0.0);
    f.x_tangential.assign((nx + 1) * ny, 0.0);
    f.y_normal.assign(nx * (ny + 1), 0.0);
    f.y_tangential.assign(nx * (ny + 1), 0.0);
    auto boundary_normal = [&](const Crossing& cr, int axis) {
        const BoundaryNode& n0 = d.nodes[cr.node0];
        const BoundaryNode& n1 = d.nodes[cr.node1];
        const double nrm = (1.0 - cr.weight1) * (axis == 0 ? n0.normal.x : n0.normal.y) +
                           cr.weight1 * (axis == 0 ? n1.normal.x : n1.normal.y);
        return d.interpolate(a, cr) * nrm;
    };

    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const int fi = g.xface(i, j);
            const double Ht = (Hn[g.node(i, j + 1)] - Hn[g.node(i, j)]) / g.dy;
            if (d.xface_kind[fi] == FaceKind::interior) {
                const int L = g.index(i - 1, j), R = g.index(i, j);
                const double ib = 1.0 / face_depth_x(i, j);
                f.x_normal[fi] = ib * (hn[g.node(i, j + 1)] - hn[g.node(i, j)]) / g.dy + (H[R] - H[L]) / g.dx;
                f.x_tangential[fi] = -ib * (h[R] - h[L]) / g.dx + Ht;
            } else if (d.xface_kind[fi] == FaceKind::boundary) {
                const Crossing& cr = d.crossings[d.xface_crossing[fi]];
                const double dh = cr.side > 0 ? -h[cr.cell] / (cr.theta * g.dx) : h[cr.cell] / (cr.theta * g.dx);
                f.x_tangential[fi] = -dh / crossing_depth(cr) + Ht;
                f.x_normal[fi] = boundary_normal(cr, 0);
            }
        }
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int fi = g.yface(i, j);
            const double Ht = (Hn[g.node(i + 1, j)] - Hn[g.node(i, j)]) / g.dx;
            if (d.yface_kind[fi] == FaceKind::interior) {
                const int B = g.index(i, j - 1), T = g.index(i, j);
                const double ib = 1.0 / face_depth_y(i, j);
                f.y_normal[fi] = -ib * (hn[g.node(i + 1, j)] - hn[g.node(i, j)]) / g.dx + (H[T] - H[B]) / g.dy;
                f.y_tangential[fi] = ib * (h[T] - h[B]) / g.dy + Ht;
            } else if (d.yface_kind[fi] == FaceKind::boundary) {
                const Crossing& cr = d.crossings[d.yface_crossing[fi]];
                const double dh = cr.side > 0 ? -h[cr.cell] / (cr.theta * g.dy) : h[cr.cell] / (cr.theta * g.dy);
                f.y_tangential[fi] = dh / crossing_depth(cr) + Ht;
                f.y_normal[fi] = boundary_normal(cr, 1);
            }
        }

    v.u.assign(g.size(), 0.0);
    v.v.assign(g.size(), 0.0);
    for (int c : d.active_cells) {
        const int i = c % nx, j = c / nx;
        const int xl = g.xface(i, j), xr = g.xface(i + 1, j), yb = g.yface(i, j), yt = g.yface(i, j + 1);
        double su = 0.0, sv = 0.0;
        int nu = 0, nv = 0;
        for (int fi : {xl, xr})
            if (d.xface_kind[fi] == FaceKind::interior) {
                su += f.x_normal[fi];
                ++nu;
            }
        if (nu == 0)
            for (int fi : {yb, yt}) {
                su += f.y_tangential[fi];
                ++nu;
            }
        for (int fi : {yb, yt})
            if (d.yface_kind[fi] == FaceKind::interior) {
                sv += f.y_normal[fi];
                ++nv;
            }
        if (nv == 0)
            for (int fi : {xl, xr}) {
                sv += f.x_tangential[fi];
                ++nv;
            }
        v.u[c] = su / nu;
        v.v[c] = sv / nv;
    }
    return v;
}

Field EllipticSystem::rot(const VelocityField& v) const {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    Field r(g.size(), 0.0);
    for (int c : d.active_cells) {
        const int i = c % g.nx, j = c / g.nx;
        r[c] = (v.faces.x_tangential[g.xface(i + 1, j)] - v.faces.x_tangential[g.xface(i, j)]) / g.dx -
               (v.faces.y_tangential[g.yface(i, j + 1)] - v.faces.y_tangential[g.yface(i, j)]) / g.dy;
    }
    return r;
}

Field EllipticSystem::div_flux(const VelocityField& v, const BoundaryField& a) const {
    const Domain& d = *domain_;
    const Grid& g = d.grid;
    Field r(g.size(), 0.0);
    for (int c : d.active_cells) {
        const int i = c % g.nx, j = c / g.nx;
        double acc = 0.0;
        const int xr = g.xface(i + 1, j), xl = g.xface(i, j), yt = g.yface(i, j + 1), yb = g.yface(i, j);
        if (d.xface_kind[xr] == FaceKind::interior) acc += face_depth_x(i + 1, j) * v.faces.x_normal[xr] / g.dx;
        if (d.xface_kind[xl] == FaceKind::interior) acc -= face_depth_x(i, j) * v.faces.x_normal[xl] / g.dx;
        if (d.yface_kind[yt] == FaceKind::interior) acc += face_depth_y(i, j + 1) * v.faces.y_normal[yt] / g.dy;
        if (d.yface_kind[yb] == FaceKind::interior) acc -= face_depth_y(i, j) * v.faces.y_normal[yb] / g.dy;
        r[c] = acc;
    }
    const double area = g.cell_area();
    for (int k = 0; k < d.num_nodes(); ++k) r[d.nodes[k].cell] += bn_[k] * a[k] * d.nodes[k].ds / area;
    return r;
}

void EllipticSystem::factor_shortley_weller() const {
    std::call_once(sw_once_, [this] {
        const Domain& d = *domain_;
        const Grid& g = d.grid;
        std::vector<int> cross_of(4 * g.size(), -1);
        for (int k = 0; k < static_cast<int>(d.crossings.size()); ++k) {
            const Crossing& c = d.crossings[k];
            const int q = c.axis == 0 ? (c.side > 0 ? 0 : 1) : (c.side > 0 ? 2 : 3);
            cross_of[4 * c.cell + q] = k;
        }
        std::vector<Eigen::Triplet<double>> trip;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int r = 0; r < d.num_active(); ++r) {
            const int c = d.active_cells[r];
            const int i = c % g.nx, j = c / g.nx;
            for (int axis = 0; axis < 2; ++axis) {
                const double h = axis == 0 ? g.dx : g.dy;
                double dist[2], beta[2];
                int nb[2];
                for (int s = 0; s < 2; ++s) {
                    const int q = 2 * axis + s;
                    const int ci = i + di[q], cj = j + dj[q];
                    if (g.inside(ci, cj) && d.active[g.index(ci, cj)]) {
                        const int cc = g.index(ci, cj);
                        dist[s] = h;
                        beta[s] = 2.0 / (b_[c] + b_[cc]);
                        nb[s] = d.compact[cc];
                    } else {
                        const Crossing& cr = d.crossings[cross_of[4 * c + q]];
                        dist[s] = cr.theta * h;
                        beta[s] = 1.0 / crossing_depth(cr);
                        nb[s] = -1;
                    }
                }
                const double w = 0.5 * (dist[0] + dist[1]);
                for (int s = 0; s < 2; ++s) {
                    const double coef = beta[s] / (dist[s] * w);
                    trip.emplace_back(r, r, coef);
                    if (nb[s] >= 0) trip.emplace_back(r, nb[s], -coef);
                }
            }
        }
        Eigen::SparseMatrix<double> m(d.num_active(), d.num_active());
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        auto f = std::make_shared<SwFactor>();
        f->lu.analyzePattern(m);
        f->lu.factorize(m);
        if (f->lu.info() != Eigen::Success) throw SolverError("boundary recovery factorisation failed");
        sw_ = f;
    });
}

BoundaryField EllipticSystem::normal_derivative(const Field& h) const {
    factor_shortley_weller();
    const Domain& d = *domain_;
    std::vector<double> lh;
    dir_.multiply(to_compact(h), lh);
    Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(lh.data(), static_cast<Eigen::Index>(lh.size()));
    Eigen::VectorXd x = sw_->lu.solve(rhs);
    BoundaryField out(d.num_nodes(), 0.0);
    for (int k = 0; k < d.num_nodes(); ++k) {
        const NodeStencil& st = dn_stencil_[k];
        double acc = 0.0;
        for (std::size_t q = 0; q < st.cells.size(); ++q) acc += st.weights[q] * x[d.compact[st.cells[q]]];
        out[k] = acc;
    }
    return out;
}

BoundaryField EllipticSystem::tangential_derivative(const Field& H) const {
    const Domain& d = *domain_;
    BoundaryField out(d.num_nodes(), 0.0);
    for (int k = 0; k < d.num_nodes(); ++k) {
        const NodeStencil& st = ds_stencil_[k];
        double acc = 0.0;
        for (std::size_t q = 0; q < st.cells.size(); ++q) acc += st.weights[q] * H[st.cells[q]];
        out[k] = acc;
    }
    return out;
}

BoundaryField EllipticSystem::tangential_velocity(const Field& h, const Field& H) const {
    BoundaryField dn = normal_derivative(h);
    BoundaryField dt = tangential_derivative(H);
    for (std::size_t k = 0; k < dn.size(); ++k) dn[k] = -dn[k] / bn_[k] + dt[k];
    return dn;
}

Field solve_dirichlet_weighted(const DomainPtr& domain, const Field& b, const Field& rhs,
                               const LinearSolverOptions& opt) {
    BoundaryField bn(domain->num_nodes(), 1.0);
    // Boundary depth taken from the nearest cell when only a cell field is supplied.
    for (int k = 0; k < domain->num_nodes(); ++k) bn[k] = b[domain->nodes[k].cell];
    EllipticSystem sys(domain, b, bn, opt);
    return sys.solve_dirichlet(rhs);
}

Field solve_neumann_weighted(const DomainPtr& domain, const Field& b, const BoundaryField& b_nodes, const Field& A,
                             const BoundaryField& a, const LinearSolverOptions& opt) {
    EllipticSystem sys(domain, b, b_nodes, opt);
    return sys.solve_neumann(A, a);
}

Field solve_poisson_reference(const Domain& d, const Field& rhs, const LinearSolverOptions& opt) {
    const Grid& g = d.grid;
    SparseMatrix m;
    for (int r = 0; r < d.num_active(); ++r) {
        const int c = d.active_cells[r];
        const int i = c % g.nx, j = c / g.nx;
        double diag = 0.0;
        std::vector<std::pair<int, double>> row;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int q = 0; q < 4; ++q) {
            const double h2 = q < 2 ? g.dx * g.dx : g.dy * g.dy;
            const int ci = i + di[q], cj = j + dj[q];
            if (g.inside(ci, cj) && d.active[g.index(ci, cj)]) {
                diag += 1.0 / h2;
                row.push_back({d.compact[g.index(ci, cj)], -1.0 / h2});
            }
        }
        for (const Crossing& cr : d.crossings)
            if (cr.cell == c) diag += 1.0 / ((cr.axis == 0 ? g.dx * g.dx : g.dy * g.dy) * cr.theta);
        row.push_back({r, diag});
        std::sort(row.begin(), row.end());
        for (auto& [col, v] : row) m.push(col, v);
        m.end_row();
    }
    std::vector<double> b(d.num_active()), x(d.num_active(), 0.0);
    for (int r = 0; r < d.num_active(); ++r) b[r] = rhs[d.active_cells[r]];
    pcg(m, b, x, opt, false);
    Field out(g.size(), 0.0);
    for (int r = 0; r < d.num_active(); ++r) out[d.active_cells[r]] = x[r];
    return out;
}

GreenKernel greens_kernel(const EllipticSystem& sys, int cell_cap) {
    const Domain& d = sys.domain();
    const int n = d.num_active();
    if (n > cell_cap)
        throw SolverError("grid too large for a dense Green kernel (" + std::to_string(n) + " cells, cap " +
                          std::to_string(cell_cap) + ")");
    const SparseMatrix& a = sys.dirichlet_matrix();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) m(r, a.col[k]) = a.val[k];
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw SolverError("Dirichlet operator is not positive definite");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    GreenKernel k;
    k.n = n;
    k.cells = d.active_cells;
    k.k.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k.k[static_cast<std::size_t>(i) * n + j] = inv(i, j);
    return k;
}

Field apply_kernel(const GreenKernel& k, const Field& source, const Domain& domain) {
    Field out(domain.grid.size(), 0.0);
    for (int i = 0; i < k.n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < k.n; ++j) acc += k(i, j) * source[k.cells[j]];
        out[k.cells[i]] = acc;
    }
    return out;
}

GradientBoundFit fit_kernel_gradient_bound(const GreenKernel& k, const Domain& d, double min_sep) {
    const Grid& g = d.grid;
    const double area = g.cell_area();
    GradientBoundFit fit;
    for (int jj = 0; jj < k.n; ++jj) {
        const Vec2 y = g.center(k.cells[jj]);
        for (int ii = 0; ii < k.n; ++ii) {
            const int c = k.cells[ii];
            const int i = c % g.nx, j = c / g.nx;
            const Vec2 x = g.center(c);
            const double r = norm(x - y);
            if (r <= min_sep * std::max(g.dx, g.dy)) continue;
            auto val = [&](int ci, int cj) -> double {
                if (!g.inside(ci, cj) || !d.active[g.index(ci, cj)]) return std::numeric_limits<double>::quiet_NaN();
                return k(d.compact[g.index(ci, cj)], jj) / area;
            };
            const double xp = val(i + 1, j), xm = val(i - 1, j), yp = val(i, j + 1), ym = val(i, j - 1);
            if (std::isnan(xp) || std::isnan(xm) || std::isnan(yp) || std::isnan(ym)) continue;
            const double gx = (xp - xm) / (2.0 * g.dx), gy = (yp - ym) / (2.0 * g.dy);
            fit.constant = std::max(fit.constant, std::hypot(gx, gy) * r);
            ++fit.samples;
        }
    }
    return fit;
}

namespace {

double lq_accumulate(double acc, double v, double q) {
    return std::isinf(q) ? std::max(acc, std::abs(v)) : acc + std::pow(std::abs(v), q);
}

double lq_finish(double acc, double q, double area) {
    return std::isinf(q) ? acc : std::pow(acc * area, 1.0 / q);
}

}  // namespace

double w2q_proxy(const Domain& d, const Field& h, double q) {
    const Grid& g = d.grid;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
    auto act = [&](int i, int j) { return g.inside(i, j) && d.active[g.index(i, j)]; };
    for (int c : d.active_cells) {
        const int i = c % g.nx, j = c / g.nx;
        a0 = lq_accumulate(a0, h[c], q);
        if (act(i + 1, j) && act(i - 1, j) && act(i, j + 1) && act(i, j - 1) && act(i + 1, j + 1) &&
            act(i - 1, j - 1) && act(i + 1, j - 1) && act(i - 1, j + 1)) {
            auto H = [&](int di, int dj) { return h[g.index(i + di, j + dj)]; };
            const double hx = (H(1, 0) - H(-1, 0)) / (2 * g.dx), hy = (H(0, 1) - H(0, -1)) / (2 * g.dy);
            const double hxx = (H(1, 0) - 2 * H(0, 0) + H(-1, 0)) / (g.dx * g.dx);
            const double hyy = (H(0, 1) - 2 * H(0, 0) + H(0, -1)) / (g.dy * g.dy);
            const double hxy = (H(1, 1) - H(1, -1) - H(-1, 1) + H(-1, -1)) / (4 * g.dx * g.dy);
            a1 = lq_accumulate(a1, std::hypot(hx, hy), q);
            a2 = lq_accumulate(a2, std::sqrt(hxx * hxx + 2 * hxy * hxy + hyy * hyy), q);
        }
    }
    const double area = g.cell_area();
    return lq_finish(a0, q, area) + lq_finish(a1, q, area) + lq_finish(a2, q, area);
}

double w1q_proxy(const Domain& d, const VelocityField& v, double q) {
    const Grid& g = d.grid;
    double a0 = 0.0, a1 = 0.0;
    auto act = [&](int i, int j) { return g.inside(i, j) && d.active[g.index(i, j)]; };
    for (int c : d.active_cells) {
        const int i = c % g.nx, j = c / g.nx;
        a0 = lq_accumulate(a0, std::hypot(v.u[c], v.v[c]), q);
        if (act(i + 1, j) && act(i - 1, j) && act(i, j + 1) && act(i, j - 1)) {
            const int e = g.index(i + 1, j), w = g.index(i - 1, j), n = g.index(i, j + 1), s = g.index(i, j - 1);
            const double ux = (v.u[e] - v.u[w]) / (2 * g.dx), uy = (v.u[n] - v.u[s]) / (2 * g.dy);
            const double vx = (v.v[e] - v.v[w]) / (2 * g.dx), vy = (v.v[n] - v.v[s]) / (2 * g.dy);
            a1 = lq_accumulate(a1, std::sqrt(ux * ux + uy * uy + vx * vx + vy * vy), q);
        }
    }
    const double area = g.cell_area();
    return lq_finish(a0, q, area) + lq_finish(a1, q, area);
}

}  // namespace lakesim
