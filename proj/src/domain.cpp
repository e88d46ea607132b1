#include "lakesim/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lakesim/errors.hpp"

namespace lakesim {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double theta_floor = 1e-3;

Vec2 rot90(Vec2 v) { return {-v.y, v.x}; }

class DiskShape : public Shape {
public:
    DiskShape(Vec2 c, double r) : c_(c), r_(r) {}
    double signed_distance(Vec2 p) const override { return r_ - norm(p - c_); }
    double perimeter() const override { return 2.0 * pi * r_; }
    double max_curvature() const override { return 1.0 / r_; }
    double inradius() const override { return r_; }
    void bounding_box(Vec2& lo, Vec2& hi) const override {
        lo = {c_.x - r_, c_.y - r_};
        hi = {c_.x + r_, c_.y + r_};
    }
    void sample(int m, std::vector<BoundaryNode>& nodes) const {
        const double ds = perimeter() / m;
        for (int k = 0; k < m; ++k) {
            const double phi = k * ds / r_;
            BoundaryNode n;
            n.normal = {std::cos(phi), std::sin(phi)};
            n.tangent = rot90(n.normal);
            n.position = c_ + r_ * n.normal;
            n.s = k * ds;
            n.ds = ds;
            n.curvature = 1.0 / r_;
            nodes.push_back(n);
        }
    }

private:
    Vec2 c_;
    double r_;
};

class RectangleShape : public Shape {
public:
    RectangleShape(Vec2 lo, Vec2 hi) : lo_(lo), hi_(hi) {}
    double signed_distance(Vec2 p) const override {
        const double dx = std::max(lo_.x - p.x, p.x - hi_.x);
        const double dy = std::max(lo_.y - p.y, p.y - hi_.y);
        if (dx <= 0.0 && dy <= 0.0) return -std::max(dx, dy);
        return -std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
    }
    double perimeter() const override { return 2.0 * ((hi_.x - lo_.x) + (hi_.y - lo_.y)); }
    double max_curvature() const override { return 0.0; }
    double inradius() const override { return 0.5 * std::min(hi_.x - lo_.x, hi_.y - lo_.y); }
    void bounding_box(Vec2& lo, Vec2& hi) const override {
        lo = lo_;
        hi = hi_;
    }

private:
    Vec2 lo_, hi_;
};

class EllipseShape : public Shape {
public:
    EllipseShape(Vec2 c, double a, double b) : c_(c), a_(a), b_(b) {
        const int n = 1 << 16;
        table_t_.resize(n + 1);
        table_s_.resize(n + 1);
        table_s_[0] = 0.0;
        for (int k = 0; k <= n; ++k) table_t_[k] = 2.0 * pi * k / n;
        for (int k = 0; k < n; ++k) {
            const double t0 = table_t_[k], t1 = table_t_[k + 1];
            const double tm = 0.5 * (t0 + t1);
            table_s_[k + 1] = table_s_[k] + (t1 - t0) / 6.0 * (speed(t0) + 4.0 * speed(tm) + speed(t1));
        }
        perimeter_ = table_s_[n];
    }
    double speed(double t) const { return std::hypot(a_ * std::sin(t), b_ * std::cos(t)); }
    double curvature(double t) const {
        const double q = a_ * a_ * std::sin(t) * std::sin(t) + b_ * b_ * std::cos(t) * std::cos(t);
        return a_ * b_ / std::pow(q, 1.5);
    }
    double signed_distance(Vec2 p) const override {
        const Vec2 q = p - c_;
        const double dist = distance_to_curve(std::abs(q.x), std::abs(q.y));
        const double level = (q.x / a_) * (q.x / a_) + (q.y / b_) * (q.y / b_);
        return level < 1.0 ? dist : -dist;
    }
    double perimeter() const override { return perimeter_; }
    double max_curvature() const override {
        const double lo = std::min(a_, b_), hi = std::max(a_, b_);
        return hi / (lo * lo);
    }
    double inradius() const override { return std::min(a_, b_); }
    void bounding_box(Vec2& lo, Vec2& hi) const override {
        lo = {c_.x - a_, c_.y - b_};
        hi = {c_.x + a_, c_.y + b_};
    }
    double parameter_at(double s) const {
        auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
        int k = std::clamp(static_cast<int>(it - table_s_.begin()) - 1, 0, static_cast<int>(table_s_.size()) - 2);
        double t = table_t_[k] + (s - table_s_[k]) / speed(table_t_[k]);
        for (int it2 = 0; it2 < 3; ++it2) {
            const double tm = 0.5 * (table_t_[k] + t);
            const double sk = table_s_[k] + (t - table_t_[k]) / 6.0 * (speed(table_t_[k]) + 4.0 * speed(tm) + speed(t));
            t -= (sk - s) / speed(t);
        }
        return t;
    }
    void sample(int m, std::vector<BoundaryNode>& nodes) const {
        const double ds = perimeter_ / m;
        for (int k = 0; k < m; ++k) {
            const double t = parameter_at(k * ds);
            BoundaryNode n;
            n.position = c_ + Vec2{a_ * std::cos(t), b_ * std::sin(t)};
            const Vec2 tan{-a_ * std::sin(t), b_ * std::cos(t)};
            n.tangent = (1.0 / norm(tan)) * tan;
            n.normal = {n.tangent.y, -n.tangent.x};
            n.s = k * ds;
            n.ds = ds;
            n.curvature = curvature(t);
            nodes.push_back(n);
        }
    }

private:
    // Distance from a first-quadrant point to the ellipse (Eberly's bisection).
    double distance_to_curve(double y0, double y1) const {
        double e0 = a_, e1 = b_;
        if (e0 < e1) {
            std::swap(e0, e1);
            std::swap(y0, y1);
        }
        if (y1 > 0.0) {
            if (y0 > 0.0) {
                const double z0 = y0 / e0, z1 = y1 / e1;
                const double g = z0 * z0 + z1 * z1 - 1.0;
                if (g != 0.0) {
                    const double r0 = (e0 / e1) * (e0 / e1);
                    const double n0 = r0 * z0;
                    double s0 = z1 - 1.0;
                    double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
                    double s = 0.0;
                    for (int i = 0; i < 200; ++i) {
                        s = 0.5 * (s0 + s1);
                        if (s == s0 || s == s1) break;
                        const double ratio0 = n0 / (s + r0), ratio1 = z1 / (s + 1.0);
                        const double gg = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
                        if (gg > 0.0) s0 = s;
                        else if (gg < 0.0) s1 = s;
                        else break;
                    }
                    const double x0 = r0 * y0 / (s + r0), x1 = y1 / (s + 1.0);
                    return std::hypot(x0 - y0, x1 - y1);
                }
                return 0.0;
            }
            return std::abs(y1 - e1);
        }
        const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
        if (numer0 < denom0) {
            const double xde0 = numer0 / denom0;
            const double x0 = e0 * xde0, x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
            return std::hypot(x0 - y0, x1);
        }
        return std::abs(y0 - e0);
    }

    Vec2 c_;
    double a_, b_;
    double perimeter_ = 0.0;
    std::vector<double> table_t_, table_s_;
};

class RoundedPolygonShape : public Shape {
public:
    RoundedPolygonShape(const std::vector<Vec2>& verts, double r) : r_(r) {
        const int n = static_cast<int>(verts.size());
        if (n < 3) throw GeometryError("rounded polygon needs at least 3 vertices");
        if (r <= 0.0) throw GeometryError("rounded polygon needs a positive corner radius");
        for (int k = 0; k < n; ++k) {
            const Vec2 e0 = verts[k] - verts[(k + n - 1) % n];
            const Vec2 e1 = verts[(k + 1) % n] - verts[k];
            if (cross(e0, e1) <= 0.0) throw GeometryError("rounded polygon must be convex and counterclockwise");
        }
        // Offset each edge inward by r; consecutive offset lines meet at the arc centers.
        for (int k = 0; k < n; ++k) {
            const Vec2 pa = verts[(k + n - 1) % n], pb = verts[k], pc = verts[(k + 1) % n];
            const Vec2 d0 = (1.0 / norm(pb - pa)) * (pb - pa);
            const Vec2 d1 = (1.0 / norm(pc - pb)) * (pc - pb);
            const Vec2 q0 = pa + r * rot90(d0);
            const Vec2 q1 = pb + r * rot90(d1);
            const double tpar = cross(q1 - q0, d1) / cross(d0, d1);
            inner_.push_back(q0 + tpar * d0);
        }
        for (int k = 0; k < n; ++k) {
            const Vec2 e = inner_[(k + 1) % n] - inner_[k];
            if (cross(inner_[(k + 2) % n] - inner_[(k + 1) % n], e) > 0.0 || norm(e) <= 0.0)
                throw GeometryError("corner radius too large for polygon");
        }
        perimeter_ = 2.0 * pi * r_;
        for (int k = 0; k < n; ++k) perimeter_ += norm(inner_[(k + 1) % n] - inner_[k]);
        Vec2 centroid{0.0, 0.0};
        for (const auto& p : inner_) centroid = centroid + (1.0 / n) * p;
        inradius_ = r_ + std::max(0.0, -inner_signed(centroid));
    }
    double signed_distance(Vec2 p) const override { return r_ - inner_signed(p); }
    double perimeter() const override { return perimeter_; }
    double max_curvature() const override { return 1.0 / r_; }
    double inradius() const override { return inradius_; }
    void bounding_box(Vec2& lo, Vec2& hi) const override {
        lo = {1e300, 1e300};
        hi = {-1e300, -1e300};
        for (const auto& p : inner_) {
            lo = {std::min(lo.x, p.x - r_), std::min(lo.y, p.y - r_)};
            hi = {std::max(hi.x, p.x + r_), std::max(hi.y, p.y + r_)};
        }
    }
    // Each edge and arc gets its own equal subdivision so that the arc
    // nodes carry exactly the turning angle of their arc.
    void sample(double ds_target, std::vector<BoundaryNode>& nodes) const {
        const int n = static_cast<int>(inner_.size());
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            const Vec2 a = inner_[k], b = inner_[(k + 1) % n];
            const double len = norm(b - a);
            const Vec2 d = (1.0 / len) * (b - a);
            const Vec2 nout{d.y, -d.x};
            const int ne = std::max(1, static_cast<int>(std::lround(len / ds_target)));
            for (int q = 0; q < ne; ++q) {
                BoundaryNode node;
                const double off = (q + 0.5) * len / ne;
                node.position = a + r_ * nout + off * d;
                node.normal = nout;
                node.tangent = d;
                node.s = s + off;
                node.ds = len / ne;
                node.curvature = 0.0;
                nodes.push_back(node);
            }
            s += len;
            const Vec2 c = inner_[(k + 2) % n];
            const Vec2 d2 = (1.0 / norm(c - b)) * (c - b);
            const double phi0 = std::atan2(nout.y, nout.x);
            double turn = std::atan2(cross(d, d2), dot(d, d2));
            const double arc = r_ * turn;
            const int na = std::max(1, static_cast<int>(std::lround(arc / ds_target)));
            for (int q = 0; q < na; ++q) {
                BoundaryNode node;
                const double phi = phi0 + (q + 0.5) * turn / na;
                node.normal = {std::cos(phi), std::sin(phi)};
                node.tangent = rot90(node.normal);
                node.position = b + r_ * node.normal;
                node.s = s + (q + 0.5) * arc / na;
                node.ds = arc / na;
                node.curvature = 1.0 / r_;
                nodes.push_back(node);
            }
            s += arc;
        }
    }

private:
    // Signed distance to the inner polygon, positive outside.
    double inner_signed(Vec2 p) const {
        const int n = static_cast<int>(inner_.size());
        double best = std::numeric_limits<double>::infinity();
        bool inside = true;
        for (int k = 0; k < n; ++k) {
            const Vec2 a = inner_[k], b = inner_[(k + 1) % n];
            const Vec2 e = b - a;
            const double t = std::clamp(dot(p - a, e) / dot(e, e), 0.0, 1.0);
            best = std::min(best, norm(p - (a + t * e)));
            if (cross(e, p - a) < 0.0) inside = false;
        }
        return inside ? -best : best;
    }

    double r_;
    std::vector<Vec2> inner_;
    double perimeter_ = 0.0;
    double inradius_ = 0.0;
};

double crossing_fraction(const Shape& shape, Vec2 c, Vec2 step) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (shape.signed_distance(c + mid * step) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

void locate_on_arc(const Domain& dom, Vec2 p, int& n0, int& n1, double& w) {
    const int m = dom.num_nodes();
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
        const double d = norm(dom.nodes[k].position - p);
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    n0 = best;
    n1 = best;
    w = 0.0;
    if (bd == 0.0) return;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int dir : {1, -1}) {
        const int other = (best + dir + m) % m;
        const Vec2 a = dom.nodes[best].position, b = dom.nodes[other].position;
        const Vec2 e = b - a;
        const double t = std::clamp(dot(p - a, e) / dot(e, e), 0.0, 1.0);
        const double d = norm(p - (a + t * e));
        if (d < best_dist) {
            best_dist = d;
            n0 = best;
            n1 = other;
            w = t;
        }
    }
}

}  // namespace

ShapeDescriptor ShapeDescriptor::disk(Vec2 c, double r) {
    ShapeDescriptor d;
    d.kind = ShapeKind::disk;
    d.center = c;
    d.radius = r;
    return d;
}

ShapeDescriptor ShapeDescriptor::rectangle(Vec2 lo, Vec2 hi) {
    ShapeDescriptor d;
    d.kind = ShapeKind::rectangle;
    d.lower = lo;
    d.upper = hi;
    return d;
}

ShapeDescriptor ShapeDescriptor::ellipse(Vec2 c, double a, double b) {
    ShapeDescriptor d;
    d.kind = ShapeKind::ellipse;
    d.center = c;
    d.semi_a = a;
    d.semi_b = b;
    return d;
}

ShapeDescriptor ShapeDescriptor::rounded_polygon(std::vector<Vec2> verts, double r) {
    ShapeDescriptor d;
    d.kind = ShapeKind::rounded_polygon;
    d.vertices = std::move(verts);
    d.corner_radius = r;
    return d;
}

std::string ShapeDescriptor::name() const {
    switch (kind) {
        case ShapeKind::disk: return "disk";
        case ShapeKind::rectangle: return "rectangle";
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::rounded_polygon: return "rounded_polygon";
    }
    return "unknown";
}

DomainPtr build_domain(const ShapeDescriptor& desc, int resolution) {
    if (resolution < 16) throw GeometryError("resolution must be at least 16 cells per side");
    auto dom = std::make_shared<Domain>();
    dom->descriptor = desc;
    switch (desc.kind) {
        case ShapeKind::disk:
            if (!(desc.radius > 0.0)) throw GeometryError("disk radius must be positive");
            dom->shape = std::make_shared<DiskShape>(desc.center, desc.radius);
            break;
        case ShapeKind::rectangle:
            if (!(desc.upper.x > desc.lower.x && desc.upper.y > desc.lower.y))
                throw GeometryError("rectangle corners must satisfy lower < upper");
            dom->shape = std::make_shared<RectangleShape>(desc.lower, desc.upper);
            dom->grid_aligned = true;
            break;
        case ShapeKind::ellipse:
            if (!(desc.semi_a > 0.0 && desc.semi_b > 0.0)) throw GeometryError("ellipse semiaxes must be positive");
            dom->shape = std::make_shared<EllipseShape>(desc.center, desc.semi_a, desc.semi_b);
            break;
        case ShapeKind::rounded_polygon:
            dom->shape = std::make_shared<RoundedPolygonShape>(desc.vertices, desc.corner_radius);
            break;
        default:
            throw GeometryError("unsupported shape");
    }
    const Shape& shape = *dom->shape;

    Vec2 lo, hi;
    shape.bounding_box(lo, hi);
    const double lx = hi.x - lo.x, ly = hi.y - lo.y;
    const double h = std::max(lx, ly) / resolution;
    Grid& g = dom->grid;
    g.nx = std::max(1, static_cast<int>(std::lround(lx / h)));
    g.ny = std::max(1, static_cast<int>(std::lround(ly / h)));
    g.dx = lx / g.nx;
    g.dy = ly / g.ny;
    g.x0 = lo.x;
    g.y0 = lo.y;

    if (shape.max_curvature() * std::max(g.dx, g.dy) > 0.5)
        throw GeometryError("resolution too coarse to resolve boundary curvature");

    const int nc = g.size();
    dom->distance.assign(nc, 0.0);
    dom->active.assign(nc, 0);
    dom->compact.assign(nc, -1);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int c = g.index(i, j);
            dom->distance[c] = shape.signed_distance(g.center(i, j));
            if (dom->distance[c] > 0.0) {
                dom->active[c] = 1;
                dom->compact[c] = dom->num_active();
                dom->active_cells.push_back(c);
            }
        }
    if (dom->active_cells.empty()) throw GeometryError("no active cells");

    // Boundary nodes, counterclockwise with exact arc-length weights.
    dom->perimeter = shape.perimeter();
    const double ds_target = 0.5 * std::min(g.dx, g.dy);
    const int m_curved = std::max(32, static_cast<int>(std::ceil(dom->perimeter / ds_target)));
    switch (desc.kind) {
        case ShapeKind::disk:
            static_cast<const DiskShape&>(shape).sample(m_curved, dom->nodes);
            break;
        case ShapeKind::ellipse:
            static_cast<const EllipseShape&>(shape).sample(m_curved, dom->nodes);
            break;
        case ShapeKind::rounded_polygon:
            static_cast<const RoundedPolygonShape&>(shape).sample(ds_target, dom->nodes);
            break;
        case ShapeKind::rectangle: {
            // One node per boundary face midpoint; each corner's turning angle
            // pi/2 is split over its two adjacent nodes.
            auto& nodes = dom->nodes;
            double s = 0.0;
            auto add = [&](Vec2 p, Vec2 n, double ds) {
                BoundaryNode node;
                node.position = p;
                node.normal = n;
                node.tangent = rot90(n);
                node.ds = ds;
                node.s = s + 0.5 * ds;
                s += ds;
                nodes.push_back(node);
            };
            std::vector<int> corner_after;
            for (int i = 0; i < g.nx; ++i) add({g.x0 + (i + 0.5) * g.dx, lo.y}, {0.0, -1.0}, g.dx);
            corner_after.push_back(static_cast<int>(nodes.size()) - 1);
            for (int j = 0; j < g.ny; ++j) add({hi.x, g.y0 + (j + 0.5) * g.dy}, {1.0, 0.0}, g.dy);
            corner_after.push_back(static_cast<int>(nodes.size()) - 1);
            for (int i = g.nx - 1; i >= 0; --i) add({g.x0 + (i + 0.5) * g.dx, hi.y}, {0.0, 1.0}, g.dx);
            corner_after.push_back(static_cast<int>(nodes.size()) - 1);
            for (int j = g.ny - 1; j >= 0; --j) add({lo.x, g.y0 + (j + 0.5) * g.dy}, {-1.0, 0.0}, g.dy);
            corner_after.push_back(static_cast<int>(nodes.size()) - 1);
            const int m = static_cast<int>(nodes.size());
            for (int k : corner_after) {
                nodes[k].curvature += 0.25 * pi / nodes[k].ds;
                nodes[(k + 1) % m].curvature += 0.25 * pi / nodes[(k + 1) % m].ds;
            }
            break;
        }
    }

    const double kmax = shape.max_curvature();
    dom->sigma0 = 0.5 * shape.inradius();
    if (kmax > 0.0) dom->sigma0 = std::min(dom->sigma0, 0.5 / kmax);

    // Nearest active cell for each node.
    for (auto& node : dom->nodes) {
        const int ic = std::clamp(static_cast<int>(std::floor((node.position.x - g.x0) / g.dx)), 0, g.nx - 1);
        const int jc = std::clamp(static_cast<int>(std::floor((node.position.y - g.y0) / g.dy)), 0, g.ny - 1);
        double best = std::numeric_limits<double>::infinity();
        for (int radius = 2; node.cell < 0 && radius <= std::max(g.nx, g.ny); radius *= 2) {
            for (int j = std::max(0, jc - radius); j <= std::min(g.ny - 1, jc + radius); ++j)
                for (int i = std::max(0, ic - radius); i <= std::min(g.nx - 1, ic + radius); ++i) {
                    const int c = g.index(i, j);
                    if (!dom->active[c]) continue;
                    const double d = norm(g.center(i, j) - node.position);
                    if (d < best) {
                        best = d;
                        node.cell = c;
                    }
                }
        }
        if (node.cell < 0) throw GeometryError("boundary node has no active cell nearby");
    }

    // Faces and crossings.
    dom->xface_kind.assign((g.nx + 1) * g.ny, FaceKind::exterior);
    dom->yface_kind.assign(g.nx * (g.ny + 1), FaceKind::exterior);
    dom->xface_crossing.assign((g.nx + 1) * g.ny, -1);
    dom->yface_crossing.assign(g.nx * (g.ny + 1), -1);
    auto is_active = [&](int i, int j) { return g.inside(i, j) && dom->active[g.index(i, j)]; };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const bool l = is_active(i - 1, j), r = is_active(i, j);
            if (l && r) dom->xface_kind[g.xface(i, j)] = FaceKind::interior;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const bool b = is_active(i, j - 1), t = is_active(i, j);
            if (b && t) dom->yface_kind[g.yface(i, j)] = FaceKind::interior;
        }
    for (int c : dom->active_cells) {
        const int i = c % g.nx, j = c / g.nx;
        const Vec2 ctr = g.center(i, j);
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int q = 0; q < 4; ++q) {
            if (is_active(i + di[q], j + dj[q])) continue;
            Crossing cr;
            cr.cell = c;
            cr.axis = q < 2 ? 0 : 1;
            cr.side = (q % 2 == 0) ? 1 : -1;
            const Vec2 step{di[q] * g.dx, dj[q] * g.dy};
            const double tau = crossing_fraction(shape, ctr, step);
            cr.theta = std::max(tau, theta_floor);
            cr.point = ctr + tau * step;
            locate_on_arc(*dom, cr.point, cr.node0, cr.node1, cr.weight1);
            const int idx = static_cast<int>(dom->crossings.size());
            dom->crossings.push_back(cr);
            if (cr.axis == 0) {
                const int f = g.xface(cr.side > 0 ? i + 1 : i, j);
                dom->xface_kind[f] = FaceKind::boundary;
                dom->xface_crossing[f] = idx;
            } else {
                const int f = g.yface(i, cr.side > 0 ? j + 1 : j);
                dom->yface_kind[f] = FaceKind::boundary;
                dom->yface_crossing[f] = idx;
            }
        }
    }
    return dom;
}

double signed_distance(const Domain& domain, Vec2 x) { return domain.signed_distance(x); }

BoundaryPartition partition_boundary(const Domain& domain, const BoundaryField& a, double eps_a) {
    BoundaryPartition part;
    const int m = domain.num_nodes();
    double amax = 0.0;
    for (int k = 0; k < m; ++k) amax = std::max(amax, std::abs(a[k]));
    part.threshold = eps_a >= 0.0 ? eps_a : 1e-12 * amax;
    part.label.assign(m, 0);
    for (int k = 0; k < m; ++k) {
        if (a[k] < -part.threshold) {
            part.label[k] = -1;
            part.inflow.push_back(k);
        } else if (a[k] > part.threshold) {
            part.label[k] = 1;
            part.outflow.push_back(k);
        } else {
            part.impermeable.push_back(k);
        }
    }
    return part;
}

double cutoff_one_sigma_value(double d, double sigma) {
    if (d < sigma) return 0.0;
    if (d < 2.0 * sigma) return (d - sigma) / sigma;
    return 1.0;
}

Field cutoff_one_sigma(const Domain& domain, double sigma) {
    if (!(sigma > 0.0)) throw GeometryError("cutoff width must be positive");
    if (sigma >= 0.5 * domain.sigma0 || 2.0 * sigma >= domain.shape->inradius())
        throw GeometryError("cutoff width too large relative to the boundary tube");
    Field out(domain.grid.size(), 0.0);
    for (int c : domain.active_cells) out[c] = cutoff_one_sigma_value(domain.distance[c], sigma);
    return out;
}

namespace {

double lq_norm(const std::vector<double>& f, const std::vector<double>& w, double q) {
    double acc = 0.0;
    if (std::isinf(q)) {
        for (double v : f) acc = std::max(acc, std::abs(v));
        return acc;
    }
    for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * std::pow(std::abs(f[i]), q);
    return std::pow(acc, 1.0 / q);
}

double contraction(const std::vector<double>& before, const std::vector<double>& after, const std::vector<double>& w) {
    double worst = 0.0;
    for (double q : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
        const double nb = lq_norm(before, w, q), na = lq_norm(after, w, q);
        if (nb > 0.0) worst = std::max(worst, na / nb);
    }
    return worst;
}

}  // namespace

MollifyResult mollify_data(const Domain& domain, const Field& f, double theta, MollifyMode mode) {
    MollifyResult res;
    if (!(theta > 0.0)) throw GeometryError("mollification scale must be positive");
    const Grid& g = domain.grid;
    if (mode == MollifyMode::boundary) {
        const int m = domain.num_nodes();
        if (static_cast<int>(f.size()) != m) throw GeometryError("boundary mollification expects a boundary field");
        double ds_max = 0.0;
        std::vector<double> w(m);
        for (int k = 0; k < m; ++k) {
            w[k] = domain.nodes[k].ds;
            ds_max = std::max(ds_max, w[k]);
        }
        res.values = f;
        if (theta <= ds_max) {
            res.applied = false;
            res.warning = "mollification scale below boundary node spacing; no-op";
            return res;
        }
        const double per = domain.perimeter;
        auto kernel = [&](int a, int b) {
            double d = std::abs(domain.nodes[a].s - domain.nodes[b].s);
            d = std::min(d, per - d);
            return std::max(0.0, 1.0 - d / theta);
        };
        std::vector<double> mass(m, 0.0);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) mass[a] += kernel(a, b) * w[b];
        const double cmax = *std::max_element(mass.begin(), mass.end());
        for (int a = 0; a < m; ++a) {
            double acc = 0.0, self = 1.0;
            for (int b = 0; b < m; ++b) {
                if (b == a) continue;
                const double wt = kernel(a, b) * w[b] / cmax;
                acc += wt * f[b];
                self -= wt;
            }
            res.values[a] = acc + self * f[a];
        }
        res.contraction = contraction(f, res.values, w);
        return res;
    }

    if (static_cast<int>(f.size()) != g.size()) throw GeometryError("interior mollification expects a cell field");
    res.values.assign(g.size(), 0.0);
    const double h = std::max(g.dx, g.dy);
    if (theta <= h) {
        res.applied = false;
        res.warning = "mollification scale below grid spacing; no-op";
        for (int c : domain.active_cells) res.values[c] = f[c];
    } else {
        const int ri = static_cast<int>(std::ceil(theta / g.dx)), rj = static_cast<int>(std::ceil(theta / g.dy));
        auto kern = [&](int di, int dj) {
            return std::max(0.0, 1.0 - std::hypot(di * g.dx, dj * g.dy) / theta);
        };
        const int n = domain.num_active();
        std::vector<double> mass(n, 0.0);
        for (int a = 0; a < n; ++a) {
            const int c = domain.active_cells[a];
            const int i = c % g.nx, j = c / g.nx;
            for (int dj = -rj; dj <= rj; ++dj)
                for (int di = -ri; di <= ri; ++di) {
                    if (!g.inside(i + di, j + dj) || !domain.active[g.index(i + di, j + dj)]) continue;
                    mass[a] += kern(di, dj);
                }
        }
        const double cmax = *std::max_element(mass.begin(), mass.end());
        for (int a = 0; a < n; ++a) {
            const int c = domain.active_cells[a];
            const int i = c % g.nx, j = c / g.nx;
            double acc = 0.0, self = 1.0;
            for (int dj = -rj; dj <= rj; ++dj)
                for (int di = -ri; di <= ri; ++di) {
                    if (di == 0 && dj == 0) continue;
                    if (!g.inside(i + di, j + dj)) continue;
                    const int cc = g.index(i + di, j + dj);
                    if (!domain.active[cc]) continue;
                    const double wt = kern(di, dj) / cmax;
                    acc += wt * f[cc];
                    self -= wt;
                }
            res.values[c] = acc + self * f[c];
        }
    }
    if (mode == MollifyMode::initial)
        for (int c : domain.active_cells)
            if (domain.distance[c] < theta) res.values[c] = 0.0;

    std::vector<double> before, after, w;
    for (int c : domain.active_cells) {
        before.push_back(f[c]);
        after.push_back(res.values[c]);
        w.push_back(g.cell_area());
    }
    res.contraction = contraction(before, after, w);
    return res;
}

BoundaryField trace_to_nodes(const Domain& domain, const Field& f) {
    BoundaryField out(domain.num_nodes());
    for (int k = 0; k < domain.num_nodes(); ++k) out[k] = f[domain.nodes[k].cell];
    return out;
}

double integrate(const Domain& domain, const Field& f) {
    double acc = 0.0;
    for (int c : domain.active_cells) acc += f[c];
    return acc * domain.grid.cell_area();
}

double integrate_boundary(const Domain& domain, const BoundaryField& f) {
    double acc = 0.0;
    for (int k = 0; k < domain.num_nodes(); ++k) acc += f[k] * domain.nodes[k].ds;
    return acc;
}

}  // namespace lakesim
