#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace lakesim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Cell fields cover the whole grid (nx*ny, inactive entries are 0);
// boundary fields live on the arc-length node mesh.
using Field = std::vector<double>;
using BoundaryField = std::vector<double>;

enum class ShapeKind { disk, rectangle, ellipse, rounded_polygon };

struct ShapeDescriptor {
    ShapeKind kind = ShapeKind::disk;
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
    Vec2 lower{0.0, 0.0};
    Vec2 upper{1.0, 1.0};
    double semi_a = 1.0;
    double semi_b = 1.0;
    std::vector<Vec2> vertices;  // convex, counterclockwise
    double corner_radius = 0.0;

    static ShapeDescriptor disk(Vec2 c, double r);
    static ShapeDescriptor rectangle(Vec2 lo, Vec2 hi);
    static ShapeDescriptor ellipse(Vec2 c, double a, double b);
    static ShapeDescriptor rounded_polygon(std::vector<Vec2> verts, double r);
    std::string name() const;
};

class Shape {
public:
    virtual ~Shape() = default;
    virtual double signed_distance(Vec2 p) const = 0;
    virtual double perimeter() const = 0;
    virtual double max_curvature() const = 0;
    virtual double inradius() const = 0;
    virtual void bounding_box(Vec2& lo, Vec2& hi) const = 0;
};

struct Grid {
    int nx = 0;
    int ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double dx = 0.0;
    double dy = 0.0;

    int size() const { return nx * ny; }
    int index(int i, int j) const { return i + nx * j; }
    bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
    Vec2 center(int i, int j) const { return {x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy}; }
    Vec2 center(int c) const { return center(c % nx, c / nx); }
    double cell_area() const { return dx * dy; }
    // x-faces: (nx+1)*ny, face (i,j) sits at x0 + i*dx between cells (i-1,j) and (i,j).
    int xface(int i, int j) const { return i + (nx + 1) * j; }
    // y-faces: nx*(ny+1), face (i,j) sits at y0 + j*dy between cells (i,j-1) and (i,j).
    int yface(int i, int j) const { return i + nx * j; }
    int node(int i, int j) const { return i + (nx + 1) * j; }
};

struct BoundaryNode {
    Vec2 position;
    Vec2 normal;   // outward
    Vec2 tangent;  // counterclockwise, tangent = rot90(normal)
    double s = 0.0;
    double ds = 0.0;
    double curvature = 0.0;
    int cell = -1;  // active cell receiving this node's flux
};

// Intersection of the boundary with the segment from an active cell
// center to a neighbouring center that lies outside.
struct Crossing {
    int cell = -1;
    int axis = 0;   // 0: x, 1: y
    int side = 0;   // +1 or -1
    double theta = 0.5;
    Vec2 point;
    int node0 = 0;
    int node1 = 0;
    double weight1 = 0.0;  // value = (1-w) f[node0] + w f[node1]
};

enum class FaceKind : std::uint8_t { exterior = 0, interior = 1, boundary = 2 };

struct Domain {
    ShapeDescriptor descriptor;
    std::shared_ptr<const Shape> shape;
    Grid grid;
    std::vector<std::uint8_t> active;
    std::vector<int> active_cells;
    std::vector<int> compact;  // grid index -> position in active_cells or -1
    Field distance;            // signed distance at cell centers
    std::vector<BoundaryNode> nodes;
    std::vector<Crossing> crossings;
    std::vector<FaceKind> xface_kind;
    std::vector<FaceKind> yface_kind;
    std::vector<int> xface_crossing;
    std::vector<int> yface_crossing;
    double perimeter = 0.0;
    double sigma0 = 0.0;
    bool grid_aligned = false;

    int num_active() const { return static_cast<int>(active_cells.size()); }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    double signed_distance(Vec2 p) const { return shape->signed_distance(p); }
    double interpolate(const BoundaryField& f, const Crossing& c) const {
        return (1.0 - c.weight1) * f[c.node0] + c.weight1 * f[c.node1];
    }
    double active_area() const { return num_active() * grid.cell_area(); }
};

using DomainPtr = std::shared_ptr<const Domain>;

DomainPtr build_domain(const ShapeDescriptor& shape, int resolution);

double signed_distance(const Domain& domain, Vec2 x);

struct BoundaryPartition {
    std::vector<int> inflow;
    std::vector<int> impermeable;
    std::vector<int> outflow;
    std::vector<std::int8_t> label;  // -1, 0, +1 per node
    double threshold = 0.0;

    bool operator==(const BoundaryPartition& o) const {
        return label == o.label && threshold == o.threshold;
    }
};

// Negative threshold selects the default 1e-12 * max|a|.
BoundaryPartition partition_boundary(const Domain& domain, const BoundaryField& a, double eps_a = -1.0);

double cutoff_one_sigma_value(double d, double sigma);
Field cutoff_one_sigma(const Domain& domain, double sigma);

enum class MollifyMode { interior, boundary, initial };

struct MollifyResult {
    Field values;
    double contraction = 1.0;  // max over q in {1,2,inf} of ||f^theta||_q / ||f||_q
    bool applied = true;
    std::string warning;
};

// Tent kernel of radius theta, symmetric with respect to the cell (or arc)
// measure and completed to unit mass by self-weight, so constants and the
// discrete integral are preserved and every L_q norm contracts.
MollifyResult mollify_data(const Domain& domain, const Field& f, double theta, MollifyMode mode);

// Cell-centered WLS evaluation of a cell field at boundary nodes.
BoundaryField trace_to_nodes(const Domain& domain, const Field& f);

double integrate(const Domain& domain, const Field& f);
double integrate_boundary(const Domain& domain, const BoundaryField& f);

}  // namespace lakesim
