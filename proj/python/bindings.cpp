#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lakesim/commands.hpp"
#include "lakesim/errors.hpp"

namespace py = pybind11;
using namespace lakesim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

struct PyDomain {
    DomainPtr d;
};

// Active-cell vector <-> full grid field.
Field to_field(const Domain& d, const Array& a, const char* what) {
    if (a.ndim() != 1 || a.shape(0) != d.num_active())
        throw py::value_error(std::string(what) + " must have one entry per active cell");
    Field f(d.grid.size(), 0.0);
    auto r = a.unchecked<1>();
    for (int k = 0; k < d.num_active(); ++k) f[d.active_cells[k]] = r(k);
    return f;
}

BoundaryField to_boundary(const Domain& d, const Array& a, const char* what) {
    if (a.ndim() != 1 || a.shape(0) != d.num_nodes())
        throw py::value_error(std::string(what) + " must have one entry per boundary node");
    auto r = a.unchecked<1>();
    return BoundaryField(r.data(0), r.data(0) + d.num_nodes());
}

Array from_field(const Domain& d, const Field& f) {
    Array out(d.num_active());
    auto w = out.mutable_unchecked<1>();
    for (int k = 0; k < d.num_active(); ++k) w(k) = f[d.active_cells[k]];
    return out;
}

Field depth_or_one(const Domain& d, const std::optional<Array>& b) {
    if (!b) return Field(d.grid.size(), 1.0);
    Field f = to_field(d, *b, "b");
    for (int c = 0; c < d.grid.size(); ++c)
        if (!d.active[c]) f[c] = 1.0;
    return f;
}

Array points(const std::vector<Vec2>& p) {
    Array out({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < p.size(); ++k) {
        w(k, 0) = p[k].x;
        w(k, 1) = p[k].y;
    }
    return out;
}

py::dict run_config(const std::string& text) {
    const ParsedConfig pc = parse_config(text);
    SolverConfig cfg = pc.solver;
    if (cfg.R_auto) cfg.R = estimate_cutoff(pc.scenario, cfg);
    const Trajectory tr = run_simulation(pc.scenario, cfg);
    const Domain& d = *pc.scenario.domain;
    std::vector<double> l2, mx;
    for (const StampDiagnostics& r : tr.reports) {
        l2.push_back(r.norm_l2);
        mx.push_back(r.norm_max);
    }
    py::list omegas;
    for (const StateFields& st : tr.states) omegas.append(from_field(d, st.omega));
    py::dict out;
    out["complete"] = tr.complete;
    out["error"] = tr.error;
    out["times"] = tr.times;
    out["norm_l2"] = l2;
    out["norm_max"] = mx;
    out["omega"] = omegas;
    out["sup_omega"] = tr.sup_omega;
    out["R"] = tr.R;
    out["hash"] = pc.hash;
    out["warnings"] = pc.warnings;
    return out;
}

}  // namespace

PYBIND11_MODULE(_lakesim, m) {
    m.doc() = "Lake equations vorticity solver and diagnostics";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<CompatibilityError>(m, "CompatibilityError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);

    py::class_<PyDomain>(m, "Domain")
        .def_static(
            "disk",
            [](double radius, std::pair<double, double> center, int resolution) {
                return PyDomain{build_domain(ShapeDescriptor::disk({center.first, center.second}, radius), resolution)};
            },
            py::arg("radius") = 1.0, py::arg("center") = std::pair<double, double>{0.0, 0.0},
            py::arg("resolution") = 64)
        .def_static(
            "rectangle",
            [](std::pair<double, double> lo, std::pair<double, double> hi, int resolution) {
                return PyDomain{build_domain(
                    ShapeDescriptor::rectangle({lo.first, lo.second}, {hi.first, hi.second}), resolution)};
            },
            py::arg("lo") = std::pair<double, double>{0.0, 0.0}, py::arg("hi") = std::pair<double, double>{1.0, 1.0},
            py::arg("resolution") = 64)
        .def_property_readonly("nx", [](const PyDomain& p) { return p.d->grid.nx; })
        .def_property_readonly("ny", [](const PyDomain& p) { return p.d->grid.ny; })
        .def_property_readonly("dx", [](const PyDomain& p) { return p.d->grid.dx; })
        .def_property_readonly("num_active", [](const PyDomain& p) { return p.d->num_active(); })
        .def_property_readonly("num_nodes", [](const PyDomain& p) { return p.d->num_nodes(); })
        .def_property_readonly("perimeter", [](const PyDomain& p) { return p.d->perimeter; })
        .def_property_readonly("sigma0", [](const PyDomain& p) { return p.d->sigma0; })
        .def("centers",
             [](const PyDomain& p) {
                 std::vector<Vec2> c;
                 for (int k : p.d->active_cells) c.push_back(p.d->grid.center(k));
                 return points(c);
             })
        .def("node_positions",
             [](const PyDomain& p) {
                 std::vector<Vec2> c;
                 for (const BoundaryNode& n : p.d->nodes) c.push_back(n.position);
                 return points(c);
             })
        .def("node_normals",
             [](const PyDomain& p) {
                 std::vector<Vec2> c;
                 for (const BoundaryNode& n : p.d->nodes) c.push_back(n.normal);
                 return points(c);
             })
        .def("curvature", [](const PyDomain& p) {
            std::vector<double> k;
            for (const BoundaryNode& n : p.d->nodes) k.push_back(n.curvature);
            return k;
        });

    m.def(
        "solve_dirichlet",
        [](const PyDomain& p, const Array& rhs, const std::optional<Array>& b) {
            const Domain& d = *p.d;
            return from_field(d, solve_dirichlet_weighted(p.d, depth_or_one(d, b), to_field(d, rhs, "rhs")));
        },
        py::arg("domain"), py::arg("rhs"), py::arg("b") = py::none(),
        "Solve -div((1/b) grad h) = rhs with h = 0 on the boundary.");

    m.def(
        "solve_neumann",
        [](const PyDomain& p, const Array& A, const Array& a) {
            const Domain& d = *p.d;
            return from_field(d, solve_neumann_weighted(p.d, Field(d.grid.size(), 1.0),
                                                        BoundaryField(d.num_nodes(), 1.0), to_field(d, A, "A"),
                                                        to_boundary(d, a, "a")));
        },
        py::arg("domain"), py::arg("A"), py::arg("a"),
        "Solve div(grad H) = A with dH/dn = a, mean zero (unit depth).");

    m.def(
        "weighted_lp_norm",
        [](const PyDomain& p, const Array& omega, const std::optional<Array>& b, double q) {
            const Domain& d = *p.d;
            return weighted_lp_norm(d, to_field(d, omega, "omega"), depth_or_one(d, b), q);
        },
        py::arg("domain"), py::arg("omega"), py::arg("b") = py::none(), py::arg("p") = 2.0);

    m.def("exponent_table", [](double p, double eps) {
        const ExponentTable t = exponent_table(p, eps);
        py::dict out;
        out["p"] = t.p;
        out["p_tilde"] = t.p_tilde;
        out["p1"] = t.p1;
        out["p2"] = t.p2;
        out["p3"] = t.p3;
        out["p_star"] = t.p_star;
        out["holder_sum"] = t.holder_sum;
        return out;
    }, py::arg("p"), py::arg("epsilon") = 0.5);

    m.def("discrete_gronwall_bound", &discrete_gronwall_bound, py::arg("y0"), py::arg("times"), py::arg("D"),
          py::arg("B"), py::arg("theta"), py::arg("check_theta0") = true);

    m.def("fnv1a_hex", &fnv1a_hex);
    m.def("run_config", &run_config, py::arg("text"),
          "Parse a config document, run it and return times, norms and vorticity snapshots.");
    m.def("verify", [] {
        py::list out;
        for (const VerifyCase& c : verify_suite(nullptr)) {
            py::dict d;
            d["name"] = c.name;
            d["pass"] = c.pass;
            d["value"] = c.value;
            d["limit"] = c.limit;
            d["seconds"] = c.seconds;
            out.append(d);
        }
        return out;
    });
}
