#include "lakesim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lakesim/errors.hpp"
#include "lakesim/expression.hpp"

namespace lakesim {

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
    int key_column = 0;
    int value_column = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>> kKeys = {
    {"domain", {"shape", "resolution", "center", "radius", "lo", "hi", "semi_axes", "vertices", "corner_radius"}},
    {"data", {"b", "a", "alpha", "eta", "kappa", "A", "G_x", "G_y", "rotG_over_b", "omega0", "balance"}},
    {"solver", {"nu", "theta", "R", "p", "T", "dt", "dt_policy", "cfl_target", "cfl_max", "tol_fp", "max_picard",
                "relaxation", "tol_lin", "max_lin_iterations", "diffusion_tolerance", "tol_comp", "eps_a",
                "source_variant", "prehistory"}},
    {"output", {"directory", "cadence", "monitors", "q", "sigma"}},
};

const std::set<std::string> kMonitors = {"compatibility", "max_principle", "gronwall", "gronwall_literal",
                                         "weak",          "trace",         "norms"};

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    if (lead) *lead = a;
    return s.substr(a, b - a);
}

std::map<std::string, Section> split_document(const std::string& text) {
    std::map<std::string, Section> doc;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::size_t lead = 0;
        const std::string t = trim(body, &lead);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("unterminated section header", line, static_cast<int>(lead) + 1);
            current = trim(t.substr(1, t.size() - 2));
            if (!kKeys.count(current))
                throw ConfigError("unknown section '" + current + "'", line, static_cast<int>(lead) + 2);
            if (doc.count(current)) throw ConfigError("duplicate section '" + current + "'", line, static_cast<int>(lead) + 1);
            doc[current];
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line, static_cast<int>(lead) + 1);
        if (current.empty()) throw ConfigError("key outside of a section", line, static_cast<int>(lead) + 1);
        std::size_t klead = 0, vlead = 0;
        const std::string key = trim(body.substr(0, eq), &klead);
        const std::string value = trim(body.substr(eq + 1), &vlead);
        const int kcol = static_cast<int>(klead) + 1;
        if (key.empty()) throw ConfigError("missing key", line, kcol);
        if (!kKeys.at(current).count(key))
            throw ConfigError("unknown key '" + key + "' in [" + current + "]", line, kcol);
        if (doc[current].count(key)) throw ConfigError("duplicate key '" + key + "'", line, kcol);
        if (value.empty()) throw ConfigError("missing value for '" + key + "'", line, static_cast<int>(eq) + 2);
        doc[current][key] = {value, line, kcol, static_cast<int>(eq + 1 + vlead) + 1};
    }
    return doc;
}

class Reader {
public:
    explicit Reader(std::map<std::string, Section> doc) : doc_(std::move(doc)) {}

    const Entry* find(const std::string& sec, const std::string& key) const {
        auto s = doc_.find(sec);
        if (s == doc_.end()) return nullptr;
        auto e = s->second.find(key);
        return e == s->second.end() ? nullptr : &e->second;
    }

    double number(const Entry& e) const {
        return Expression::parse(e.value, {}, e.line, e.value_column).eval({});
    }
    double number(const std::string& sec, const std::string& key, double fallback) const {
        const Entry* e = find(sec, key);
        return e ? number(*e) : fallback;
    }
    int integer(const std::string& sec, const std::string& key, int fallback) const {
        const Entry* e = find(sec, key);
        if (!e) return fallback;
        const double v = number(*e);
        if (v != std::floor(v)) throw ConfigError("'" + key + "' must be an integer", e->line, e->value_column);
        return static_cast<int>(v);
    }
    std::string word(const std::string& sec, const std::string& key, const std::string& fallback,
                     const std::set<std::string>& allowed) const {
        const Entry* e = find(sec, key);
        if (!e) return fallback;
        if (!allowed.count(e->value)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ConfigError("'" + key + "' must be one of: " + list, e->line, e->value_column);
        }
        return e->value;
    }
    std::vector<double> numbers(const Entry& e, char sep = ',') const {
        std::vector<double> out;
        std::size_t start = 0;
        for (;;) {
            const std::size_t end = e.value.find(sep, start);
            const std::string part = e.value.substr(start, end == std::string::npos ? std::string::npos : end - start);
            if (trim(part).empty()) throw ConfigError("empty list entry", e.line, e.value_column + static_cast<int>(start));
            out.push_back(Expression::parse(part, {}, e.line, e.value_column + static_cast<int>(start)).eval({}));
            if (end == std::string::npos) break;
            start = end + 1;
        }
        return out;
    }
    Vec2 point(const std::string& sec, const std::string& key, Vec2 fallback) const {
        const Entry* e = find(sec, key);
        if (!e) return fallback;
        const std::vector<double> v = numbers(*e);
        if (v.size() != 2) throw ConfigError("'" + key + "' needs two components", e->line, e->value_column);
        return {v[0], v[1]};
    }

private:
    std::map<std::string, Section> doc_;
};

const std::vector<std::string> kInteriorVars{"x", "y", "d", "t"};
const std::vector<std::string> kBoundaryVars{"x", "y", "s", "t", "k", "nx", "ny"};

Expression field_expression(const Reader& r, const std::string& key, const std::vector<std::string>& vars,
                            bool allow_time = true) {
    const Entry* e = r.find("data", key);
    if (!e) return Expression::parse("0", vars);
    std::vector<std::string> v = vars;
    if (!allow_time) v.erase(std::remove(v.begin(), v.end(), std::string("t")), v.end());
    return Expression::parse(e->value, v, e->line, e->value_column);
}

Field eval_cells(const Domain& d, const Expression& ex, double t) {
    Field out(d.grid.size(), 0.0);
    std::vector<double> vals(4);
    for (int c = 0; c < d.grid.size(); ++c) {
        const Vec2 p = d.grid.center(c);
        vals = {p.x, p.y, d.distance[c], t};
        out[c] = ex.eval(vals);
    }
    return out;
}

BoundaryField eval_nodes(const Domain& d, const Expression& ex, double t) {
    BoundaryField out(d.num_nodes());
    std::vector<double> vals(7);
    for (int k = 0; k < d.num_nodes(); ++k) {
        const BoundaryNode& n = d.nodes[k];
        vals = {n.position.x, n.position.y, n.s, t, n.curvature, n.normal.x, n.normal.y};
        out[k] = ex.eval(vals);
    }
    return out;
}

TimeField<Field> cell_time_field(DomainPtr d, const Expression& ex) {
    if (!ex.uses("t")) return TimeField<Field>(eval_cells(*d, ex, 0.0));
    return TimeField<Field>(std::function<Field(double)>([d, ex](double t) { return eval_cells(*d, ex, t); }));
}

TimeField<BoundaryField> node_time_field(DomainPtr d, const Expression& ex) {
    if (!ex.uses("t")) return TimeField<BoundaryField>(eval_nodes(*d, ex, 0.0));
    return TimeField<BoundaryField>(
        std::function<BoundaryField(double)>([d, ex](double t) { return eval_nodes(*d, ex, t); }));
}

}  // namespace

ParsedConfig parse_config(const std::string& text) {
    ParsedConfig pc;
    pc.text = text;
    pc.hash = fnv1a_hex(text);
    const Reader r(split_document(text));

    // Domain.
    const std::string shape = r.word("domain", "shape", "disk", {"disk", "rectangle", "ellipse", "rounded_polygon"});
    pc.resolution = r.integer("domain", "resolution", 64);
    if (shape == "disk") {
        pc.shape = ShapeDescriptor::disk(r.point("domain", "center", {0.0, 0.0}), r.number("domain", "radius", 1.0));
    } else if (shape == "rectangle") {
        pc.shape = ShapeDescriptor::rectangle(r.point("domain", "lo", {0.0, 0.0}), r.point("domain", "hi", {1.0, 1.0}));
    } else if (shape == "ellipse") {
        const Vec2 ax = r.point("domain", "semi_axes", {2.0, 1.0});
        pc.shape = ShapeDescriptor::ellipse(r.point("domain", "center", {0.0, 0.0}), ax.x, ax.y);
    } else {
        const Entry* e = r.find("domain", "vertices");
        if (!e) throw ConfigError("rounded_polygon needs 'vertices'");
        std::vector<Vec2> verts;
        std::size_t start = 0;
        for (;;) {
            const std::size_t end = e->value.find(';', start);
            Entry part = *e;
            part.value = e->value.substr(start, end == std::string::npos ? std::string::npos : end - start);
            part.value_column = e->value_column + static_cast<int>(start);
            const std::vector<double> v = r.numbers(part);
            if (v.size() != 2) throw ConfigError("vertex needs two components", e->line, part.value_column);
            verts.push_back({v[0], v[1]});
            if (end == std::string::npos) break;
            start = end + 1;
        }
        pc.shape = ShapeDescriptor::rounded_polygon(verts, r.number("domain", "corner_radius", 0.1));
    }
    DomainPtr dom;
    try {
        dom = build_domain(pc.shape, pc.resolution);
    } catch (const GeometryError& g) {
        const Entry* e = r.find("domain", "resolution");
        if (!e) e = r.find("domain", "shape");
        throw ConfigError(g.what(), e ? e->line : 0, e ? e->value_column : 0);
    }
    const Domain& d = *dom;

    // Solver.
    SolverConfig& s = pc.solver;
    s.nu = r.number("solver", "nu", s.nu);
    s.theta = r.number("solver", "theta", s.theta);
    if (const Entry* e = r.find("solver", "R")) {
        if (e->value == "auto") s.R_auto = true;
        else s.R = r.number(*e);
    }
    if (const Entry* e = r.find("solver", "p")) s.p = e->value == "inf" ? std::numeric_limits<double>::infinity() : r.number(*e);
    s.T = r.number("solver", "T", s.T);
    s.dt = r.number("solver", "dt", s.dt);
    s.policy = r.word("solver", "dt_policy", "fixed", {"fixed", "adaptive"}) == "fixed" ? TimeStepPolicy::fixed
                                                                                       : TimeStepPolicy::adaptive;
    s.cfl_target = r.number("solver", "cfl_target", s.cfl_target);
    s.cfl_max = r.number("solver", "cfl_max", s.cfl_max);
    s.tol_fp = r.number("solver", "tol_fp", s.tol_fp);
    s.max_picard = r.integer("solver", "max_picard", s.max_picard);
    s.relaxation = r.number("solver", "relaxation", s.relaxation);
    s.linear.tolerance = r.number("solver", "tol_lin", s.linear.tolerance);
    s.linear.max_iterations = r.integer("solver", "max_lin_iterations", s.linear.max_iterations);
    s.diffusion_tolerance = r.number("solver", "diffusion_tolerance", s.diffusion_tolerance);
    if (const Entry* e = r.find("solver", "tol_comp")) s.tol_comp = e->value == "auto" ? -1.0 : r.number(*e);
    if (const Entry* e = r.find("solver", "eps_a")) s.eps_a = e->value == "auto" ? -1.0 : r.number(*e);
    s.source_variant = r.word("solver", "source_variant", "kappa", {"kappa", "A"}) == "kappa" ? SourceVariant::friction
                                                                                            : SourceVariant::source;
    s.prehistory = r.word("solver", "prehistory", "zero", {"zero", "initial"}) == "zero" ? Prehistory::zero
                                                                                        : Prehistory::initial;
    s.cadence = r.integer("output", "cadence", s.cadence);
    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(e.what());
    }

    // Output.
    if (const Entry* e = r.find("output", "directory")) pc.output.directory = e->value;
    if (const Entry* e = r.find("output", "monitors")) {
        pc.output.monitors.clear();
        std::stringstream ss(e->value);
        std::string m;
        while (std::getline(ss, m, ',')) {
            m = trim(m);
            if (!kMonitors.count(m)) throw ConfigError("unknown monitor '" + m + "'", e->line, e->value_column);
            pc.output.monitors.push_back(m);
        }
    }
    if (const Entry* e = r.find("output", "q")) pc.output.q = r.numbers(*e);
    if (const Entry* e = r.find("output", "sigma")) pc.output.sigmas = r.numbers(*e);

    // Data.
    ScenarioData sc = zero_scenario(dom);
    sc.p = s.p;
    const Expression b_expr = field_expression(r, "b", kInteriorVars, false);
    {
        const Entry* e = r.find("data", "b");
        const std::vector<double> no_t{0.0};
        sc.depth = eval_cells(d, b_expr, 0.0);
        bool bad = false;
        for (int c : d.active_cells) bad = bad || !(sc.depth[c] > 0.0);
        for (int c = 0; c < d.grid.size(); ++c)
            if (!d.active[c] && !(sc.depth[c] > 0.0)) sc.depth[c] = 1.0;
        for (int k = 0; k < d.num_nodes(); ++k) {
            const Vec2 p = d.nodes[k].position;
            sc.depth_nodes[k] = b_expr.eval({p.x, p.y, 0.0});
            bad = bad || !(sc.depth_nodes[k] > 0.0);
        }
        if (!e) {
            sc.depth.assign(d.grid.size(), 1.0);
            sc.depth_nodes.assign(d.num_nodes(), 1.0);
        } else if (bad) {
            throw ConfigError("b must be positive on the domain", e->line, e->value_column);
        }
    }
    sc.through_flow = node_time_field(dom, field_expression(r, "a", kBoundaryVars));
    sc.slip_alpha = node_time_field(dom, field_expression(r, "alpha", kBoundaryVars));
    sc.slip_eta = node_time_field(dom, field_expression(r, "eta", kBoundaryVars));
    sc.friction = cell_time_field(dom, field_expression(r, "kappa", kInteriorVars));
    sc.source = cell_time_field(dom, field_expression(r, "A", kInteriorVars));
    {
        const Entry* e = r.find("data", "omega0");
        const Expression w = field_expression(r, "omega0", kInteriorVars, false);
        Field w0 = eval_cells(d, w, 0.0);
        for (int c = 0; c < d.grid.size(); ++c) {
            if (!d.active[c]) w0[c] = 0.0;
            else if (!std::isfinite(w0[c])) throw ConfigError("omega0 is not finite", e->line, e->value_column);
        }
        sc.initial_vorticity = w0;
    }
    const bool has_g = r.find("data", "G_x") || r.find("data", "G_y");
    if (has_g && r.find("data", "rotG_over_b")) {
        const Entry* e = r.find("data", "rotG_over_b");
        throw ConfigError("give either G_x/G_y or rotG_over_b", e->line, e->key_column);
    }
    if (has_g) {
        const Expression gx = field_expression(r, "G_x", kInteriorVars), gy = field_expression(r, "G_y", kInteriorVars);
        const bool depth_given = r.find("data", "b") != nullptr;
        auto rot = [dom, gx, gy, b_expr, depth_given](double t) {
            const Domain& dd = *dom;
            const double h = 0.5 * std::min(dd.grid.dx, dd.grid.dy);
            auto ratio = [&](const Expression& g, Vec2 p) {
                const double dist = dd.signed_distance(p);
                const double bv = depth_given ? b_expr.eval({p.x, p.y, dist}) : 1.0;
                return g.eval({p.x, p.y, dist, t}) / bv;
            };
            Field out(dd.grid.size(), 0.0);
            for (int c : dd.active_cells) {
                const Vec2 p = dd.grid.center(c);
                out[c] = (ratio(gy, {p.x + h, p.y}) - ratio(gy, {p.x - h, p.y})) / (2 * h) -
                         (ratio(gx, {p.x, p.y + h}) - ratio(gx, {p.x, p.y - h})) / (2 * h);
            }
            return out;
        };
        if (gx.uses("t") || gy.uses("t")) sc.forcing_curl = TimeField<Field>(std::function<Field(double)>(rot));
        else sc.forcing_curl = TimeField<Field>(rot(0.0));
    } else {
        sc.forcing_curl = cell_time_field(dom, field_expression(r, "rotG_over_b", kInteriorVars));
    }
    const std::string bal = r.word("data", "balance", "none", {"none", "source", "flux"});
    pc.balance = bal == "none" ? BalanceMode::none : bal == "source" ? BalanceMode::source : BalanceMode::flux;
    pc.scenario = balance_compatibility(sc, pc.balance);

    // Compatibility pre-check (hard error only at solve time).
    EllipticSystem sys(dom, pc.scenario.depth, pc.scenario.depth_nodes, s.linear);
    for (double t : {0.0, s.T}) {
        const Field A = pc.scenario.source(t);
        const BoundaryField a = pc.scenario.through_flow(t);
        const double res = std::abs(sys.compatibility_residual(A, a));
        const double tol = s.tol_comp < 0.0 ? sys.compatibility_tolerance(A, a) : s.tol_comp;
        if (res > tol) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "compatibility residual %.6g exceeds %.3g at t = %g", res, tol, t);
            pc.warnings.push_back(buf);
        }
    }

    // Raw values for the manifest.
    std::istringstream in(text);
    for (const auto& [sec, keys] : kKeys)
        for (const auto& k : keys)
            if (const Entry* e = r.find(sec, k)) pc.values[sec + "." + k] = e->value;
    return pc;
}

ParsedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace lakesim
