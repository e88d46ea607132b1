#include "lakesim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lakesim {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

double parse_number(const std::string& s, const std::string& path, int line) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0')
        throw std::runtime_error(path + ":" + std::to_string(line) + ": malformed number '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

}  // namespace

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out = open_out(path);
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_table(const std::string& path, const Table& table) {
    std::ofstream out = open_out(path);
    for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << table.columns[k];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_number(row[k]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
    t.columns = split(line);
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line);
        if (cells.size() != t.columns.size())
            throw std::runtime_error(path + ":" + std::to_string(n) + ": expected " +
                                     std::to_string(t.columns.size()) + " columns");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_number(c, path, n));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_snapshot(const std::string& path, const Domain& d, const StateFields& s) {
    Table t;
    t.columns = {"x", "y", "omega", "h", "H", "u", "v"};
    t.rows.reserve(d.active_cells.size());
    for (int c : d.active_cells) {
        const Vec2 p = d.grid.center(c);
        t.rows.push_back({p.x, p.y, s.omega[c], s.h[c], s.H[c], s.v.u[c], s.v.v[c]});
    }
    write_table(path, t);
}

StateFields read_snapshot(const std::string& path, const Domain& d, double time) {
    const Table t = read_table(path);
    if (t.columns != std::vector<std::string>{"x", "y", "omega", "h", "H", "u", "v"})
        throw std::runtime_error(path + ": unexpected snapshot header");
    if (static_cast<int>(t.rows.size()) != d.num_active())
        throw std::runtime_error(path + ": row count does not match the active cells");
    StateFields s;
    s.t = time;
    const int n = d.grid.size();
    s.omega.assign(n, 0.0);
    s.h.assign(n, 0.0);
    s.H.assign(n, 0.0);
    s.v.u.assign(n, 0.0);
    s.v.v.assign(n, 0.0);
    const double tol = 1e-9 * std::max(d.grid.dx, d.grid.dy);
    for (int k = 0; k < d.num_active(); ++k) {
        const int c = d.active_cells[k];
        const auto& r = t.rows[k];
        const Vec2 p = d.grid.center(c);
        if (std::abs(r[0] - p.x) > tol || std::abs(r[1] - p.y) > tol)
            throw std::runtime_error(path + ": row " + std::to_string(k + 2) + " does not match the grid");
        s.omega[c] = r[2];
        s.h[c] = r[3];
        s.H[c] = r[4];
        s.v.u[c] = r[5];
        s.v.v[c] = r[6];
    }
    return s;
}

void write_manifest(const std::string& path, const Manifest& m) {
    nlohmann::ordered_json j;
    j["format"] = "lakesim-manifest-1";
    j["command"] = m.command;
    j["complete"] = m.complete;
    j["error"] = m.error;
    j["config_file"] = m.config_file;
    j["config_hash"] = m.config_hash;
    j["shape"] = m.shape;
    j["resolution"] = m.resolution;
    j["grid"] = {{"nx", m.grid.nx}, {"ny", m.grid.ny}, {"x0", m.grid.x0},
                 {"y0", m.grid.y0}, {"dx", m.grid.dx}, {"dy", m.grid.dy}};
    j["active_cells"] = m.active_cells;
    j["R"] = std::isfinite(m.R) ? nlohmann::ordered_json(m.R) : nlohmann::ordered_json("inf");
    j["seed"] = m.seed;
    j["family"] = m.family;
    j["snapshots"] = nlohmann::ordered_json::array();
    for (const auto& s : m.snapshots) j["snapshots"].push_back({{"file", s.file}, {"t", s.t}});
    j["monitors"] = nlohmann::ordered_json::array();
    for (const auto& e : m.monitors)
        j["monitors"].push_back({{"name", e.name}, {"file", e.file}, {"pass", e.pass}, {"note", e.note}});
    j["warnings"] = m.warnings;
    write_text(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
    const auto j = nlohmann::json::parse(read_text(path));
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.error = j.at("error").get<std::string>();
    m.config_file = j.at("config_file").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.shape = j.at("shape").get<std::string>();
    m.resolution = j.at("resolution").get<int>();
    const auto& g = j.at("grid");
    m.grid.nx = g.at("nx").get<int>();
    m.grid.ny = g.at("ny").get<int>();
    m.grid.x0 = g.at("x0").get<double>();
    m.grid.y0 = g.at("y0").get<double>();
    m.grid.dx = g.at("dx").get<double>();
    m.grid.dy = g.at("dy").get<double>();
    m.active_cells = j.at("active_cells").get<int>();
    m.R = j.at("R").is_string() ? std::numeric_limits<double>::infinity() : j.at("R").get<double>();
    m.seed = j.at("seed").get<long long>();
    m.family = j.at("family").get<std::string>();
    for (const auto& s : j.at("snapshots")) m.snapshots.push_back({s.at("file"), s.at("t").get<double>()});
    for (const auto& e : j.at("monitors"))
        m.monitors.push_back({e.at("name"), e.at("file"), e.at("pass").get<bool>(), e.at("note")});
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
}

}  // namespace lakesim
