#pragma once

#include <string>
#include <vector>

#include "lakesim/elliptic.hpp"

namespace lakesim {

// Numbers are written with %.17g so every double reads back exactly.
std::string format_number(double x);

// A CSV table: header row, then one row of numbers per record.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_table(const std::string& path, const Table& table);
Table read_table(const std::string& path);

// Snapshot rows follow the active-cell order: x,y,omega,h,H,u,v.
void write_snapshot(const std::string& path, const Domain& domain, const StateFields& state);
// Fills t, omega, h, H and the cell velocity; face velocities are left empty.
StateFields read_snapshot(const std::string& path, const Domain& domain, double t);

struct ManifestEntry {
    std::string file;
    double t = 0.0;
};

struct MonitorEntry {
    std::string name;
    std::string file;
    bool pass = true;
    std::string note;
};

struct Manifest {
    std::string command;
    bool complete = false;
    std::string error;
    std::string config_file;
    std::string config_hash;
    std::string shape;
    int resolution = 0;
    Grid grid;
    int active_cells = 0;
    double R = 0.0;
    long long seed = -1;  // negative: data from the config
    std::string family;
    std::vector<ManifestEntry> snapshots;
    std::vector<MonitorEntry> monitors;
    std::vector<std::string> warnings;
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace lakesim
