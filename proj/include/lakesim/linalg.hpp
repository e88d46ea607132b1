#pragma once

#include <vector>

namespace lakesim {

struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    void push(int c, double v) {
        col.push_back(c);
        val.push_back(v);
    }
    void end_row() {
        row_ptr.push_back(static_cast<int>(col.size()));
        ++n;
    }
    void multiply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> diagonal() const;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    std::vector<double> history;
};

struct LinearSolverOptions {
    double tolerance = 1e-9;
    int max_iterations = 20000;
};

// Jacobi-preconditioned conjugate gradients with sequential reductions.
// With project_mean the iterates stay in the mean-zero complement of the
// constant nullspace.
SolveStats pcg(const SparseMatrix& a, const std::vector<double>& rhs, std::vector<double>& x,
               const LinearSolverOptions& opt, bool project_mean = false);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

}  // namespace lakesim
