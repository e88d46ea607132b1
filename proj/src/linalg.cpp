#include "lakesim/linalg.hpp"

#include <cmath>

#include "lakesim/errors.hpp"

namespace lakesim {

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
        y[r] = acc;
    }
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (col[k] == r) d[r] += val[k];
    return d;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

namespace {

void remove_mean(std::vector<double>& v) {
    if (v.empty()) return;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

}  // namespace

SolveStats pcg(const SparseMatrix& a, const std::vector<double>& rhs_in, std::vector<double>& x,
               const LinearSolverOptions& opt, bool project_mean) {
    const int n = a.n;
    SolveStats st;
    std::vector<double> rhs = rhs_in;
    if (project_mean) remove_mean(rhs);
    if (static_cast<int>(x.size()) != n) x.assign(n, 0.0);
    if (project_mean) remove_mean(x);

    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        st.converged = true;
        return st;
    }
    const std::vector<double> diag = a.diagonal();
    std::vector<double> inv(n);
    for (int i = 0; i < n; ++i) inv[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;

    std::vector<double> r(n), z(n), p(n), q(n);
    a.multiply(x, q);
    for (int i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    if (project_mean) remove_mean(r);
    double rel = norm2(r) / bnorm;
    st.history.push_back(rel);
    if (rel <= opt.tolerance) {
        st.converged = true;
        st.relative_residual = rel;
        return st;
    }
    for (int i = 0; i < n; ++i) z[i] = inv[i] * r[i];
    if (project_mean) remove_mean(z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        a.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if (project_mean) remove_mean(r);
        rel = norm2(r) / bnorm;
        st.iterations = it;
        st.history.push_back(rel);
        if (rel <= opt.tolerance) {
            st.converged = true;
            break;
        }
        for (int i = 0; i < n; ++i) z[i] = inv[i] * r[i];
        if (project_mean) remove_mean(z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (project_mean) remove_mean(x);
    st.relative_residual = rel;
    if (!st.converged) {
        throw SolverError("conjugate gradients did not converge (relative residual " + std::to_string(rel) + ")",
                          st.history);
    }
    return st;
}

}  // namespace lakesim
