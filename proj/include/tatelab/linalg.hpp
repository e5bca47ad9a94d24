#pragma once

// Dense symmetric kernels: cyclic Jacobi eigensolver and a diagonally pivoted
// LDL^T solve. Eigen supplies storage only.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tatelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a symmetric factorization meets a pivot below the relative floor.
class DegenerateLinearization : public std::runtime_error {
public:
    explicit DegenerateLinearization(const std::string& what) : std::runtime_error(what) {}
};

struct SymmetricEigen {
    Vector values;   // sorted descending
    Matrix vectors;  // column j pairs with values(j), orthonormal
    int sweeps = 0;
    double off_norm = 0.0;
};

inline double symmetry_defect(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("matrix is not square");
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

inline double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

/// Cyclic Jacobi. Stops once the off-diagonal Frobenius norm is <= rel_tol * ||A||_F
/// (absolute floor for the zero matrix).
inline SymmetricEigen jacobi_eigen(const Matrix& input, double rel_tol = 1e-14, int max_sweeps = 100) {
    const Eigen::Index n = input.rows();
    if (input.cols() != n) throw std::invalid_argument("jacobi_eigen: matrix is not square");
    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);
    const double fro = a.norm();
    const double target = std::max(rel_tol * fro, 1e-300);

    SymmetricEigen out;
    double off = off_diagonal_norm(a);
    while (off > target && out.sweeps < max_sweeps) {
        ++out.sweeps;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(a);
    }
    if (off > target) throw std::runtime_error("jacobi_eigen: no convergence");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    out.off_norm = off;
    return out;
}

/// P A P^T = L D L^T with symmetric diagonal pivoting (largest |d| first).
class SymmetricLDLT {
public:
    explicit SymmetricLDLT(const Matrix& a, double pivot_floor = 1e-14) {
        const Eigen::Index n = a.rows();
        if (a.cols() != n) throw std::invalid_argument("SymmetricLDLT: matrix is not square");
        lu_ = a;
        perm_.resize(static_cast<std::size_t>(n));
        std::iota(perm_.begin(), perm_.end(), Eigen::Index{0});
        const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::Index piv = k;
            for (Eigen::Index i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, i)) > std::abs(lu_(piv, piv))) piv = i;
            if (piv != k) {
                lu_.row(k).swap(lu_.row(piv));
                lu_.col(k).swap(lu_.col(piv));
                std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(piv)]);
            }
            const double dk = lu_(k, k);
            if (std::abs(dk) < pivot_floor * scale)
                throw DegenerateLinearization("near-degenerate linearization (pivot " + std::to_string(dk) + ")");
            // Schur update on the trailing lower triangle, then mirror.
            for (Eigen::Index j = k + 1; j < n; ++j) {
                const double ljk = lu_(j, k) / dk;
                for (Eigen::Index i = j; i < n; ++i) lu_(i, j) -= lu_(i, k) * ljk;
            }
            for (Eigen::Index i = k + 1; i < n; ++i) lu_(i, k) /= dk;
            for (Eigen::Index j = k + 1; j < n; ++j)
                for (Eigen::Index i = j + 1; i < n; ++i) lu_(j, i) = lu_(i, j);
        }
    }

    Vector solve(const Vector& b) const {
        const Eigen::Index n = lu_.rows();
        if (b.size() != n) throw std::invalid_argument("SymmetricLDLT::solve: size mismatch");
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = b(perm_[static_cast<std::size_t>(i)]);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index k = 0; k < i; ++k) z(i) -= lu_(i, k) * z(k);
        for (Eigen::Index i = 0; i < n; ++i) z(i) /= lu_(i, i);
        for (Eigen::Index i = n; i-- > 0;)
            for (Eigen::Index k = i + 1; k < n; ++k) z(i) -= lu_(k, i) * z(k);
        Vector x(n);
        for (Eigen::Index i = 0; i < n; ++i) x(perm_[static_cast<std::size_t>(i)]) = z(i);
        return x;
    }

    /// D entries in pivot order.
    Vector pivots() const { return lu_.diagonal(); }

private:
    Matrix lu_;
    std::vector<Eigen::Index> perm_;
};

}  // namespace tatelab
