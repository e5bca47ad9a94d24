#pragma once

// Finite-sum Green's function and heat kernel on X_{m,d}, with numeric
// counterparts from the assembled Laplacian.
//
// Both kernels are written as character sums grouped by conductor. Over the
// characters of exact conductor n, sum chi(x/y) equals
// phi(p^n)[M >= n] - phi(p^{n-1})[M >= n-1] where M = v_p(x/y - 1) and
// phi(p^n) = (p-1)p^{n-1}, phi(1) = 1, so only n <= M + 1 contribute.
//
// The compact displays (green_closed_form, heat_closed_form) fold the n = 1
// group in as if it had (p-1) members instead of p-2; they are kept verbatim
// and differ from the kernels by 1/((p-1) lambda_{1,l}) (Green) and
// -e^{lambda_{1,l} t}/(p-1) (heat) on the source level.

#include "tatelab/exact.hpp"
#include "tatelab/linalg.hpp"
#include "tatelab/padic.hpp"
#include "tatelab/spectral.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tatelab {

namespace detail {

inline Rational totient_pn(int p, int n) {
    if (n == 0) return 1;
    return Rational(ipow(p, n - 1) * (p - 1));
}

/// Sum_k q_{lx,k} q_{ly,k} w_k over nonconstant R modes.
template <class Weight>
double level_mode_sum(int lx, int ly, const LevelMatrices& lm, Weight weight) {
    double acc = 0.0;
    for (int k = 1; k < lm.m; ++k) acc += lm.Q(lx, k) * lm.Q(ly, k) * weight(lm.lambda0(k));
    return acc;
}

inline void check_space(const QuotientSpace& space, const LevelMatrices& lm) {
    if (lm.p != space.p() || lm.m != space.m()) throw std::invalid_argument("level matrices belong to another space");
}

}  // namespace detail

/// Conductor part of G for same-level points at distance p^{-M}, exact.
inline Rational green_conductor_part(int M, int level, const QuotientSpace& space) {
    const int p = space.p(), m = space.m();
    Rational acc = 0;
    for (int n = 1; n <= M; ++n)
        acc += (detail::totient_pn(p, n) - detail::totient_pn(p, n - 1)) / conductor_eigenvalue(p, m, n, level);
    acc -= detail::totient_pn(p, M) / conductor_eigenvalue(p, m, M + 1, level);
    return acc / (Rational(1) - rpow(p, -1));
}

/// The compact display: p^{M+1}/(p^{M+1}+p^M-S) - sum_{n<=M} (p-1)p^n/(p^n+p^{n-1}-S), S = p^{-l}+p^{l+1-m}.
inline Rational green_closed_form_conductor_part(int M, int level, const QuotientSpace& space) {
    const int p = space.p(), m = space.m();
    const Rational S = rpow(p, -level) + rpow(p, level + 1 - m);
    Rational acc = rpow(p, M + 1) / (rpow(p, M + 1) + rpow(p, M) - S);
    for (int n = 1; n <= M; ++n) acc -= Rational(p - 1) * rpow(p, n) / (rpow(p, n) + rpow(p, n - 1) - S);
    return acc;
}

/// Offset green_closed_form - green_formula on the source level: 1/((p-1) lambda_{1,l}).
inline Rational green_closed_form_offset(int level, const QuotientSpace& space) {
    return Rational(1) / (Rational(space.p() - 1) * conductor_eigenvalue(space.p(), space.m(), 1, level));
}

inline double green_level_part(int lx, int ly, const QuotientSpace& space, const LevelMatrices& lm) {
    const double unit_mass = 1.0 - 1.0 / space.p();
    return detail::level_mode_sum(lx, ly, lm, [&](double lam) { return 1.0 / (unit_mass * lam); });
}

/// G(x, y) with zero Haar mean, for x != y.
inline double green_formula(const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space,
                            const LevelMatrices& lm) {
    detail::check_space(space, lm);
    if (x == y) throw std::invalid_argument("green_formula: on-diagonal");
    double value = green_level_part(x.level, y.level, space, lm);
    if (x.level == y.level) value += to_double(green_conductor_part(distance_valuation(x, y, space), x.level, space));
    return value;
}

inline double green_closed_form(const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space,
                                const LevelMatrices& lm) {
    detail::check_space(space, lm);
    if (x == y) throw std::invalid_argument("green_closed_form: on-diagonal");
    double value = green_level_part(x.level, y.level, space, lm);
    if (x.level == y.level)
        value += to_double(green_closed_form_conductor_part(distance_valuation(x, y, space), x.level, space));
    return value;
}

inline Vector green_rhs(const QuotientSpace& space, const QuotientPoint& y) {
    Vector rhs = Vector::Constant(static_cast<Eigen::Index>(space.n_points()), -1.0 / space.volume_d());
    rhs(static_cast<Eigen::Index>(point_index(y, space))) += std::pow(static_cast<double>(space.p()), space.d());
    return rhs;
}

/// Factorization of A - alpha 1 1^T (negative definite), whose solutions of
/// mean-free right-hand sides are the zero-mean solutions of A G = rhs.
class GreenSolver {
public:
    explicit GreenSolver(const LaplacianMatrix& lap)
        : space_(lap.space), a_(lap.A), ldlt_(augmented(lap)) {}

    Vector solve(const Vector& rhs, double residual_tol = 1e-9) const {
        const double mean = rhs.sum() * space_.atom_measure_d();
        if (std::abs(mean) > 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("right-hand side has nonzero Haar mean");
        Vector g = ldlt_.solve(rhs);
        const double residual = (a_ * g - rhs).cwiseAbs().maxCoeff();
        if (!(residual <= residual_tol))
            throw std::runtime_error("Green solve residual " + std::to_string(residual) + " exceeds tolerance");
        return g;
    }

    const QuotientSpace& space() const { return space_; }

private:
    static Matrix augmented(const LaplacianMatrix& lap) {
        const double alpha = lap.A.diagonal().cwiseAbs().maxCoeff() / static_cast<double>(lap.A.rows());
        return lap.A - Matrix::Constant(lap.A.rows(), lap.A.cols(), std::max(alpha, 1e-3));
    }

    QuotientSpace space_;
    Matrix a_;
    SymmetricLDLT ldlt_;
};

/// Solves A G = p^d e_y - 1/V with sum_x G(x) p^{-d} = 0.
inline Vector green_numeric(const LaplacianMatrix& lap, const QuotientPoint& y) {
    validate_point(y, lap.space);
    return GreenSolver(lap).solve(green_rhs(lap.space, y));
}

inline Vector green_numeric(const QuotientSpace& space, const QuotientPoint& y) {
    return green_numeric(build_laplacian(space), y);
}

/// Columns G(., y) for every y.
inline Matrix green_matrix(const LaplacianMatrix& lap) {
    GreenSolver solver(lap);
    const auto n = lap.A.rows();
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) out.col(j) = solver.solve(green_rhs(lap.space, point_at(static_cast<std::size_t>(j), lap.space)));
    return out;
}

/// x -> kernel(x, y) off the diagonal; diagonal left NaN.
template <class Kernel>
Vector kernel_vector(const QuotientSpace& space, const QuotientPoint& y, Kernel kernel) {
    const auto points = enumerate_points(space);
    Vector v(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
        v(static_cast<Eigen::Index>(i)) =
            points[i] == y ? std::numeric_limits<double>::quiet_NaN() : kernel(points[i], y);
    return v;
}

struct GreenReport {
    std::vector<double> level_constants;  // mean of formula - numeric on each level (off-diagonal)
    double constant_spread = 0.0;         // max deviation from the per-level constant
    double apply_residual = 0.0;          // ||A F - rhs||_inf, diagonal filled from numeric
    double tol = 1e-9;
    bool pass = false;
};

/// Compares a kernel vector against the numeric Green column.
inline GreenReport compare_green(const Vector& formula, const Vector& numeric, const LaplacianMatrix& lap,
                                 const QuotientPoint& y, double tol) {
    const auto& space = lap.space;
    const auto yi = static_cast<Eigen::Index>(point_index(y, space));
    GreenReport rep;
    rep.tol = tol;
    rep.level_constants.assign(static_cast<std::size_t>(space.m()), 0.0);
    std::vector<double> count(static_cast<std::size_t>(space.m()), 0.0);
    const auto block = static_cast<Eigen::Index>(space.block_size());
    for (Eigen::Index i = 0; i < formula.size(); ++i) {
        if (i == yi) continue;
        rep.level_constants[static_cast<std::size_t>(i / block)] += formula(i) - numeric(i);
        count[static_cast<std::size_t>(i / block)] += 1.0;
    }
    for (std::size_t l = 0; l < count.size(); ++l)
        if (count[l] > 0) rep.level_constants[l] /= count[l];
    for (Eigen::Index i = 0; i < formula.size(); ++i) {
        if (i == yi) continue;
        rep.constant_spread = std::max(
            rep.constant_spread,
            std::abs(formula(i) - numeric(i) - rep.level_constants[static_cast<std::size_t>(i / block)]));
    }
    Vector filled = formula;
    filled(yi) = numeric(yi) + rep.level_constants[static_cast<std::size_t>(y.level)];
    rep.apply_residual = (lap.A * filled - green_rhs(space, y)).cwiseAbs().maxCoeff();
    rep.pass = rep.constant_spread <= tol && rep.apply_residual <= tol;
    return rep;
}

inline GreenReport verify_green(const QuotientSpace& space, const QuotientPoint& y, const LevelMatrices& lm,
                                double tol = 1e-9) {
    const auto lap = build_laplacian(space);
    const Vector numeric = green_numeric(lap, y);
    const Vector formula = kernel_vector(space, y, [&](const QuotientPoint& x, const QuotientPoint& yy) {
        return green_formula(x, yy, space, lm);
    });
    return compare_green(formula, numeric, lap, y, tol);
}

/// A point at level y.level whose unit digits first differ from y's at index M.
inline QuotientPoint shell_representative(const QuotientPoint& y, int M, const QuotientSpace& space) {
    if (M < 0 || M >= space.d()) throw std::invalid_argument("shell index outside [0, d-1]");
    QuotientPoint x = y;
    auto& digit = x.digits[static_cast<std::size_t>(M)];
    if (M == 0) {
        if (space.p() == 2) throw std::invalid_argument("no M = 0 shell for p = 2");
        digit = digit % (space.p() - 1) + 1;
    } else {
        digit = (digit + 1) % space.p();
    }
    return x;
}

struct ShellRow {
    int level = 0;
    std::optional<int> M;  // empty for off-level rows
    double formula = 0.0;
    double numeric = 0.0;
};

/// One row per same-level shell and per other level.
inline std::vector<ShellRow> green_shell_table(const QuotientSpace& space, const QuotientPoint& y,
                                               const LevelMatrices& lm) {
    const auto lap = build_laplacian(space);
    const Vector numeric = green_numeric(lap, y);
    std::vector<ShellRow> rows;
    for (int M = (space.p() == 2 ? 1 : 0); M < space.d(); ++M) {
        const auto x = shell_representative(y, M, space);
        rows.push_back({y.level, M, green_formula(x, y, space, lm),
                        numeric(static_cast<Eigen::Index>(point_index(x, space)))});
    }
    for (int l = 0; l < space.m(); ++l) {
        if (l == y.level) continue;
        QuotientPoint x = y;
        x.level = l;
        rows.push_back({l, std::nullopt, green_formula(x, y, space, lm),
                        numeric(static_cast<Eigen::Index>(point_index(x, space)))});
    }
    return rows;
}

// Heat kernel.

inline constexpr double kHeatScale = 1.0;  // fitted once on (3,1,2), t = 1, and frozen

inline double heat_level_part(double t, int lx, int ly, const QuotientSpace& space, const LevelMatrices& lm) {
    const double unit_mass = 1.0 - 1.0 / space.p();
    return detail::level_mode_sum(lx, ly, lm, [&](double lam) { return std::exp(lam * t) / unit_mass; });
}

/// H(t, x, y) = sum over non-constant eigenfunctions e^{lambda t} phi(x) conj(phi(y)) / ||phi||^2.
inline double heat_formula(double t, const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space,
                           const LevelMatrices& lm) {
    detail::check_space(space, lm);
    if (!(t >= 0.0)) throw std::invalid_argument("heat kernel needs t >= 0");
    const int p = space.p(), m = space.m();
    double value = heat_level_part(t, x.level, y.level, space, lm);
    if (x.level == y.level) {
        const int l = x.level;
        const int M = x == y ? space.d() : distance_valuation(x, y, space);
        double acc = 0.0;
        for (int n = 1; n <= M; ++n)
            acc += std::exp(to_double(conductor_eigenvalue(p, m, n, l)) * t) *
                   to_double(detail::totient_pn(p, n) - detail::totient_pn(p, n - 1));
        if (M < space.d())
            acc -= std::exp(to_double(conductor_eigenvalue(p, m, M + 1, l)) * t) * to_double(detail::totient_pn(p, M));
        value += acc / (1.0 - 1.0 / p);
    }
    return kHeatScale * value;
}

/// The compact display: (p-1) sum_{n<=M} e^{lambda_n t} p^{n-1} - e^{lambda_{M+1} t} p^M + p/(p-1) R-part.
inline double heat_closed_form(double t, const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space,
                               const LevelMatrices& lm) {
    detail::check_space(space, lm);
    if (!(t >= 0.0)) throw std::invalid_argument("heat kernel needs t >= 0");
    if (x == y) throw std::invalid_argument("heat_closed_form: on-diagonal");
    const int p = space.p(), m = space.m();
    double value = heat_level_part(t, x.level, y.level, space, lm);
    if (x.level == y.level) {
        const int l = x.level;
        const int M = distance_valuation(x, y, space);
        for (int n = 1; n <= M; ++n)
            value += (p - 1) * std::exp(to_double(conductor_eigenvalue(p, m, n, l)) * t) * std::pow(p, n - 1);
        value -= std::exp(to_double(conductor_eigenvalue(p, m, M + 1, l)) * t) * std::pow(p, M);
    }
    return value;
}

/// e^{tA}(p^d e_y) - 1/V through the eigendecomposition of A.
inline Vector heat_numeric(double t, const SymmetricEigen& eig, const QuotientSpace& space, const QuotientPoint& y) {
    if (!(t >= 0.0)) throw std::invalid_argument("heat kernel needs t >= 0");
    const auto yi = static_cast<Eigen::Index>(point_index(y, space));
    Vector coeff(eig.values.size());
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) = std::exp(eig.values(k) * t) * eig.vectors(yi, k);
    Vector h = eig.vectors * coeff * std::pow(static_cast<double>(space.p()), space.d());
    h.array() -= 1.0 / space.volume_d();
    return h;
}

inline Vector heat_numeric(double t, const QuotientSpace& space, const QuotientPoint& y) {
    validate_point(y, space);
    const auto lap = build_laplacian(space);
    return heat_numeric(t, jacobi_eigen(lap.A, 1e-14), space, y);
}

}  // namespace tatelab
