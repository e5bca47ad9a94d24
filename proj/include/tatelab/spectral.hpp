#pragma once

// Level matrices P, L, R; the discrete Laplacian A on X_{m,d}; its analytic
// spectrum and the numeric oracle.

#include "tatelab/exact.hpp"
#include "tatelab/linalg.hpp"
#include "tatelab/padic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tatelab {

struct LevelMatrices {
    int p = 0;
    int m = 0;
    std::vector<Rational> P_exact;  // row-major m x m, P_ij = p^{-|i-j|}
    std::vector<Rational> R_exact;  // (1 - 1/p)(P - diag(P 1))
    std::vector<Rational> s_exact;  // row sums of P
    Matrix P;
    Matrix L;  // -L = P - diag(P 1)
    Matrix R;
    Matrix Q;        // orthonormal eigenvectors of R, columns
    Vector lambda0;  // eigenvalues of R, descending; lambda0(0) = 0
    Vector s;
    /// Largest nonzero eigenvalue of P - diag(P 1); nullopt for m = 1.
    std::optional<double> lambda1;

    const Rational& P_at(int i, int j) const { return P_exact[static_cast<std::size_t>(i * m + j)]; }
    const Rational& R_at(int i, int j) const { return R_exact[static_cast<std::size_t>(i * m + j)]; }
};

/// Closed form s_j = (1 + p - p^{-j} - p^{j+1-m}) / (p - 1).
inline Rational level_row_sum(int p, int m, int j) {
    return (Rational(1 + p) - rpow(p, -j) - rpow(p, j + 1 - m)) / Rational(p - 1);
}

inline LevelMatrices build_level_matrices(int p, int m) {
    if (!is_prime(p)) throw std::invalid_argument("p must be prime");
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    LevelMatrices lm;
    lm.p = p;
    lm.m = m;
    const std::size_t mm = static_cast<std::size_t>(m);
    lm.P_exact.resize(mm * mm);
    lm.R_exact.resize(mm * mm);
    lm.s_exact.assign(mm, Rational(0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            lm.P_exact[static_cast<std::size_t>(i * m + j)] = rpow(p, -std::abs(i - j));
            lm.s_exact[static_cast<std::size_t>(i)] += lm.P_exact[static_cast<std::size_t>(i * m + j)];
        }
    const Rational unit_mass = Rational(1) - rpow(p, -1);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Rational v = lm.P_at(i, j);
            if (i == j) v -= lm.s_exact[static_cast<std::size_t>(i)];
            lm.R_exact[static_cast<std::size_t>(i * m + j)] = unit_mass * v;
        }

    lm.P.resize(m, m);
    lm.L.resize(m, m);
    lm.R.resize(m, m);
    lm.s.resize(m);
    for (int i = 0; i < m; ++i) {
        lm.s(i) = to_double(lm.s_exact[static_cast<std::size_t>(i)]);
        for (int j = 0; j < m; ++j) {
            lm.P(i, j) = to_double(lm.P_at(i, j));
            lm.R(i, j) = to_double(lm.R_at(i, j));
            lm.L(i, j) = -(lm.P(i, j) - (i == j ? lm.s(i) : 0.0));
        }
    }

    auto eig = jacobi_eigen(lm.R, 1e-14);
    lm.lambda0 = eig.values;
    lm.Q = eig.vectors;
    // Deterministic signs: first column positive, others with a positive first nonzero entry.
    for (int k = 0; k < m; ++k) {
        int pivot = 0;
        if (k > 0)
            while (pivot < m - 1 && std::abs(lm.Q(pivot, k)) < 1e-8) ++pivot;
        if (lm.Q(pivot, k) < 0) lm.Q.col(k) *= -1.0;
    }
    if (m > 1) lm.lambda1 = lm.lambda0(1) / to_double(unit_mass);
    return lm;
}

struct LaplacianMatrix {
    QuotientSpace space;
    Matrix A;
};

inline constexpr std::size_t kDefaultLaplacianCap = 20000;

/// Diagonal of B in closed form: -(p^{2d-1} - (|x| + p^{1-m}/|x|) p^{d-1}).
inline Rational laplacian_diagonal_closed_form(const QuotientSpace& space, int level) {
    const int p = space.p(), d = space.d();
    const Rational nx = rpow(p, -level);
    return -(rpow(p, 2 * d - 1) - (nx + rpow(p, 1 - space.m()) / nx) * rpow(p, d - 1));
}

inline LaplacianMatrix build_laplacian(const QuotientSpace& space, std::size_t cap = kDefaultLaplacianCap) {
    const std::size_t n = space.n_points();
    if (n > cap)
        throw std::length_error("space " + space.label() + " has " + std::to_string(n) +
                                " points; raise the cap to at least " + std::to_string(n));
    const int p = space.p(), m = space.m(), d = space.d();
    const auto points = enumerate_points(space);
    const Rational atom = space.atom_measure();

    // Off-diagonal weights are p^e with e in [-(m-1), 2(d-1)].
    const int e_min = -(m - 1), e_max = 2 * (d - 1);
    std::vector<double> weight_d(static_cast<std::size_t>(e_max - e_min + 1));
    std::vector<Rational> weight_q(weight_d.size());
    for (int e = e_min; e <= e_max; ++e) {
        weight_q[static_cast<std::size_t>(e - e_min)] = rpow(p, e) * atom;
        weight_d[static_cast<std::size_t>(e - e_min)] = to_double(weight_q[static_cast<std::size_t>(e - e_min)]);
    }

    LaplacianMatrix out{space, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
    std::vector<std::int64_t> histogram(weight_d.size());
    std::vector<std::optional<Rational>> level_diag(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(histogram.begin(), histogram.end(), 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const int e = kernel_weight_exponent(points[i], points[j]);
            if (points[i].level != points[j].level && e != -std::abs(points[i].level - points[j].level))
                throw std::logic_error("off-diagonal block is not p^{-|i-j|} 1 1^T");
            ++histogram[static_cast<std::size_t>(e - e_min)];
            out.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = weight_d[static_cast<std::size_t>(e - e_min)];
        }
        // Exact diagonal: every row on a level shares one weight histogram.
        auto& diag = level_diag[static_cast<std::size_t>(points[i].level)];
        if (!diag) {
            Rational sum = 0;
            for (std::size_t e = 0; e < histogram.size(); ++e) sum += weight_q[e] * histogram[e];
            if (-sum / atom != laplacian_diagonal_closed_form(space, points[i].level))
                throw std::logic_error("Laplacian diagonal disagrees with its closed form");
            diag = -sum;
        }
        out.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = to_double(*diag);
    }
    return out;
}

/// Which analytic family an eigenvalue belongs to.
struct Provenance {
    enum class Kind { RMatrix, Conductor, Numeric } kind = Kind::RMatrix;
    int k = 0;  // R index
    int n = 0;  // conductor
    int l = 0;  // level

    std::string describe() const {
        switch (kind) {
            case Kind::RMatrix: return "R[" + std::to_string(k) + "]";
            case Kind::Conductor: return "n=" + std::to_string(n) + ",l=" + std::to_string(l);
            default: return "numeric";
        }
    }
};

struct SpectrumEntry {
    double eigenvalue = 0.0;
    std::optional<Rational> exact;  // present for conductor entries
    std::int64_t multiplicity = 0;
    Provenance provenance;
};

/// lambda_{n,l} = -p^{n-1} - p^{n-2} + (p^{-l} + p^{l+1-m}) / p for n >= 1.
inline Rational conductor_eigenvalue(int p, int m, int n, int l) {
    return -rpow(p, n - 1) - rpow(p, n - 2) + (rpow(p, -l) + rpow(p, l + 1 - m)) / Rational(p);
}

inline std::int64_t conductor_multiplicity(int p, int n) {
    if (n == 1) return p - 2;
    return (ipow(p - 1, 2) * ipow(p, n - 2)).convert_to<std::int64_t>();
}

inline std::vector<SpectrumEntry> analytic_spectrum(const QuotientSpace& space, const LevelMatrices& lm) {
    if (lm.p != space.p() || lm.m != space.m()) throw std::invalid_argument("level matrices belong to another space");
    std::vector<SpectrumEntry> out;
    for (int k = 0; k < space.m(); ++k) {
        SpectrumEntry e;
        e.eigenvalue = k == 0 ? 0.0 : lm.lambda0(k);
        e.multiplicity = 1;
        e.provenance = {Provenance::Kind::RMatrix, k, 0, 0};
        out.push_back(e);
    }
    for (int l = 0; l < space.m(); ++l)
        for (int n = 1; n <= space.d(); ++n) {
            const std::int64_t mult = conductor_multiplicity(space.p(), n);
            if (mult == 0) continue;
            SpectrumEntry e;
            e.exact = conductor_eigenvalue(space.p(), space.m(), n, l);
            e.eigenvalue = to_double(*e.exact);
            e.multiplicity = mult;
            e.provenance = {Provenance::Kind::Conductor, 0, n, l};
            out.push_back(e);
        }
    std::int64_t total = 0;
    for (const auto& e : out) total += e.multiplicity;
    if (total != static_cast<std::int64_t>(space.n_points()))
        throw std::logic_error("analytic multiplicities do not sum to the point count");
    return out;
}

/// Eigenvalues of A, descending.
inline std::vector<double> numeric_spectrum(const Matrix& a) {
    if (symmetry_defect(a) > 1e-12) throw std::invalid_argument("numeric_spectrum: matrix is not symmetric");
    auto eig = jacobi_eigen(a, 1e-13);
    return {eig.values.data(), eig.values.data() + eig.values.size()};
}

inline std::vector<double> numeric_spectrum(const LaplacianMatrix& lap) { return numeric_spectrum(lap.A); }

inline std::vector<double> expand_spectrum(const std::vector<SpectrumEntry>& entries) {
    std::vector<double> out;
    for (const auto& e : entries) out.insert(out.end(), static_cast<std::size_t>(e.multiplicity), e.eigenvalue);
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

struct SpectrumPair {
    double analytic = 0.0;
    double numeric = 0.0;
    std::string provenance;
};

struct SpectrumComparison {
    bool pass = false;
    bool multiplicity_match = false;
    double max_deviation = 0.0;
    std::size_t worst = 0;  // index into pairs
    std::vector<SpectrumPair> pairs;
    std::string message;
};

/// Sort both sides descending and pair entries in order.
inline SpectrumComparison compare_spectra(const std::vector<SpectrumEntry>& analytic, std::vector<double> numeric,
                                          double tol) {
    SpectrumComparison rep;
    std::vector<std::pair<double, std::string>> lhs;
    for (const auto& e : analytic)
        for (std::int64_t i = 0; i < e.multiplicity; ++i) lhs.emplace_back(e.eigenvalue, e.provenance.describe());
    std::stable_sort(lhs.begin(), lhs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::sort(numeric.begin(), numeric.end(), std::greater<>());
    if (lhs.size() != numeric.size()) {
        rep.message = "multiplicity mismatch: analytic " + std::to_string(lhs.size()) + " vs numeric " +
                      std::to_string(numeric.size());
        return rep;
    }
    rep.multiplicity_match = true;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        rep.pairs.push_back({lhs[i].first, numeric[i], lhs[i].second});
        const double dev = std::abs(lhs[i].first - numeric[i]);
        if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst = i;
        }
    }
    rep.pass = rep.max_deviation <= tol;
    if (!rep.pass && !rep.pairs.empty())
        rep.message = "entry " + std::to_string(rep.worst) + " (" + rep.pairs[rep.worst].provenance + ") deviates by " +
                      std::to_string(rep.max_deviation);
    return rep;
}

/// Smallest nonzero eigenvalue of -A: 1 - 1/p for m = 1, else -(1 - 1/p) lambda_1.
inline double spectral_gap(const QuotientSpace& space, const LevelMatrices& lm) {
    const double unit_mass = 1.0 - 1.0 / space.p();
    if (space.m() == 1) return unit_mass;
    return -unit_mass * *lm.lambda1;
}

/// min of -lambda over the nonzero analytic entries; nullopt if there are none.
inline std::optional<double> spectrum_gap(const std::vector<SpectrumEntry>& entries, double zero_tol = 1e-12) {
    std::optional<double> best;
    for (const auto& e : entries)
        if (std::abs(e.eigenvalue) > zero_tol && (!best || -e.eigenvalue < *best)) best = -e.eigenvalue;
    return best;
}

/// Same-level block view: T has entries w(x, z) - 1 off the diagonal and -1 on it.
struct CirculantBlock {
    std::vector<double> first_row;
    std::vector<double> t;  // eigenvalues t_i, i = 0..N-1; t_0 is the row sum
    bool circulant = false;
};

inline CirculantBlock circulant_block(const QuotientSpace& space) {
    const std::size_t n = space.block_size();
    CirculantBlock out;
    std::vector<QuotientPoint> block;
    for (std::size_t i = 0; i < n; ++i) block.push_back(point_at(i, space));
    auto entry = [&](std::size_t i, std::size_t j) {
        if (i == j) return -1.0;
        return std::pow(static_cast<double>(space.p()), kernel_weight_exponent(block[i], block[j])) - 1.0;
    };
    out.first_row.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.first_row[j] = entry(0, j);
    out.circulant = true;
    for (std::size_t i = 1; i < n && out.circulant; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (entry(i, j) != out.first_row[(j + n - i) % n]) {
                out.circulant = false;
                break;
            }
    out.t.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += out.first_row[j] *
                   std::cos(2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n));
        out.t[k] = acc;
    }
    return out;
}

/// Spectrum through block diagonalization: level constants give (1 - 1/p) sigma(P - diag(P 1));
/// nontrivial Fourier modes of level j give p^{-d}(t_i - t_0) - (1 - 1/p) s_j.
inline std::vector<double> fourier_block_spectrum(const QuotientSpace& space, const LevelMatrices& lm) {
    const auto blk = circulant_block(space);
    if (!blk.circulant) throw std::logic_error("same-level block is not circulant in the point order");
    const double atom = space.atom_measure_d();
    const double unit_mass = 1.0 - 1.0 / space.p();
    std::vector<double> out;
    for (int k = 0; k < space.m(); ++k) out.push_back(k == 0 ? 0.0 : lm.lambda0(k));
    for (int j = 0; j < space.m(); ++j)
        for (std::size_t i = 1; i < blk.t.size(); ++i)
            out.push_back(atom * (blk.t[i] - blk.t[0]) - unit_mass * lm.s(j));
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

}  // namespace tatelab
