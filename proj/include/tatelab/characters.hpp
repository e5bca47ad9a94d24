#pragma once

// Multiplicative characters chi_{h,c,n} of Z_p^*, localized to one level of
// X_{m,d}, with exact rational phases; the Haar inner product and the full
// eigenbasis of A built from them.

#include "tatelab/exact.hpp"
#include "tatelab/padic.hpp"
#include "tatelab/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tatelab {

using Phase = Rational;  // in [0, 1); value e^{2 pi i phase}
using ComplexVector = Eigen::VectorXcd;

struct Character {
    int h = 0;
    Integer c = 1;
    int n = 1;
    int level = 0;

    std::string label() const {
        return "chi(h=" + std::to_string(h) + ",c=" + c.str() + ",n=" + std::to_string(n) +
               ",l=" + std::to_string(level) + ")";
    }
};

inline Phase reduce_phase(const Phase& q) {
    const Integer num = boost::multiprecision::numerator(q);
    const Integer den = boost::multiprecision::denominator(q);
    return Rational(mod_floor(num, den), den);
}

inline std::complex<double> phase_value(const Phase& q) {
    const double a = 2.0 * std::numbers::pi * to_double(q);
    return {std::cos(a), std::sin(a)};
}

inline void require_odd_prime(const QuotientSpace& space) {
    if (space.p() == 2) throw std::invalid_argument("characters require p >= 3 (dyadic log unsupported)");
}

/// Phase of the character (h, c) of (Z/p^n)^* at the unit with digits b:
/// h ord(b_0)/(p-1) + {c ln(u/omega(b_0)) / p^n}_p, omega the Teichmuller lift.
inline Phase unit_character_phase(int h, const Integer& c, int n, std::span<const int> digits, int p) {
    const Integer modulus = ipow(p, n);
    const Integer u = mod_floor(unit_value(digits.first(static_cast<std::size_t>(n)), p), modulus);
    // ln(u / omega(b_0)) = ln(u^{p-1}) / (p - 1); dividing by the integer b_0 instead breaks multiplicativity.
    const Integer w = powmod(u, p - 1, modulus);
    const Integer log_w = mod_floor(padic_log_unit(w, n, p) * mod_inverse(p - 1, modulus), modulus);
    Phase torsion = Rational(Integer(h) * discrete_log(digits[0], p), Integer(p - 1));
    return reduce_phase(torsion + fractional_part(c * log_w, modulus));
}

/// Phase at x, or nullopt where the character vanishes (x off its level).
inline std::optional<Phase> eval_character(const Character& chi, const QuotientPoint& x, const QuotientSpace& space) {
    require_odd_prime(space);
    if (chi.n > space.d()) throw std::invalid_argument("conductor exceeds truncation");
    if (chi.n < 1) throw std::invalid_argument("conductor must be >= 1");
    if (x.level != chi.level) return std::nullopt;
    return unit_character_phase(chi.h, chi.c, chi.n, x.digits, space.p());
}

inline ComplexVector character_vector(const Character& chi, const QuotientSpace& space) {
    const auto points = enumerate_points(space);
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
        if (auto ph = eval_character(chi, points[i], space)) v(static_cast<Eigen::Index>(i)) = phase_value(*ph);
    return v;
}

/// Haar inner product sum_x f(x) conj(g(x)) p^{-d}.
inline std::complex<double> inner_product(const ComplexVector& f, const ComplexVector& g, const QuotientSpace& space) {
    if (f.size() != g.size() || f.size() != static_cast<Eigen::Index>(space.n_points()))
        throw std::invalid_argument("inner_product: length mismatch");
    return g.dot(f) * space.atom_measure_d();
}

/// Nontrivial characters of exact conductor n <= d on every level.
inline std::vector<Character> enumerate_characters(const QuotientSpace& space) {
    require_odd_prime(space);
    const int p = space.p();
    std::vector<Character> out;
    for (int l = 0; l < space.m(); ++l) {
        for (int h = 1; h <= p - 2; ++h) out.push_back({h, 1, 1, l});
        for (int n = 2; n <= space.d(); ++n) {
            const Integer top = ipow(p, n - 1);
            for (int h = 0; h <= p - 2; ++h)
                for (Integer c = 1; c <= top; ++c)
                    if (c % p != 0) out.push_back({h, c, n, l});
        }
    }
    return out;
}

struct EigenbasisVector {
    std::string label;
    double eigenvalue = 0.0;
    ComplexVector values;
    std::optional<Character> character;  // empty for level combinations
    int r_index = -1;                    // column of Q for level combinations
    bool numeric_fallback = false;
};

/// Level combinations x -> Q(level(x), k) followed by all conductor characters.
/// For p = 2 the basis comes from the numeric eigensolver, scaled to Haar norm 1 - 1/p.
inline std::vector<EigenbasisVector> eigenbasis(const QuotientSpace& space, const LevelMatrices& lm) {
    std::vector<EigenbasisVector> out;
    const auto points = enumerate_points(space);
    const auto n = static_cast<Eigen::Index>(points.size());
    if (space.p() == 2) {
        const auto lap = build_laplacian(space);
        const auto eig = jacobi_eigen(lap.A, 1e-13);
        const double scale = std::sqrt((1.0 - 1.0 / space.p()) / space.atom_measure_d());
        for (Eigen::Index k = 0; k < n; ++k) {
            EigenbasisVector v;
            v.label = "numeric[" + std::to_string(k) + "] (dyadic fallback)";
            v.eigenvalue = eig.values(k);
            v.values = (eig.vectors.col(k) * scale).cast<std::complex<double>>();
            v.numeric_fallback = true;
            out.push_back(std::move(v));
        }
        return out;
    }
    for (int k = 0; k < space.m(); ++k) {
        EigenbasisVector v;
        v.label = "level-combination[" + std::to_string(k) + "]";
        v.eigenvalue = k == 0 ? 0.0 : lm.lambda0(k);
        v.values.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) v.values(i) = lm.Q(points[static_cast<std::size_t>(i)].level, k);
        v.r_index = k;
        out.push_back(std::move(v));
    }
    for (const auto& chi : enumerate_characters(space)) {
        EigenbasisVector v;
        v.label = chi.label();
        v.eigenvalue = to_double(conductor_eigenvalue(space.p(), space.m(), chi.n, chi.level));
        v.values = character_vector(chi, space);
        v.character = chi;
        out.push_back(std::move(v));
    }
    return out;
}

/// Sum over the (p-1)p^{n-1} characters of (Z/p^n)^* of chi(x) conj(chi(y)), same-level x, y.
inline std::complex<double> character_sum(const QuotientPoint& x, const QuotientPoint& y, int n,
                                          const QuotientSpace& space) {
    require_odd_prime(space);
    if (n < 1 || n > space.d()) throw std::invalid_argument("character_sum: n outside [1, d]");
    if (x.level != y.level) throw std::invalid_argument("character_sum: points on different levels");
    const int p = space.p();
    const Integer top = ipow(p, n - 1);
    std::complex<double> acc = 0.0;
    for (int h = 0; h <= p - 2; ++h)
        for (Integer c = 0; c < top; ++c) {
            const Phase px = unit_character_phase(h, c, n, x.digits, p);
            const Phase py = unit_character_phase(h, c, n, y.digits, p);
            acc += phase_value(reduce_phase(px - py));
        }
    return acc;
}

}  // namespace tatelab
