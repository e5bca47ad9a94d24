#pragma once

// Truncated p-adic arithmetic on the finite quotient X_{m,d} of the Tate curve
// Q_p^x / p^{mZ}: point enumeration, valuations, the ultrametric distance,
// Laplacian kernel weights, the p-adic logarithm and discrete logarithms.

#include "tatelab/exact.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tatelab {

/// Sentinel returned by diff_valuation for x == y.
inline constexpr int kInfiniteValuation = INT_MAX;

/// The parameters (p, m, d) of X_{m,d} = Q_p^x / p^{mZ} / (1 + p^d Z_p).
class QuotientSpace {
public:
    QuotientSpace(int p, int m, int d) : p_(p), m_(m), d_(d) {
        if (!is_prime(p)) throw std::invalid_argument("p must be prime, got " + std::to_string(p));
        if (m < 1) throw std::invalid_argument("m must be >= 1, got " + std::to_string(m));
        if (d < 1) throw std::invalid_argument("d must be >= 1, got " + std::to_string(d));
        Integer block = Integer(p - 1) * ipow(p, d - 1);
        if (block * m > Integer(std::numeric_limits<std::int64_t>::max() / 4))
            throw std::invalid_argument("space too large to index");
        block_size_ = block.convert_to<std::size_t>();
    }

    int p() const noexcept { return p_; }
    int m() const noexcept { return m_; }
    int d() const noexcept { return d_; }

    /// Points per level: (p-1) p^{d-1}.
    std::size_t block_size() const noexcept { return block_size_; }
    std::size_t n_points() const noexcept { return block_size_ * static_cast<std::size_t>(m_); }

    /// Haar mass of one quotient atom, p^{-d}.
    Rational atom_measure() const { return rpow(p_, -d_); }
    /// Total volume m (1 - p^{-1}).
    Rational volume() const { return Rational(m_) * (Rational(1) - rpow(p_, -1)); }

    double atom_measure_d() const { return to_double(atom_measure()); }
    double volume_d() const { return to_double(volume()); }

    std::string label() const {
        return "(" + std::to_string(p_) + "," + std::to_string(m_) + "," + std::to_string(d_) + ")";
    }

    friend bool operator==(const QuotientSpace&, const QuotientSpace&) = default;

private:
    int p_;
    int m_;
    int d_;
    std::size_t block_size_ = 0;
};

/// x = p^level (b_0 + b_1 p + ... + b_{d-1} p^{d-1}) with b_0 != 0.
struct QuotientPoint {
    int level = 0;
    std::vector<int> digits;

    friend bool operator==(const QuotientPoint&, const QuotientPoint&) = default;
    friend auto operator<=>(const QuotientPoint&, const QuotientPoint&) = default;
};

inline void validate_point(const QuotientPoint& x, const QuotientSpace& space) {
    if (x.level < 0 || x.level >= space.m())
        throw std::invalid_argument("point level " + std::to_string(x.level) + " outside [0, m-1]");
    if (static_cast<int>(x.digits.size()) != space.d())
        throw std::invalid_argument("point has " + std::to_string(x.digits.size()) + " digits, expected d = " +
                                    std::to_string(space.d()));
    for (int b : x.digits)
        if (b < 0 || b >= space.p()) throw std::invalid_argument("digit outside [0, p-1]");
    if (x.digits.front() == 0) throw std::invalid_argument("leading digit b_0 must be a unit");
}

/// Norm |x|_p = p^{-level}.
inline Rational norm(const QuotientPoint& x, const QuotientSpace& space) { return rpow(space.p(), -x.level); }

/// Integer value of the unit part b_0 + b_1 p + ... + b_{d-1} p^{d-1}.
inline Integer unit_value(std::span<const int> digits, int p) {
    Integer v = 0;
    for (std::size_t i = digits.size(); i-- > 0;) v = v * p + digits[i];
    return v;
}

/// Integer representative p^level * unit.
inline Integer representative(const QuotientPoint& x, int p) {
    return ipow(p, x.level) * unit_value(x.digits, p);
}

// Ordering: level-major; inside a level the leading digit b_0 varies fastest,
// then b_1, ..., b_{d-1}. With this order every diagonal block of the
// Laplacian is circulant and off-diagonal blocks are constant.

inline std::size_t point_index(const QuotientPoint& x, const QuotientSpace& space) {
    const std::size_t p = static_cast<std::size_t>(space.p());
    std::size_t high = 0;
    for (std::size_t i = x.digits.size(); i-- > 1;) high = high * p + static_cast<std::size_t>(x.digits[i]);
    return static_cast<std::size_t>(x.level) * space.block_size() + high * (p - 1) +
           static_cast<std::size_t>(x.digits[0] - 1);
}

inline QuotientPoint point_at(std::size_t index, const QuotientSpace& space) {
    const std::size_t p = static_cast<std::size_t>(space.p());
    QuotientPoint x;
    x.level = static_cast<int>(index / space.block_size());
    std::size_t r = index % space.block_size();
    x.digits.assign(static_cast<std::size_t>(space.d()), 0);
    x.digits[0] = static_cast<int>(r % (p - 1)) + 1;
    r /= (p - 1);
    for (int i = 1; i < space.d(); ++i) {
        x.digits[static_cast<std::size_t>(i)] = static_cast<int>(r % p);
        r /= p;
    }
    return x;
}

inline std::vector<QuotientPoint> enumerate_points(const QuotientSpace& space) {
    std::vector<QuotientPoint> out;
    out.reserve(space.n_points());
    for (std::size_t i = 0; i < space.n_points(); ++i) out.push_back(point_at(i, space));
    return out;
}

/// v_p(x - y) on the integer representatives; kInfiniteValuation iff x == y.
inline int diff_valuation(const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space) {
    if (x == y) return kInfiniteValuation;
    if (x.level != y.level) return std::min(x.level, y.level);
    return valuation(representative(x, space.p()) - representative(y, space.p()), space.p());
}

/// Index of the first differing unit digit for same-level points (d if equal).
inline int common_prefix(const QuotientPoint& x, const QuotientPoint& y) {
    const std::size_t n = std::min(x.digits.size(), y.digits.size());
    std::size_t j = 0;
    while (j < n && x.digits[j] == y.digits[j]) ++j;
    return static_cast<int>(j);
}

/// M with d(x, y) = p^{-M}; zero whenever the levels differ.
inline int distance_valuation(const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space) {
    if (x == y) throw std::invalid_argument("distance undefined on diagonal");
    return diff_valuation(x, y, space) - std::min(x.level, y.level);
}

/// Exponent e with |x|_p |y|_p / |x - y|_p^2 = p^e. Digit-based fast path.
inline int kernel_weight_exponent(const QuotientPoint& x, const QuotientPoint& y) {
    if (x.level != y.level) return -std::abs(x.level - y.level);
    const int j = common_prefix(x, y);
    if (j == static_cast<int>(x.digits.size())) throw std::invalid_argument("kernel weight undefined on diagonal");
    return 2 * j;
}

inline Rational kernel_weight(const QuotientPoint& x, const QuotientPoint& y, const QuotientSpace& space) {
    if (x == y) throw std::invalid_argument("kernel weight undefined on diagonal");
    const int v = diff_valuation(x, y, space);
    return rpow(space.p(), -x.level - y.level + 2 * v);
}

/// ln(u) mod p^k for u = 1 mod p, via the Mercator series. p = 2 is rejected.
inline Integer padic_log_unit(const Integer& u, int k, int p) {
    if (p == 2) throw std::invalid_argument("dyadic log unsupported");
    if (p < 3 || !is_prime(p)) throw std::invalid_argument("p must be an odd prime");
    if (k < 0) throw std::invalid_argument("precision must be >= 0");
    const Integer t = u - 1;
    if (mod_floor(t, p) != 0) throw std::invalid_argument("argument is not 1 mod p");
    if (k == 0 || t == 0) return 0;

    const Integer modulus = ipow(p, k);
    int ceil_log = 0;
    for (Integer q = 1; q < k; q *= p) ++ceil_log;
    const int last = k + ceil_log + 1;

    Integer sum = 0;
    Integer tpow = 1;
    for (int j = 1; j <= last; ++j) {
        tpow *= t;
        int a = 0;
        int jr = j;
        while (jr % p == 0) {
            jr /= p;
            ++a;
        }
        // v_p(t^j) >= j > a, so t^j / p^a is integral.
        Integer term = tpow / ipow(p, a);
        term = mod_floor(term, modulus) * mod_inverse(jr, modulus);
        if (j % 2 == 0) term = -term;
        sum = mod_floor(sum + term, modulus);
    }
    return sum;
}

/// Digit-vector overload; digits are (b_0, ..., b_{d-1}) with k <= d.
inline Integer padic_log_unit(std::span<const int> digits, int k, int p) {
    if (k > static_cast<int>(digits.size()))
        throw std::invalid_argument("log precision exceeds available digits");
    return padic_log_unit(unit_value(digits, p), k, p);
}

inline Integer powmod(Integer base, std::int64_t e, const Integer& n) {
    Integer r = 1;
    base = mod_floor(base, n);
    while (e > 0) {
        if (e & 1) r = (r * base) % n;
        base = (base * base) % n;
        e >>= 1;
    }
    return r;
}

/// Smallest primitive root modulo p (1 for p = 2).
inline int primitive_root(int p) {
    if (!is_prime(p)) throw std::invalid_argument("primitive_root: p must be prime");
    if (p == 2) return 1;
    std::vector<int> factors;
    int n = p - 1;
    for (int q = 2; q * q <= n; ++q) {
        if (n % q == 0) {
            factors.push_back(q);
            while (n % q == 0) n /= q;
        }
    }
    if (n > 1) factors.push_back(n);
    for (int g = 2; g < p; ++g) {
        bool ok = true;
        for (int q : factors)
            if (powmod(g, (p - 1) / q, p) == 1) {
                ok = false;
                break;
            }
        if (ok) return g;
    }
    throw std::logic_error("no primitive root found");
}

/// ord with g^ord = a0 (mod p), g the smallest primitive root.
inline int discrete_log(int a0, int p) {
    if (!is_prime(p)) throw std::invalid_argument("discrete_log: p must be prime");
    const int r = ((a0 % p) + p) % p;
    if (r == 0) throw std::invalid_argument("discrete_log: argument divisible by p");
    if (p == 2) return 0;
    const std::int64_t g = primitive_root(p);
    std::int64_t acc = 1;
    for (int e = 0; e < p - 1; ++e) {
        if (acc == r) return e;
        acc = (acc * g) % p;
    }
    throw std::logic_error("discrete_log: not reached");
}

/// p-adic fractional part {num / den}_p for den a positive power of p.
inline Rational fractional_part(const Integer& num, const Integer& den) {
    if (den <= 0) throw std::invalid_argument("fractional_part: denominator must be positive");
    return Rational(mod_floor(num, den), den);
}

// Point strings "l:b0,b1,...,b_{d-1}".

inline std::string format_point(const QuotientPoint& x) {
    std::string s = std::to_string(x.level) + ":";
    for (std::size_t i = 0; i < x.digits.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(x.digits[i]);
    }
    return s;
}

inline QuotientPoint parse_point(std::string_view text) {
    auto parse_int = [&](std::string_view tok) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty())
            throw std::invalid_argument("malformed point string '" + std::string(text) + "'");
        return v;
    };
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("point string '" + std::string(text) + "' lacks 'level:' prefix");
    QuotientPoint x;
    x.level = parse_int(text.substr(0, colon));
    std::string_view rest = text.substr(colon + 1);
    while (true) {
        const auto comma = rest.find(',');
        x.digits.push_back(parse_int(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return x;
}

inline QuotientPoint parse_point(std::string_view text, const QuotientSpace& space) {
    QuotientPoint x = parse_point(text);
    validate_point(x, space);
    return x;
}

}  // namespace tatelab
