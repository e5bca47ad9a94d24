#pragma once

// Exact integer / rational helpers shared by the p-adic and character code.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tatelab {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Integer ipow(std::int64_t base, int exponent) {
    if (exponent < 0) throw std::invalid_argument("ipow: negative exponent");
    return boost::multiprecision::pow(Integer(base), static_cast<unsigned>(exponent));
}

/// p^e for any integer e, as an exact rational.
inline Rational rpow(std::int64_t p, int e) {
    if (e >= 0) return Rational(ipow(p, e));
    return Rational(Integer(1), ipow(p, -e));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(const Integer& i) { return i.convert_to<double>(); }

/// Non-negative residue of a mod n (n > 0).
inline Integer mod_floor(const Integer& a, const Integer& n) {
    Integer r = a % n;
    if (r < 0) r += n;
    return r;
}

/// v_p(n) for n != 0.
inline int valuation(Integer n, std::int64_t p) {
    if (n == 0) throw std::invalid_argument("valuation of zero");
    if (n < 0) n = -n;
    int v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

/// Inverse of a modulo n, gcd(a, n) = 1 required.
inline Integer mod_inverse(const Integer& a, const Integer& n) {
    Integer r0 = n, r1 = mod_floor(a, n), s0 = 0, s1 = 1;
    while (r1 != 0) {
        Integer q = r0 / r1;
        Integer tmp = r0 - q * r1;
        r0 = r1;
        r1 = tmp;
        tmp = s0 - q * s1;
        s0 = s1;
        s1 = tmp;
    }
    if (r0 != 1) throw std::invalid_argument("mod_inverse: not invertible");
    return mod_floor(s0, n);
}

inline bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t q = 2; q * q <= n; ++q)
        if (n % q == 0) return false;
    return true;
}

inline std::string to_string(const Rational& r) {
    return r.str();
}

}  // namespace tatelab
