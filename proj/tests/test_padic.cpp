#include "tatelab/padic.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace tatelab;

namespace {

// Oracle: plain 64-bit valuation.
int naive_valuation(long long v, int p) {
    if (v < 0) v = -v;
    int k = 0;
    while (v % p == 0) {
        v /= p;
        ++k;
    }
    return k;
}

long long naive_rep(const QuotientPoint& x, int p) {
    long long unit = 0, pw = 1;
    for (int b : x.digits) {
        unit += b * pw;
        pw *= p;
    }
    for (int i = 0; i < x.level; ++i) unit *= p;
    return unit;
}

// Oracle: the log series summed in exact rationals until every later term has valuation >= k,
// then reduced mod p^k.
Integer log_by_rational_series(long long u, int k, int p) {
    const Rational t = Rational(u - 1);
    Rational sum = 0;
    Rational tp = 1;
    for (int j = 1; j < 4 * k + 20; ++j) {
        tp *= t;
        sum += (j % 2 ? Rational(1) : Rational(-1)) * tp / j;
    }
    // sum has denominators coprime to p up to p-powers dividing j; reduce mod p^k.
    const Integer modulus = ipow(p, k);
    const Integer num = boost::multiprecision::numerator(sum);
    const Integer den = boost::multiprecision::denominator(sum);
    int vden = 0;
    Integer d = den;
    while (d % p == 0) {
        d /= p;
        ++vden;
    }
    EXPECT_EQ(vden, 0) << "truncated series should be p-integral";
    return mod_floor(num * mod_inverse(d, modulus), modulus);
}

}  // namespace

TEST(QuotientSpace, CountsAndVolume) {
    for (int p : {2, 3, 5, 7})
        for (int m = 1; m <= 3; ++m)
            for (int d = 1; d <= 4; ++d) {
                QuotientSpace s(p, m, d);
                long long expect = m * (p - 1);
                for (int i = 1; i < d; ++i) expect *= p;
                EXPECT_EQ(s.n_points(), static_cast<std::size_t>(expect));
                EXPECT_EQ(Rational(static_cast<long long>(s.n_points())) * s.atom_measure(), s.volume());
            }
}

TEST(QuotientSpace, RejectsInvalidParameters) {
    EXPECT_THROW(QuotientSpace(4, 1, 1), std::invalid_argument);
    EXPECT_THROW(QuotientSpace(1, 1, 1), std::invalid_argument);
    EXPECT_THROW(QuotientSpace(3, 0, 1), std::invalid_argument);
    EXPECT_THROW(QuotientSpace(3, 1, 0), std::invalid_argument);
}

TEST(EnumeratePoints, SmallExamples) {
    {
        QuotientSpace s(2, 1, 2);
        auto pts = enumerate_points(s);
        ASSERT_EQ(pts.size(), 2u);
        EXPECT_EQ(pts[0], (QuotientPoint{0, {1, 0}}));
        EXPECT_EQ(pts[1], (QuotientPoint{0, {1, 1}}));
    }
    {
        QuotientSpace s(3, 1, 2);
        auto pts = enumerate_points(s);
        ASSERT_EQ(pts.size(), 6u);
        EXPECT_EQ(pts.front(), (QuotientPoint{0, {1, 0}}));
        EXPECT_EQ(pts.back(), (QuotientPoint{0, {2, 2}}));
    }
    {
        QuotientSpace s(3, 2, 1);
        auto pts = enumerate_points(s);
        std::vector<QuotientPoint> expect{{0, {1}}, {0, {2}}, {1, {1}}, {1, {2}}};
        EXPECT_EQ(pts, expect);
    }
}

TEST(EnumeratePoints, DistinctValidAndIndexed) {
    for (auto [p, m, d] : std::vector<std::tuple<int, int, int>>{{2, 3, 3}, {3, 2, 3}, {5, 1, 3}, {7, 2, 2}}) {
        QuotientSpace s(p, m, d);
        auto pts = enumerate_points(s);
        ASSERT_EQ(pts.size(), s.n_points());
        std::set<QuotientPoint> seen(pts.begin(), pts.end());
        EXPECT_EQ(seen.size(), pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            EXPECT_NO_THROW(validate_point(pts[i], s));
            EXPECT_EQ(point_index(pts[i], s), i);
        }
        // Level-major, b_0 fastest inside a level.
        if (p > 2)
            EXPECT_EQ(pts[1], (QuotientPoint{0, [&] { auto v = pts[0].digits; v[0] = 2; return v; }()}));
        else
            EXPECT_EQ(pts[1].digits[1], 1);
    }
}

TEST(DiffValuation, Examples) {
    QuotientSpace s(3, 2, 2);
    EXPECT_EQ(diff_valuation({0, {1, 0}}, {0, {2, 0}}, s), 0);
    EXPECT_EQ(diff_valuation({0, {1, 0}}, {0, {1, 1}}, s), 1);
    EXPECT_EQ(diff_valuation({0, {1, 0}}, {1, {1, 0}}, s), 0);
    EXPECT_EQ(diff_valuation({1, {2, 1}}, {1, {2, 1}}, s), kInfiniteValuation);
}

TEST(DiffValuation, MatchesNaiveIntegerOracle) {
    QuotientSpace s(3, 3, 3);
    auto pts = enumerate_points(s);
    for (const auto& x : pts)
        for (const auto& y : pts) {
            if (x == y) continue;
            const int expect = naive_valuation(naive_rep(x, 3) - naive_rep(y, 3), 3);
            EXPECT_EQ(diff_valuation(x, y, s), expect);
        }
}

TEST(DistanceValuation, ExamplesAndErrors) {
    QuotientSpace s(3, 2, 2);
    EXPECT_EQ(distance_valuation({0, {1, 0}}, {0, {1, 1}}, s), 1);
    EXPECT_EQ(distance_valuation({0, {1, 0}}, {1, {1, 0}}, s), 0);
    EXPECT_EQ(distance_valuation({1, {1, 0}}, {1, {1, 1}}, s), 1);
    EXPECT_THROW(distance_valuation({0, {1, 0}}, {0, {1, 0}}, s), std::invalid_argument);
}

TEST(DistanceValuation, UnitDistanceCharacterization) {
    QuotientSpace s(5, 2, 2);
    auto pts = enumerate_points(s);
    for (const auto& x : pts)
        for (const auto& y : pts) {
            if (x == y) continue;
            const int M = distance_valuation(x, y, s);
            EXPECT_GE(M, 0);
            EXPECT_LE(M, s.d() - 1);
            const bool unit = x.level != y.level || x.digits[0] != y.digits[0];
            EXPECT_EQ(M == 0, unit);
        }
}

TEST(KernelWeight, Examples) {
    QuotientSpace s3(3, 1, 2);
    EXPECT_EQ(kernel_weight({0, {1, 0}}, {0, {2, 0}}, s3), Rational(1));
    EXPECT_EQ(kernel_weight({0, {1, 0}}, {0, {1, 1}}, s3), Rational(9));
    QuotientSpace s(3, 2, 1);
    EXPECT_EQ(kernel_weight({0, {1}}, {1, {1}}, s), Rational(1, 3));
    EXPECT_THROW(kernel_weight({0, {1}}, {0, {1}}, s), std::invalid_argument);
}

TEST(KernelWeight, SymmetricAndAgreesWithFastPath) {
    QuotientSpace s(3, 3, 3);
    auto pts = enumerate_points(s);
    for (const auto& x : pts)
        for (const auto& y : pts) {
            if (x == y) continue;
            const Rational w = kernel_weight(x, y, s);
            EXPECT_EQ(w, kernel_weight(y, x, s));
            EXPECT_EQ(w, rpow(3, kernel_weight_exponent(x, y)));
        }
}

TEST(Ultrametric, SameLevelTriples) {
    QuotientSpace s(3, 1, 3);
    auto pts = enumerate_points(s);
    for (const auto& x : pts)
        for (const auto& y : pts)
            for (const auto& z : pts) {
                if (x == y || y == z || x == z) continue;
                EXPECT_GE(diff_valuation(x, z, s), std::min(diff_valuation(x, y, s), diff_valuation(y, z, s)));
            }
}

TEST(PadicLog, Examples) {
    EXPECT_EQ(padic_log_unit(Integer(4), 2, 3), Integer(3));
    EXPECT_EQ(padic_log_unit(Integer(1), 5, 3), Integer(0));
    EXPECT_EQ(padic_log_unit(Integer(4), 1, 3), Integer(0));
    std::vector<int> digits{1, 1};  // 4 = 1 + 1*3
    EXPECT_EQ(padic_log_unit(std::span<const int>(digits), 2, 3), Integer(3));
}

TEST(PadicLog, Errors) {
    EXPECT_THROW(padic_log_unit(Integer(3), 2, 2), std::invalid_argument);
    EXPECT_THROW(padic_log_unit(Integer(2), 2, 3), std::invalid_argument);
    std::vector<int> digits{1, 1};
    EXPECT_THROW(padic_log_unit(std::span<const int>(digits), 3, 3), std::invalid_argument);
}

TEST(PadicLog, MatchesRationalSeriesOracle) {
    for (int p : {3, 5, 7})
        for (int k = 1; k <= 4; ++k)
            for (long long u = 1; u < 6 * p; u += p) EXPECT_EQ(padic_log_unit(Integer(u), k, p), log_by_rational_series(u, k, p));
}

TEST(PadicLog, HomomorphismProperty) {
    std::mt19937_64 rng(7);
    for (int p : {3, 5, 7, 11})
        for (int k = 1; k <= 5; ++k) {
            const Integer mod = ipow(p, k);
            const long long modl = mod.convert_to<long long>();
            std::uniform_int_distribution<long long> dist(0, modl / p - 1);
            for (int trial = 0; trial < 30; ++trial) {
                const Integer u = 1 + Integer(p) * dist(rng);
                const Integer v = 1 + Integer(p) * dist(rng);
                const Integer lu = padic_log_unit(u, k, p);
                const Integer lv = padic_log_unit(v, k, p);
                EXPECT_EQ(padic_log_unit(mod_floor(u * v, mod), k, p), mod_floor(lu + lv, mod));
                EXPECT_EQ(lu % p, 0) << "log lands in pZ_p";
            }
        }
}

TEST(DiscreteLog, Examples) {
    EXPECT_EQ(discrete_log(2, 3), 1);
    EXPECT_EQ(discrete_log(4, 5), 2);
    EXPECT_EQ(discrete_log(1, 7), 0);
    EXPECT_EQ(discrete_log(1, 2), 0);
    EXPECT_THROW(discrete_log(5, 5), std::invalid_argument);
}

TEST(DiscreteLog, BijectionAndHomomorphism) {
    for (int p : {3, 5, 7, 11, 13}) {
        const int g = primitive_root(p);
        std::set<int> seen;
        long long acc = 1;
        for (int e = 0; e < p - 1; ++e) {
            EXPECT_EQ(discrete_log(static_cast<int>(acc), p), e);
            seen.insert(static_cast<int>(acc));
            acc = acc * g % p;
        }
        EXPECT_EQ(seen.size(), static_cast<std::size_t>(p - 1));
        for (int a = 1; a < p; ++a)
            for (int b = 1; b < p; ++b)
                EXPECT_EQ(discrete_log(a * b % p, p), (discrete_log(a, p) + discrete_log(b, p)) % (p - 1));
    }
    EXPECT_EQ(primitive_root(3), 2);
    EXPECT_EQ(primitive_root(5), 2);
    EXPECT_EQ(primitive_root(7), 3);
}

TEST(FractionalPart, Examples) {
    EXPECT_EQ(fractional_part(3, 9), Rational(1, 3));
    EXPECT_EQ(fractional_part(9, 9), Rational(0));
    EXPECT_EQ(fractional_part(-1, 3), Rational(2, 3));
}

TEST(PointStrings, RoundTrip) {
    QuotientSpace s(3, 2, 3);
    for (const auto& x : enumerate_points(s)) EXPECT_EQ(parse_point(format_point(x), s), x);
    EXPECT_EQ(format_point({0, {1, 2, 0}}), "0:1,2,0");
}

TEST(PointStrings, Rejects) {
    QuotientSpace s(3, 1, 2);
    EXPECT_THROW(parse_point("1,0", s), std::invalid_argument);
    EXPECT_THROW(parse_point("0:0,1", s), std::invalid_argument);
    EXPECT_THROW(parse_point("0:1", s), std::invalid_argument);
    EXPECT_THROW(parse_point("1:1,0", s), std::invalid_argument);
    EXPECT_THROW(parse_point("0:1,x", s), std::invalid_argument);
    EXPECT_THROW(parse_point("0:1,3", s), std::invalid_argument);
}
