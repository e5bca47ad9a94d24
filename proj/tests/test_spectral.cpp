#include "tatelab/spectral.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace tatelab;

namespace {

// Oracle: A assembled entry by entry from |x| |z| / |x - z|^2 on exact integer representatives.
Matrix laplacian_by_definition(const QuotientSpace& s) {
    const auto pts = enumerate_points(s);
    const auto n = static_cast<Eigen::Index>(pts.size());
    Matrix a = Matrix::Zero(n, n);
    const double atom = std::pow(static_cast<double>(s.p()), -s.d());
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& x = pts[static_cast<std::size_t>(i)];
            const auto& z = pts[static_cast<std::size_t>(j)];
            const int v = valuation(representative(x, s.p()) - representative(z, s.p()), s.p());
            const double w = std::pow(s.p(), -x.level) * std::pow(s.p(), -z.level) / std::pow(s.p(), -2.0 * v);
            a(i, j) = atom * w;
            row += a(i, j);
        }
        a(i, i) = -row;
    }
    return a;
}

std::vector<SpectrumEntry> sorted_entries(std::vector<SpectrumEntry> e) {
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.eigenvalue > b.eigenvalue; });
    return e;
}

}  // namespace

TEST(LevelMatrices, Examples) {
    auto lm1 = build_level_matrices(3, 1);
    EXPECT_EQ(lm1.R_at(0, 0), Rational(0));
    EXPECT_NEAR(lm1.lambda0(0), 0.0, 1e-15);
    EXPECT_FALSE(lm1.lambda1.has_value());

    auto lm = build_level_matrices(3, 2);
    EXPECT_EQ(lm.R_at(0, 0), Rational(-2, 9));
    EXPECT_EQ(lm.R_at(0, 1), Rational(2, 9));
    EXPECT_NEAR(lm.lambda0(0), 0.0, 1e-15);
    EXPECT_NEAR(lm.lambda0(1), -4.0 / 9.0, 1e-15);
    EXPECT_NEAR(*lm.lambda1, -2.0 / 3.0, 1e-15);

    auto lm2 = build_level_matrices(2, 2);
    EXPECT_NEAR(lm2.lambda0(1), -0.5, 1e-15);
    EXPECT_NEAR(*lm2.lambda1, -1.0, 1e-15);
}

TEST(LevelMatrices, Invariants) {
    for (int p : {2, 3, 5})
        for (int m = 1; m <= 6; ++m) {
            auto lm = build_level_matrices(p, m);
            for (int i = 0; i < m; ++i) {
                Rational row = 0;
                for (int j = 0; j < m; ++j) {
                    row += lm.R_at(i, j);
                    EXPECT_EQ(lm.R_at(i, j), lm.R_at(j, i));
                }
                EXPECT_EQ(row, Rational(0));
                EXPECT_EQ(lm.s_exact[static_cast<std::size_t>(i)], level_row_sum(p, m, i));
            }
            EXPECT_LE((lm.Q.transpose() * lm.Q - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LE((lm.Q.col(0) - Vector::Constant(m, 1.0 / std::sqrt(m))).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LE((lm.R * lm.Q - lm.Q * lm.lambda0.asDiagonal()).cwiseAbs().maxCoeff(), 1e-13);
            // rank m - 1: exactly one zero eigenvalue.
            int zeros = 0;
            for (int k = 0; k < m; ++k) zeros += std::abs(lm.lambda0(k)) < 1e-12;
            EXPECT_EQ(zeros, 1);
        }
}

TEST(Laplacian, SmallExamples) {
    {
        auto lap = build_laplacian({2, 1, 2});
        Matrix expect(2, 2);
        expect << -1, 1, 1, -1;
        EXPECT_LE((lap.A - expect).cwiseAbs().maxCoeff(), 1e-15);
    }
    {
        auto lap = build_laplacian({3, 1, 1});
        Matrix expect(2, 2);
        expect << -1, 1, 1, -1;
        EXPECT_LE((lap.A - expect / 3.0).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Laplacian, MatchesDefinitionAndStructure) {
    for (auto [p, m, d] : std::vector<std::tuple<int, int, int>>{{2, 3, 3}, {3, 2, 3}, {5, 2, 2}, {3, 1, 4}}) {
        QuotientSpace s(p, m, d);
        auto lap = build_laplacian(s);
        EXPECT_LE((lap.A - laplacian_by_definition(s)).cwiseAbs().maxCoeff(), 1e-12 * lap.A.cwiseAbs().maxCoeff());
        EXPECT_EQ(symmetry_defect(lap.A), 0.0);
        EXPECT_LE((lap.A * Vector::Ones(lap.A.rows())).cwiseAbs().maxCoeff(), 1e-12);
        const auto n = static_cast<Eigen::Index>(s.block_size());
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (i == j) continue;
                const double expect = std::pow(p, -std::abs(i - j)) * std::pow(p, -d);
                EXPECT_LE((lap.A.block(i * n, j * n, n, n).array() - expect).abs().maxCoeff(), 1e-15);
            }
        for (Eigen::Index i = 0; i < lap.A.rows(); ++i)
            for (Eigen::Index j = 0; j < lap.A.rows(); ++j)
                if (i != j) {
                    EXPECT_GT(lap.A(i, j), 0.0);
                }
    }
}

TEST(Laplacian, CapIsEnforced) {
    QuotientSpace s(3, 1, 5);
    EXPECT_THROW(build_laplacian(s, 100), std::length_error);
    EXPECT_NO_THROW(build_laplacian(s, 162));
}

TEST(AnalyticSpectrum, Examples) {
    {
        QuotientSpace s(3, 1, 2);
        auto e = analytic_spectrum(s, build_level_matrices(3, 1));
        std::map<std::string, std::int64_t> got;
        for (const auto& x : e) got[to_string(x.exact.value_or(Rational(0)))] += x.multiplicity;
        EXPECT_EQ(got["0"], 1);
        EXPECT_EQ(got["-2/3"], 1);
        EXPECT_EQ(got["-10/3"], 4);
    }
    {
        QuotientSpace s(2, 1, 3);
        auto e = analytic_spectrum(s, build_level_matrices(2, 1));
        std::map<std::string, std::int64_t> got;
        for (const auto& x : e) got[to_string(x.exact.value_or(Rational(0)))] += x.multiplicity;
        EXPECT_EQ(got["0"], 1);
        EXPECT_EQ(got["-2"], 1);
        EXPECT_EQ(got["-5"], 2);
        EXPECT_EQ(got.size(), 3u);
    }
    {
        QuotientSpace s(3, 2, 1);
        auto e = sorted_entries(analytic_spectrum(s, build_level_matrices(3, 2)));
        ASSERT_EQ(e.size(), 4u);
        EXPECT_NEAR(e[0].eigenvalue, 0.0, 1e-15);
        EXPECT_NEAR(e[1].eigenvalue, -4.0 / 9.0, 1e-14);
        EXPECT_EQ(*e[2].exact, Rational(-8, 9));
        EXPECT_EQ(*e[3].exact, Rational(-8, 9));
    }
}

TEST(AnalyticSpectrum, LevelReflectionSymmetry) {
    for (int p : {2, 3, 5})
        for (int m = 1; m <= 5; ++m)
            for (int n = 1; n <= 4; ++n)
                for (int l = 0; l < m; ++l)
                    EXPECT_EQ(conductor_eigenvalue(p, m, n, l), conductor_eigenvalue(p, m, n, m - 1 - l));
}

TEST(NumericSpectrum, Examples) {
    Matrix a(2, 2);
    a << -1, 1, 1, -1;
    auto ev = numeric_spectrum(a);
    EXPECT_NEAR(ev[0], 0.0, 1e-15);
    EXPECT_NEAR(ev[1], -2.0, 1e-15);
    EXPECT_EQ(numeric_spectrum(Matrix::Zero(1, 1)), std::vector<double>{0.0});
    Matrix bad(2, 2);
    bad << 0, 1, 0, 0;
    EXPECT_THROW(numeric_spectrum(bad), std::invalid_argument);
}

TEST(NumericSpectrum, AgreesWithEigenSelfAdjointSolver) {
    auto lap = build_laplacian({3, 2, 3});
    auto ev = numeric_spectrum(lap);
    Eigen::SelfAdjointEigenSolver<Matrix> es(lap.A);
    std::vector<double> ref(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ref.begin(), ref.end(), std::greater<>());
    for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], ref[i], 1e-12);
}

TEST(CompareSpectra, AnalyticMatchesNumeric) {
    for (auto [p, m, d] : std::vector<std::tuple<int, int, int>>{
             {2, 1, 4}, {3, 1, 3}, {3, 2, 2}, {5, 1, 2}, {2, 3, 3}, {3, 2, 3}, {2, 2, 4}, {7, 1, 2}, {3, 4, 2}}) {
        QuotientSpace s(p, m, d);
        const auto lm = build_level_matrices(p, m);
        const auto rep = compare_spectra(analytic_spectrum(s, lm), numeric_spectrum(build_laplacian(s)), 1e-9);
        EXPECT_TRUE(rep.pass) << s.label() << " " << rep.message;
        EXPECT_TRUE(rep.multiplicity_match);
    }
}

TEST(CompareSpectra, HarnessSelfTest) {
    QuotientSpace s(3, 1, 2);
    const auto lm = build_level_matrices(3, 1);
    auto analytic = analytic_spectrum(s, lm);
    const auto numeric = expand_spectrum(analytic);
    auto same = compare_spectra(analytic, numeric, 1e-12);
    EXPECT_TRUE(same.pass);
    EXPECT_EQ(same.max_deviation, 0.0);

    analytic[1].eigenvalue += 1e-3;
    auto off = compare_spectra(analytic, numeric, 1e-9);
    EXPECT_FALSE(off.pass);
    EXPECT_NEAR(off.max_deviation, 1e-3, 1e-12);
    EXPECT_EQ(off.pairs[off.worst].provenance, analytic[1].provenance.describe());

    auto short_list = numeric;
    short_list.pop_back();
    auto mism = compare_spectra(analytic_spectrum(s, lm), short_list, 1e-9);
    EXPECT_FALSE(mism.pass);
    EXPECT_FALSE(mism.multiplicity_match);
}

TEST(SpectralGap, Examples) {
    EXPECT_NEAR(spectral_gap({3, 1, 2}, build_level_matrices(3, 1)), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(spectral_gap({3, 2, 2}, build_level_matrices(3, 2)), 4.0 / 9.0, 1e-14);
    EXPECT_NEAR(spectral_gap({2, 2, 2}, build_level_matrices(2, 2)), 0.5, 1e-14);
}

TEST(SpectralGap, AgreesWithSpectrumExceptDyadicSingleLevel) {
    for (int p : {2, 3, 5})
        for (int m = 1; m <= 4; ++m)
            for (int d = 1; d <= 3; ++d) {
                QuotientSpace s(p, m, d);
                const auto lm = build_level_matrices(p, m);
                const auto from_spectrum = spectrum_gap(analytic_spectrum(s, lm));
                if (!from_spectrum) continue;  // single point
                if (p == 2 && m == 1) {
                    // No conductor-1 characters: the gap is lambda_2 = -2, not 1 - 1/p.
                    EXPECT_NEAR(*from_spectrum, 2.0, 1e-12);
                    continue;
                }
                EXPECT_NEAR(spectral_gap(s, lm), *from_spectrum, 1e-12) << s.label();
            }
}

TEST(KernelOfA, IsConstants) {
    for (auto [p, m, d] : std::vector<std::tuple<int, int, int>>{{2, 3, 3}, {3, 2, 2}, {5, 1, 2}}) {
        auto ev = numeric_spectrum(build_laplacian({p, m, d}));
        EXPECT_EQ(std::count_if(ev.begin(), ev.end(), [](double v) { return std::abs(v) < 1e-10; }), 1);
        for (double v : ev) EXPECT_LE(v, 1e-12);
    }
}

TEST(BlockDiagonalization, CirculantBlocksAndFourierRoute) {
    for (auto [p, m, d] : std::vector<std::tuple<int, int, int>>{{3, 1, 2}, {3, 2, 3}, {2, 3, 3}, {5, 2, 2}}) {
        QuotientSpace s(p, m, d);
        const auto lm = build_level_matrices(p, m);
        const auto blk = circulant_block(s);
        EXPECT_TRUE(blk.circulant);
        // t_0 is the row sum of T.
        double row = 0.0;
        for (double v : blk.first_row) row += v;
        EXPECT_NEAR(blk.t[0], row, 1e-9);
        const auto fourier = fourier_block_spectrum(s, lm);
        const auto numeric = numeric_spectrum(build_laplacian(s));
        ASSERT_EQ(fourier.size(), numeric.size());
        for (std::size_t i = 0; i < fourier.size(); ++i) EXPECT_NEAR(fourier[i], numeric[i], 1e-9);
    }
}

TEST(BlockDiagonalization, OneSmallCaseByHand) {
    // (3,1,2): T first row (-1, 0, 8, 0, 8, 0); t_i from the 6-point DFT.
    QuotientSpace s(3, 1, 2);
    const auto blk = circulant_block(s);
    const std::vector<double> expect_row{-1, 0, 8, 0, 8, 0};
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(blk.first_row[j], expect_row[j]);
    // t_0 = 15, t_3 = -1 + 8 + 8 = 15, others -1 - 8 = -9; eigenvalues (t_i - 15)/9 - (2/3)*1.
    EXPECT_NEAR(blk.t[0], 15.0, 1e-12);
    EXPECT_NEAR(blk.t[3], 15.0, 1e-12);
    for (std::size_t i : {1u, 2u, 4u, 5u}) EXPECT_NEAR(blk.t[i], -9.0, 1e-12);
}
