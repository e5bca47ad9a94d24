#pragma once

// Invariant suites run by `tatelab verify`, one record per check.

#include "tatelab/characters.hpp"
#include "tatelab/green.hpp"
#include "tatelab/mfe.hpp"
#include "tatelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace tatelab {

struct VerifyRecord {
    std::string suite;
    std::string space;
    std::string check;
    double value = 0.0;
    double tol = 0.0;
    bool pass = false;
};

inline const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names{"spectrum", "characters", "green", "heat", "mfe"};
    return names;
}

inline std::vector<QuotientSpace> verify_spaces() {
    return {{2, 1, 4}, {3, 1, 3}, {3, 2, 2}, {5, 1, 2}, {2, 3, 3}};
}

namespace detail {

inline VerifyRecord at_most(std::string suite, const QuotientSpace& s, std::string check, double value, double tol) {
    return {std::move(suite), s.label(), std::move(check), value, tol, value <= tol};
}

inline QuotientPoint first_point(const QuotientSpace& space) { return point_at(0, space); }

inline void spectrum_suite(const QuotientSpace& space, std::vector<VerifyRecord>& out) {
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto lap = build_laplacian(space);
    const auto analytic = analytic_spectrum(space, lm);
    const auto numeric = numeric_spectrum(lap);
    const auto cmp = compare_spectra(analytic, numeric, 1e-9);
    out.push_back({"spectrum", space.label(), "max_deviation", cmp.max_deviation, 1e-9, cmp.pass});
    const auto fourier = fourier_block_spectrum(space, lm);
    double dev = 0.0;
    for (std::size_t i = 0; i < fourier.size(); ++i) dev = std::max(dev, std::abs(fourier[i] - numeric[i]));
    out.push_back(at_most("spectrum", space, "block_diagonalization_deviation", dev, 1e-9));
    const auto zeros = std::count_if(numeric.begin(), numeric.end(), [](double v) { return std::abs(v) < 1e-10; });
    out.push_back({"spectrum", space.label(), "kernel_dimension", static_cast<double>(zeros), 1.0, zeros == 1});
    const double row_sum = (lap.A * Vector::Ones(lap.A.rows())).cwiseAbs().maxCoeff();
    out.push_back(at_most("spectrum", space, "row_sum", row_sum, 1e-12));
}

inline void characters_suite(const QuotientSpace& space, std::vector<VerifyRecord>& out) {
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto basis = eigenbasis(space, lm);
    const double unit_mass = 1.0 - 1.0 / space.p();
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) {
            const auto ip = inner_product(basis[i].values, basis[j].values, space);
            if (i == j)
                diag = std::max(diag, std::abs(ip - unit_mass));
            else
                off = std::max(off, std::abs(ip));
        }
    out.push_back(at_most("characters", space, "orthogonality_off_diagonal", off, 1e-12));
    out.push_back(at_most("characters", space, "norm_deviation", diag, 1e-12));
    out.push_back({"characters", space.label(), "basis_size", static_cast<double>(basis.size()),
                   static_cast<double>(space.n_points()), basis.size() == space.n_points()});
    const auto lap = build_laplacian(space);
    double res = 0.0;
    for (const auto& v : basis) {
        const ComplexVector av = lap.A.cast<std::complex<double>>() * v.values;
        res = std::max(res, (av - v.eigenvalue * v.values).cwiseAbs().maxCoeff() / v.values.cwiseAbs().maxCoeff());
    }
    out.push_back(at_most("characters", space, "eigen_residual", res, 1e-9));
}

inline void green_suite(const QuotientSpace& space, std::vector<VerifyRecord>& out) {
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto rep = verify_green(space, first_point(space), lm, 1e-9);
    out.push_back(at_most("green", space, "level_constant_spread", rep.constant_spread, 1e-9));
    out.push_back(at_most("green", space, "apply_residual", rep.apply_residual, 1e-9));
    const auto g = green_matrix(build_laplacian(space));
    out.push_back(at_most("green", space, "symmetry", (g - g.transpose()).cwiseAbs().maxCoeff(), 1e-10));
}

inline void heat_suite(const QuotientSpace& space, std::vector<VerifyRecord>& out) {
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto lap = build_laplacian(space);
    const auto eig = jacobi_eigen(lap.A, 1e-14);
    const auto y = first_point(space);
    const auto points = enumerate_points(space);
    for (double t : {0.1, 1.0, 10.0}) {
        const Vector numeric = heat_numeric(t, eig, space, y);
        double dev = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
            dev = std::max(dev, std::abs(heat_formula(t, points[i], y, space, lm) - numeric(static_cast<Eigen::Index>(i))));
        const std::string tag = "t=" + std::to_string(t).substr(0, 4);
        out.push_back(at_most("heat", space, "formula_vs_numeric " + tag, dev, 1e-9));
        out.push_back(at_most("heat", space, "zero_mean " + tag, std::abs(numeric.sum() * space.atom_measure_d()), 1e-12));
    }
}

inline void mfe_suite(const QuotientSpace& space, std::vector<VerifyRecord>& out) {
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto th = thresholds(space, lm);
    out.push_back({"mfe", space.label(), "threshold radial_fine", th.radial_fine, 0.0, th.radial_fine > 0});
    out.push_back({"mfe", space.label(), "threshold radial_coarse", th.radial_coarse, 0.0, th.radial_coarse > 0});
    out.push_back({"mfe", space.label(), "threshold uniqueness", th.uniqueness, 0.0, th.uniqueness > 0});
    out.push_back({"mfe", space.label(), "threshold bound_const", th.bound_const, 0.0, th.bound_const > 0});

    const double rho = 0.9 * std::min({th.radial_fine, th.radial_coarse, th.uniqueness});
    const MFEProblem problem{space, rho, first_point(space)};
    const auto lap = build_laplacian(space);
    const auto sol = solve_full(problem, lap, InitialGuess::green());
    out.push_back(at_most("mfe", space, "residual", mfe_residual(lap.A, problem, sol.u).cwiseAbs().maxCoeff(), 1e-12));
    const double pd = std::pow(static_cast<double>(space.p()), space.d());
    out.push_back(at_most("mfe", space, "mass_relative", std::abs(sol.u.array().exp().sum() - pd) / pd, 1e-10));
    const auto rep = validate_structure(sol.u, problem, th);
    for (const auto& c : rep.checks) out.push_back({"mfe", space.label(), c.name, c.value, 0.0, c.pass});
    const auto radial = solve_radial(problem, {}, &lap);
    out.push_back(at_most("mfe", space, "radial_vs_full", (radial.u - sol.u).cwiseAbs().maxCoeff(), 1e-9));
    const Vector rhs = green_rhs(space, problem.y).array() + 1.0 / space.volume_d();
    out.push_back(at_most("mfe", space, "J_transport",
                          residual_with_rhs(lap.A, rho, apply_J(sol.u), apply_J(rhs)), 1e-10));
    double sigma = 0.0;
    for (int k = 0; k < space.m(); ++k)
        sigma = std::max(sigma, residual_with_rhs(lap.A, rho, apply_sigma_k(sol.u, k, space),
                                                  apply_sigma_k(rhs, k, space)));
    out.push_back(at_most("mfe", space, "sigma_transport", sigma, 1e-10));
    const double gap = linearization_min_abs_eigenvalue(lap, rho, sol.u);
    out.push_back({"mfe", space.label(), "linearization_min_abs_eigenvalue", gap, 1e-10, gap >= 1e-10});
}

}  // namespace detail

/// Runs one suite ("all" for every suite) over the built-in spaces.
inline std::vector<VerifyRecord> run_verify(const std::string& suite) {
    using Runner = std::function<void(const QuotientSpace&, std::vector<VerifyRecord>&)>;
    const std::vector<std::pair<std::string, Runner>> suites{{"spectrum", detail::spectrum_suite},
                                                             {"characters", detail::characters_suite},
                                                             {"green", detail::green_suite},
                                                             {"heat", detail::heat_suite},
                                                             {"mfe", detail::mfe_suite}};
    bool known = suite == "all";
    std::vector<VerifyRecord> out;
    for (const auto& [name, run] : suites) {
        if (suite != "all" && suite != name) continue;
        known = true;
        for (const auto& space : verify_spaces()) run(space, out);
    }
    if (!known) throw std::invalid_argument("unknown suite '" + suite + "'");
    return out;
}

}  // namespace tatelab
