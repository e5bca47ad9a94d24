#pragma once

// The discrete mean field equation A u + rho e^u = rho p^d e_y: full and
// orbit-reduced Newton solvers, structural validation, symmetry transport,
// the multi-start uniqueness probe and the depth convergence study.

#include "tatelab/green.hpp"
#include "tatelab/linalg.hpp"
#include "tatelab/padic.hpp"
#include "tatelab/parallel.hpp"
#include "tatelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tatelab {

struct MFEProblem {
    QuotientSpace space;
    double rho = 0.0;
    QuotientPoint y;

    void validate() const {
        if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be a positive finite number");
        validate_point(y, space);
    }
};

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 200;
};

struct InitialGuess {
    enum class Kind { Zero, Green, Explicit } kind = Kind::Zero;
    Vector values;

    static InitialGuess zero() { return {}; }
    static InitialGuess green() { return {Kind::Green, {}}; }
    static InitialGuess explicit_vector(Vector v) { return {Kind::Explicit, std::move(v)}; }
};

struct MFESolution {
    Vector u;
    double residual_inf = 0.0;
    int iterations = 0;
    std::optional<Vector> orbit_values;  // one entry per nonempty orbit class
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double last_residual, int iterations)
        : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          last_residual_(last_residual),
          iterations_(iterations) {}
    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

inline double source_strength(const MFEProblem& problem) {
    return problem.rho * std::pow(static_cast<double>(problem.space.p()), problem.space.d());
}

/// Residual A u + rho e^u - rho p^d e_y, evaluated as sum_z A_xz (u_z - u_x) in long double.
inline Vector mfe_residual(const Matrix& a, const MFEProblem& problem, const Vector& u) {
    const auto n = a.rows();
    if (u.size() != n) throw std::invalid_argument("mfe_residual: length mismatch");
    const auto yi = static_cast<Eigen::Index>(point_index(problem.y, problem.space));
    Vector r(n);
    for (Eigen::Index x = 0; x < n; ++x) {
        long double acc = 0.0L;
        const long double ux = u(x);
        for (Eigen::Index z = 0; z < n; ++z)
            if (z != x) acc += static_cast<long double>(a(x, z)) * (static_cast<long double>(u(z)) - ux);
        acc += static_cast<long double>(problem.rho) * std::exp(ux);
        if (x == yi) acc -= static_cast<long double>(source_strength(problem));
        r(x) = static_cast<double>(acc);
    }
    return r;
}

inline double log_sum_exp(const Vector& u, const Vector* weights = nullptr) {
    const double top = u.maxCoeff();
    long double acc = 0.0L;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        acc += (weights ? (*weights)(i) : 1.0) * std::exp(static_cast<long double>(u(i) - top));
    return top + static_cast<double>(std::log(acc));
}

namespace detail {

struct NewtonSystem {
    std::function<Vector(const Vector&)> residual;
    std::function<Vector(const Vector&, const Vector&)> step;  // (u, r) -> delta solving J delta = -r
    std::function<Vector(const Vector&)> restore_mass;          // u + c with sum of weighted e^{u+c} = p^d
};

inline MFESolution damped_newton(const NewtonSystem& sys, Vector u, const SolveOptions& opts) {
    u = sys.restore_mass(u);
    Vector r = sys.residual(u);
    double rn = r.cwiseAbs().maxCoeff();
    int it = 0;
    while (!(rn <= opts.tol)) {
        if (it >= opts.max_iter) throw DivergenceError("Newton did not converge", rn, it);
        if (!std::isfinite(rn)) throw DivergenceError("Newton produced non-finite residual", rn, it);
        const Vector delta = sys.step(u, r);
        double alpha = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 40; ++halving, alpha *= 0.5) {
            Vector best = u + alpha * delta;
            Vector best_r = sys.residual(best);
            double best_n = best_r.cwiseAbs().maxCoeff();
            Vector shifted = sys.restore_mass(best);
            Vector shifted_r = sys.residual(shifted);
            const double shifted_n = shifted_r.cwiseAbs().maxCoeff();
            if (shifted_n < best_n || !std::isfinite(best_n)) {
                best = std::move(shifted);
                best_r = std::move(shifted_r);
                best_n = shifted_n;
            }
            if (best_n <= (1.0 - 1e-4 * alpha) * rn) {
                u = std::move(best);
                r = std::move(best_r);
                rn = best_n;
                accepted = true;
                break;
            }
        }
        ++it;
        if (!accepted) throw DivergenceError("line search failed", rn, it);
    }
    MFESolution sol;
    sol.u = std::move(u);
    sol.residual_inf = rn;
    sol.iterations = it;
    return sol;
}

}  // namespace detail

inline MFESolution solve_full(const MFEProblem& problem, const LaplacianMatrix& lap, const InitialGuess& init = {},
                              const SolveOptions& opts = {}) {
    problem.validate();
    if (!(lap.space == problem.space)) throw std::invalid_argument("Laplacian belongs to another space");
    const auto n = static_cast<Eigen::Index>(problem.space.n_points());
    Vector u0;
    switch (init.kind) {
        case InitialGuess::Kind::Zero: u0 = Vector::Zero(n); break;
        case InitialGuess::Kind::Green: u0 = problem.rho * green_numeric(lap, problem.y); break;
        case InitialGuess::Kind::Explicit:
            if (init.values.size() != n) throw std::invalid_argument("initial vector has the wrong length");
            u0 = init.values;
            break;
    }
    const double log_target = problem.space.d() * std::log(static_cast<double>(problem.space.p()));
    detail::NewtonSystem sys;
    sys.residual = [&](const Vector& u) { return mfe_residual(lap.A, problem, u); };
    sys.step = [&](const Vector& u, const Vector& r) -> Vector {
        Matrix j = lap.A;
        j.diagonal() += problem.rho * u.array().exp().matrix();
        return SymmetricLDLT(j).solve(-r);
    };
    sys.restore_mass = [&](const Vector& u) -> Vector {
        return (u.array() + (log_target - log_sum_exp(u))).matrix();
    };
    return detail::damped_newton(sys, std::move(u0), opts);
}

inline MFESolution solve_full(const MFEProblem& problem, const InitialGuess& init = {}, const SolveOptions& opts = {}) {
    return solve_full(problem, build_laplacian(problem.space), init, opts);
}

// Orbits of the stabilizer of y.

struct OrbitClass {
    enum class Kind { OffLevel, Shell } kind = Kind::Shell;
    int index = 0;  // level k for OffLevel, shell s in [-1, d-1] for Shell
    std::vector<std::size_t> points;

    std::string label() const {
        return (kind == Kind::OffLevel ? "level " : "shell ") + std::to_string(index);
    }
};

struct OrbitPartition {
    std::vector<OrbitClass> classes;  // off-level classes by k, then shells s = -1..d-1
    std::vector<std::size_t> class_of;  // point index -> class index

    std::vector<std::size_t> nonempty() const {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (!classes[c].points.empty()) out.push_back(c);
        return out;
    }
};

/// Shell index of x relative to y on the same level: (common digit prefix) - 1.
inline int shell_index(const QuotientPoint& x, const QuotientPoint& y) { return common_prefix(x, y) - 1; }

inline OrbitPartition orbit_partition(const QuotientSpace& space, const QuotientPoint& y) {
    validate_point(y, space);
    OrbitPartition part;
    for (int k = 0; k < space.m(); ++k)
        if (k != y.level) part.classes.push_back({OrbitClass::Kind::OffLevel, k, {}});
    const std::size_t first_shell = part.classes.size();
    for (int s = -1; s <= space.d() - 1; ++s) part.classes.push_back({OrbitClass::Kind::Shell, s, {}});
    const auto points = enumerate_points(space);
    part.class_of.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t c;
        if (points[i].level != y.level)
            c = static_cast<std::size_t>(points[i].level < y.level ? points[i].level : points[i].level - 1);
        else
            c = first_shell + static_cast<std::size_t>(shell_index(points[i], y) + 1);
        part.classes[c].points.push_back(i);
        part.class_of[i] = c;
    }
    return part;
}

/// Orbit-reduced linear part: F_a = sum_b C_ab U_b + rho e^{U_a} - rho p^d [a = source].
/// Rows/columns follow OrbitPartition::nonempty().
struct ReducedSystem {
    OrbitPartition partition;
    std::vector<std::size_t> classes;  // nonempty class ids
    Matrix C;
    Vector sizes;
    Eigen::Index source = 0;
};

inline ReducedSystem reduced_system(const QuotientSpace& space, const QuotientPoint& y) {
    ReducedSystem rs;
    rs.partition = orbit_partition(space, y);
    rs.classes = rs.partition.nonempty();
    const int p = space.p(), d = space.d(), l = y.level;
    const auto nc = static_cast<Eigen::Index>(rs.classes.size());
    rs.C = Matrix::Zero(nc, nc);
    rs.sizes.resize(nc);
    const double pd = std::pow(static_cast<double>(p), d);
    const double level_size = (p - 1) * std::pow(static_cast<double>(p), d - 1);
    auto pw = [&](int e) { return std::pow(static_cast<double>(p), e); };
    for (Eigen::Index a = 0; a < nc; ++a) {
        const auto& ca = rs.partition.classes[rs.classes[static_cast<std::size_t>(a)]];
        rs.sizes(a) = static_cast<double>(ca.points.size());
        if (ca.kind == OrbitClass::Kind::Shell && ca.index == d - 1) rs.source = a;
        for (Eigen::Index b = 0; b < nc; ++b) {
            if (a == b) continue;
            const auto& cb = rs.partition.classes[rs.classes[static_cast<std::size_t>(b)]];
            const double nb = static_cast<double>(cb.points.size());
            double coeff;  // scaled by p^d
            if (ca.kind == OrbitClass::Kind::OffLevel && cb.kind == OrbitClass::Kind::OffLevel)
                coeff = level_size * pw(-std::abs(ca.index - cb.index));
            else if (ca.kind == OrbitClass::Kind::OffLevel)
                coeff = nb * pw(-std::abs(ca.index - l));
            else if (cb.kind == OrbitClass::Kind::OffLevel)
                coeff = level_size * pw(-std::abs(cb.index - l));
            else  // both shells: first digit where members differ is min(s, s') + 1
                coeff = nb * pw(2 * (std::min(ca.index, cb.index) + 1));
            rs.C(a, b) = coeff / pd;
        }
        rs.C(a, a) = -rs.C.row(a).sum();
    }
    return rs;
}

inline Vector lift_orbits(const ReducedSystem& rs, const Vector& values, std::size_t n_points) {
    Vector u(static_cast<Eigen::Index>(n_points));
    for (std::size_t a = 0; a < rs.classes.size(); ++a)
        for (std::size_t i : rs.partition.classes[rs.classes[a]].points)
            u(static_cast<Eigen::Index>(i)) = values(static_cast<Eigen::Index>(a));
    return u;
}

inline Vector reduced_residual(const ReducedSystem& rs, const MFEProblem& problem, const Vector& U) {
    Vector r(U.size());
    for (Eigen::Index a = 0; a < U.size(); ++a) {
        long double acc = 0.0L;
        for (Eigen::Index b = 0; b < U.size(); ++b)
            if (b != a) acc += static_cast<long double>(rs.C(a, b)) * (static_cast<long double>(U(b)) - U(a));
        acc += static_cast<long double>(problem.rho) * std::exp(static_cast<long double>(U(a)));
        if (a == rs.source) acc -= static_cast<long double>(source_strength(problem));
        r(a) = static_cast<double>(acc);
    }
    return r;
}

/// Newton on the m + d orbit unknowns (empty classes dropped), lifted and re-certified on the full system.
inline MFESolution solve_radial(const MFEProblem& problem, const SolveOptions& opts = {},
                                const LaplacianMatrix* lap = nullptr) {
    problem.validate();
    const ReducedSystem rs = reduced_system(problem.space, problem.y);
    const double log_target = problem.space.d() * std::log(static_cast<double>(problem.space.p()));
    detail::NewtonSystem sys;
    sys.residual = [&](const Vector& U) { return reduced_residual(rs, problem, U); };
    sys.step = [&](const Vector& U, const Vector& r) -> Vector {
        Matrix j = rs.C;
        j.diagonal() += problem.rho * U.array().exp().matrix();
        return j.partialPivLu().solve(-r);
    };
    sys.restore_mass = [&](const Vector& U) -> Vector {
        return (U.array() + (log_target - log_sum_exp(U, &rs.sizes))).matrix();
    };
    MFESolution reduced = detail::damped_newton(sys, Vector::Zero(static_cast<Eigen::Index>(rs.classes.size())), opts);

    MFESolution sol;
    sol.u = lift_orbits(rs, reduced.u, problem.space.n_points());
    sol.iterations = reduced.iterations;
    sol.orbit_values = reduced.u;
    if (lap) {
        sol.residual_inf = mfe_residual(lap->A, problem, sol.u).cwiseAbs().maxCoeff();
        if (!(sol.residual_inf <= opts.tol))
            throw std::logic_error("reduction inconsistent: reduced residual " + std::to_string(reduced.residual_inf) +
                                   ", lifted residual " + std::to_string(sol.residual_inf));
    } else {
        sol.residual_inf = reduced.residual_inf;
    }
    return sol;
}

// Thresholds.

struct Thresholds {
    double radial_fine = 0.0;
    double radial_coarse = 0.0;
    double uniqueness = 0.0;
    double bound_const = 0.0;
};

inline Thresholds thresholds(const QuotientSpace& space, const LevelMatrices& lm) {
    const double p = space.p();
    const int m = space.m(), d = space.d();
    Thresholds th;
    th.radial_fine = std::pow(p, -d) - std::pow(p, -d - m);
    th.radial_coarse = space.p() > 2 ? (p - 2) / p * (1 - std::pow(p, -m)) : (1 - std::pow(2.0, -m)) / 4;
    const double level_factor = m == 1 ? 1.0 : -*lm.lambda1;
    th.uniqueness = (space.p() > 2 ? (1 - 2 / p) * (1 - 1 / p) : 0.125) * level_factor;
    th.bound_const = space.p() > 2 ? std::log(p / (p - 2)) : 4.0;
    return th;
}

// Structural checks.

struct Check {
    std::string name;
    bool applicable = true;
    bool pass = false;
    double value = 0.0;  // signed margin or measured quantity
    std::string detail;
};

struct StructureReport {
    std::vector<Check> checks;
    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
    const Check& at(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw std::out_of_range("no check named " + name);
    }
};

/// Largest max - min of u over one orbit class.
inline double orbit_spread(const Vector& u, const OrbitPartition& part) {
    double spread = 0.0;
    for (const auto& c : part.classes) {
        if (c.points.empty()) continue;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i : c.points) {
            lo = std::min(lo, u(static_cast<Eigen::Index>(i)));
            hi = std::max(hi, u(static_cast<Eigen::Index>(i)));
        }
        spread = std::max(spread, hi - lo);
    }
    return spread;
}

/// Mean of u on each nonempty shell s = -1..d-1 at the source level, in order.
inline std::vector<std::pair<int, double>> shell_means(const Vector& u, const OrbitPartition& part) {
    std::vector<std::pair<int, double>> out;
    for (const auto& c : part.classes) {
        if (c.kind != OrbitClass::Kind::Shell || c.points.empty()) continue;
        double acc = 0.0;
        for (std::size_t i : c.points) acc += u(static_cast<Eigen::Index>(i));
        out.emplace_back(c.index, acc / static_cast<double>(c.points.size()));
    }
    return out;
}

inline StructureReport validate_structure(const Vector& u, const MFEProblem& problem, const Thresholds& th) {
    const auto& space = problem.space;
    const double p = space.p();
    StructureReport rep;
    const double umax = u.maxCoeff();

    {
        Check c;
        c.name = "upper_bound_dlnp";
        const double bound = space.d() * std::log(p);
        c.value = umax - bound;
        const bool equality_allowed = space.p() == 2 && space.m() == 1;
        c.pass = equality_allowed ? umax <= bound + 1e-12 : umax < bound;
        c.detail = equality_allowed ? "equality allowed for (p,m) = (2,1)" : "strict";
        rep.checks.push_back(c);
    }
    {
        Check c;
        c.name = "unique_min_at_source";
        const auto yi = static_cast<Eigen::Index>(point_index(problem.y, space));
        double gap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < u.size(); ++i)
            if (i != yi) gap = std::min(gap, u(i) - u(yi));
        c.value = u.size() > 1 ? gap : 0.0;
        c.pass = u.size() == 1 || gap > 0.0;
        rep.checks.push_back(c);
    }
    {
        Check c;
        c.name = "uniform_bound";
        c.value = umax - th.bound_const;
        c.pass = umax < th.bound_const;
        c.detail = space.p() > 2 ? "max u < ln(p/(p-2))" : "max u < 4";
        rep.checks.push_back(c);
    }

    const bool radial_regime = problem.rho <= std::max(th.radial_fine, th.radial_coarse);
    const auto part = orbit_partition(space, problem.y);
    {
        Check c;
        c.name = "radial_symmetry";
        c.applicable = radial_regime;
        c.value = orbit_spread(u, part);
        c.pass = !radial_regime || c.value <= 1e-9;
        rep.checks.push_back(c);
    }
    const auto shells = shell_means(u, part);
    {
        Check c;
        c.name = "shell_monotone";
        c.applicable = radial_regime;
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < shells.size(); ++i)
            margin = std::min(margin, shells[i].second - shells[i + 1].second);
        c.value = shells.size() > 1 ? margin : 0.0;
        c.pass = !radial_regime || shells.size() < 2 || margin > 0.0;
        rep.checks.push_back(c);
    }
    {
        // Gaps between shells off the source point; the last gap, into y itself, is
        // driven by the point source and is not part of the chain.
        Check c;
        c.name = "shell_gaps_nonincreasing";
        c.applicable = radial_regime;
        const std::size_t chain = shells.empty() ? 0 : shells.size() - 1;
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 2 < chain; ++i) {
            const double g0 = shells[i].second - shells[i + 1].second;
            const double g1 = shells[i + 1].second - shells[i + 2].second;
            margin = std::min(margin, g0 - g1);
        }
        c.value = chain > 2 ? margin : 0.0;
        c.pass = !radial_regime || chain < 3 || margin >= -1e-12;
        if (shells.size() >= 2)
            c.detail = "source gap " + std::to_string(shells[shells.size() - 2].second - shells.back().second);
        rep.checks.push_back(c);
    }
    return rep;
}

// Symmetry transport.

inline Vector apply_J(const Vector& u) { return u.reverse(); }

/// Shift the k-th level block cyclically by one position.
inline Vector apply_sigma_k(const Vector& u, int k, const QuotientSpace& space) {
    if (k < 0 || k >= space.m()) throw std::out_of_range("apply_sigma_k: level outside [0, m-1]");
    if (u.size() != static_cast<Eigen::Index>(space.n_points()))
        throw std::invalid_argument("apply_sigma_k: length mismatch");
    const auto block = static_cast<Eigen::Index>(space.block_size());
    const Eigen::Index start = k * block;
    Vector out = u;
    for (Eigen::Index i = 0; i < block; ++i) out(start + (i + 1) % block) = u(start + i);
    return out;
}

/// ||A u + rho e^u - rho b||_inf for an arbitrary right-hand side b.
inline double residual_with_rhs(const Matrix& a, double rho, const Vector& u, const Vector& b) {
    return (a * u + rho * u.array().exp().matrix() - rho * b).cwiseAbs().maxCoeff();
}

// Uniqueness probe.

struct ProbeCluster {
    Vector representative;
    std::vector<std::size_t> members;  // start indices
};

struct ProbeDivergence {
    std::size_t start = 0;
    std::string message;
    double last_residual = 0.0;
};

struct UniquenessReport {
    std::size_t n_starts = 0;
    std::vector<ProbeCluster> clusters;
    std::vector<ProbeDivergence> divergences;
    double max_intra_cluster_distance = 0.0;
};

inline UniquenessReport uniqueness_probe(const MFEProblem& problem, std::size_t n_starts, std::uint64_t seed,
                                         double box = 5.0, double cluster_tol = 1e-8) {
    problem.validate();
    if (n_starts < 2) throw std::invalid_argument("uniqueness_probe needs at least two starts");
    const auto lap = build_laplacian(problem.space);
    const auto n = static_cast<Eigen::Index>(problem.space.n_points());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-box, box);
    std::vector<Vector> starts(n_starts, Vector(n));
    for (auto& s : starts)
        for (Eigen::Index i = 0; i < n; ++i) s(i) = dist(rng);

    std::vector<std::optional<MFESolution>> results(n_starts);
    std::vector<std::optional<ProbeDivergence>> failures(n_starts);
    parallel_for(n_starts, [&](std::size_t i) {
        try {
            results[i] = solve_full(problem, lap, InitialGuess::explicit_vector(starts[i]));
        } catch (const DivergenceError& e) {
            failures[i] = ProbeDivergence{i, e.what(), e.last_residual()};
        } catch (const DegenerateLinearization& e) {
            failures[i] = ProbeDivergence{i, e.what(), std::numeric_limits<double>::quiet_NaN()};
        }
    });

    UniquenessReport rep;
    rep.n_starts = n_starts;
    for (std::size_t i = 0; i < n_starts; ++i) {
        if (failures[i]) {
            rep.divergences.push_back(*failures[i]);
            continue;
        }
        const Vector& u = results[i]->u;
        bool placed = false;
        for (auto& c : rep.clusters) {
            const double dist_inf = (c.representative - u).cwiseAbs().maxCoeff();
            if (dist_inf <= cluster_tol) {
                c.members.push_back(i);
                rep.max_intra_cluster_distance = std::max(rep.max_intra_cluster_distance, dist_inf);
                placed = true;
                break;
            }
        }
        if (!placed) rep.clusters.push_back({u, {i}});
    }
    return rep;
}

/// min |lambda| over the spectrum of A + rho diag(e^u).
inline double linearization_min_abs_eigenvalue(const LaplacianMatrix& lap, double rho, const Vector& u) {
    Matrix j = lap.A;
    j.diagonal() += rho * u.array().exp().matrix();
    const auto eig = jacobi_eigen(j, 1e-14);
    return eig.values.cwiseAbs().minCoeff();
}

// Convergence in d.

struct DepthResult {
    int d = 0;
    Vector orbit_values;                 // nonempty classes of the radial system
    std::vector<std::string> labels;     // class labels in the same order
    std::vector<int> shell_of;           // shell index per entry (INT_MIN for off-level)
    std::vector<int> level_of;           // level per off-level entry (-1 for shells)
    double haar_mass = 0.0;              // sum e^u p^{-d}
    double residual = 0.0;
};

struct DepthPair {
    int d = 0;                   // compares d and d + 1
    double shared_sup = 0.0;     // sup over shells s <= d - 2 and off-level classes
    double source_gap_same = 0.0;  // |U^d_{d-1} - U^{d+1}_{d-1}|
    double source_gap_next = 0.0;  // |U^d_{d-1} - U^{d+1}_{d}|
};

struct ConvergenceTable {
    std::vector<DepthResult> depths;
    std::vector<DepthPair> pairs;
};

inline QuotientPoint pad_point(const QuotientPoint& y, int d) {
    if (static_cast<int>(y.digits.size()) > d) throw std::invalid_argument("source point has more digits than d");
    QuotientPoint out = y;
    out.digits.resize(static_cast<std::size_t>(d), 0);
    return out;
}

inline ConvergenceTable convergence_study(int p, int m, double rho, const QuotientPoint& y, int d_min, int d_max) {
    if (d_min < 1 || d_max < d_min) throw std::invalid_argument("depth range must satisfy 1 <= d_min <= d_max");
    ConvergenceTable table;
    table.depths.resize(static_cast<std::size_t>(d_max - d_min + 1));
    parallel_for(table.depths.size(), [&](std::size_t i) {
        const int d = d_min + static_cast<int>(i);
        const QuotientSpace space(p, m, d);
        const MFEProblem problem{space, rho, pad_point(y, d)};
        const auto lap = build_laplacian(space);
        const auto sol = solve_radial(problem, {}, &lap);
        const auto rs = reduced_system(space, problem.y);
        DepthResult& out = table.depths[i];
        out.d = d;
        out.orbit_values = *sol.orbit_values;
        out.residual = sol.residual_inf;
        for (std::size_t c : rs.classes) {
            const auto& cls = rs.partition.classes[c];
            out.labels.push_back(cls.label());
            out.shell_of.push_back(cls.kind == OrbitClass::Kind::Shell ? cls.index : INT_MIN);
            out.level_of.push_back(cls.kind == OrbitClass::Kind::OffLevel ? cls.index : -1);
        }
        long double mass = 0.0L;
        for (Eigen::Index k = 0; k < sol.u.size(); ++k) mass += std::exp(static_cast<long double>(sol.u(k)));
        out.haar_mass = static_cast<double>(mass / std::pow(static_cast<long double>(p), d));
    });

    auto find = [](const DepthResult& r, int shell, int level) -> std::optional<double> {
        for (std::size_t i = 0; i < r.labels.size(); ++i)
            if (r.shell_of[i] == shell && r.level_of[i] == level) return r.orbit_values(static_cast<Eigen::Index>(i));
        return std::nullopt;
    };
    for (std::size_t i = 0; i + 1 < table.depths.size(); ++i) {
        const auto& a = table.depths[i];
        const auto& b = table.depths[i + 1];
        DepthPair pr;
        pr.d = a.d;
        for (std::size_t k = 0; k < a.labels.size(); ++k) {
            const int s = a.shell_of[k];
            if (s != INT_MIN && s > a.d - 2) continue;
            if (auto v = find(b, s, a.level_of[k]))
                pr.shared_sup = std::max(pr.shared_sup, std::abs(a.orbit_values(static_cast<Eigen::Index>(k)) - *v));
        }
        const double src = *find(a, a.d - 1, -1);
        pr.source_gap_same = std::abs(src - *find(b, a.d - 1, -1));
        pr.source_gap_next = std::abs(src - *find(b, a.d, -1));
        table.pairs.push_back(pr);
    }
    return table;
}

}  // namespace tatelab
