// tatelab: command-line front end for the spectral, Green, heat and mean field
// computations on X_{m,d}.
//
// Exit codes: 0 ok, 1 a check failed (or the solver diverged), 2 usage error.

#include "tatelab/tatelab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;
using namespace tatelab;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int p = 3, m = 1, d = 2;
    double rho = 0.0;
    std::string y, x;
    std::vector<double> t;
    int d_min = 2, d_max = 5;
    std::size_t starts = 0;
    std::uint64_t seed = 42;
    double tol = 1e-9;
    std::string init = "zero";
    bool radial = false;
    std::string suite = "all";
    std::string format = "json";
    std::string output;
    int threads = 0;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

QuotientSpace make_space(const RunConfig& c) {
    if (!is_prime(c.p)) throw UsageError("--p: " + std::to_string(c.p) + " is not prime");
    if (c.m < 1) throw UsageError("--m: must be >= 1");
    if (c.d < 1) throw UsageError("--d: must be >= 1");
    try {
        return {c.p, c.m, c.d};
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--d: ") + e.what());
    }
}

QuotientPoint make_point(const std::string& flag, const std::string& text, const QuotientSpace& space) {
    try {
        return parse_point(text, space);
    } catch (const std::invalid_argument& e) {
        throw UsageError(flag + ": " + e.what());
    }
}

void require_rho(const RunConfig& c) {
    if (!(c.rho > 0.0)) throw UsageError("--rho: must be positive");
}

json space_json(const QuotientSpace& s) {
    return json{{"p", s.p()}, {"m", s.m()}, {"d", s.d()}, {"n_points", s.n_points()}};
}

json doc_header(const std::string& command) { return json{{"schema", 1}, {"command", command}}; }

struct Output {
    std::string text;
    int code = 0;
};

Output emit(const RunConfig& c, const json& doc, const std::string& csv, int code) {
    return {c.format == "csv" ? csv : doc.dump(2) + "\n", code};
}

Output cmd_spectrum(const RunConfig& c) {
    const auto space = make_space(c);
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto lap = build_laplacian(space);
    const auto analytic = analytic_spectrum(space, lm);
    const auto numeric = numeric_spectrum(lap);
    const auto cmp = compare_spectra(analytic, numeric, c.tol);

    json doc = doc_header("spectrum");
    doc["space"] = space_json(space);
    json a = json::array();
    for (const auto& e : analytic) {
        json row{{"eig", e.eigenvalue}, {"mult", e.multiplicity}, {"provenance", e.provenance.describe()}};
        if (e.exact) row["exact"] = to_string(*e.exact);
        a.push_back(row);
    }
    doc["analytic"] = a;
    doc["numeric"] = numeric;
    doc["max_deviation"] = cmp.max_deviation;
    doc["tol"] = c.tol;
    doc["pass"] = cmp.pass;
    if (!cmp.message.empty()) doc["message"] = cmp.message;

    std::string csv = "index,analytic,numeric,provenance\n";
    for (std::size_t i = 0; i < cmp.pairs.size(); ++i)
        csv += std::to_string(i) + "," + num(cmp.pairs[i].analytic) + "," + num(cmp.pairs[i].numeric) + ",\"" +
               cmp.pairs[i].provenance + "\"\n";
    return emit(c, doc, csv, cmp.pass ? 0 : 1);
}

Output cmd_green(const RunConfig& c) {
    const auto space = make_space(c);
    const auto y = make_point("--y", c.y, space);
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto lap = build_laplacian(space);
    const Vector numeric = green_numeric(lap, y);
    const Vector formula = kernel_vector(space, y, [&](const QuotientPoint& a, const QuotientPoint& b) {
        return green_formula(a, b, space, lm);
    });
    const auto rep = compare_green(formula, numeric, lap, y, c.tol);
    const auto rows = green_shell_table(space, y, lm);

    json doc = doc_header("green");
    doc["space"] = space_json(space);
    doc["y"] = format_point(y);
    json shells = json::array();
    std::string csv = "level,M,formula,numeric,diff\n";
    for (const auto& r : rows) {
        json row{{"level", r.level}};
        row["M"] = r.M ? json(*r.M) : json(nullptr);
        row["formula"] = r.formula;
        row["numeric"] = r.numeric;
        row["diff"] = r.formula - r.numeric;
        shells.push_back(row);
        csv += std::to_string(r.level) + "," + (r.M ? std::to_string(*r.M) : std::string()) + "," + num(r.formula) +
               "," + num(r.numeric) + "," + num(r.formula - r.numeric) + "\n";
    }
    doc["shells"] = shells;
    if (!c.x.empty()) {
        const auto x = make_point("--x", c.x, space);
        if (x == y) throw UsageError("--x: must differ from --y (Green's function is off-diagonal)");
        const auto xi = static_cast<Eigen::Index>(point_index(x, space));
        doc["x"] = json{{"point", format_point(x)},
                        {"formula", green_formula(x, y, space, lm)},
                        {"closed_form", green_closed_form(x, y, space, lm)},
                        {"numeric", numeric(xi)}};
    }
    doc["level_constants"] = rep.level_constants;
    doc["constant_spread"] = rep.constant_spread;
    doc["apply_residual"] = rep.apply_residual;
    doc["tol"] = c.tol;
    doc["pass"] = rep.pass;
    return emit(c, doc, csv, rep.pass ? 0 : 1);
}

Output cmd_heat(const RunConfig& c) {
    const auto space = make_space(c);
    const auto y = make_point("--y", c.y, space);
    if (c.t.empty()) throw UsageError("--t: at least one time is required");
    for (double t : c.t)
        if (!(t >= 0.0)) throw UsageError("--t: times must be >= 0");
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto lap = build_laplacian(space);
    const auto eig = jacobi_eigen(lap.A, 1e-14);
    std::vector<QuotientPoint> targets;
    if (!c.x.empty())
        targets.push_back(make_point("--x", c.x, space));
    else
        targets = enumerate_points(space);

    json doc = doc_header("heat");
    doc["space"] = space_json(space);
    doc["y"] = format_point(y);
    json times = json::array();
    std::string csv = "t,point,formula,numeric\n";
    bool pass = true;
    for (double t : c.t) {
        const Vector numeric = heat_numeric(t, eig, space, y);
        double dev = 0.0;
        json rows = json::array();
        for (const auto& x : targets) {
            const double f = heat_formula(t, x, y, space, lm);
            const double nv = numeric(static_cast<Eigen::Index>(point_index(x, space)));
            dev = std::max(dev, std::abs(f - nv));
            rows.push_back(json{{"point", format_point(x)}, {"formula", f}, {"numeric", nv}});
            csv += num(t) + ",\"" + format_point(x) + "\"," + num(f) + "," + num(nv) + "\n";
        }
        const double mean = numeric.sum() * space.atom_measure_d();
        pass = pass && dev <= c.tol;
        times.push_back(json{{"t", t}, {"max_deviation", dev}, {"haar_mean", mean}, {"rows", rows}});
    }
    doc["times"] = times;
    doc["tol"] = c.tol;
    doc["pass"] = pass;
    return emit(c, doc, csv, pass ? 0 : 1);
}

json thresholds_json(const Thresholds& th) {
    return json{{"radial_fine", th.radial_fine},
                {"radial_coarse", th.radial_coarse},
                {"uniqueness", th.uniqueness},
                {"bound_const", th.bound_const}};
}

Output cmd_solve(const RunConfig& c) {
    const auto space = make_space(c);
    const auto y = make_point("--y", c.y, space);
    require_rho(c);
    if (c.init != "zero" && c.init != "green") throw UsageError("--init: expected zero or green");
    const MFEProblem problem{space, c.rho, y};
    const auto lm = build_level_matrices(space.p(), space.m());
    const auto th = thresholds(space, lm);
    const auto lap = build_laplacian(space);

    json doc = doc_header("solve");
    doc["space"] = space_json(space);
    doc["rho"] = c.rho;
    doc["y"] = format_point(y);
    doc["method"] = c.radial ? "radial" : "full";
    doc["thresholds"] = thresholds_json(th);

    MFESolution sol;
    try {
        sol = c.radial ? solve_radial(problem, {}, &lap)
                       : solve_full(problem, lap, c.init == "green" ? InitialGuess::green() : InitialGuess::zero());
    } catch (const DivergenceError& e) {
        doc["error"] = e.what();
        doc["pass"] = false;
        return emit(c, doc, std::string("error\n\"") + e.what() + "\"\n", 1);
    } catch (const DegenerateLinearization& e) {
        doc["error"] = e.what();
        doc["pass"] = false;
        return emit(c, doc, std::string("error\n\"") + e.what() + "\"\n", 1);
    }
    const auto points = enumerate_points(space);
    json u = json::object();
    std::string csv = "point,u\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        u[format_point(points[i])] = sol.u(static_cast<Eigen::Index>(i));
        csv += "\"" + format_point(points[i]) + "\"," + num(sol.u(static_cast<Eigen::Index>(i))) + "\n";
    }
    doc["u"] = u;
    doc["residual"] = mfe_residual(lap.A, problem, sol.u).cwiseAbs().maxCoeff();
    doc["mass"] = sol.u.array().exp().sum();
    doc["iterations"] = sol.iterations;
    if (sol.orbit_values) {
        const auto rs = reduced_system(space, y);
        json orbits = json::array();
        for (std::size_t k = 0; k < rs.classes.size(); ++k)
            orbits.push_back(json{{"label", rs.partition.classes[rs.classes[k]].label()},
                                  {"size", rs.partition.classes[rs.classes[k]].points.size()},
                                  {"value", (*sol.orbit_values)(static_cast<Eigen::Index>(k))}});
        doc["orbit_values"] = orbits;
    }
    const auto rep = validate_structure(sol.u, problem, th);
    json checks = json::array();
    for (const auto& ch : rep.checks)
        checks.push_back(json{{"name", ch.name},
                              {"applicable", ch.applicable},
                              {"pass", ch.pass},
                              {"value", ch.value},
                              {"detail", ch.detail}});
    doc["validation"] = checks;
    bool pass = rep.pass();
    if (c.starts > 0) {
        const auto probe = uniqueness_probe(problem, c.starts, c.seed);
        json clusters = json::array();
        for (const auto& cl : probe.clusters) clusters.push_back(json{{"members", cl.members}});
        json div = json::array();
        for (const auto& dv : probe.divergences)
            div.push_back(json{{"start", dv.start}, {"message", dv.message}});
        doc["probe"] = json{{"starts", probe.n_starts},
                            {"seed", c.seed},
                            {"cluster_count", probe.clusters.size()},
                            {"clusters", clusters},
                            {"divergences", div},
                            {"expected_unique", c.rho <= th.uniqueness}};
        if (c.rho <= th.uniqueness && (probe.clusters.size() != 1 || !probe.divergences.empty())) pass = false;
    }
    doc["pass"] = pass;
    return emit(c, doc, csv, pass ? 0 : 1);
}

Output cmd_converge(const RunConfig& c) {
    if (!is_prime(c.p)) throw UsageError("--p: " + std::to_string(c.p) + " is not prime");
    if (c.m < 1) throw UsageError("--m: must be >= 1");
    require_rho(c);
    if (c.d_min < 1 || c.d_max < c.d_min) throw UsageError("--d-min/--d-max: need 1 <= d-min <= d-max");
    QuotientPoint y;
    try {
        y = parse_point(c.y);
        validate_point(y, QuotientSpace(c.p, c.m, static_cast<int>(y.digits.size())));
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--y: ") + e.what());
    }
    if (static_cast<int>(y.digits.size()) > c.d_min) throw UsageError("--y: more digits than --d-min");
    const auto table = convergence_study(c.p, c.m, c.rho, y, c.d_min, c.d_max);

    json doc = doc_header("converge");
    doc["p"] = c.p;
    doc["m"] = c.m;
    doc["rho"] = c.rho;
    doc["y"] = c.y;
    json depths = json::array();
    bool pass = true;
    for (const auto& r : table.depths) {
        json orbits = json::array();
        for (std::size_t k = 0; k < r.labels.size(); ++k)
            orbits.push_back(json{{"label", r.labels[k]}, {"value", r.orbit_values(static_cast<Eigen::Index>(k))}});
        depths.push_back(json{{"d", r.d}, {"haar_mass", r.haar_mass}, {"residual", r.residual}, {"orbits", orbits}});
        pass = pass && std::abs(r.haar_mass - 1.0) <= 1e-10;
    }
    doc["depths"] = depths;
    json pairs = json::array();
    std::string csv = "d,d_next,shared_sup,source_gap_same,source_gap_next\n";
    for (const auto& pr : table.pairs) {
        pairs.push_back(json{{"d", pr.d},
                             {"shared_sup", pr.shared_sup},
                             {"source_gap_same", pr.source_gap_same},
                             {"source_gap_next", pr.source_gap_next}});
        csv += std::to_string(pr.d) + "," + std::to_string(pr.d + 1) + "," + num(pr.shared_sup) + "," +
               num(pr.source_gap_same) + "," + num(pr.source_gap_next) + "\n";
    }
    for (std::size_t i = 0; i + 1 < table.pairs.size(); ++i)
        pass = pass && table.pairs[i + 1].shared_sup < table.pairs[i].shared_sup;
    doc["pairs"] = pairs;
    doc["pass"] = pass;
    return emit(c, doc, csv, pass ? 0 : 1);
}

Output cmd_verify(const RunConfig& c) {
    std::vector<VerifyRecord> records;
    try {
        records = run_verify(c.suite);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--suite: ") + e.what());
    }
    bool pass = true;
    std::string text = c.format == "csv" ? "suite,space,check,value,tol,pass\n" : "";
    for (const auto& r : records) {
        pass = pass && r.pass;
        if (c.format == "csv") {
            text += r.suite + ",\"" + r.space + "\"," + r.check + "," + num(r.value) + "," + num(r.tol) + "," +
                    (r.pass ? "true" : "false") + "\n";
        } else {
            json line{{"schema", 1}, {"suite", r.suite}, {"space", r.space}, {"check", r.check},
                      {"value", r.value}, {"tol", r.tol}, {"pass", r.pass}};
            text += line.dump() + "\n";
        }
    }
    return {text, pass ? 0 : 1};
}

void add_space(CLI::App* cmd, RunConfig& c, bool with_d = true) {
    cmd->add_option("--p", c.p, "prime p")->required();
    cmd->add_option("--m", c.m, "number of levels m")->required();
    if (with_d) cmd->add_option("--d", c.d, "truncation depth d")->required();
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig c;
    CLI::App app{"p-adic Laplacian spectra, Green's functions and mean field solutions on X_{m,d}"};
    app.require_subcommand(1);
    app.add_option("--threads", c.threads, "worker threads (default: TATELAB_THREADS or hardware)");
    app.add_option("--output,-o", c.output, "write output to this file instead of stdout");
    app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        cmd->add_option("--output,-o", c.output, "write output to this file instead of stdout");
        cmd->add_option("--threads", c.threads, "worker threads");
    };

    auto* spectrum = app.add_subcommand("spectrum", "analytic vs numeric spectrum of A");
    add_space(spectrum, c);
    spectrum->add_option("--tol", c.tol, "max eigenvalue deviation");
    add_common(spectrum);

    auto* green = app.add_subcommand("green", "Green's function shell table");
    add_space(green, c);
    green->add_option("--y", c.y, "source point l:b0,...,b_{d-1}")->required();
    green->add_option("--x", c.x, "evaluation point");
    green->add_option("--tol", c.tol, "comparison tolerance");
    add_common(green);

    auto* heat = app.add_subcommand("heat", "heat kernel, formula vs spectral exponential");
    add_space(heat, c);
    heat->add_option("--y", c.y, "source point")->required();
    heat->add_option("--x", c.x, "evaluation point (default: all points)");
    heat->add_option("--t", c.t, "time (repeatable)")->required()->take_all();
    heat->add_option("--tol", c.tol, "comparison tolerance");
    add_common(heat);

    auto* solve = app.add_subcommand("solve", "solve A u + rho e^u = rho p^d e_y");
    add_space(solve, c);
    solve->add_option("--rho", c.rho, "rho > 0")->required();
    solve->add_option("--y", c.y, "source point")->required();
    solve->add_flag("--radial", c.radial, "solve the orbit-reduced system");
    solve->add_option("--init", c.init, "zero or green");
    solve->add_option("--starts", c.starts, "uniqueness probe: number of random starts");
    solve->add_option("--seed", c.seed, "uniqueness probe seed");
    add_common(solve);

    auto* converge = app.add_subcommand("converge", "radial solutions across depths");
    add_space(converge, c, false);
    converge->add_option("--rho", c.rho, "rho > 0")->required();
    converge->add_option("--y", c.y, "source point (digits padded with zeros)")->required();
    converge->add_option("--d-min", c.d_min, "smallest depth");
    converge->add_option("--d-max", c.d_max, "largest depth");
    add_common(converge);

    auto* verify = app.add_subcommand("verify", "run invariant suites");
    verify->add_option("--suite", c.suite, "spectrum, characters, green, heat, mfe or all");
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (c.threads < 0) {
        std::cerr << "--threads: must be >= 0\n";
        return 2;
    }
    set_thread_count(c.threads);

    Output out;
    try {
        if (*spectrum) out = cmd_spectrum(c);
        else if (*green) out = cmd_green(c);
        else if (*heat) out = cmd_heat(c);
        else if (*solve) out = cmd_solve(c);
        else if (*converge) out = cmd_converge(c);
        else out = cmd_verify(c);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::length_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (c.output.empty()) {
        std::cout << out.text;
    } else {
        std::ofstream f(c.output, std::ios::binary);
        if (!f) {
            std::cerr << "--output: cannot open " << c.output << "\n";
            return 2;
        }
        f << out.text;
    }
    return out.code;
}
