// prde: batch runner for norms, Skorohod, solver and invariant-check experiments.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "prde/prde.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace prde;

namespace {

enum Exit { ok = 0, validation = 2, nonconvergence = 3, violation = 4 };

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json default_spec() {
    return {
        {"command", ""},
        {"seed", 1},
        {"driver", {{"kind", "brownian"}, {"level", 10}, {"horizon", 1.0}, {"dim", 2}, {"file", ""}}},
        {"domain", {{"kind", "halfline"}}},
        {"field", {{"kind", "trigonometric"}, {"base", 0.5}, {"amplitude", 0.3}, {"frequency", 1.5}}},
        {"solver",
         {{"beta", 0.4}, {"beta_prime", 0.35}, {"p", 2.75}, {"gamma", 3.0}, {"tolerance", 1e-10},
          {"residual_tolerance", 1e-8}, {"max_iterations", 50}, {"budget_c0", 1.0}, {"budget_kappa", 1.0},
          {"max_halvings", 8}, {"xi", 0.5}}},
        {"levels", {6, 8, 10, 12}},
        {"p_values", {1.0, 1.5, 2.0, 3.0}},
        {"coupling", 0.1},
        {"samples", 20},
        {"perturb", ""},
    };
}

/// Deep merge of b into a.
void merge(json& a, const json& b) {
    for (auto it = b.begin(); it != b.end(); ++it) {
        if (a.contains(it.key()) && a[it.key()].is_object() && it->is_object())
            merge(a[it.key()], *it);
        else
            a[it.key()] = *it;
    }
}

/// SHA-1 of "blob <size>\0<content>", the git object hash of the canonical spec.
std::string content_hash(const std::string& content) {
    std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

struct Row {
    std::string name;
    double lhs;
    double rhs;
    double tol;
    bool pass() const { return lhs <= rhs + tol; }
};

struct Result {
    std::vector<Row> rows;
    json values = json::object();
    std::vector<std::tuple<std::string, double, double>> table;
    json diagnostics = json::object();
    int status = ok;

    void claim(std::string name, double lhs, double rhs, double tol = 0.0) {
        rows.push_back({std::move(name), lhs, rhs, tol});
    }
    void series(const std::string& s, double x, double y) { table.emplace_back(s, x, y); }
};

Vec vec_from(const json& j, Eigen::Index d) {
    if (j.is_number()) return Vec::Constant(d, j.get<double>());
    auto v = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != d) throw ValidationError("vector value has the wrong dimension");
    return Eigen::Map<Vec>(v.data(), d);
}

Domain make_domain(const json& s) {
    const auto kind = s.at("kind").get<std::string>();
    if (kind == "halfline") return Domain::half_line();
    if (kind == "halfplane") {
        Vec n(2);
        n << 1.0, 1.0;
        return Domain::half_space(n, 0.0);
    }
    if (kind == "box") return Domain::unit_box(s.value("dim", 2));
    if (kind == "ball") return Domain::ball(Vec::Zero(s.value("dim", 2)), s.value("radius", 1.0));
    if (kind == "triangle") {
        Mat a(3, 2);
        a << 1, 0, 0, 1, -1, -1;
        Vec c(3);
        c << 0, 0, -1.5;
        return Domain::polyhedron(a, c);
    }
    throw ValidationError("unknown domain kind " + kind + " (halfline, halfplane, box, ball, triangle)");
}

SpatialField make_field(const json& s, Eigen::Index d, Eigen::Index n) {
    const auto kind = s.at("kind").get<std::string>();
    Mat base = Mat::Constant(d, n, s.at("base").get<double>());
    base(0, 0) = 2.0 * s.at("base").get<double>();
    if (kind == "constant") return SpatialField::constant(base);
    if (kind == "linear")
        return SpatialField::linear(base, std::vector<Mat>(static_cast<std::size_t>(d), Mat::Constant(d, n, s.at("amplitude").get<double>())));
    if (kind == "trigonometric")
        return SpatialField::trigonometric(base, s.at("amplitude").get<double>(), s.at("frequency").get<double>());
    throw ValidationError("unknown field kind " + kind + " (constant, linear, trigonometric)");
}

SolverConfig make_solver(const json& s, Eigen::Index d) {
    SolverConfig c;
    c.beta = s.at("beta");
    c.beta_prime = s.at("beta_prime");
    c.p = s.at("p");
    c.gamma = s.at("gamma");
    if (s.contains("alpha")) c.alpha = s.at("alpha").get<double>();
    if (s.contains("alpha_tilde")) c.alpha_tilde = s.at("alpha_tilde").get<double>();
    if (s.contains("q")) c.q = s.at("q").get<double>();
    c.tolerance = s.at("tolerance");
    c.residual_tolerance = s.at("residual_tolerance");
    c.max_iterations = s.at("max_iterations");
    c.budget_c0 = s.at("budget_c0");
    c.budget_kappa = s.at("budget_kappa");
    c.max_halvings = s.at("max_halvings");
    c.xi = vec_from(s.at("xi"), d);
    return c;
}

/// Driver path: brownian (seed, level), ramp-down (w_t = start - t), smooth, or a CSV file.
GridPath make_driver(const json& spec, Eigen::Index dim) {
    const auto& s = spec.at("driver");
    const auto kind = s.at("kind").get<std::string>();
    const double horizon = s.at("horizon");
    const int level = s.at("level");
    const std::size_t steps = std::size_t{1} << std::min(level, 20);
    if (kind == "brownian") return brownian_polygonal(spec.at("seed").get<std::uint64_t>(), level, horizon, dim).path();
    Grid g = Grid::uniform(steps, horizon);
    std::vector<Vec> v;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double t = g[k];
        if (kind == "ramp-down") {
            v.push_back(Vec::Constant(dim, -t));
        } else if (kind == "smooth") {
            Vec x(dim);
            for (Eigen::Index c = 0; c < dim; ++c) x(c) = 0.5 * std::sin((2.0 + c) * t) - 0.3 * t * (c == 0);
            v.push_back(x);
        } else if (kind != "file") {
            throw ValidationError("unknown driver kind " + kind + " (brownian, ramp-down, smooth, file)");
        }
    }
    if (kind == "file") {
        auto w = read_path_csv(fs::path(s.at("file").get<std::string>()));
        if (static_cast<Eigen::Index>(dimension(w)) != dim)
            throw ValidationError("path file has dimension " + std::to_string(dimension(w)) + ", expected " + std::to_string(dim));
        return w;
    }
    return GridPath(g, std::move(v));
}

void run_norms(const json& spec, Result& r) {
    const Eigen::Index dim = spec["driver"].at("dim");
    auto w = make_driver(spec, dim);
    if (w.size() > 4097) throw ValidationError("norms command is limited to 4096 steps");
    const double beta = spec["solver"].at("beta");
    auto omega = ControlFunction::interval_length(w.grid());
    for (double p : spec.at("p_values").get<std::vector<double>>()) r.series("p-variation", p, p_variation(w, p));
    r.values["holder"] = holder_norm(w, omega, beta);
    auto x = lift_piecewise_linear(LipschitzPath(w), beta);
    r.values["triple_norm"] = x.triple_norm();
    r.claim("chen_residual", chen_check(x), 0.0, 1e-12);
    for (auto [ql, q] : {std::pair{1.0, 2.0}, std::pair{1.5, 3.0}, std::pair{2.0, 4.0}}) {
        auto c = check_interpolation(w, ql, q);
        const std::string tag = "(" + format_double(ql) + "," + format_double(q) + ")";
        r.claim("interpolation_lower" + tag, c.lhs, c.middle, 1e-12 * std::max(1.0, c.middle));
        r.claim("interpolation_upper" + tag, c.middle, c.rhs, 1e-12 * std::max(1.0, c.rhs));
    }
}

void run_skorohod(const json& spec, Result& r) {
    auto d = make_domain(spec.at("domain"));
    auto w0 = make_driver(spec, d.dim());
    Vec start = spec["solver"].at("xi").is_number() && spec["driver"].at("kind") == "ramp-down"
                    ? Vec(Vec::Zero(d.dim()))
                    : vec_from(spec["solver"].at("xi"), d.dim());
    std::vector<Vec> v;
    for (const auto& x : w0.values()) v.push_back(start + x - w0[0]);
    GridPath w(w0.grid(), std::move(v));
    auto sol = skorohod_solve(d, w);
    double outside = 0.0, idle_push = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        outside = std::max(outside, -d.margin(sol.y[k]));
        if (k > 0 && sol.records[k].pushed && !sol.records[k].on_boundary) idle_push = std::max(idle_push, sol.phi.one_variation(k - 1, k));
        for (Eigen::Index c = 0; c < d.dim(); ++c) {
            r.series("y" + std::to_string(c + 1), w.time(k), sol.y[k](c));
            r.series("phi" + std::to_string(c + 1), w.time(k), sol.phi[k](c));
        }
    }
    r.claim("confinement", outside, 0.0, 1e-10);
    r.claim("complementarity", idle_push, 0.0, 0.0);
    auto bv = bv_bound_check(d, w, 1.0 / spec["solver"].at("beta").get<double>(), std::size_t{0}, w.size() - 1);
    r.claim("bv_bound", bv.lhs, bv.rhs);
    r.values["phi_final"] = sol.phi.path().back().norm();
    r.values["phi_variation"] = sol.phi.one_variation();
}

void report_solve(const SolveReport& rep, const SolverConfig& cfg, Result& r) {
    r.claim("residual_z", rep.residual_z, cfg.residual_tolerance);
    r.claim("residual_phi", rep.residual_phi, cfg.residual_tolerance);
    r.claim("confinement", rep.confined ? 0.0 : 1.0, 0.0);
    r.claim("complementarity", rep.complementary ? 0.0 : 1.0, 0.0);
    r.claim("bound_reflected", rep.bound_reflected.lhs, rep.bound_reflected.rhs);
    r.claim("bound_z", rep.bound_z.lhs, rep.bound_z.rhs);
    r.claim("bound_phi", rep.bound_phi.lhs, rep.bound_phi.rhs);
    r.claim("bound_remainder", rep.bound_remainder.lhs, rep.bound_remainder.rhs);
    r.values["kappa0"] = rep.exponents.kappa0;
    r.values["budget"] = rep.budget;
    r.values["x_tilde"] = rep.x_tilde;
    r.values["subintervals"] = rep.subintervals.size();
    r.values["max_iterations_used"] = rep.max_iterations_used();
    json bad = json::array();
    for (const auto& s : rep.subintervals)
        if (!s.converged) bad.push_back({{"begin", s.begin}, {"end", s.end}, {"iterations", s.iterations}, {"gap", s.gap}});
    r.diagnostics["nonconverged_subintervals"] = bad;
    if (!rep.converged) r.status = nonconvergence;
}

void run_solve(const json& spec, Result& r) {
    auto d = make_domain(spec.at("domain"));
    const Eigen::Index n = spec["driver"].at("dim");
    auto cfg = make_solver(spec.at("solver"), d.dim());
    auto w = make_driver(spec, n);
    if (w.size() > 8193) throw ValidationError("solve command is limited to 8192 steps");
    auto x = lift_piecewise_linear(LipschitzPath(w), cfg.beta);
    auto rep = solve_reflected_rde(make_field(spec.at("field"), d.dim(), n), d, x, cfg);
    for (std::size_t k = 0; k < rep.y.size(); ++k)
        for (Eigen::Index c = 0; c < d.dim(); ++c) {
            r.series("y" + std::to_string(c + 1), rep.y.time(k), rep.y[k](c));
            r.series("phi" + std::to_string(c + 1), rep.y.time(k), rep.phi[k](c));
        }
    report_solve(rep, cfg, r);
}

void run_wong_zakai(const json& spec, Result& r) {
    auto d = make_domain(spec.at("domain"));
    const Eigen::Index n = spec["driver"].at("dim");
    auto cfg = make_solver(spec.at("solver"), d.dim());
    cfg.compute_norms = false;
    auto levels = spec.at("levels").get<std::vector<int>>();
    if (levels.size() < 2) throw ValidationError("wong-zakai needs at least two levels");
    auto t = wong_zakai_experiment(make_field(spec.at("field"), d.dim(), n), d, spec.at("seed").get<std::uint64_t>(),
                                   levels, spec["driver"].at("horizon"), cfg);
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        r.series("e_N", t.levels[k], t.errors[k]);
        if (!t.converged[k]) r.status = nonconvergence;
    }
    for (std::size_t k = 1; k + 1 < t.levels.size(); ++k)
        r.claim("monotone_" + std::to_string(t.levels[k]), t.errors[k], 1.1 * t.errors[k - 1]);
}

void run_implicit(const json& spec, Result& r) {
    auto d = make_domain(spec.at("domain"));
    if (d.dim() != 1) throw ValidationError("implicit command uses a one-dimensional domain");
    const int level = spec["driver"].at("level");
    Grid g = Grid::uniform(std::size_t{1} << level, spec["driver"].at("horizon"));
    std::vector<Vec> eta, x;
    for (std::size_t k = 0; k < g.size(); ++k) {
        eta.push_back(Vec::Constant(1, 0.3 * std::sin(6.0 * g[k]) - 0.5 * g[k]));
        x.push_back(Vec::Constant(1, 0.4 * std::sin(4.0 * g[k]) + 0.2 * g[k]));
    }
    std::vector<int> levels;
    for (int l : spec.at("levels").get<std::vector<int>>())
        if (l <= level) levels.push_back(l);
    if (levels.size() < 2) throw ValidationError("implicit needs two partition levels not finer than the grid");
    auto rep = implicit_skorohod(d, GridPath(g, eta), GridPath(g, x), Mat::Constant(1, 1, spec.at("coupling").get<double>()),
                                 vec_from(spec["solver"].at("xi"), 1), levels);
    for (std::size_t k = 0; k < rep.gaps.size(); ++k) r.series("gap", rep.levels[k + 1], rep.gaps[k]);
    for (std::size_t k = 0; k < rep.levels.size(); ++k) r.series("phi_variation", rep.levels[k], rep.phi_variation[k]);
    for (std::size_t k = 1; k < rep.gaps.size(); ++k)
        r.claim("cauchy_" + std::to_string(rep.levels[k + 1]), rep.gaps[k], 1.1 * rep.gaps[k - 1]);
    r.values["regularity_ratio"] = rep.regularity_ratio;
}

/// Batch invariant suite. Each family draws `samples` seeded cases; a
/// perturbation hook corrupts the named family's first sample.
void run_checks(const json& spec, Result& r) {
    const int samples = spec.at("samples");
    if (samples <= 0) throw ValidationError("checks needs a positive sample count");
    const auto seed0 = spec.at("seed").get<std::uint64_t>();
    const auto perturb = spec.at("perturb").get<std::string>();
    const std::vector<std::string> families{"interpolation", "young", "bv-bound", "holder-stability", "flow", "condition-c",
                                            "translation"};
    if (!perturb.empty() && std::find(families.begin(), families.end(), perturb) == families.end())
        throw ValidationError("unknown perturbation family " + perturb);
    json failures = json::array();
    auto record = [&](const std::string& fam, std::uint64_t seed, double lhs, double rhs, double tol, int& passed) {
        if (fam == perturb && seed == seed0) lhs = rhs + 1.0 + 2.0 * std::abs(rhs);
        if (lhs <= rhs + tol)
            ++passed;
        else
            failures.push_back({{"family", fam}, {"seed", seed}, {"lhs", lhs}, {"rhs", rhs}, {"tol", tol}});
    };
    auto unit = [](std::uint64_t seed, int level, const Vec& start, double scale) {
        auto b = brownian_polygonal(seed, level, 1.0, start.size()).path();
        std::vector<Vec> v;
        for (const auto& x : b.values()) v.push_back(start + scale * x);
        return GridPath(b.grid(), std::move(v));
    };
    for (const auto& fam : families) {
        int passed = 0;
        for (int i = 0; i < samples; ++i) {
            const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
            if (fam == "interpolation") {
                auto w = unit(seed, 5, Vec::Zero(2), 1.0);
                auto c = check_interpolation(w, 1.5, 3.0);
                record(fam, seed, c.lhs, c.middle, 1e-12 * std::max(1.0, c.middle), passed);
            } else if (fam == "young") {
                auto phi = unit(seed, 5, Vec::Zero(1), 1.0);
                auto w = unit(seed + 7919, 5, Vec::Zero(2), 1.0);
                auto e = young_estimate(phi, w, ControlFunction::interval_length(w.grid()), 0.5, 0.5, 2.5, 1.5, 0, w.size() - 1);
                record(fam, seed, e.lhs, e.rhs, 0.0, passed);
            } else if (fam == "bv-bound") {
                auto w = unit(seed, 7, Vec::Constant(2, 0.5), 0.6);
                auto e = bv_bound_check(Domain::unit_box(2), w, 2.5, std::size_t{0}, w.size() - 1);
                record(fam, seed, e.lhs, e.rhs, 0.0, passed);
            } else if (fam == "holder-stability") {
                auto d = Domain::ball(Vec::Zero(2), 1.0);
                auto e = holder_stability_check(d, unit(seed, 8, Vec::Zero(2), 0.8), unit(seed + 104729, 8, Vec::Zero(2), 0.8));
                record(fam, seed, e.lhs, e.rhs, 1e-14, passed);
            } else if (fam == "flow") {
                auto w = unit(seed, 8, Vec::Constant(1, 0.2), 1.0);
                record(fam, seed, flow_check(Domain::half_line(), w, std::size_t{100}), 0.0, 1e-10, passed);
            } else if (fam == "condition-c") {
                const double a = 0.37 * static_cast<double>(seed), b = 1.91 * static_cast<double>(seed);
                auto d = Domain::ball(Vec::Zero(2), 1.0).with_witness(ConditionCWitness::ball_quadratic(Vec::Zero(2), 1.0));
                Vec x(2), y(2);
                x << std::cos(a), std::sin(a);
                y << 0.9 * std::cos(b), 0.9 * std::sin(b);
                record(fam, seed, -condition_C_check(d, x, y, -x), 0.0, 1e-12, passed);
            } else {
                auto x = lift_piecewise_linear(brownian_polygonal(seed, 8, 1.0, 2), 0.4);
                Mat s(1, 2);
                s << 1.0, -0.5;
                auto c = path_dependent(SpatialField::constant(s), 1.0);
                auto level1 = x.level1_path();
                std::vector<Vec> z;
                for (const auto& v : level1.values()) z.push_back(s * v);
                Integrand y{ControlledPath(GridPath(x.grid(), z), MatrixPath(x.grid(), std::vector<Mat>(x.grid().size(), s))),
                            BVPath::zero(x.grid(), 1)};
                std::vector<Vec> hv;
                for (std::size_t k = 0; k < x.grid().size(); ++k) hv.push_back(Vec::Constant(2, 0.2 * std::sin(5.0 * x.grid()[k])));
                record(fam, seed, translation_identity_check(c, y, x, LipschitzPath(GridPath(x.grid(), hv))), 0.0, 1e-12, passed);
            }
        }
        r.claim("pass_rate_" + fam, static_cast<double>(samples - passed) / samples, 0.0);
        r.series("pass_rate", static_cast<double>(&fam - &families[0]), static_cast<double>(passed) / samples);
    }
    r.diagnostics["failures"] = failures;
}

void write_outputs(const fs::path& dir, const json& spec, const std::string& hash, const Result& r) {
    fs::create_directories(dir);
    json rec;
    rec["experiment"] = spec.at("command").get<std::string>() + "-" + hash.substr(0, 12);
    rec["config_hash"] = hash;
    rec["status"] = r.status;
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"name", row.name}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"tolerance", row.tol},
                        {"verdict", row.pass() ? "pass" : "fail"}});
    rec["metrics"] = rows;
    rec["values"] = r.values;
    rec["diagnostics"] = r.diagnostics;
    rec["table"] = "table.csv";
    std::ofstream(dir / "result.json") << rec.dump(2) << '\n';
    std::ofstream t(dir / "table.csv", std::ios::binary);
    t << "series,x,y\n";
    for (const auto& [s, x, y] : r.table) t << s << ',' << format_double(x) << ',' << format_double(y) << '\n';
    std::ofstream(dir / "config.resolved") << spec.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rough path, Skorohod problem and reflected RDE experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    json flags = json::object();
    std::string config_file, out_dir;
    app.add_option("--config", config_file, "JSON spec file; flags override it")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (default $PRDE_OUT/<experiment>)");

    struct Opt {
        std::optional<std::uint64_t> seed;
        std::optional<int> level, dim, samples, max_iterations;
        std::optional<double> horizon, beta, beta_prime, p, gamma, alpha, alpha_tilde, q, tolerance, coupling, amplitude,
            frequency, base, xi;
        std::optional<std::string> path, domain, field, perturb, levels;
    } o;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"norms", "p-variation, Hoelder and rough-path norms of a driver"},
        {"skorohod", "Skorohod problem for a driver in a domain"},
        {"solve", "reflected rough differential equation"},
        {"wong-zakai", "errors of dyadic polygonal approximations against the finest level"},
        {"implicit", "implicit Skorohod equation on a ladder of partitions"},
        {"checks", "seeded batch of inequality and identity checks"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--seed", o.seed);
        sub->add_option("--level", o.level, "dyadic level of the driver grid");
        sub->add_option("--dim", o.dim, "driver dimension");
        sub->add_option("--horizon", o.horizon);
        sub->add_option("--path", o.path, "brownian, ramp-down, smooth or a CSV file");
        sub->add_option("--domain", o.domain, "halfline, halfplane, box, ball, triangle");
        sub->add_option("--field", o.field, "constant, linear, trigonometric");
        sub->add_option("--amplitude", o.amplitude);
        sub->add_option("--frequency", o.frequency);
        sub->add_option("--base", o.base);
        sub->add_option("--xi", o.xi, "initial value (all coordinates)");
        sub->add_option("--beta", o.beta);
        sub->add_option("--beta-prime", o.beta_prime);
        sub->add_option("--p", o.p);
        sub->add_option("--gamma", o.gamma);
        sub->add_option("--alpha", o.alpha);
        sub->add_option("--alpha-tilde", o.alpha_tilde);
        sub->add_option("--q", o.q);
        sub->add_option("--tolerance", o.tolerance);
        sub->add_option("--max-iterations", o.max_iterations);
        sub->add_option("--levels", o.levels, "comma-separated dyadic levels");
        sub->add_option("--coupling", o.coupling, "implicit coupling F");
        sub->add_option("--samples", o.samples);
        sub->add_option("--perturb", o.perturb, "checks: corrupt one family (test hook)");
    }

    auto fail = [](const std::string& kind, const std::string& msg, int code) {
        json diag{{"error", kind}, {"message", msg}, {"exit", code}};
        std::cerr << diag.dump() << '\n';
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("usage", e.what(), validation);
    }

    json spec = default_spec();
    fs::path dir;
    try {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            merge(spec, json::parse(in));
        }
        spec["command"] = app.get_subcommands().front()->get_name();
        if (o.seed) spec["seed"] = *o.seed;
        if (o.level) spec["driver"]["level"] = *o.level;
        if (o.dim) spec["driver"]["dim"] = *o.dim;
        if (o.horizon) spec["driver"]["horizon"] = *o.horizon;
        if (o.path) {
            if (*o.path == "brownian" || *o.path == "ramp-down" || *o.path == "smooth") {
                spec["driver"]["kind"] = *o.path;
            } else {
                if (!fs::exists(*o.path)) throw ValidationError("path file " + *o.path + " does not exist");
                spec["driver"]["kind"] = "file";
                spec["driver"]["file"] = *o.path;
            }
        }
        if (o.domain) spec["domain"]["kind"] = *o.domain;
        if (o.field) spec["field"]["kind"] = *o.field;
        if (o.amplitude) spec["field"]["amplitude"] = *o.amplitude;
        if (o.frequency) spec["field"]["frequency"] = *o.frequency;
        if (o.base) spec["field"]["base"] = *o.base;
        auto& sv = spec["solver"];
        if (o.xi) sv["xi"] = *o.xi;
        if (o.beta) sv["beta"] = *o.beta;
        if (o.beta_prime) sv["beta_prime"] = *o.beta_prime;
        if (o.p) sv["p"] = *o.p;
        if (o.gamma) sv["gamma"] = *o.gamma;
        if (o.alpha) sv["alpha"] = *o.alpha;
        if (o.alpha_tilde) sv["alpha_tilde"] = *o.alpha_tilde;
        if (o.q) sv["q"] = *o.q;
        if (o.tolerance) sv["tolerance"] = *o.tolerance;
        if (o.max_iterations) sv["max_iterations"] = *o.max_iterations;
        if (o.coupling) spec["coupling"] = *o.coupling;
        if (o.samples) spec["samples"] = *o.samples;
        if (o.perturb) spec["perturb"] = *o.perturb;
        if (o.levels) {
            std::vector<int> lv;
            std::stringstream ss(*o.levels);
            for (std::string tok; std::getline(ss, tok, ',');) lv.push_back(std::stoi(tok));
            spec["levels"] = lv;
        }
        if (spec["driver"]["level"].get<int>() < 1 || spec["driver"]["level"].get<int>() > 20)
            throw ValidationError("driver level must lie in [1, 20]");

        // Materialize the exponent chain; rejects malformed exponents before any work.
        auto ex = make_solver(spec["solver"], 1).resolve();
        sv["alpha"] = ex.alpha;
        sv["alpha_tilde"] = ex.alpha_tilde;
        sv["q"] = ex.q;
        sv["alpha_under"] = ex.alpha_under;
        sv["alpha_bar"] = ex.alpha_bar;
        sv["kappa0"] = ex.kappa0;
    } catch (const std::exception& e) {
        return fail("validation", e.what(), validation);
    }

    const std::string hash = content_hash(spec.dump());
    if (!out_dir.empty()) {
        dir = out_dir;
    } else {
        const char* root = std::getenv("PRDE_OUT");
        dir = fs::path(root && *root ? root : "prde-out") / (spec["command"].get<std::string>() + "-" + hash.substr(0, 12));
    }

    Result r;
    try {
        const auto cmd = spec["command"].get<std::string>();
        if (cmd == "norms") run_norms(spec, r);
        else if (cmd == "skorohod") run_skorohod(spec, r);
        else if (cmd == "solve") run_solve(spec, r);
        else if (cmd == "wong-zakai") run_wong_zakai(spec, r);
        else if (cmd == "implicit") run_implicit(spec, r);
        else run_checks(spec, r);
    } catch (const NumericalFailure& e) {
        r.status = nonconvergence;
        r.diagnostics["error"] = e.what();
    } catch (const std::exception& e) {
        return fail("validation", e.what(), validation);
    }
    if (r.status == ok)
        for (const auto& row : r.rows)
            if (!row.pass()) r.status = violation;
    try {
        write_outputs(dir, spec, hash, r);
    } catch (const std::exception& e) {
        return fail("io", e.what(), validation);
    }
    std::cout << dir.string() << '\n';
    return r.status;
}
