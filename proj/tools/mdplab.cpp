#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mdplab/io.hpp"
#include "mdplab/random_mdp.hpp"

namespace fs = std::filesystem;
using namespace mdplab;

namespace {

struct Common {
    std::string out_dir = ".";
    std::string format = "csv";
    int jobs = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out-dir", c.out_dir, "directory for output artifacts");
    sub->add_option("--format", c.format, "trace artifact format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--jobs", c.jobs, "parallel replicates")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "master seed override");
}

fs::path prepare_out_dir(const Common& c) {
    fs::path dir(c.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ToolError("io", "cannot create output directory " + c.out_dir);
    return dir;
}

/* a flag value: plain number or exact fraction string */
GammaValue parse_gamma_flag(const std::string& s) {
    if (s.find('/') != std::string::npos) return parse_gamma(json(s));
    try {
        return GammaValue{std::stod(s), ""};
    } catch (const std::exception&) {
        throw ToolError("usage", "gamma must be a number or a rational string: " + s);
    }
}

void apply_gamma_override(Mdp<double>& m, const GammaValue& g) {
    if (!(g.value >= 0 && g.value < 1))
        throw ToolError("semantic", "gamma override outside [0, 1)",
                        {"gamma override outside [0, 1)"});
    m.gamma = g.value;
}

Rational rational_flag(const std::string& s, const char* name) {
    try {
        return Rational::from_string(s);
    } catch (const std::exception&) {
        throw ToolError("usage", std::string(name) + " must be an exact rational: " + s);
    }
}

StartSpec<double> uniform_start(const Mdp<double>& m) {
    return StartSpec<double>::states(
        Vec<double>::Constant(m.num_states(), 1.0 / static_cast<double>(m.num_states())));
}

json trace_json(const std::vector<TraceRow>& rows) {
    json j;
    j["format_version"] = kFormatVersion;
    json arr = json::array();
    for (const auto& r : rows) {
        json e;
        e["k"] = r.k;
        e["q_err"] = r.q_err;
        e["v_err"] = r.v_err;
        e["pairs_updated"] = r.pairs_updated;
        arr.push_back(e);
    }
    j["rows"] = arr;
    return j;
}

/* ---- experiment config for run-fva / run-general ---- */

struct ExpConfig {
    std::string mdp_path;
    std::string algorithm;
    bool has_gamma_override = false;
    GammaValue gamma_override;
    double theta = 1.0;
    std::int64_t episodes = 0;
    std::int64_t replicates = 1;
    std::uint64_t master_seed = 0;
    std::int64_t stride = 100;
    double tolerance = 0;
};

ExpConfig load_exp_config(const std::string& path, const std::string& default_alg) {
    const std::string text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ToolError("parse", std::string("invalid JSON in ") + path + ": " + e.what());
    }
    if (!j.is_object()) throw ToolError("parse", "config must be an object");
    ExpConfig c;
    auto it = j.find("mdp");
    if (it == j.end() || !it->is_string())
        throw ToolError("parse", "config needs an \"mdp\" path string");
    c.mdp_path = it->get<std::string>();
    if (fs::path(c.mdp_path).is_relative())
        c.mdp_path = (fs::path(path).parent_path() / c.mdp_path).string();
    c.algorithm = j.value("algorithm", default_alg);
    if (auto g = j.find("gamma_override"); g != j.end()) {
        c.has_gamma_override = true;
        c.gamma_override = parse_gamma(*g);
    }
    c.theta = j.value("theta", 1.0);
    auto ep = j.find("episodes");
    if (ep == j.end() || !ep->is_number())
        throw ToolError("parse", "config needs a numeric \"episodes\"");
    c.episodes = ep->get<std::int64_t>();
    c.replicates = j.value("replicates", std::int64_t{1});
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    c.stride = j.value("stride", std::int64_t{100});
    c.tolerance = j.value("tolerance", 0.0);

    std::vector<std::string> findings;
    if (c.algorithm != "fva" && c.algorithm != "fva_finite" && c.algorithm != "general")
        findings.push_back("algorithm must be fva, fva_finite, or general");
    if (c.episodes < 1) findings.push_back("episodes must be at least 1");
    if (c.replicates < 1) findings.push_back("replicates must be at least 1");
    if (!(c.theta > 0 && c.theta <= 1)) findings.push_back("theta outside (0, 1]");
    if (c.stride < 1) findings.push_back("stride must be at least 1");
    if (c.tolerance < 0) findings.push_back("tolerance must be non-negative");
    if (!findings.empty()) throw ToolError("semantic", "invalid experiment config", findings);
    return c;
}

int cmd_run(const std::string& config_path, const Common& c, bool general) {
    ExpConfig cfg = load_exp_config(config_path, general ? "general" : "fva");
    if (general != (cfg.algorithm == "general"))
        throw ToolError("semantic", "config algorithm " + cfg.algorithm +
                                        " does not match this subcommand");
    if (c.seed_set) cfg.master_seed = c.seed;

    LoadedMdp loaded = load_mdp(cfg.mdp_path);
    Mdp<double>& m = loaded.mdp;
    if (cfg.has_gamma_override) apply_gamma_override(m, cfg.gamma_override);

    const auto sol = value_iteration(m, 1e-12);
    RunMode mode;
    if (cfg.algorithm == "fva_finite") {
        if (!loaded.has_triangle)
            throw ToolError("semantic", "fva_finite needs a \"triangle\" in the model file",
                            {"fva_finite needs a \"triangle\" in the model file"});
        mode = AbsorbedRun{make_absorbing_spec(m, loaded.triangle)};
    } else {
        const double tol =
            cfg.tolerance > 0 ? cfg.tolerance : 1e-9 * (1.0 - m.gamma);
        mode = truncation_for(m.gamma, m.max_abs_reward(), tol);
    }
    const auto start = uniform_start(m);

    std::vector<RunResult<double>> results(static_cast<std::size_t>(cfg.replicates));
    std::atomic<std::int64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::int64_t r = next.fetch_add(1);
            if (r >= cfg.replicates) return;
            if (general) {
                GeneralConfig<double> gc;
                gc.schedules = fva_schedules<double>(cfg.theta, start);
                gc.episodes = cfg.episodes;
                gc.master_seed = cfg.master_seed;
                gc.replicate = static_cast<std::uint64_t>(r);
                gc.trace_every = cfg.stride;
                results[static_cast<std::size_t>(r)] = run_general(m, gc, mode, &sol);
            } else {
                FvaConfig<double> fc;
                fc.start = start;
                fc.theta = cfg.theta;
                fc.episodes = cfg.episodes;
                fc.master_seed = cfg.master_seed;
                fc.replicate = static_cast<std::uint64_t>(r);
                fc.trace_every = cfg.stride;
                results[static_cast<std::size_t>(r)] = run_fva(m, fc, mode, &sol);
            }
        }
    };
    const int jobs = std::min<std::int64_t>(c.jobs, cfg.replicates);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const fs::path dir = prepare_out_dir(c);
    std::vector<ReplicateSummary> reps;
    for (std::int64_t r = 0; r < cfg.replicates; ++r) {
        const auto& res = results[static_cast<std::size_t>(r)];
        const fs::path trace_path =
            dir / ("trace_r" + std::to_string(r) + (c.format == "csv" ? ".csv" : ".json"));
        if (c.format == "csv")
            write_text(trace_path.string(), trace_csv(res.trace));
        else
            write_json(trace_path.string(), trace_json(res.trace));
        std::cout << "wrote " << trace_path.string() << "\n";
        ReplicateSummary rs;
        rs.replicate = static_cast<std::uint64_t>(r);
        rs.final_q_err = res.trace.back().q_err;
        rs.final_v_err = res.trace.back().v_err;
        rs.final_q = res.q;
        rs.cqdev = check_cqdev(m, res.audit, res.n_pairs,
                               epsilon_from_counts<double>(m, res.n_pairs, cfg.theta),
                               cfg.episodes);
        reps.push_back(std::move(rs));
    }
    const json summary = run_summary_json(m, cfg.algorithm, cfg.episodes, cfg.theta, cfg.stride,
                                          cfg.master_seed, reps);
    const fs::path sum_path = dir / "run_summary.json";
    write_json(sum_path.string(), summary);
    std::cout << "wrote " << sum_path.string() << "\n";
    std::cout << "median final q_err "
              << summary["quantiles"]["q_err"]["median"].get<double>() << "\n";
    return 0;
}

int cmd_solve(const std::string& mdp_path, const std::string& gamma_flag, double tol,
              const Common& c) {
    LoadedMdp loaded = load_mdp(mdp_path);
    std::string gamma_raw = loaded.gamma.raw;
    if (!gamma_flag.empty()) {
        const GammaValue g = parse_gamma_flag(gamma_flag);
        apply_gamma_override(loaded.mdp, g);
        gamma_raw = g.raw;
    }
    const auto sol = value_iteration(loaded.mdp, tol);
    const fs::path dir = prepare_out_dir(c);
    const fs::path out = dir / "solve.json";
    write_json(out.string(), solve_json(loaded.mdp, sol, tol, gamma_raw));
    const Mdp<double>& m = loaded.mdp;
    for (Index x = 0; x < m.num_states(); ++x)
        std::cout << "V*(" << m.state_names[static_cast<std::size_t>(x)]
                  << ") = " << fmt_double(sol.v(x)) << "\n";
    for (Index z = 0; z < m.num_pairs(); ++z)
        std::cout << "Q*(" << m.pair_name(z) << ") = " << fmt_double(sol.q(z)) << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_counterexample(const std::string& gamma, const std::string& q, const std::string& u0,
                       const std::string& v0a, const std::string& v0b, std::int64_t steps,
                       std::int64_t record_every, const Common& c) {
    CxParams p;
    p.gamma = rational_flag(gamma, "--gamma");
    p.q = rational_flag(q, "--q");
    p.u0 = ExtendedRational(rational_flag(u0, "--u0"));
    p.v0 = ExtendedRational(rational_flag(v0a, "--v0-a"), rational_flag(v0b, "--v0-b"));
    {
        const auto findings = validate_cx_params(p);
        if (!findings.empty())
            throw ToolError("semantic", "invalid counterexample parameters", findings);
    }
    const auto tr = run_counterexample(p, steps, record_every);
    const fs::path dir = prepare_out_dir(c);
    const fs::path trace_path = dir / (c.format == "csv" ? "cx_trace.csv" : "cx_trace.json");
    if (c.format == "csv") {
        write_text(trace_path.string(), cx_trace_csv(tr.rows));
    } else {
        json j;
        j["format_version"] = kFormatVersion;
        json arr = json::array();
        for (const auto& r : tr.rows) {
            json e;
            e["k"] = r.k;
            e["zone"] = zone_name(r.zone);
            e["u"] = r.u_approx;
            e["v"] = r.v_approx;
            e["L0"] = r.L0;
            e["L1"] = r.L1;
            e["V_policy"] = r.v_policy.to_double();
            arr.push_back(e);
        }
        j["rows"] = arr;
        write_json(trace_path.string(), j);
    }
    const fs::path sum_path = dir / "cx_summary.json";
    write_json(sum_path.string(), counterexample_json(p, tr.summary));
    std::cout << "wrote " << trace_path.string() << "\n";
    std::cout << "wrote " << sum_path.string() << "\n";
    std::cout << "cycles " << tr.summary.cycles << " in " << tr.summary.steps << " steps\n";
    return 0;
}

int cmd_check_contraction(int count, const Common& c) {
    SweepConfig cfg;
    cfg.count = count;
    if (c.seed_set) cfg.seed = c.seed;
    const auto r = contraction_sweep(cfg);
    const fs::path dir = prepare_out_dir(c);
    const fs::path out = dir / "contraction_report.json";
    write_json(out.string(), contraction_json(cfg, r));
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "tuples " << r.tuples << ", violations beyond tol " << r.violations_beyond_tol
              << "\n";
    return 0;
}

int cmd_check_rm(std::int64_t steps, int seeds, double threshold, double z0, bool dump,
                 const Common& c) {
    if (seeds < 1) throw ToolError("usage", "--seeds must be at least 1");
    const fs::path dir = prepare_out_dir(c);
    std::vector<std::pair<std::uint64_t, double>> finals;
    const std::uint64_t base = c.seed_set ? c.seed : 0;
    for (int s = 0; s < seeds; ++s) {
        RmConfig<double> cfg;
        cfg.theta = harmonic_theta<double>();
        cfg.noise = DiscreteDist<double>{{{1.0, 0.5}, {-1.0, 0.5}}};
        cfg.z0 = z0;
        cfg.steps = steps;
        cfg.seed = SeedSpec{base + static_cast<std::uint64_t>(s), 0, 0};
        const auto z = robbins_monro(cfg);
        finals.push_back({base + static_cast<std::uint64_t>(s), z.back()});
        if (dump) {
            const fs::path p = dir / ("rm_seed" + std::to_string(s) +
                                      (c.format == "csv" ? ".csv" : ".json"));
            if (c.format == "csv") {
                write_text(p.string(), rm_trajectory_csv(z));
            } else {
                json t;
                t["format_version"] = kFormatVersion;
                t["z"] = z;
                write_json(p.string(), t);
            }
            std::cout << "wrote " << p.string() << "\n";
        }
    }
    json report = robbins_monro_json("1/(k+2)", steps, threshold, finals);

    RmConfig<double> neg;
    neg.theta = halving_theta<double>();
    neg.noise = DiscreteDist<double>::point(0.0);
    neg.z0 = 1.0;
    neg.steps = steps;
    neg.seed = SeedSpec{base, 0, 1};
    const auto zn = robbins_monro(neg);
    report["negative"]["rule"] = "2^-(k+1)";
    report["negative"]["z0"] = 1.0;
    report["negative"]["final"] = zn.back();
    report["negative"]["limit_positive"] = zn.back() > 0.2;

    const fs::path out = dir / "robbins_monro_report.json";
    write_json(out.string(), report);
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "positive control " << report["within_count"].get<int>() << "/" << seeds
              << " within " << threshold << ", negative control final " << fmt_double(zn.back())
              << "\n";
    return 0;
}

int cmd_check_sa(std::int64_t steps, const Common& c) {
    const std::uint64_t base = c.seed_set ? c.seed : 0;
    json runs = json::array();
    bool synthetic_ok = true;

    Vec<Rational> fs_exact(3);
    fs_exact << Rational(2), Rational(-1), Rational(1, 2);
    SaConfig<Rational> rc;
    rc.lambda = [](std::int64_t) { return Vec<Rational>::Constant(3, Rational(1, 2)); };
    rc.eta = [](std::int64_t) { return Vec<Rational>::Constant(3, Rational(0)); };
    rc.xi = DiscreteDist<Rational>{
        {{Rational(1, 10), Rational(1, 2)}, {Rational(-1, 10), Rational(1, 2)}}};
    rc.f0 = Vec<Rational>::Zero(3);
    rc.steps = steps;
    rc.seed = SeedSpec{base, 0, 0};

    {
        const auto map = constant_target_map<Rational>(fs_exact);
        const auto r = abstract_sa(map, rc, steps / 10);
        json e = abstract_sa_json(map.name, steps, r);
        e["backend"] = "rational";
        runs.push_back(e);
        synthetic_ok = synthetic_ok && r.dominated;
    }
    {
        const auto map = shrink_toward_target_map<Rational>(fs_exact, Rational(1, 2));
        rc.seed = SeedSpec{base, 0, 1};
        const auto r = abstract_sa(map, rc, steps / 10);
        json e = abstract_sa_json(map.name, steps, r);
        e["backend"] = "rational";
        runs.push_back(e);
        synthetic_ok = synthetic_ok && r.dominated;
    }
    {
        RandomMdpSpec spec;
        spec.n_states = 3;
        spec.max_actions = 2;
        spec.gamma = 0.4;
        spec.seed = base + 21;
        const auto g = generate_mdp<double>(spec);
        const auto sol = value_iteration(g.mdp, 1e-12);
        const auto map = policy_evaluation_map<double>(g.mdp, sol.q);
        const Index np = g.mdp.num_pairs();
        SaConfig<double> dc;
        dc.lambda = [np](std::int64_t k) {
            return Vec<double>::Constant(np, 1.0 / static_cast<double>(k + 2));
        };
        dc.eta = [np](std::int64_t k) {
            return Vec<double>::Constant(np, std::pow(1.0 + static_cast<double>(k), -1.0));
        };
        dc.xi = DiscreteDist<double>{{{0.1, 0.5}, {-0.1, 0.5}}};
        dc.f0 = Vec<double>::Zero(np);
        dc.steps = steps;
        dc.seed = SeedSpec{base, 0, 2};
        const auto r = abstract_sa(map, dc, steps / 10);
        json e = abstract_sa_json(map.name, steps, r);
        e["backend"] = "double";
        runs.push_back(e);
    }

    json report;
    report["format_version"] = kFormatVersion;
    report["steps"] = steps;
    report["runs"] = runs;
    report["synthetic_dominated"] = synthetic_ok;
    const fs::path dir = prepare_out_dir(c);
    const fs::path out = dir / "abstract_sa_report.json";
    write_json(out.string(), report);
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "synthetic maps dominated: " << (synthetic_ok ? "yes" : "no") << "\n";
    return 0;
}

int cmd_gen_mdp(const RandomMdpSpec& spec_in, const std::string& out_name, const Common& c) {
    RandomMdpSpec spec = spec_in;
    if (c.seed_set) spec.seed = c.seed;
    {
        const auto findings = validate_random_mdp_spec(spec);
        if (!findings.empty())
            throw ToolError("semantic", "invalid generator parameters", findings);
    }
    const auto g = generate_mdp<double>(spec);
    const fs::path dir = prepare_out_dir(c);
    const fs::path out = dir / out_name;
    write_json(out.string(), mdp_to_json(g.mdp, g.triangle));
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_couple_check(const std::string& mdp_path, std::int64_t episodes, int n_seeds,
                     double theta, const Common& c) {
    if (n_seeds < 1) throw ToolError("usage", "--seeds must be at least 1");
    LoadedMdp loaded = load_mdp(mdp_path);
    if (!loaded.has_triangle)
        throw ToolError("semantic", "couple-check needs a \"triangle\" in the model file",
                        {"couple-check needs a \"triangle\" in the model file"});
    const auto spec = make_absorbing_spec(loaded.mdp, loaded.triangle);
    const auto start = uniform_start(loaded.mdp);
    const std::uint64_t base = c.seed_set ? c.seed : 0;
    std::vector<std::pair<std::uint64_t, CoupleReport>> reports;
    for (int s = 0; s < n_seeds; ++s) {
        FvaConfig<double> fc;
        fc.start = start;
        fc.theta = theta;
        fc.episodes = episodes;
        fc.master_seed = base + static_cast<std::uint64_t>(s);
        reports.push_back({fc.master_seed, couple_alg2_alg3(loaded.mdp, spec, fc)});
    }
    const json j = couple_json(loaded.mdp, reports);
    const fs::path dir = prepare_out_dir(c);
    const fs::path out = dir / "couple_report.json";
    write_json(out.string(), j);
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "all agree: " << (j["all_agree"].get<bool>() ? "yes" : "no") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabular MDP laboratory: exact solvers, Monte-Carlo control, and checks"};
    app.require_subcommand(1);

    Common common;

    auto* s_solve = app.add_subcommand("solve", "exact optimal values of an MDP file");
    std::string solve_mdp, solve_gamma;
    double solve_tol = 1e-10;
    s_solve->add_option("--mdp", solve_mdp, "model JSON file")->required();
    s_solve->add_option("--gamma", solve_gamma, "discount override (number or p/q)");
    s_solve->add_option("--tol", solve_tol, "sup-norm tolerance")->check(CLI::PositiveNumber);
    add_common(s_solve, common);

    auto* s_fva = app.add_subcommand("run-fva", "first-visit control runs from a config");
    std::string fva_config;
    s_fva->add_option("--config", fva_config, "experiment config JSON")->required();
    add_common(s_fva, common);

    auto* s_gen_run = app.add_subcommand("run-general", "schedule-driven control runs");
    std::string gen_config;
    s_gen_run->add_option("--config", gen_config, "experiment config JSON")->required();
    add_common(s_gen_run, common);

    auto* s_cx = app.add_subcommand("counterexample", "exact zone-cycle run");
    std::string cx_gamma = "3/4", cx_q = "1/10", cx_u0 = "9/4", cx_v0a = "9/4",
                cx_v0b = "1/100";
    std::int64_t cx_steps = 5000, cx_every = 1;
    s_cx->add_option("--gamma", cx_gamma, "discount, exact rational");
    s_cx->add_option("--q", cx_q, "step-size scale, exact rational");
    s_cx->add_option("--u0", cx_u0, "initial u, exact rational");
    s_cx->add_option("--v0-a", cx_v0a, "rational part of initial v");
    s_cx->add_option("--v0-b", cx_v0b, "sqrt(2) coefficient of initial v");
    s_cx->add_option("--steps", cx_steps, "step budget")->check(CLI::NonNegativeNumber);
    s_cx->add_option("--record-every", cx_every, "trace thinning")->check(CLI::PositiveNumber);
    add_common(s_cx, common);

    auto* s_contr = app.add_subcommand("check-contraction", "evaluation-bound sweep");
    int contr_count = 200;
    s_contr->add_option("--count", contr_count, "tuples per gamma")->check(CLI::PositiveNumber);
    add_common(s_contr, common);

    auto* s_rm = app.add_subcommand("check-robbins-monro", "averaging recursion controls");
    std::int64_t rm_steps = 100000;
    int rm_seeds = 10;
    double rm_threshold = 0.05, rm_z0 = 5.0;
    bool rm_dump = false;
    s_rm->add_option("--steps", rm_steps)->check(CLI::PositiveNumber);
    s_rm->add_option("--seeds", rm_seeds)->check(CLI::PositiveNumber);
    s_rm->add_option("--threshold", rm_threshold)->check(CLI::PositiveNumber);
    s_rm->add_option("--z0", rm_z0);
    s_rm->add_flag("--dump-trajectories", rm_dump, "write per-seed trajectories");
    add_common(s_rm, common);

    auto* s_sa = app.add_subcommand("check-abstract-sa", "domination runs on the map family");
    std::int64_t sa_steps = 10000;
    s_sa->add_option("--steps", sa_steps)->check(CLI::PositiveNumber);
    add_common(s_sa, common);

    auto* s_gen = app.add_subcommand("gen-mdp", "seeded random instance to a JSON file");
    RandomMdpSpec gen_spec;
    std::string gen_out = "mdp.json";
    s_gen->add_option("--states", gen_spec.n_states);
    s_gen->add_option("--max-actions", gen_spec.max_actions);
    s_gen->add_option("--gamma", gen_spec.gamma);
    s_gen->add_option("--branching", gen_spec.branching);
    s_gen->add_option("--reward-min", gen_spec.reward_min);
    s_gen->add_option("--reward-max", gen_spec.reward_max);
    s_gen->add_option("--reward-points", gen_spec.reward_points);
    s_gen->add_option("--absorbing-fraction", gen_spec.absorbing_fraction);
    s_gen->add_option("--out", gen_out, "output file name");
    add_common(s_gen, common);

    auto* s_couple = app.add_subcommand("couple-check", "absorbed/truncated agreement check");
    std::string couple_mdp;
    std::int64_t couple_episodes = 200;
    int couple_seeds = 5;
    double couple_theta = 1.0;
    s_couple->add_option("--mdp", couple_mdp, "model JSON file with a triangle")->required();
    s_couple->add_option("--episodes", couple_episodes)->check(CLI::PositiveNumber);
    s_couple->add_option("--seeds", couple_seeds)->check(CLI::PositiveNumber);
    s_couple->add_option("--theta", couple_theta);
    add_common(s_couple, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_json("usage", e.what()).dump(2) << std::endl;
        return 2;
    }

    try {
        common.seed_set = false;
        for (auto* sub : {s_solve, s_fva, s_gen_run, s_cx, s_contr, s_rm, s_sa, s_gen, s_couple})
            if (sub->parsed() && sub->count("--seed") > 0) common.seed_set = true;

        if (s_solve->parsed()) return cmd_solve(solve_mdp, solve_gamma, solve_tol, common);
        if (s_fva->parsed()) return cmd_run(fva_config, common, false);
        if (s_gen_run->parsed()) return cmd_run(gen_config, common, true);
        if (s_cx->parsed())
            return cmd_counterexample(cx_gamma, cx_q, cx_u0, cx_v0a, cx_v0b, cx_steps, cx_every,
                                      common);
        if (s_contr->parsed()) return cmd_check_contraction(contr_count, common);
        if (s_rm->parsed())
            return cmd_check_rm(rm_steps, rm_seeds, rm_threshold, rm_z0, rm_dump, common);
        if (s_sa->parsed()) return cmd_check_sa(sa_steps, common);
        if (s_gen->parsed()) return cmd_gen_mdp(gen_spec, gen_out, common);
        if (s_couple->parsed())
            return cmd_couple_check(couple_mdp, couple_episodes, couple_seeds, couple_theta,
                                    common);
        return 2;
    } catch (const ToolError& e) {
        std::cerr << error_json(e).dump(2) << std::endl;
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << error_json("semantic", e.what()).dump(2) << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << error_json("internal", e.what()).dump(2) << std::endl;
        return 2;
    }
}
