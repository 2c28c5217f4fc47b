#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdplab/counterexample.hpp"
#include "mdplab/mc_control.hpp"
#include "mdplab/stochastic_approx.hpp"

namespace mdplab {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/* Failure with a machine-readable kind: "io" (filesystem), "parse"
 * (malformed or structurally wrong input), "semantic" (well-formed input
 * violating model invariants), "usage" (bad flags or arguments). */
class ToolError : public std::runtime_error {
  public:
    ToolError(std::string kind, const std::string& message,
              std::vector<std::string> findings = {})
        : std::runtime_error(message), kind_(std::move(kind)), findings_(std::move(findings)) {}
    const std::string& kind() const { return kind_; }
    const std::vector<std::string>& findings() const { return findings_; }

  private:
    std::string kind_;
    std::vector<std::string> findings_;
};

inline json error_json(const std::string& kind, const std::string& message,
                       const std::vector<std::string>& findings = {}) {
    json j;
    j["format_version"] = kFormatVersion;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    j["error"]["findings"] = findings;
    return j;
}

inline json error_json(const ToolError& e) { return error_json(e.kind(), e.what(), e.findings()); }

/* round-trip double formatting for CSV cells */
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ToolError("io", "cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw ToolError("io", "read failure on " + path);
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ToolError("io", "cannot open " + path + " for writing");
    out << content;
    if (!out) throw ToolError("io", "write failure on " + path);
}

inline void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

/* gamma in files is a plain number or an exact fraction string like "3/4" */
struct GammaValue {
    double value = 0;
    std::string raw;  // empty when the file used a number
};

inline GammaValue parse_gamma(const json& j) {
    GammaValue g;
    if (j.is_number()) {
        g.value = j.get<double>();
        return g;
    }
    if (j.is_string()) {
        g.raw = j.get<std::string>();
        try {
            g.value = Rational::from_string(g.raw).to_double();
        } catch (const std::exception&) {
            throw ToolError("parse", "gamma string is not a valid rational: " + g.raw);
        }
        return g;
    }
    throw ToolError("parse", "gamma must be a number or a rational string");
}

struct LoadedMdp {
    Mdp<double> mdp;
    std::vector<Index> triangle;
    bool has_triangle = false;
    GammaValue gamma;
};

namespace detail {

inline const json& require(const json& j, const char* key, const char* type) {
    auto it = j.find(key);
    if (it == j.end()) throw ToolError("parse", std::string("missing key: ") + key);
    const json& v = *it;
    const std::string t = type;
    const bool ok = (t == "object" && v.is_object()) || (t == "array" && v.is_array()) ||
                    (t == "string" && v.is_string()) || (t == "number" && v.is_number());
    if (!ok) throw ToolError("parse", std::string(key) + " must be of type " + type);
    return v;
}

/* "x|a" -> (x, a); "x|a|y" -> (x, a, y); resolution failures go to findings */
inline bool split_key(const std::string& key, int parts, std::vector<std::string>& out) {
    out.clear();
    std::string cur;
    for (char c : key) {
        if (c == '|') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return static_cast<int>(out.size()) == parts;
}

}  // namespace detail

inline LoadedMdp mdp_from_json(const json& j) {
    if (!j.is_object()) throw ToolError("parse", "top level must be an object");
    const json& ver = detail::require(j, "format_version", "number");
    if (ver.get<int>() != kFormatVersion)
        throw ToolError("parse", "unsupported format_version");
    auto git = j.find("gamma");
    if (git == j.end()) throw ToolError("parse", "missing key: gamma");
    GammaValue gamma = parse_gamma(*git);
    const json& jstates = detail::require(j, "states", "array");
    const json& jactions = detail::require(j, "actions", "object");
    const json& jtrans = detail::require(j, "transitions", "object");

    std::vector<std::string> states;
    for (const auto& s : jstates) {
        if (!s.is_string()) throw ToolError("parse", "state names must be strings");
        states.push_back(s.get<std::string>());
    }
    if (states.empty()) throw ToolError("semantic", "state space is empty",
                                        {"state space is empty"});

    std::vector<std::string> findings;
    auto state_index = [&](const std::string& name) -> Index {
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i] == name) return static_cast<Index>(i);
        return -1;
    };
    for (std::size_t i = 0; i < states.size(); ++i)
        for (std::size_t l = i + 1; l < states.size(); ++l)
            if (states[i] == states[l]) findings.push_back("duplicate state name " + states[i]);

    std::vector<std::vector<std::string>> action_names(states.size());
    std::vector<Index> actions_per_state(states.size(), 0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        auto it = jactions.find(states[i]);
        if (it == jactions.end() || !it->is_array() || it->empty()) {
            findings.push_back("state " + states[i] + " needs a non-empty action list");
            actions_per_state[i] = 1;
            action_names[i] = {"a0"};
            continue;
        }
        for (const auto& a : *it) {
            if (!a.is_string()) throw ToolError("parse", "action names must be strings");
            action_names[i].push_back(a.get<std::string>());
        }
        actions_per_state[i] = static_cast<Index>(action_names[i].size());
    }

    MdpBuilder<double> b(actions_per_state, gamma.value);
    b.names(states, action_names);
    auto action_index = [&](Index x, const std::string& name) -> Index {
        const auto& names = action_names[static_cast<std::size_t>(x)];
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<Index>(i);
        return -1;
    };

    std::vector<std::string> parts;
    for (const auto& [key, row] : jtrans.items()) {
        if (!detail::split_key(key, 2, parts)) {
            findings.push_back("transition key is not state|action: " + key);
            continue;
        }
        const Index x = state_index(parts[0]);
        const Index a = x < 0 ? -1 : action_index(x, parts[1]);
        if (x < 0 || a < 0) {
            findings.push_back("transition key names unknown pair: " + key);
            continue;
        }
        if (!row.is_object()) throw ToolError("parse", "transition row must be an object: " + key);
        for (const auto& [target, p] : row.items()) {
            const Index y = state_index(target);
            if (y < 0) {
                findings.push_back("transition " + key + " targets unknown state " + target);
                continue;
            }
            if (!p.is_number()) throw ToolError("parse", "transition probability must be a number");
            b.transition(x, a, y, p.get<double>());
        }
    }

    if (auto it = j.find("rewards"); it != j.end()) {
        if (!it->is_object()) throw ToolError("parse", "rewards must be an object");
        for (const auto& [key, atoms] : it->items()) {
            if (!detail::split_key(key, 3, parts)) {
                findings.push_back("reward key is not state|action|state: " + key);
                continue;
            }
            const Index x = state_index(parts[0]);
            const Index a = x < 0 ? -1 : action_index(x, parts[1]);
            const Index y = state_index(parts[2]);
            if (x < 0 || a < 0 || y < 0) {
                findings.push_back("reward key names unknown triple: " + key);
                continue;
            }
            if (!atoms.is_array()) throw ToolError("parse", "reward entry must be an array: " + key);
            DiscreteDist<double> dist;
            for (const auto& atom : atoms) {
                if (!atom.is_array() || atom.size() != 2 || !atom[0].is_number() ||
                    !atom[1].is_number())
                    throw ToolError("parse", "reward atom must be [value, probability]: " + key);
                dist.support.push_back({atom[0].get<double>(), atom[1].get<double>()});
            }
            b.reward(x, a, y, dist);
        }
    }

    LoadedMdp out;
    out.mdp = b.build_unchecked();
    out.gamma = gamma;

    for (const auto& f : validate_mdp(out.mdp)) findings.push_back(f);

    if (auto it = j.find("triangle"); it != j.end()) {
        if (!it->is_array()) throw ToolError("parse", "triangle must be an array of state names");
        out.has_triangle = true;
        for (const auto& t : *it) {
            if (!t.is_string()) throw ToolError("parse", "triangle entries must be strings");
            const Index x = state_index(t.get<std::string>());
            if (x < 0)
                findings.push_back("triangle names unknown state " + t.get<std::string>());
            else
                out.triangle.push_back(x);
        }
        if (findings.empty()) {
            const auto rep = check_absorbing(out.mdp, out.triangle);
            for (const auto& f : rep.findings) findings.push_back(f.clause + ": " + f.detail);
        }
    }

    if (!findings.empty()) throw ToolError("semantic", "model validation failed", findings);
    return out;
}

inline LoadedMdp load_mdp(const std::string& path) {
    const std::string text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ToolError("parse", std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return mdp_from_json(j);
}

inline json mdp_to_json(const Mdp<double>& m, const std::vector<Index>& triangle = {},
                        const std::string& gamma_raw = "") {
    json j;
    j["format_version"] = kFormatVersion;
    if (gamma_raw.empty())
        j["gamma"] = m.gamma;
    else
        j["gamma"] = gamma_raw;
    j["states"] = m.state_names;
    json actions = json::object();
    for (Index x = 0; x < m.num_states(); ++x) {
        json list = json::array();
        for (Index a = 0; a < m.num_actions(x); ++a)
            list.push_back(
                m.action_names[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)]);
        actions[m.state_names[static_cast<std::size_t>(x)]] = list;
    }
    j["actions"] = actions;
    json trans = json::object();
    json rewards = json::object();
    for (Index x = 0; x < m.num_states(); ++x)
        for (Index a = 0; a < m.num_actions(x); ++a) {
            const Index z = m.pair_index(x, a);
            json row = json::object();
            for (Index y = 0; y < m.num_states(); ++y) {
                if (m.transition(z, y) == 0) continue;
                row[m.state_names[static_cast<std::size_t>(y)]] = m.transition(z, y);
                const auto& dist = m.reward_at(z, y);
                if (!dist.is_point_mass_at_zero()) {
                    json atoms = json::array();
                    for (const auto& [v, p] : dist.support) atoms.push_back(json::array({v, p}));
                    rewards[m.pair_name(z) + "|" +
                            m.state_names[static_cast<std::size_t>(y)]] = atoms;
                }
            }
            trans[m.pair_name(z)] = row;
        }
    j["transitions"] = trans;
    j["rewards"] = rewards;
    if (!triangle.empty()) {
        json tri = json::array();
        for (Index x : triangle) tri.push_back(m.state_names[static_cast<std::size_t>(x)]);
        j["triangle"] = tri;
    }
    return j;
}

/* ---- report emitters; every document carries format_version ---- */

inline json solve_json(const Mdp<double>& m, const OptimalSolution<double>& sol, double tol,
                       const std::string& gamma_raw = "") {
    json j;
    j["format_version"] = kFormatVersion;
    if (gamma_raw.empty())
        j["gamma"] = m.gamma;
    else
        j["gamma"] = gamma_raw;
    j["tol"] = tol;
    j["iterations"] = sol.iterations;
    json v = json::object();
    for (Index x = 0; x < m.num_states(); ++x)
        v[m.state_names[static_cast<std::size_t>(x)]] = sol.v(x);
    j["v"] = v;
    json q = json::object();
    for (Index z = 0; z < m.num_pairs(); ++z) q[m.pair_name(z)] = sol.q(z);
    j["q"] = q;
    return j;
}

inline std::string trace_csv(const std::vector<TraceRow>& rows) {
    std::string out = "# format_version=1\nk,q_err,v_err,pairs_updated\n";
    for (const auto& r : rows)
        out += std::to_string(r.k) + "," + fmt_double(r.q_err) + "," + fmt_double(r.v_err) + "," +
               std::to_string(r.pairs_updated) + "\n";
    return out;
}

inline std::string episode_csv(const Episode<double>& e) {
    std::string out = "# format_version=1\nt,x,a,r\n";
    for (Index t = 0; t < e.length(); ++t) {
        const auto& s = e.steps[static_cast<std::size_t>(t)];
        out += std::to_string(t) + "," + std::to_string(s.state) + "," +
               std::to_string(s.action) + "," + fmt_double(s.reward) + "\n";
    }
    return out;
}

struct ReplicateSummary {
    std::uint64_t replicate = 0;
    double final_q_err = 0;
    double final_v_err = 0;
    Vec<double> final_q;
    std::vector<CqdevRow> cqdev;
};

inline double quantile_sorted(std::vector<double> v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const double idx = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = lo + 1 < v.size() ? lo + 1 : lo;
    const double w = idx - static_cast<double>(lo);
    return v[lo] * (1 - w) + v[hi] * w;
}

inline json run_summary_json(const Mdp<double>& m, const std::string& algorithm,
                             std::int64_t episodes, double theta, std::int64_t stride,
                             std::uint64_t master_seed,
                             const std::vector<ReplicateSummary>& reps) {
    json j;
    j["format_version"] = kFormatVersion;
    j["algorithm"] = algorithm;
    j["episodes"] = episodes;
    j["theta"] = theta;
    j["stride"] = stride;
    j["master_seed"] = master_seed;
    j["replicates"] = reps.size();
    json arr = json::array();
    std::vector<double> qerrs, verrs;
    for (const auto& r : reps) {
        json e;
        e["replicate"] = r.replicate;
        e["final_q_err"] = r.final_q_err;
        e["final_v_err"] = r.final_v_err;
        json q = json::object();
        for (Index z = 0; z < r.final_q.size(); ++z) q[m.pair_name(z)] = r.final_q(z);
        e["final_q"] = q;
        json audit = json::array();
        for (const auto& row : r.cqdev) {
            json c;
            c["pair"] = row.name;
            c["final_eps"] = row.final_eps;
            c["sum_alpha"] = row.sum_alpha;
            c["sum_alpha_sq"] = row.sum_alpha_sq;
            c["visits"] = row.visits;
            c["never_updated"] = row.never_updated;
            c["stalled"] = row.stalled;
            audit.push_back(c);
        }
        e["schedule_audit"] = audit;
        arr.push_back(e);
        qerrs.push_back(r.final_q_err);
        verrs.push_back(r.final_v_err);
    }
    j["per_replicate"] = arr;
    json quant;
    quant["q_err"]["min"] = quantile_sorted(qerrs, 0.0);
    quant["q_err"]["median"] = quantile_sorted(qerrs, 0.5);
    quant["q_err"]["max"] = quantile_sorted(qerrs, 1.0);
    quant["v_err"]["min"] = quantile_sorted(verrs, 0.0);
    quant["v_err"]["median"] = quantile_sorted(verrs, 0.5);
    quant["v_err"]["max"] = quantile_sorted(verrs, 1.0);
    j["quantiles"] = quant;
    return j;
}

inline std::string cx_trace_csv(const std::vector<CxTraceRow>& rows) {
    std::string out = "# format_version=1\nk,zone,u,v,L0,L1,V_policy\n";
    for (const auto& r : rows)
        out += std::to_string(r.k) + "," + zone_name(r.zone) + "," + fmt_double(r.u_approx) +
               "," + fmt_double(r.v_approx) + "," + std::to_string(r.L0) + "," +
               std::to_string(r.L1) + "," + fmt_double(r.v_policy.to_double()) + "\n";
    return out;
}

inline json counterexample_json(const CxParams& p, const CxSummary& s) {
    json j;
    j["format_version"] = kFormatVersion;
    j["params"]["gamma"] = p.gamma.str();
    j["params"]["q"] = p.q.str();
    j["params"]["u0"] = p.u0.str();
    j["params"]["v0"] = p.v0.str();
    j["steps"] = s.steps;
    j["cycles"] = s.cycles;
    j["longest_dwell"] = s.longest_dwell;
    j["zone_stuck"] = s.zone_stuck;
    j["final_state"]["u"] = s.final_state.u.str();
    j["final_state"]["v"] = s.final_state.v.str();
    j["final_state"]["L0"] = s.final_state.L0;
    j["final_state"]["L1"] = s.final_state.L1;
    j["final_state"]["zone"] = zone_name(s.final_state.zone);
    const Rational h0 = p.q * harmonic_number(s.final_state.L0);
    const Rational h1 = p.q * harmonic_number(s.final_state.L1);
    j["audit"]["sum_alpha0"] = s.sum_alpha0.str();
    j["audit"]["q_harmonic0"] = h0.str();
    j["audit"]["alpha0_matches"] = s.sum_alpha0 == h0;
    j["audit"]["sum_alpha1"] = s.sum_alpha1.str();
    j["audit"]["q_harmonic1"] = h1.str();
    j["audit"]["alpha1_matches"] = s.sum_alpha1 == h1;
    j["audit"]["sum_alpha0_sq"] = s.sum_alpha0_sq.str();
    j["audit"]["sum_alpha1_sq"] = s.sum_alpha1_sq.str();
    j["max_denominator_bits"] = s.max_denominator_bits;
    json trans = json::array();
    for (const auto& t : s.transitions) {
        json e;
        e["k"] = t.k;
        e["from"] = zone_name(t.from);
        e["to"] = zone_name(t.to);
        trans.push_back(e);
    }
    j["transitions"] = trans;
    return j;
}

inline json couple_json(const Mdp<double>& m,
                        const std::vector<std::pair<std::uint64_t, CoupleReport>>& runs) {
    json j;
    j["format_version"] = kFormatVersion;
    bool all = true;
    json arr = json::array();
    for (const auto& [seed, rep] : runs) {
        json e;
        e["master_seed"] = seed;
        e["agree"] = rep.agree;
        e["episodes"] = rep.episodes;
        e["triangle_pair_visits"] = rep.triangle_pair_visits;
        if (rep.divergence) {
            json d;
            d["k"] = rep.divergence->k;
            d["kind"] = rep.divergence->kind;
            if (rep.divergence->pair >= 0)
                d["pair"] = m.pair_name(rep.divergence->pair);
            else
                d["pair"] = nullptr;
            e["divergence"] = d;
        } else {
            e["divergence"] = nullptr;
        }
        arr.push_back(e);
        all = all && rep.agree;
    }
    j["all_agree"] = all;
    j["runs"] = arr;
    return j;
}

inline json contraction_json(const SweepConfig& cfg, const SweepResult& r) {
    json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = cfg.seed;
    j["count_per_gamma"] = cfg.count;
    j["gammas"] = cfg.gammas;
    j["tuples"] = r.tuples;
    j["max_upper_violation"] = r.max_upper_violation;
    j["max_norm_violation"] = r.max_norm_violation;
    j["violations_beyond_tol"] = r.violations_beyond_tol;
    j["tol"] = r.tol;
    return j;
}

inline json robbins_monro_json(const std::string& rule, std::int64_t steps, double threshold,
                               const std::vector<std::pair<std::uint64_t, double>>& finals) {
    json j;
    j["format_version"] = kFormatVersion;
    j["rule"] = rule;
    j["steps"] = steps;
    j["threshold"] = threshold;
    int within = 0;
    json arr = json::array();
    for (const auto& [seed, z] : finals) {
        json e;
        e["seed"] = seed;
        e["final"] = z;
        e["within"] = std::abs(z) < threshold;
        if (std::abs(z) < threshold) ++within;
        arr.push_back(e);
    }
    j["seeds"] = arr;
    j["within_count"] = within;
    return j;
}

template <class Scalar>
json abstract_sa_json(const std::string& map_name, std::int64_t steps,
                      const SaResult<Scalar>& r) {
    json j;
    j["format_version"] = kFormatVersion;
    j["map"] = map_name;
    j["steps"] = steps;
    j["sup_err"] = r.sup_err;
    j["dominated"] = r.dominated;
    j["first_violation"] = r.first_violation;
    j["domination_max_gap"] = r.domination_max_gap;
    j["lambda_min_sum"] = r.lambda_min_sum;
    j["lambda_sq_max_sum"] = r.lambda_sq_max_sum;
    j["final_eta_sup"] = r.final_eta_sup;
    j["warnings"] = r.warnings;
    json trace = json::array();
    for (const auto& [k, err] : r.err_trace) trace.push_back(json::array({k, err}));
    j["err_trace"] = trace;
    return j;
}

inline std::string rm_trajectory_csv(const std::vector<double>& z) {
    std::string out = "# format_version=1\nk,z\n";
    for (std::size_t k = 0; k < z.size(); ++k)
        out += std::to_string(k) + "," + fmt_double(z[k]) + "\n";
    return out;
}

}  // namespace mdplab
