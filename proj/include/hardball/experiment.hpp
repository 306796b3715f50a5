#pragma once

// Experiment orchestration behind the CLI: spec files (`key = value` lines
// with # comments), per-command key schemas, manifest emission and replay,
// output artifacts, and the exit-code contract (0 success, 1 input error,
// 2 invariant violation). Every run writes manifest.json first; a run whose
// trajectory violates the hard-core or local-time-support invariants never
// writes trajectory/ledger output.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardball/brownian.hpp"
#include "hardball/cluster.hpp"
#include "hardball/diagnostics.hpp"
#include "hardball/fcp.hpp"
#include "hardball/geometry.hpp"
#include "hardball/gibbs.hpp"
#include "hardball/integrator.hpp"
#include "hardball/io.hpp"
#include "hardball/potentials.hpp"
#include "hardball/skorohod.hpp"

namespace hardball {

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
    std::string command;
    std::map<std::string, std::string> kv;
};

namespace experiment_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline const std::set<std::string>& allowed_keys(const std::string& command) {
    static const std::set<std::string> base = {
        "seed", "level", "T", "dim", "radius", "box", "potential", "beta", "a",
        "cutoff", "init", "config", "n_balls", "sweeps", "proposal_scale", "lattice_spacing"};
    static const std::map<std::string, std::set<std::string>> table = [] {
        std::map<std::string, std::set<std::string>> t;
        t["simulate"] = base;
        auto refine = base;
        refine.erase("level");
        refine.insert("n_min");
        refine.insert("n_max");
        t["refine-study"] = refine;
        auto uniq = base;
        uniq.insert("delta");
        t["uniqueness-probe"] = uniq;
        auto cluster = base;
        cluster.insert("windows");
        cluster.insert("eps");
        t["cluster-sim"] = cluster;
        std::set<std::string> gibbs = {"seed", "dim", "radius", "box", "potential", "beta",
                                       "a", "cutoff", "n_balls", "sweeps", "proposal_scale"};
        t["gibbs-sample"] = gibbs;
        auto rev = gibbs;
        rev.insert("level");
        rev.insert("T");
        rev.insert("replicas");
        rev.insert("control");
        t["reversibility"] = rev;
        auto diag = base;
        diag.insert("ell");
        diag.insert("delta");
        t["diagnostics"] = diag;
        return t;
    }();
    const auto it = table.find(command);
    if (it == table.end()) throw std::invalid_argument("unknown command: " + command);
    return it->second;
}

} // namespace experiment_detail

/// Parse a `key = value` spec file; `#` starts a comment. Unknown keys are
/// rejected with the line number.
inline ExperimentSpec parse_spec_text(const std::string& text, const std::string& command) {
    ExperimentSpec spec;
    spec.command = command;
    const auto& allowed = experiment_detail::allowed_keys(command);
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = experiment_detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = experiment_detail::trim(line.substr(0, eq));
        const std::string value = experiment_detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key or value");
        if (!allowed.count(key))
            throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown key `" + key + "`");
        if (spec.kv.count(key))
            throw std::invalid_argument("line " + std::to_string(lineno) + ": duplicate key `" + key + "`");
        spec.kv[key] = value;
    }
    return spec;
}

/// Load a spec from either a `key = value` file or a manifest.json produced
/// by a previous run (replay).
inline ExperimentSpec load_spec(const std::string& path, const std::string& command) {
    const std::string text = io::read_file(path);
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        const nlohmann::json j = nlohmann::json::parse(text);
        ExperimentSpec spec;
        spec.command = j.at("command").get<std::string>();
        if (spec.command != command)
            throw std::invalid_argument("manifest command `" + spec.command +
                                        "` does not match requested `" + command + "`");
        const auto& allowed = experiment_detail::allowed_keys(command);
        for (const auto& [k, v] : j.at("spec").items()) {
            if (!allowed.count(k)) throw std::invalid_argument("unknown key `" + k + "` in manifest");
            spec.kv[k] = v.get<std::string>();
        }
        return spec;
    }
    return parse_spec_text(text, command);
}

namespace experiment_detail {

struct Resolved {
    ExperimentSpec spec;  // with defaults folded in

    std::string get(const std::string& key) const { return spec.kv.at(key); }
    bool has(const std::string& key) const { return spec.kv.count(key) != 0; }

    double number(const std::string& key) const {
        const std::string v = get(key);
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw std::invalid_argument("key `" + key + "`: expected a number, got `" + v + "`");
        }
    }

    long long integer(const std::string& key) const {
        const double x = number(key);
        const long long i = static_cast<long long>(x);
        if (static_cast<double>(i) != x)
            throw std::invalid_argument("key `" + key + "`: expected an integer");
        return i;
    }

    std::uint64_t seed() const {
        try {
            return std::stoull(get("seed"));
        } catch (const std::exception&) {
            throw std::invalid_argument("key `seed`: expected an unsigned integer");
        }
    }
};

inline void default_key(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    if (allowed_keys(spec.command).count(key) && !spec.kv.count(key)) spec.kv[key] = value;
}

inline Resolved resolve(const ExperimentSpec& in) {
    ExperimentSpec spec = in;
    default_key(spec, "seed", "1");
    default_key(spec, "level", "10");
    default_key(spec, "T", "1");
    default_key(spec, "dim", "2");
    default_key(spec, "radius", "1");
    default_key(spec, "box", "free");
    default_key(spec, "potential", "none");
    default_key(spec, "beta", "1");
    default_key(spec, "cutoff", spec.kv.count("potential") && spec.kv["potential"] != "none"
                                    ? "8r" : "none");
    default_key(spec, "init", "lattice");
    default_key(spec, "n_balls", "2");
    default_key(spec, "sweeps", "200");
    default_key(spec, "proposal_scale", "0.3");
    default_key(spec, "lattice_spacing", "2r");
    default_key(spec, "delta", spec.command == "uniqueness-probe" ? "1e-6" : "0.01");
    default_key(spec, "replicas", "200");
    default_key(spec, "control", "equilibrium");
    default_key(spec, "n_min", "6");
    default_key(spec, "n_max", "10");
    default_key(spec, "ell", "5");

    Resolved r;
    r.spec = std::move(spec);

    // Resolve radius-relative shorthands (`8r`) to concrete numbers so the
    // manifest is fully explicit.
    const double radius = r.number("radius");
    for (const std::string key : {"cutoff", "lattice_spacing"}) {
        if (!r.has(key)) continue;
        std::string v = r.get(key);
        if (!v.empty() && v.back() == 'r' && v != "r") {
            v.pop_back();
            try {
                const double mult = std::stod(v);
                r.spec.kv[key] = io::format_double(mult * radius);
            } catch (const std::exception&) {
                throw std::invalid_argument("key `" + key + "`: bad value");
            }
        }
    }

    // Window count default scales re-clustering with resolution.
    if (r.spec.command == "cluster-sim" && !r.has("windows")) {
        const double T = r.number("T");
        const double level = r.number("level");
        const int M = static_cast<int>(std::ceil(T * std::pow(2.0, level / 2.0)));
        r.spec.kv["windows"] = std::to_string(std::max(1, M));
    }
    if (r.spec.command == "cluster-sim" && !r.has("eps")) {
        r.spec.kv["eps"] = r.get("cutoff") != "none" ? r.get("cutoff")
                                                     : io::format_double(3.0 * radius);
    }
    return r;
}

inline std::optional<double> parse_optional_number(const Resolved& r, const std::string& key) {
    if (!r.has(key) || r.get(key) == "none" || r.get(key) == "free") return std::nullopt;
    return r.number(key);
}

inline PairPotential build_pair(const Resolved& r) {
    const std::string kind = r.get("potential");
    const double radius = r.number("radius");
    const std::optional<double> cutoff = parse_optional_number(r, "cutoff");
    if (kind == "none") return PairPotential::none(radius);
    if (kind == "lj") return PairPotential::lennard_jones(r.number("beta"), radius, cutoff);
    if (kind == "riesz") {
        if (!r.has("a")) throw std::invalid_argument("riesz potential requires key `a`");
        PairPotential p = PairPotential::riesz(r.number("a"), r.number("beta"), radius, cutoff);
        p.validate(static_cast<int>(r.integer("dim")));
        return p;
    }
    throw std::invalid_argument("key `potential`: expected none|lj|riesz, got `" + kind + "`");
}

inline BallConfiguration lattice_free(int n, int dim, double radius, double spacing) {
    if (spacing < radius) throw std::invalid_argument("lattice spacing below hard core");
    int m = 1;
    while (std::pow(m, dim) < n) ++m;
    BallConfiguration c;
    c.dim = dim;
    c.radius = radius;
    c.pos.resize(static_cast<std::size_t>(n) * dim);
    for (int b = 0; b < n; ++b) {
        int rem = b;  // lattice site from the base-m digits of the label
        for (int d = 0; d < dim; ++d) {
            c.pos[static_cast<std::size_t>(b) * dim + d] = (rem % m - 0.5 * (m - 1)) * spacing;
            rem /= m;
        }
    }
    return c;
}

inline BallConfiguration build_initial(const Resolved& r, const PairPotential& pair,
                                       const FreePotential& free_potential) {
    const std::string init = r.get("init");
    if (init == "file") {
        if (!r.has("config")) throw std::invalid_argument("init=file requires key `config`");
        return io::read_configuration_file(r.get("config"));
    }
    const int n = static_cast<int>(r.integer("n_balls"));
    const int dim = static_cast<int>(r.integer("dim"));
    const double radius = r.number("radius");
    const std::optional<double> box = parse_optional_number(r, "box");
    if (init == "lattice") {
        if (box) {
            GibbsSamplerConfig cfg;
            cfg.box = *box;
            cfg.n_balls = n;
            cfg.dim = dim;
            cfg.radius = radius;
            return lattice_configuration(cfg);
        }
        return lattice_free(n, dim, radius, r.number("lattice_spacing"));
    }
    if (init == "gibbs") {
        if (!box) throw std::invalid_argument("init=gibbs requires a periodic box");
        GibbsSamplerConfig cfg;
        cfg.box = *box;
        cfg.n_balls = n;
        cfg.dim = dim;
        cfg.radius = radius;
        cfg.sweeps = static_cast<int>(r.integer("sweeps"));
        cfg.proposal_scale = r.number("proposal_scale");
        cfg.seed = rng::key_hash({r.seed(), 0x91bb5});
        return gibbs_sample(cfg, pair, free_potential);
    }
    throw std::invalid_argument("key `init`: expected lattice|gibbs|file, got `" + init + "`");
}

inline nlohmann::json manifest_json(const Resolved& r) {
    nlohmann::json j;
    j["command"] = r.spec.command;
    j["seed"] = r.get("seed");
    nlohmann::json spec = nlohmann::json::object();
    for (const auto& [k, v] : r.spec.kv) spec[k] = v;
    j["spec"] = spec;
    return j;
}

inline void check_invariants_or_throw(const SimResult& run, nlohmann::json& summary) {
    const InvariantSummary inv = scan_invariants(run);
    summary["min_pair_distance"] = inv.min_pair_distance;
    summary["max_local_time_support_gap"] = inv.max_support_gap;
    summary["hard_core_ok"] = inv.hard_core_ok;
    summary["local_time_support_ok"] = inv.support_ok;
    if (!inv.hard_core_ok)
        throw InvariantViolation("hard-core invariant violated: min pair distance " +
                                 io::format_double(inv.min_pair_distance));
    if (!inv.support_ok)
        throw InvariantViolation("local-time support violated: worst contact gap " +
                                 io::format_double(inv.max_support_gap));
}

} // namespace experiment_detail

/// Execute a parsed spec, writing artifacts under out_dir. Returns the exit
/// status: 0 success, 1 input error, 2 invariant violation.
inline int run_experiment(const ExperimentSpec& raw, const std::string& out_dir) {
    namespace ed = experiment_detail;
    namespace fs = std::filesystem;
    nlohmann::json summary;
    std::string manifest_path;
    try {
        const ed::Resolved r = ed::resolve(raw);
        fs::create_directories(out_dir);
        manifest_path = out_dir + "/manifest.json";
        io::write_file(manifest_path, ed::manifest_json(r).dump(2) + "\n");

        const std::string& cmd = r.spec.command;
        const FreePotential free_potential = FreePotential::zero();

        if (cmd == "gibbs-sample") {
            const PairPotential pair = ed::build_pair(r);
            GibbsSamplerConfig cfg;
            cfg.box = r.number("box");
            cfg.n_balls = static_cast<int>(r.integer("n_balls"));
            cfg.dim = static_cast<int>(r.integer("dim"));
            cfg.radius = r.number("radius");
            cfg.sweeps = static_cast<int>(r.integer("sweeps"));
            cfg.proposal_scale = r.number("proposal_scale");
            cfg.seed = r.seed();
            const BallConfiguration sample = gibbs_sample(cfg, pair, free_potential);
            io::write_file(out_dir + "/configuration.txt", io::configuration_table(sample));
            summary["n_balls"] = sample.n_balls();
            summary["min_pair_distance"] = min_pair_distance(sample);
            summary["burn_in_sweeps"] = cfg.sweeps / 2;
            summary["valid"] = validate(sample);
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
            return 0;
        }

        if (cmd == "reversibility") {
            const PairPotential pair = ed::build_pair(r);
            GibbsSamplerConfig cfg;
            cfg.box = r.number("box");
            cfg.n_balls = static_cast<int>(r.integer("n_balls"));
            cfg.dim = static_cast<int>(r.integer("dim"));
            cfg.radius = r.number("radius");
            cfg.sweeps = static_cast<int>(r.integer("sweeps"));
            cfg.proposal_scale = r.number("proposal_scale");
            cfg.seed = r.seed();
            const ReplicaInit init = r.get("control") == "lattice" ? ReplicaInit::Lattice
                                                                   : ReplicaInit::Equilibrium;
            const ReversibilityReport rep = reversibility_test(
                cfg, pair, free_potential, static_cast<int>(r.integer("level")), r.number("T"),
                static_cast<int>(r.integer("replicas")), init);
            std::ostringstream hist;
            hist << "bin_left,bin_right,count_before,count_after\n";
            for (std::size_t i = 0; i < rep.before.size(); ++i)
                hist << io::format_double(rep.bin_left[i]) << ',' << io::format_double(rep.bin_right[i])
                     << ',' << rep.before[i] << ',' << rep.after[i] << '\n';
            io::write_file(out_dir + "/histograms.csv", hist.str());
            summary["chi_square"] = rep.chi_square;
            summary["dof"] = rep.dof;
            summary["p_value"] = rep.p_value;
            summary["pass"] = rep.pass;
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
            return 0;
        }

        // Remaining commands share the simulate scaffolding.
        const PairPotential pair = ed::build_pair(r);
        BallConfiguration x0 = ed::build_initial(r, pair, free_potential);
        if (!validate(x0)) throw std::invalid_argument("initial configuration violates the hard core");
        const std::optional<double> box = ed::parse_optional_number(r, "box");
        if (box && pair.cutoff() && *pair.cutoff() > *box / 2.0)
            throw std::invalid_argument("cutoff exceeds half the box");

        if (cmd == "refine-study") {
            std::vector<int> levels;
            for (long long n = r.integer("n_min"); n <= r.integer("n_max"); ++n)
                levels.push_back(static_cast<int>(n));
            const RefinementStudy study =
                refinement_study(x0, pair, free_potential, r.seed(), levels, r.number("T"));
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& row : study.rows)
                rows.push_back({{"level_coarse", row.level_coarse},
                                {"level_fine", row.level_fine},
                                {"sup_gap", row.sup_gap}});
            summary["rows"] = rows;
            summary["slope_log2"] = study.slope_log2;
            summary["rate"] = study.rate;
            summary["monotone_decreasing"] = study.monotone_decreasing;
            const DyadicBrownianPath path(r.seed(), levels.back(), r.number("T"), x0.n_balls(), x0.dim);
            const SimResult run = simulate_ske_n(x0, pair, free_potential, path);
            ed::check_invariants_or_throw(run, summary);
            io::write_file(out_dir + "/trajectory.csv", io::trajectory_csv(run.trajectory, run.dt));
            io::write_file(out_dir + "/ledger.csv", io::ledger_csv(run.ledger));
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
            return 0;
        }

        const int level = static_cast<int>(r.integer("level"));
        const double T = r.number("T");
        const DyadicBrownianPath path(r.seed(), level, T, x0.n_balls(), x0.dim);

        if (cmd == "simulate" || cmd == "diagnostics") {
            if (cmd == "diagnostics") {
                // NBJ wants labels ordered by initial distance from origin.
                const std::vector<int> order = order_by_initial_distance(x0);
                BallConfiguration sorted = x0;
                for (std::size_t i = 0; i < order.size(); ++i)
                    for (int c = 0; c < x0.dim; ++c) sorted.ball(static_cast<int>(i))[c] = x0.ball(order[i])[c];
                x0 = sorted;
            }
            const SimResult run = simulate_ske_n(x0, pair, free_potential, path);
            ed::check_invariants_or_throw(run, summary);
            if (free_potential.is_zero()) {
                const std::vector<double> res = momentum_residual(run, path);
                double linf = 0.0;
                for (double v : res) linf = std::max(linf, std::abs(v));
                summary["momentum_residual_linf"] = linf;
            }
            if (cmd == "diagnostics") {
                summary["nbj_m"] = no_big_jump_index(run.trajectory, r.number("ell"));
                summary["trajectory_modulus_of_continuity"] =
                    modulus_of_continuity(run.trajectory, run.dt, r.number("delta"));
                std::vector<std::vector<double>> noise_values(
                    static_cast<std::size_t>(path.steps()) + 1,
                    std::vector<double>(static_cast<std::size_t>(x0.n_balls()) * x0.dim, 0.0));
                for (std::int64_t k = 0; k < path.steps(); ++k)
                    for (int b = 0; b < x0.n_balls(); ++b)
                        for (int c = 0; c < x0.dim; ++c)
                            noise_values[k + 1][static_cast<std::size_t>(b) * x0.dim + c] =
                                noise_values[k][static_cast<std::size_t>(b) * x0.dim + c] +
                                path.increment(b, k, c);
                summary["noise_modulus_of_continuity"] =
                    modulus_of_continuity(noise_values, run.dt, r.number("delta"));
                // Empirical exterior-sphere probe at a two-ball contact.
                BallConfiguration contact;
                contact.dim = x0.dim;
                contact.radius = x0.radius;
                contact.pos.assign(static_cast<std::size_t>(2) * x0.dim, 0.0);
                contact.pos[x0.dim] = x0.radius;
                nlohmann::json probes = nlohmann::json::object();
                for (double alpha : {0.25, 0.5, 0.75, 1.0})
                    probes[io::format_double(alpha)] = exterior_sphere_probe(
                        contact, {0, 1, 0.0}, alpha * x0.radius, 2000, r.seed());
                summary["exterior_sphere_probe"] = probes;
            }
            io::write_file(out_dir + "/trajectory.csv", io::trajectory_csv(run.trajectory, run.dt));
            io::write_file(out_dir + "/ledger.csv", io::ledger_csv(run.ledger));
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
            return 0;
        }

        if (cmd == "uniqueness-probe") {
            BallConfiguration x0p = x0;
            x0p.pos[0] += r.number("delta");
            if (!validate(x0p)) throw std::invalid_argument("perturbed start violates the hard core");
            const UniquenessReport rep = uniqueness_probe(x0, x0p, pair, free_potential, path);
            summary["start_gap"] = rep.start_gap;
            summary["sup_divergence"] = rep.sup_divergence;
            summary["first_contact_time"] =
                rep.first_contact_step < 0 ? nlohmann::json() : nlohmann::json(rep.first_contact_time);
            summary["lipschitz_K"] = rep.lipschitz_K;
            summary["gronwall_pass"] = rep.gronwall_pass;
            summary["fitted_C"] = rep.fitted_C;
            const SimResult run = simulate_ske_n(x0, pair, free_potential, path);
            ed::check_invariants_or_throw(run, summary);
            io::write_file(out_dir + "/trajectory.csv", io::trajectory_csv(run.trajectory, run.dt));
            io::write_file(out_dir + "/ledger.csv", io::ledger_csv(run.ledger));
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
            return 0;
        }

        if (cmd == "cluster-sim") {
            const int windows = static_cast<int>(r.integer("windows"));
            const double eps = r.number("eps");
            const LocalizedResult loc =
                localized_simulate(x0, pair, free_potential, path, windows, eps);
            SimResult as_run;
            as_run.trajectory = loc.trajectory;
            as_run.ledger = loc.ledger;
            as_run.dt = loc.dt;
            ed::check_invariants_or_throw(as_run, summary);
            nlohmann::json parts = nlohmann::json::array();
            for (const auto& w : loc.windows) {
                nlohmann::json jw;
                jw["window"] = w.window;
                jw["t0"] = w.t0;
                jw["t1"] = w.t1;
                jw["groups"] = w.groups;
                jw["merges"] = w.merges;
                nlohmann::json triggers = nlohmann::json::array();
                for (const auto& [a, b] : w.merge_triggers) triggers.push_back({a, b});
                jw["merge_triggers"] = triggers;
                jw["guard_pass"] = true;  // commit implies all guards passed
                parts.push_back(jw);
            }
            io::write_file(out_dir + "/partitions.json", parts.dump(2) + "\n");
            io::write_file(out_dir + "/trajectory.csv", io::trajectory_csv(loc.trajectory, loc.dt));
            io::write_file(out_dir + "/ledger.csv", io::ledger_csv(loc.ledger));
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
            return 0;
        }

        throw std::invalid_argument("unknown command: " + cmd);
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        summary["violation"] = e.what();
        if (!manifest_path.empty())
            io::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    }
}

/// Convenience entry: load the spec file (or manifest) and run.
inline int run_experiment_file(const std::string& spec_path, const std::string& command,
                               const std::string& out_dir,
                               std::optional<std::uint64_t> seed_override = std::nullopt,
                               std::string* error = nullptr) {
    try {
        ExperimentSpec spec = load_spec(spec_path, command);
        if (seed_override) spec.kv["seed"] = std::to_string(*seed_override);
        return run_experiment(spec, out_dir);
    } catch (const std::invalid_argument& e) {
        if (error) *error = e.what();
        return 1;
    } catch (const nlohmann::json::exception& e) {
        if (error) *error = e.what();
        return 1;
    }
}

} // namespace hardball
