#pragma once

// Finite-cluster engine: windowed decomposition into independently evolving
// clusters, guard-event monitoring with merge-on-violation replay, and grid
// witnesses for the finite-cluster property.
//
// Within a window each cluster evolves with intra-cluster forces and its own
// keyed noise streams only; dropping the rest of the system is justified by
// the guard margin (no outside ball approaches within r + eps_guard) plus
// the potential cutoff (no dropped force once eps >= cutoff). When a guard
// check fails, the offending clusters are merged and the window is replayed
// with identical noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardball/geometry.hpp"
#include "hardball/integrator.hpp"

namespace hardball {

struct ClusterPartition {
    double t0 = 0.0;
    double t1 = 0.0;
    double eps = 0.0;
    std::vector<std::vector<int>> groups;
    std::vector<int> frozen_env;  // indices treated as environment
};

/// Partition by the contact graph with margin eps; all inter-cluster
/// distances exceed r + eps.
inline ClusterPartition detect_clusters(const BallConfiguration& config, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("cluster margin must be positive");
    ClusterPartition part;
    part.eps = eps;
    part.groups = contact_graph_components(config, eps);
    return part;
}

/// Discrete guard event: every cluster ball stays at distance greater than
/// r + eps_guard from every environment ball throughout the window. The two
/// trajectories must share the grid.
inline bool guard_check(const std::vector<BallConfiguration>& cluster_traj,
                        const std::vector<BallConfiguration>& env_traj, double eps_guard) {
    if (cluster_traj.size() != env_traj.size()) throw std::invalid_argument("grid mismatch");
    if (env_traj.empty() || env_traj.front().n_balls() == 0) return true;
    for (std::size_t k = 0; k < cluster_traj.size(); ++k) {
        const auto& a = cluster_traj[k];
        const auto& b = env_traj[k];
        const double thr = a.radius + eps_guard;
        for (int i = 0; i < a.n_balls(); ++i)
            for (int j = 0; j < b.n_balls(); ++j) {
                double s2 = 0.0;
                for (int c = 0; c < a.dim; ++c) {
                    double d = a.ball(i)[c] - b.ball(j)[c];
                    if (a.box) d -= *a.box * std::round(d / *a.box);
                    s2 += d * d;
                }
                if (std::sqrt(s2) <= thr) return false;
            }
    }
    return true;
}

struct WindowRecord {
    int window = 0;
    std::int64_t step_begin = 0;
    std::int64_t step_end = 0;
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<std::vector<int>> groups;               // committed partition
    int merges = 0;                                     // replays needed
    std::vector<std::pair<int, int>> merge_triggers;    // ball pairs that forced merges
};

struct LocalizedResult {
    std::vector<BallConfiguration> trajectory;  // full system, every fine step
    ReflectionLedger ledger;
    std::vector<WindowRecord> windows;
    double dt = 0.0;
};

namespace detail {

inline BallConfiguration sub_configuration(const BallConfiguration& full,
                                           const std::vector<int>& members) {
    BallConfiguration sub;
    sub.dim = full.dim;
    sub.radius = full.radius;
    sub.box = full.box;
    sub.pos.resize(members.size() * static_cast<std::size_t>(full.dim));
    for (std::size_t i = 0; i < members.size(); ++i)
        for (int c = 0; c < full.dim; ++c)
            sub.pos[i * full.dim + c] = full.ball(members[i])[c];
    return sub;
}

/// Closest offending ball pair between two evolved groups, or nullopt.
inline std::optional<std::pair<int, int>> guard_violation(const SimResult& ra,
                                                          const std::vector<int>& ma,
                                                          const SimResult& rb,
                                                          const std::vector<int>& mb,
                                                          double threshold) {
    double best = threshold;
    std::optional<std::pair<int, int>> hit;
    for (std::size_t k = 0; k < ra.trajectory.size(); ++k) {
        const auto& a = ra.trajectory[k];
        const auto& b = rb.trajectory[k];
        for (int i = 0; i < a.n_balls(); ++i)
            for (int j = 0; j < b.n_balls(); ++j) {
                double s2 = 0.0;
                for (int c = 0; c < a.dim; ++c) {
                    double d = a.ball(i)[c] - b.ball(j)[c];
                    if (a.box) d -= *a.box * std::round(d / *a.box);
                    s2 += d * d;
                }
                const double s = std::sqrt(s2);
                if (s <= best) {
                    best = s;
                    hit = {std::min(ma[i], mb[j]), std::max(ma[i], mb[j])};
                }
            }
    }
    return hit;
}

} // namespace detail

/// Windowed cluster evolution of the whole system. Balls flagged frozen in
/// opts act as environment with known (static) trajectories; a guard
/// violation against them pulls the frozen ball into the cluster as an
/// obstacle on replay.
inline LocalizedResult localized_simulate(const BallConfiguration& x0, const PairPotential& pair,
                                          const FreePotential& free_potential,
                                          const DyadicBrownianPath& path, int M, double eps,
                                          const SimOptions& opts = {}) {
    if (M < 1) throw std::invalid_argument("window count must be >= 1");
    if (!validate(x0)) throw std::invalid_argument("infeasible start configuration");
    const int n = x0.n_balls();
    const std::int64_t total_steps = path.steps();
    if (total_steps < M) throw std::invalid_argument("more windows than steps");
    const double h = path.dt();
    const double eps_guard = eps / 2.0;

    LocalizedResult out;
    out.dt = h;
    out.ledger.dim = x0.dim;
    out.trajectory.reserve(static_cast<std::size_t>(total_steps) + 1);
    out.trajectory.push_back(x0);

    BallConfiguration current = x0;
    for (int w = 0; w < M; ++w) {
        const std::int64_t begin = total_steps * w / M;
        const std::int64_t end = total_steps * (w + 1) / M;
        if (end == begin) continue;

        WindowRecord rec;
        rec.window = w;
        rec.step_begin = begin;
        rec.step_end = end;
        rec.t0 = static_cast<double>(begin) * h;
        rec.t1 = static_cast<double>(end) * h;

        // Start from the contact-graph partition at the window start and
        // accumulate merge edges across replays.
        std::vector<std::pair<int, int>> merge_edges;
        std::vector<std::vector<int>> groups;
        std::vector<SimResult> results;
        while (true) {
            groups.clear();
            {
                auto base = contact_graph_components(current, eps);
                // fold merge edges into the partition
                std::map<int, int> group_of;
                for (std::size_t g = 0; g < base.size(); ++g)
                    for (int b : base[g]) group_of[b] = static_cast<int>(g);
                detail::UnionFind uf(static_cast<int>(base.size()));
                for (const auto& [a, b] : merge_edges) uf.unite(group_of[a], group_of[b]);
                std::map<int, std::vector<int>> merged;
                for (std::size_t g = 0; g < base.size(); ++g) {
                    auto& dst = merged[uf.find(static_cast<int>(g))];
                    dst.insert(dst.end(), base[g].begin(), base[g].end());
                }
                for (auto& [root, members] : merged) {
                    std::sort(members.begin(), members.end());
                    groups.push_back(std::move(members));
                }
            }

            // Evolve each group independently; groups share no state, so the
            // window can fan out across threads.
            results.assign(groups.size(), {});
            std::vector<std::future<SimResult>> futures(groups.size());
            for (std::size_t g = 0; g < groups.size(); ++g) {
                futures[g] = std::async(std::launch::async, [&, g]() {
                    const auto& members = groups[g];
                    SimOptions sub_opts;
                    sub_opts.proj = opts.proj;
                    sub_opts.first_step = begin;
                    sub_opts.n_steps = end - begin;
                    sub_opts.keep_step_ledgers = true;
                    sub_opts.noise_ids = members;
                    if (!opts.frozen.empty()) {
                        sub_opts.frozen.resize(members.size());
                        for (std::size_t i = 0; i < members.size(); ++i)
                            sub_opts.frozen[i] = opts.frozen[members[i]];
                    }
                    bool all_frozen = !sub_opts.frozen.empty();
                    for (std::size_t i = 0; i < sub_opts.frozen.size() && all_frozen; ++i)
                        all_frozen = sub_opts.frozen[i];
                    BallConfiguration sub = detail::sub_configuration(current, members);
                    if (all_frozen && !members.empty()) {
                        // Pure environment group: static trajectory.
                        SimResult res;
                        res.dt = h;
                        res.ledger.dim = sub.dim;
                        res.trajectory.assign(static_cast<std::size_t>(end - begin) + 1, sub);
                        res.step_ledgers.assign(static_cast<std::size_t>(end - begin), {});
                        return res;
                    }
                    return simulate_ske_n(sub, pair, free_potential, path, sub_opts);
                });
            }
            for (std::size_t g = 0; g < groups.size(); ++g) results[g] = futures[g].get();

            // Guard checks between every pair of groups.
            std::optional<std::pair<int, int>> violation;
            for (std::size_t a = 0; a < groups.size() && !violation; ++a)
                for (std::size_t b = a + 1; b < groups.size() && !violation; ++b)
                    violation = detail::guard_violation(results[a], groups[a], results[b],
                                                        groups[b], x0.radius + eps_guard);
            if (!violation) break;
            merge_edges.push_back(*violation);
            rec.merge_triggers.push_back(*violation);
            ++rec.merges;
        }

        // Commit: stitch sub-trajectories into full configurations and merge
        // the per-step ledgers (pair keys are disjoint across groups).
        const std::int64_t steps_in_window = end - begin;
        for (std::int64_t k = 1; k <= steps_in_window; ++k) {
            BallConfiguration full = current;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const auto& members = groups[g];
                const auto& cfg = results[g].trajectory[static_cast<std::size_t>(k)];
                for (std::size_t i = 0; i < members.size(); ++i)
                    for (int c = 0; c < full.dim; ++c)
                        full.ball(members[i])[c] = cfg.ball(static_cast<int>(i))[c];
            }
            StepLedger merged;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const auto& members = groups[g];
                const StepLedger& sl = results[g].step_ledgers[static_cast<std::size_t>(k - 1)];
                for (const auto& [key, refl] : sl.pushes)
                    merged.pushes[{members[key.first], members[key.second]}] = refl;
                for (const auto& [key, dl] : sl.dl)
                    merged.dl[{members[key.first], members[key.second]}] = dl;
            }
            const std::int64_t global_step = begin + k - 1;
            out.ledger.absorb(static_cast<int>(global_step),
                              static_cast<double>(global_step + 1) * h, merged, n);
            out.trajectory.push_back(full);
            if (k == steps_in_window) current = std::move(full);
        }
        rec.groups = groups;
        out.windows.push_back(std::move(rec));
    }
    return out;
}

} // namespace hardball
