#pragma once

// Numerical solver for the Skorohod problem in the hard-ball configuration
// space. Given a start and a driving displacement, produce the reflected
// configuration, the bounded-variation reflection term phi, and per-pair
// local times L^{jk}.
//
// Algorithm: iterated pairwise constraint projection. Apply the driving
// displacement, then sweep over violated pairs in ascending (j,k) order,
// pushing each pair apart symmetrically along the pair axis until every
// distance is feasible. Pairs involving a frozen ball push the mobile ball
// by the full correction. Local time is attributed per push as
// (normal displacement applied to the pair) / r, matching the reflection
// form (x^j - x^k) dL^{jk} where the contact vector has length r.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hardball/geometry.hpp"

namespace hardball {

struct ProjectionSettings {
    double tol_proj_factor = 1e-10;  // feasibility tolerance, units of r
    int max_iter = 10000;            // projection sweeps per step
};

struct DrivingSegment {
    double dt = 0.0;
    std::vector<double> displacement;  // n*dim, Brownian increment plus frozen drift*dt
};

/// Reflection applied to one pair within a step, accumulated over sweeps.
/// For mobile-mobile pairs push_k == -push_j; a frozen partner keeps its
/// zero push and the mobile ball carries the full correction.
struct PairReflection {
    std::vector<double> push_j;
    std::vector<double> push_k;
};

/// Per-step reflection record: per-pair pushes and local-time increments.
struct StepLedger {
    std::map<std::pair<int, int>, PairReflection> pushes;
    std::map<std::pair<int, int>, double> dl;

    bool empty() const { return dl.empty(); }
};

/// Cumulative reflection ledger along a path: per-pair local times, the
/// per-ball and global total variation of phi, and per-step local-time
/// increments for export.
struct ReflectionLedger {
    int dim = 0;

    std::map<std::pair<int, int>, double> local_times;
    std::vector<double> tv_per_ball;        // sum over steps of |delta phi_j|
    double tv_global = 0.0;                 // sum over steps of |delta phi| in (R^d)^n
    std::vector<double> tv_global_series;   // running tv_global at each step boundary

    struct Event {
        int step;
        double time;
        int j, k;
        double dl;
        double cumulative;
    };
    std::vector<Event> events;

    double local_time(int j, int k) const {
        const auto key = std::minmax(j, k);
        const auto it = local_times.find({key.first, key.second});
        return it == local_times.end() ? 0.0 : it->second;
    }

    void absorb(int step, double time, const StepLedger& sl, int n_balls) {
        if (tv_per_ball.empty()) tv_per_ball.assign(n_balls, 0.0);
        std::vector<double> phi(static_cast<std::size_t>(n_balls) * dim, 0.0);
        for (const auto& [key, refl] : sl.pushes) {
            for (int c = 0; c < dim; ++c) {
                phi[static_cast<std::size_t>(key.first) * dim + c] += refl.push_j[c];
                phi[static_cast<std::size_t>(key.second) * dim + c] += refl.push_k[c];
            }
        }
        double norm2 = 0.0;
        for (int b = 0; b < n_balls; ++b) {
            double s2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double v = phi[static_cast<std::size_t>(b) * dim + c];
                s2 += v * v;
            }
            tv_per_ball[b] += std::sqrt(s2);
            norm2 += s2;
        }
        tv_global += std::sqrt(norm2);
        tv_global_series.push_back(tv_global);
        for (const auto& [key, dl] : sl.dl) {
            double& cum = local_times[key];
            cum += dl;
            events.push_back({step, time, key.first, key.second, dl, cum});
        }
    }
};

/// One projected step: returns the feasible configuration reached from
/// config + displacement and the step ledger. `frozen` marks environment
/// balls that never move. Throws on non-finite input and when the sweeps do
/// not reach feasibility within max_iter (reporting the worst residual).
inline std::pair<BallConfiguration, StepLedger> solve_step(const BallConfiguration& config,
                                                           const DrivingSegment& seg,
                                                           const ProjectionSettings& settings = {},
                                                           const std::vector<bool>& frozen = {}) {
    const int n = config.n_balls();
    const int dim = config.dim;
    if (static_cast<int>(seg.displacement.size()) != n * dim)
        throw std::invalid_argument("displacement size mismatch");
    for (double v : seg.displacement)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite displacement");
    if (!frozen.empty() && static_cast<int>(frozen.size()) != n)
        throw std::invalid_argument("frozen mask size mismatch");

    const double r = config.radius;
    const double tol = settings.tol_proj_factor * r;

    BallConfiguration out = config;
    for (int b = 0; b < n; ++b) {
        if (!frozen.empty() && frozen[b]) continue;
        for (int c = 0; c < dim; ++c)
            out.pos[static_cast<std::size_t>(b) * dim + c] +=
                seg.displacement[static_cast<std::size_t>(b) * dim + c];
    }

    StepLedger ledger;
    std::vector<double> u(dim);
    int iter = 0;
    while (true) {
        bool any = false;
        for (int j = 0; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                const bool fj = !frozen.empty() && frozen[j];
                const bool fk = !frozen.empty() && frozen[k];
                if (fj && fk) continue;
                const double s = out.distance(j, k);
                // Per-pair separation change: positive pushes apart when the
                // hard core is violated. When a later push of a neighboring
                // pair has re-separated an already-attributed pair, the pull
                // branch hands the attribution back (complementarity): local
                // time may only rest on pairs that end the step in contact.
                const double split = (fj || fk) ? 1.0 : 2.0;
                double correction = 0.0;
                bool exhausts_budget = false;
                if (s < r - tol) {
                    correction = r - s;
                } else if (s > r + tol) {
                    const auto it = ledger.dl.find({j, k});
                    if (it == ledger.dl.end() || it->second <= 0.0) continue;
                    const double budget = it->second * split * r;
                    if (r - s <= -budget) {
                        correction = -budget;
                        exhausts_budget = true;
                    } else {
                        correction = r - s;
                    }
                    if (correction == 0.0) continue;
                } else {
                    continue;
                }
                any = true;
                out.displacement(j, k, u.data());
                double nrm = 0.0;
                for (double v : u) nrm += v * v;
                nrm = std::sqrt(nrm);
                if (!(nrm > 0.0)) {
                    // Coincident centers: push along the first axis.
                    u.assign(dim, 0.0);
                    u[0] = 1.0;
                    nrm = 1.0;
                }
                // Mobile-mobile pairs split the correction; a frozen partner
                // leaves the full correction on the mobile ball.
                const double push_j = fj ? 0.0 : correction / split;
                const double push_k = fk ? 0.0 : correction / split;
                auto& refl = ledger.pushes[{j, k}];
                if (refl.push_j.empty()) {
                    refl.push_j.assign(dim, 0.0);
                    refl.push_k.assign(dim, 0.0);
                }
                for (int c = 0; c < dim; ++c) {
                    const double dir = u[c] / nrm;
                    out.pos[static_cast<std::size_t>(j) * dim + c] += dir * push_j;
                    out.pos[static_cast<std::size_t>(k) * dim + c] -= dir * push_k;
                    refl.push_j[c] += dir * push_j;
                    refl.push_k[c] -= dir * push_k;
                }
                // dL is the per-ball normal push in units of r: each moving
                // ball receives (x^j - x^k)-block * dL with contact length r.
                double& dl = ledger.dl[{j, k}];
                dl = exhausts_budget ? 0.0 : dl + correction / (split * r);
            }
        }
        if (!any) break;
        if (++iter > settings.max_iter) {
            double worst = 0.0;
            for (int j = 0; j < n; ++j)
                for (int k = j + 1; k < n; ++k) worst = std::max(worst, r - out.distance(j, k));
            throw std::runtime_error("projection did not converge; worst residual " +
                                     std::to_string(worst));
        }
    }
    for (auto it = ledger.dl.begin(); it != ledger.dl.end();) {
        if (it->second <= 0.0) it = ledger.dl.erase(it);
        else ++it;
    }
    return {std::move(out), std::move(ledger)};
}

struct PathSolution {
    std::vector<BallConfiguration> trajectory;  // one per segment boundary, incl. start
    ReflectionLedger ledger;
};

/// Fold solve_step over a driving path. The trajectory has path.size()+1
/// entries; ledger times are cumulative segment times.
inline PathSolution solve_path(const BallConfiguration& x0,
                               const std::vector<DrivingSegment>& path,
                               const ProjectionSettings& settings = {},
                               const std::vector<bool>& frozen = {}) {
    if (!validate(x0)) throw std::invalid_argument("infeasible start configuration");
    PathSolution sol;
    sol.ledger.dim = x0.dim;
    sol.trajectory.reserve(path.size() + 1);
    sol.trajectory.push_back(x0);
    double time = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        auto [next, sl] = solve_step(sol.trajectory.back(), path[k], settings, frozen);
        time += path[k].dt;
        sol.ledger.absorb(static_cast<int>(k), time, sl, x0.n_balls());
        sol.trajectory.push_back(std::move(next));
    }
    return sol;
}

/// Contraction estimate between two solutions on the same grid:
///   |z1(t) - z2(t)| <= (||w1 - w2||_t + |x1 - x2|) exp(C (||phi1||_t + ||phi2||_t)).
struct ContractionReport {
    double lhs = 0.0;          // at the worst grid time
    double rhs = 0.0;
    bool pass = false;
    double max_ratio = 0.0;    // max over grid of lhs/rhs
    int worst_step = 0;
};

inline ContractionReport contraction_check(const PathSolution& sol1, const PathSolution& sol2,
                                           const std::vector<DrivingSegment>& w1,
                                           const std::vector<DrivingSegment>& w2,
                                           const BallConfiguration& x1, const BallConfiguration& x2,
                                           double C) {
    if (sol1.trajectory.size() != sol2.trajectory.size() || w1.size() != w2.size() ||
        sol1.trajectory.size() != w1.size() + 1)
        throw std::invalid_argument("mismatched grids");
    auto config_dist = [](const BallConfiguration& a, const BallConfiguration& b) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < a.pos.size(); ++i) {
            const double d = a.pos[i] - b.pos[i];
            s2 += d * d;
        }
        return std::sqrt(s2);
    };
    const double x_gap = config_dist(x1, x2);
    ContractionReport rep;
    double w_tv = 0.0;
    for (std::size_t k = 0; k < sol1.trajectory.size(); ++k) {
        if (k > 0) {
            double s2 = 0.0;
            for (std::size_t i = 0; i < w1[k - 1].displacement.size(); ++i) {
                const double d = w1[k - 1].displacement[i] - w2[k - 1].displacement[i];
                s2 += d * d;
            }
            w_tv += std::sqrt(s2);
        }
        const double phi_sum = (k > 0 ? sol1.ledger.tv_global_series[k - 1] +
                                            sol2.ledger.tv_global_series[k - 1]
                                      : 0.0);
        const double lhs = config_dist(sol1.trajectory[k], sol2.trajectory[k]);
        const double rhs = (w_tv + x_gap) * std::exp(C * phi_sum);
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio >= rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.lhs = lhs;
            rep.rhs = rhs;
            rep.worst_step = static_cast<int>(k);
        }
    }
    rep.pass = rep.max_ratio <= 1.0 + 1e-9;
    return rep;
}

} // namespace hardball
