#pragma once

// Runtime diagnostics: the no-big-jump index, the modulus of continuity of a
// path, conservation checks, and a sampling probe for the uniform
// exterior-sphere property of the hard-ball configuration space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hardball/brownian.hpp"
#include "hardball/geometry.hpp"
#include "hardball/integrator.hpp"
#include "hardball/rng.hpp"

namespace hardball {

/// Relabeling that orders balls by initial distance from the origin; the
/// natural label map for the no-big-jump diagnostic.
inline std::vector<int> order_by_initial_distance(const BallConfiguration& x0) {
    const int n = x0.n_balls();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(n);
    for (int i = 0; i < n; ++i) {
        double s2 = 0.0;
        for (double v : x0.ball(i)) s2 += v * v;
        dist[i] = std::sqrt(s2);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
    return order;
}

/// Smallest m such that every ball with (1-based) label > m stays outside
/// the centered ball of radius ell throughout the trajectory. Assumes the
/// trajectory labels are already ordered by initial distance.
inline int no_big_jump_index(const std::vector<BallConfiguration>& trajectory, double ell) {
    if (trajectory.empty()) throw std::invalid_argument("empty trajectory");
    const int n = trajectory.front().n_balls();
    int m = 0;
    for (int b = 0; b < n; ++b) {
        bool enters = false;
        for (const auto& cfg : trajectory) {
            double s2 = 0.0;
            for (double v : cfg.ball(b)) s2 += v * v;
            if (std::sqrt(s2) <= ell) {
                enters = true;
                break;
            }
        }
        if (enters) m = b + 1;
    }
    return m;
}

/// Modulus of continuity on a uniform grid: sup over |s - t| <= delta of
/// |w(s) - w(t)| for a vector-valued path sampled at grid boundaries.
inline double modulus_of_continuity(const std::vector<std::vector<double>>& values, double dt,
                                    double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (values.size() < 2) return 0.0;
    const std::int64_t window = static_cast<std::int64_t>(std::floor(delta / dt + 1e-12));
    double sup = 0.0;
    const std::int64_t n = static_cast<std::int64_t>(values.size());
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j <= std::min(n - 1, i + window); ++j) {
            double s2 = 0.0;
            for (std::size_t c = 0; c < values[i].size(); ++c) {
                const double d = values[i][c] - values[j][c];
                s2 += d * d;
            }
            sup = std::max(sup, std::sqrt(s2));
        }
    }
    return sup;
}

inline double modulus_of_continuity(const std::vector<BallConfiguration>& trajectory, double dt,
                                    double delta) {
    std::vector<std::vector<double>> values;
    values.reserve(trajectory.size());
    for (const auto& cfg : trajectory) values.push_back(cfg.pos);
    return modulus_of_continuity(values, dt, delta);
}

/// Per-coordinate total of X_T - X_0 - B_T over all balls. With zero free
/// potential, pair drifts and reflections cancel in pairs, so this stays at
/// accumulation-error level.
inline std::vector<double> momentum_residual(const SimResult& result, const DyadicBrownianPath& path) {
    const BallConfiguration& first = result.trajectory.front();
    const BallConfiguration& last = result.trajectory.back();
    const int n = first.n_balls();
    const int dim = first.dim;
    std::vector<double> out(dim, 0.0);
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < dim; ++c) {
            double bt = 0.0;
            for (std::int64_t k = 0; k < path.steps(); ++k) bt += path.increment(b, k, c);
            out[c] += last.ball(b)[c] - first.ball(b)[c] - bt;
        }
    return out;
}

struct InvariantSummary {
    double min_pair_distance = std::numeric_limits<double>::infinity();
    double max_support_gap = 0.0;    // worst |dist - r| among positive local-time events
    bool hard_core_ok = true;
    bool support_ok = true;
};

/// Scan a finished run for the hard-core invariant and the local-time
/// support condition (positive dL only at contact after the step).
inline InvariantSummary scan_invariants(const SimResult& result, double tol_hc_factor = kHardCoreTolFactor,
                                        double tol_contact = kContactTol) {
    InvariantSummary s;
    const double r = result.trajectory.front().radius;
    for (const auto& cfg : result.trajectory) {
        if (cfg.n_balls() < 2) continue;
        s.min_pair_distance = std::min(s.min_pair_distance, min_pair_distance(cfg));
    }
    if (result.trajectory.front().n_balls() >= 2 && s.min_pair_distance < r - tol_hc_factor * r)
        s.hard_core_ok = false;
    for (const auto& ev : result.ledger.events) {
        const BallConfiguration& cfg = result.trajectory[static_cast<std::size_t>(ev.step) + 1];
        const double d = cfg.distance(ev.j, ev.k);
        s.max_support_gap = std::max(s.max_support_gap, std::abs(d - r));
        if (d > r * (1.0 + tol_contact)) s.support_ok = false;
    }
    return s;
}

/// Empirical probe of the uniform exterior-sphere property at a boundary
/// configuration with one contact pair: samples the configuration-space ball
/// of radius alpha placed against the contact normal and reports whether any
/// sampled point is feasible (which would contradict the exterior ball).
inline bool exterior_sphere_probe(const BallConfiguration& at_contact, const ContactPair& pair,
                                  double alpha, int samples, std::uint64_t seed) {
    const std::vector<double> normal = normal_direction(at_contact, pair);
    const std::size_t dof = normal.size();
    rng::Sequence rng(seed);
    for (int s = 0; s < samples; ++s) {
        // Uniform direction in the configuration ball via normalized Gaussian.
        std::vector<double> w(dof);
        double nrm = 0.0;
        for (auto& v : w) {
            v = rng.normal();
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        const double radius = alpha * std::pow(rng.uniform(), 1.0 / static_cast<double>(dof));
        BallConfiguration probe = at_contact;
        for (std::size_t i = 0; i < dof; ++i)
            probe.pos[i] += -alpha * normal[i] + w[i] / nrm * radius;
        if (min_pair_distance(probe) > probe.radius) return false;  // feasible point found
    }
    return true;
}

} // namespace hardball
