#pragma once

// The dyadic frozen-drift scheme: each step adds a Brownian increment plus
// the drift evaluated at the step's left endpoint, then resolves the
// hard-core constraints with the Skorohod projection. Also the refinement
// convergence study across dyadic levels and the pathwise-uniqueness probe.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hardball/brownian.hpp"
#include "hardball/geometry.hpp"
#include "hardball/potentials.hpp"
#include "hardball/skorohod.hpp"

namespace hardball {

struct SimOptions {
    ProjectionSettings proj;
    std::vector<bool> frozen;          // environment balls held fixed
    std::vector<int> noise_ids;        // global noise stream per ball; identity if empty
    std::int64_t first_step = 0;       // window support: start at this path step
    std::int64_t n_steps = -1;         // number of steps; -1 = to the end of the path
    bool keep_step_ledgers = false;    // retain per-step ledgers (cluster replay)
};

struct SimResult {
    std::vector<BallConfiguration> trajectory;
    ReflectionLedger ledger;
    std::vector<StepLedger> step_ledgers;  // only when requested
    double dt = 0.0;
};

namespace detail {

/// Drift of every mobile ball at the current configuration, neighbor loop in
/// ascending ball order so that summation is bit-stable and independent of
/// which other balls exist beyond the cutoff.
inline std::vector<double> system_drift(const BallConfiguration& x, const PairPotential& pair,
                                        const FreePotential& free_potential,
                                        const std::vector<bool>& frozen) {
    const int n = x.n_balls();
    const int dim = x.dim;
    std::vector<double> b(static_cast<std::size_t>(n) * dim, 0.0);
    const double tol_hc = kHardCoreTolFactor * pair.hardcore();
    std::vector<double> u(dim);
    for (int j = 0; j < n; ++j) {
        if (!frozen.empty() && frozen[j]) continue;
        double* out = b.data() + static_cast<std::size_t>(j) * dim;
        free_potential.add_drift(x.ball(j), out);
        if (pair.kind() == PairKind::None) continue;
        for (int k = 0; k < n; ++k) {
            if (k == j) continue;
            x.displacement(j, k, u.data());
            double s2 = 0.0;
            for (int c = 0; c < dim; ++c) s2 += u[c] * u[c];
            const double s = std::sqrt(s2);
            if (s < pair.hardcore() - tol_hc) throw std::domain_error("neighbor inside hard core");
            if (pair.cutoff() && s > *pair.cutoff()) continue;
            pair.add_pair_drift(u.data(), dim, out);
        }
    }
    return b;
}

} // namespace detail

/// Integrate the frozen-drift scheme along the given noise path. The drift
/// is evaluated at the left endpoint of every dyadic step, exactly as the
/// approximation scheme prescribes; no higher-order correction.
inline SimResult simulate_ske_n(const BallConfiguration& x0, const PairPotential& pair,
                                const FreePotential& free_potential,
                                const DyadicBrownianPath& path, const SimOptions& opts = {}) {
    if (!validate(x0)) throw std::invalid_argument("infeasible start configuration");
    const int n = x0.n_balls();
    const int dim = x0.dim;
    if (path.dim() != dim) throw std::invalid_argument("noise dimension mismatch");
    std::vector<int> ids = opts.noise_ids;
    if (ids.empty()) {
        ids.resize(n);
        for (int i = 0; i < n; ++i) ids[i] = i;
    }
    if (static_cast<int>(ids.size()) != n) throw std::invalid_argument("noise id map size mismatch");
    for (int id : ids)
        if (id < 0 || id >= path.n_balls()) throw std::invalid_argument("noise id out of range");

    const std::int64_t first = opts.first_step;
    const std::int64_t count = opts.n_steps >= 0 ? opts.n_steps : path.steps() - first;
    if (first < 0 || first + count > path.steps())
        throw std::invalid_argument("step range outside the noise path");

    const double h = path.dt();
    SimResult res;
    res.dt = h;
    res.ledger.dim = dim;
    res.trajectory.reserve(static_cast<std::size_t>(count) + 1);
    res.trajectory.push_back(x0);

    DrivingSegment seg;
    seg.dt = h;
    seg.displacement.assign(static_cast<std::size_t>(n) * dim, 0.0);
    for (std::int64_t k = first; k < first + count; ++k) {
        const BallConfiguration& cur = res.trajectory.back();
        const std::vector<double> b = detail::system_drift(cur, pair, free_potential, opts.frozen);
        for (int j = 0; j < n; ++j) {
            double* d = seg.displacement.data() + static_cast<std::size_t>(j) * dim;
            if (!opts.frozen.empty() && opts.frozen[j]) {
                for (int c = 0; c < dim; ++c) d[c] = 0.0;
                continue;
            }
            path.increment(ids[j], k, d);
            for (int c = 0; c < dim; ++c) d[c] += b[static_cast<std::size_t>(j) * dim + c] * h;
        }
        auto [next, sl] = solve_step(cur, seg, opts.proj, opts.frozen);
        res.ledger.absorb(static_cast<int>(k), static_cast<double>(k + 1) * h, sl, n);
        if (opts.keep_step_ledgers) res.step_ledgers.push_back(std::move(sl));
        res.trajectory.push_back(std::move(next));
    }
    return res;
}

/// Sup-norm distance between two configurations in (R^d)^n.
inline double config_distance(const BallConfiguration& a, const BallConfiguration& b) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < a.pos.size(); ++i) {
        const double d = a.pos[i] - b.pos[i];
        s2 += d * d;
    }
    return std::sqrt(s2);
}

/// Sup over common grid times of the configuration gap between a run at
/// `coarse.dt` resolution and one at a finer dyadic resolution.
inline double trajectory_sup_gap(const SimResult& coarse, const SimResult& fine) {
    const std::size_t nc = coarse.trajectory.size() - 1;
    const std::size_t nf = fine.trajectory.size() - 1;
    if (nf % nc != 0) throw std::invalid_argument("grids are not nested");
    const std::size_t stride = nf / nc;
    double sup = 0.0;
    for (std::size_t k = 0; k <= nc; ++k)
        sup = std::max(sup, config_distance(coarse.trajectory[k], fine.trajectory[k * stride]));
    return sup;
}

struct RefinementRow {
    int level_coarse = 0;
    int level_fine = 0;
    double sup_gap = 0.0;
};

struct RefinementStudy {
    std::vector<RefinementRow> rows;
    double slope_log2 = 0.0;  // least-squares slope of log2(gap) vs level
    double rate = 0.0;        // -slope_log2; positive means gaps shrink
    bool monotone_decreasing = true;
};

/// Run the scheme at each level of `levels` (ascending) on the same refined
/// noise and measure consecutive-level sup gaps.
inline RefinementStudy refinement_study(const BallConfiguration& x0, const PairPotential& pair,
                                        const FreePotential& free_potential, std::uint64_t seed,
                                        const std::vector<int>& levels, double T,
                                        const SimOptions& opts = {}) {
    if (levels.size() < 2) throw std::invalid_argument("need at least two levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1]) throw std::invalid_argument("levels must be ascending");

    RefinementStudy study;
    std::vector<SimResult> runs;
    runs.reserve(levels.size());
    for (int n : levels)
        runs.push_back(simulate_ske_n(x0, pair, free_potential,
                                      sample_path(seed, n, T, x0.n_balls(), x0.dim), opts));
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        RefinementRow row;
        row.level_coarse = levels[i];
        row.level_fine = levels[i + 1];
        row.sup_gap = trajectory_sup_gap(runs[i], runs[i + 1]);
        study.rows.push_back(row);
    }
    for (std::size_t i = 1; i < study.rows.size(); ++i)
        if (!(study.rows[i].sup_gap < study.rows[i - 1].sup_gap)) study.monotone_decreasing = false;

    // Least squares of log2(gap) against the coarse level, positive gaps only.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const auto& row : study.rows) {
        if (!(row.sup_gap > 0.0)) continue;
        const double xv = row.level_coarse;
        const double yv = std::log2(row.sup_gap);
        sx += xv; sy += yv; sxx += xv * xv; sxy += xv * yv;
        ++m;
    }
    if (m >= 2) {
        study.slope_log2 = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        study.rate = -study.slope_log2;
    }
    return study;
}

struct UniquenessReport {
    double start_gap = 0.0;
    double sup_divergence = 0.0;
    std::int64_t first_contact_step = -1;   // -1 when no contact occurred
    double first_contact_time = std::numeric_limits<double>::infinity();
    double lipschitz_K = 0.0;
    bool gronwall_pass = true;              // pre-contact: div <= gap * e^{Kt}
    double gronwall_worst_margin = 0.0;     // max over pre-contact grid of div - envelope
    double fitted_C = 0.0;                  // smallest C satisfying the contraction bound
    std::vector<double> divergence;         // per grid boundary
};

/// Run the scheme twice with identical noise from two nearby starts and
/// compare against the Gronwall envelope before the first contact and the
/// contraction envelope after it.
inline UniquenessReport uniqueness_probe(const BallConfiguration& x0, const BallConfiguration& x0p,
                                         const PairPotential& pair,
                                         const FreePotential& free_potential,
                                         const DyadicBrownianPath& path,
                                         const SimOptions& opts = {}) {
    if (x0.pos.size() != x0p.pos.size() || x0.dim != x0p.dim)
        throw std::invalid_argument("start configurations must have the same shape");
    const SimResult a = simulate_ske_n(x0, pair, free_potential, path, opts);
    const SimResult b = simulate_ske_n(x0p, pair, free_potential, path, opts);

    UniquenessReport rep;
    rep.start_gap = config_distance(x0, x0p);
    rep.lipschitz_K = lipschitz_bound(pair, x0.radius, x0.dim);

    std::int64_t first_event = -1;
    for (const auto& led : {&a.ledger, &b.ledger})
        for (const auto& ev : led->events)
            if (first_event < 0 || ev.step < first_event) first_event = ev.step;
    rep.first_contact_step = first_event;
    if (first_event >= 0) rep.first_contact_time = static_cast<double>(first_event + 1) * a.dt;

    const std::int64_t boundaries = static_cast<std::int64_t>(a.trajectory.size());
    rep.divergence.resize(boundaries);
    for (std::int64_t k = 0; k < boundaries; ++k) {
        const double d = config_distance(a.trajectory[k], b.trajectory[k]);
        rep.divergence[k] = d;
        rep.sup_divergence = std::max(rep.sup_divergence, d);
        const double t = static_cast<double>(k) * a.dt;
        const bool pre_contact = first_event < 0 || k <= first_event;
        if (pre_contact) {
            const double envelope = rep.start_gap * std::exp(rep.lipschitz_K * t);
            rep.gronwall_worst_margin = std::max(rep.gronwall_worst_margin, d - envelope);
            if (d > envelope) rep.gronwall_pass = false;
        }
        if (k > 0 && rep.start_gap > 0.0 && d > rep.start_gap) {
            const double phi_sum =
                a.ledger.tv_global_series[k - 1] + b.ledger.tv_global_series[k - 1];
            if (phi_sum > 0.0)
                rep.fitted_C = std::max(rep.fitted_C, std::log(d / rep.start_gap) / phi_sum);
        }
    }
    return rep;
}

} // namespace hardball
