#pragma once

// Equilibrium initialization and reversibility testing. Canonical (fixed-n)
// Metropolis sampling of hard-core configurations in a periodic box, and a
// distribution-preservation check for the dynamics: evolve equilibrium
// replicas for a while and compare radial-distribution histograms before and
// after by chi-square.
//
// The sampler targets the reversible measure of the drift, i.e. the energy
// U = sum Phi + sum_{j<k} Psi over unordered pairs (half the ordered-pair
// Hamiltonian when Phi vanishes). Hard-core violations are rejected
// outright; acceptance is min(1, exp(-dU)) under symmetric proposals.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hardball/brownian.hpp"
#include "hardball/geometry.hpp"
#include "hardball/integrator.hpp"
#include "hardball/potentials.hpp"
#include "hardball/rng.hpp"
#include "hardball/stats.hpp"

namespace hardball {

struct GibbsSamplerConfig {
    double box = 0.0;
    int n_balls = 0;
    int dim = 2;
    double radius = 1.0;
    int sweeps = 200;              // burn-in is the first half, by convention
    double proposal_scale = 0.3;   // in units of the hard-core diameter
    std::uint64_t seed = 0;
};

inline double metropolis_acceptance(double delta_energy) {
    return delta_energy <= 0.0 ? 1.0 : std::exp(-delta_energy);
}

/// Cubic lattice placement in the periodic box; the feasibility check for
/// densities below jamming.
inline BallConfiguration lattice_configuration(const GibbsSamplerConfig& cfg) {
    if (cfg.n_balls < 1) throw std::invalid_argument("need at least one ball");
    if (!(cfg.box > 0.0)) throw std::invalid_argument("need a positive box");
    int m = 1;
    while (std::pow(m, cfg.dim) < cfg.n_balls) ++m;
    const double spacing = cfg.box / m;
    if (spacing < cfg.radius * (1.0 + 1e-12))
        throw std::invalid_argument("infeasible initial placement: lattice spacing below hard core");
    BallConfiguration c;
    c.dim = cfg.dim;
    c.radius = cfg.radius;
    c.box = cfg.box;
    c.pos.resize(static_cast<std::size_t>(cfg.n_balls) * cfg.dim);
    for (int b = 0; b < cfg.n_balls; ++b) {
        int rem = b;
        for (int d = 0; d < cfg.dim; ++d) {
            c.pos[static_cast<std::size_t>(b) * cfg.dim + d] = (rem % m + 0.5) * spacing;
            rem /= m;
        }
    }
    return c;
}

namespace detail {

/// Energy change of moving ball j to candidate position (unordered pairs).
inline double move_energy_delta(const BallConfiguration& c, int j, const double* candidate,
                                const PairPotential& pair, const FreePotential& free_potential,
                                bool& hard_core_violation) {
    const int n = c.n_balls();
    hard_core_violation = false;
    double delta = 0.0;
    for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        double s2_new = 0.0, s2_old = 0.0;
        for (int d = 0; d < c.dim; ++d) {
            double dn = candidate[d] - c.ball(k)[d];
            double dd = c.ball(j)[d] - c.ball(k)[d];
            if (c.box) {
                dn -= *c.box * std::round(dn / *c.box);
                dd -= *c.box * std::round(dd / *c.box);
            }
            s2_new += dn * dn;
            s2_old += dd * dd;
        }
        const double sn = std::sqrt(s2_new);
        if (sn < c.radius) {
            hard_core_violation = true;
            return 0.0;
        }
        if (pair.kind() != PairKind::None) delta += pair.psi(sn) - pair.psi(std::sqrt(s2_old));
    }
    if (!free_potential.is_zero()) {
        std::vector<double> cand(candidate, candidate + c.dim);
        delta += free_potential.value(cand) - free_potential.value(c.ball(j));
    }
    return delta;
}

} // namespace detail

/// Single-ball Metropolis chain from the lattice start; returns the state
/// after the configured sweeps. Rejection keeps the hard core exact.
inline BallConfiguration gibbs_sample(const GibbsSamplerConfig& cfg, const PairPotential& pair,
                                      const FreePotential& free_potential) {
    BallConfiguration c = lattice_configuration(cfg);
    rng::Sequence rng(cfg.seed);
    const double scale = cfg.proposal_scale * cfg.radius;
    std::vector<double> candidate(cfg.dim);
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (int j = 0; j < cfg.n_balls; ++j) {
            for (int d = 0; d < cfg.dim; ++d) {
                double v = c.ball(j)[d] + rng.uniform(-scale, scale);
                v -= cfg.box * std::floor(v / cfg.box);
                candidate[d] = v;
            }
            bool violates = false;
            const double delta =
                detail::move_energy_delta(c, j, candidate.data(), pair, free_potential, violates);
            if (violates) continue;
            if (rng.uniform() <= metropolis_acceptance(delta))
                for (int d = 0; d < cfg.dim; ++d) c.ball(j)[d] = candidate[d];
        }
    }
    return c;
}

/// Pooled pair-distance counts over `bins` bins spanning [r, 4r].
inline void accumulate_pair_histogram(const BallConfiguration& c, std::vector<double>& counts) {
    const double lo = c.radius, hi = 4.0 * c.radius;
    const int bins = static_cast<int>(counts.size());
    const int n = c.n_balls();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = c.distance(i, j);
            if (d < lo || d >= hi) continue;
            const int bin = static_cast<int>((d - lo) / (hi - lo) * bins);
            counts[std::min(bin, bins - 1)] += 1.0;
        }
}

enum class ReplicaInit { Equilibrium, Lattice };

struct ReversibilityReport {
    std::vector<double> bin_left, bin_right;
    std::vector<double> before, after;
    double chi_square = 0.0;
    int dof = 0;
    double p_value = 1.0;
    bool pass = false;   // at significance 0.01
};

/// Draw replicas (equilibrium via the sampler, or the lattice control),
/// evolve each for time T at the given dyadic level, and compare pooled
/// before/after radial histograms.
inline ReversibilityReport reversibility_test(const GibbsSamplerConfig& cfg,
                                              const PairPotential& pair,
                                              const FreePotential& free_potential, int level,
                                              double T, int replicas,
                                              ReplicaInit init = ReplicaInit::Equilibrium,
                                              int bins = 20) {
    if (replicas < 1) throw std::invalid_argument("need at least one replica");
    ReversibilityReport rep;
    rep.before.assign(bins, 0.0);
    rep.after.assign(bins, 0.0);
    for (int i = 0; i < bins; ++i) {
        rep.bin_left.push_back(cfg.radius + 3.0 * cfg.radius * i / bins);
        rep.bin_right.push_back(cfg.radius + 3.0 * cfg.radius * (i + 1) / bins);
    }
    for (int rix = 0; rix < replicas; ++rix) {
        GibbsSamplerConfig rc = cfg;
        rc.seed = rng::key_hash({cfg.seed, static_cast<std::uint64_t>(rix), 0x5ee3});
        const BallConfiguration x0 = init == ReplicaInit::Equilibrium
                                         ? gibbs_sample(rc, pair, free_potential)
                                         : lattice_configuration(rc);
        accumulate_pair_histogram(x0, rep.before);
        if (T == 0.0) {
            accumulate_pair_histogram(x0, rep.after);
            continue;
        }
        const DyadicBrownianPath path(rng::key_hash({cfg.seed, static_cast<std::uint64_t>(rix), 0xb0b}),
                                      level, T, cfg.n_balls, cfg.dim);
        const SimResult run = simulate_ske_n(x0, pair, free_potential, path);
        accumulate_pair_histogram(run.trajectory.back(), rep.after);
    }
    const auto chi = stats::chi_square_two_sample(rep.before, rep.after);
    rep.chi_square = chi.statistic;
    rep.dof = chi.dof;
    rep.p_value = chi.p_value;
    rep.pass = chi.p_value > 0.01;
    return rep;
}

} // namespace hardball
