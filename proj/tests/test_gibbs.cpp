#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "hardball/gibbs.hpp"

using namespace hardball;

TEST_CASE("sampler output always honors the hard core and is reproducible") {
    GibbsSamplerConfig cfg;
    cfg.box = 8.0;
    cfg.n_balls = 9;
    cfg.dim = 2;
    cfg.radius = 1.0;
    cfg.sweeps = 60;
    cfg.seed = 4;
    auto a = gibbs_sample(cfg, PairPotential::none(1.0), FreePotential::zero());
    CHECK(validate(a));
    auto b = gibbs_sample(cfg, PairPotential::none(1.0), FreePotential::zero());
    for (std::size_t i = 0; i < a.pos.size(); ++i) CHECK(a.pos[i] == b.pos[i]);
    cfg.seed = 5;
    auto c = gibbs_sample(cfg, PairPotential::none(1.0), FreePotential::zero());
    bool same = true;
    for (std::size_t i = 0; i < a.pos.size(); ++i) same = same && a.pos[i] == c.pos[i];
    CHECK_FALSE(same);
}

TEST_CASE("infeasible lattice placement is an input error") {
    GibbsSamplerConfig cfg;
    cfg.box = 3.0;
    cfg.n_balls = 16;  // would need spacing 0.75 < r
    cfg.dim = 2;
    cfg.radius = 1.0;
    CHECK_THROWS_AS(lattice_configuration(cfg), std::invalid_argument);
}

TEST_CASE("acceptance rule satisfies detailed balance on a toy state space") {
    // Two balls on a discrete ring of 6 sites with a made-up energy table.
    // Proposals move one ball one site left/right with equal probability, so
    // the chain with acceptance min(1, e^-dU) must satisfy pi_i P_ij = pi_j P_ji.
    const int sites = 6;
    auto energy = [&](int a, int b) {
        const int d = std::min((a - b + sites) % sites, (b - a + sites) % sites);
        return d == 0 ? 1e9 : 1.0 / d;  // hard core at distance zero
    };
    std::map<std::pair<int, int>, double> pi;
    double z = 0.0;
    for (int a = 0; a < sites; ++a)
        for (int b = 0; b < sites; ++b) {
            if (a == b) continue;
            pi[{a, b}] = std::exp(-energy(a, b));
            z += pi[{a, b}];
        }
    for (auto& [k, v] : pi) v /= z;
    auto transition = [&](std::pair<int, int> from, std::pair<int, int> to) {
        // single-ball single-site moves, proposal probability 1/4 each
        int moved = -1;
        if (from.second == to.second) moved = 0;
        if (from.first == to.first && moved == -1) moved = 1;
        if (moved == -1) return 0.0;
        const int a = moved == 0 ? from.first : from.second;
        const int b = moved == 0 ? to.first : to.second;
        const int step = (b - a + sites) % sites;
        if (step != 1 && step != sites - 1) return 0.0;
        if (to.first == to.second) return 0.0;  // hard core: rejected
        const double dU = energy(to.first, to.second) - energy(from.first, from.second);
        return 0.25 * metropolis_acceptance(dU);
    };
    for (int a = 0; a < sites; ++a)
        for (int b = 0; b < sites; ++b) {
            if (a == b) continue;
            for (int a2 = 0; a2 < sites; ++a2)
                for (int b2 = 0; b2 < sites; ++b2) {
                    if (a2 == b2 || (a == a2 && b == b2)) continue;
                    const double lhs = pi[{a, b}] * transition({a, b}, {a2, b2});
                    const double rhs = pi[{a2, b2}] * transition({a2, b2}, {a, b});
                    CHECK(lhs == Catch::Approx(rhs).margin(1e-15));
                }
        }
}

TEST_CASE("hard-core gas matches the rejection-sampling oracle (KS)") {
    // Small system: the oracle draws exact uniform hard-core configurations
    // by rejection; the chain should produce the same pair-distance law.
    const int n = 3;
    const double box = 7.0;
    std::vector<double> chain_dists, oracle_dists;
    rng::Sequence orng(99);
    int oracle_kept = 0;
    while (oracle_kept < 400) {
        BallConfiguration c;
        c.dim = 2;
        c.radius = 1.0;
        c.box = box;
        c.pos.resize(n * 2);
        for (auto& v : c.pos) v = orng.uniform(0.0, box);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j) ok = c.distance(i, j) >= 1.0;
        if (!ok) continue;
        ++oracle_kept;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (c.distance(i, j) <= box / 2.0) oracle_dists.push_back(c.distance(i, j));
    }
    for (int rep = 0; rep < 400; ++rep) {
        GibbsSamplerConfig cfg;
        cfg.box = box;
        cfg.n_balls = n;
        cfg.dim = 2;
        cfg.radius = 1.0;
        cfg.sweeps = 120;
        cfg.proposal_scale = 1.2;
        cfg.seed = rng::key_hash({2025, static_cast<std::uint64_t>(rep)});
        auto c = gibbs_sample(cfg, PairPotential::none(1.0), FreePotential::zero());
        CHECK(validate(c));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (c.distance(i, j) <= box / 2.0) chain_dists.push_back(c.distance(i, j));
    }
    auto ks = stats::ks_two_sample(chain_dists, oracle_dists);
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("reversibility at T = 0 is trivially preserved") {
    GibbsSamplerConfig cfg;
    cfg.box = 9.0;
    cfg.n_balls = 8;
    cfg.dim = 2;
    cfg.radius = 1.0;
    cfg.sweeps = 40;
    cfg.seed = 7;
    auto rep = reversibility_test(cfg, PairPotential::none(1.0), FreePotential::zero(), 6, 0.0, 20);
    for (std::size_t i = 0; i < rep.before.size(); ++i) CHECK(rep.before[i] == rep.after[i]);
    CHECK(rep.pass);
    CHECK(rep.p_value == 1.0);
}

TEST_CASE("short equilibrium evolution keeps the histogram (smoke)") {
    GibbsSamplerConfig cfg;
    cfg.box = 9.0;
    cfg.n_balls = 10;
    cfg.dim = 2;
    cfg.radius = 1.0;
    cfg.sweeps = 80;
    cfg.proposal_scale = 0.8;
    cfg.seed = 31;
    auto rep = reversibility_test(cfg, PairPotential::none(1.0), FreePotential::zero(), 7, 0.25, 40);
    CHECK(rep.pass);
}
