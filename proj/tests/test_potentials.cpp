#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hardball/geometry.hpp"
#include "hardball/potentials.hpp"

using namespace hardball;

TEST_CASE("drift with no neighbors and zero free potential vanishes") {
    auto pair = PairPotential::lennard_jones(2.0, 1.0);
    std::vector<double> x = {0.0, 0.0, 0.0};
    auto b = evaluate_drift(x, {}, pair, FreePotential::zero());
    for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("Lennard-Jones drift matches the explicit formula") {
    // beta = 2, one neighbor with x - y = (2, 0, 0):
    // b = (beta/2) [12 * 2 / 2^14 - 6 * 2 / 2^8] e_1 = (24/16384 - 12/256) e_1
    auto pair = PairPotential::lennard_jones(2.0, 1.0);
    std::vector<double> x = {2.0, 0.0, 0.0};
    auto b = evaluate_drift(x, {{0.0, 0.0, 0.0}}, pair, FreePotential::zero());
    CHECK(b[0] == Catch::Approx(24.0 / 16384.0 - 12.0 / 256.0).epsilon(1e-12));
    CHECK(b[0] == Catch::Approx(-4.5410156e-2).epsilon(1e-6));
    CHECK(b[1] == 0.0);
    CHECK(b[2] == 0.0);
}

TEST_CASE("Riesz drift matches the explicit formula") {
    auto pair = PairPotential::riesz(4.0, 2.0, 1.0);
    std::vector<double> x = {1.0, 0.0, 0.0};
    auto b = evaluate_drift(x, {{0.0, 0.0, 0.0}}, pair, FreePotential::zero());
    CHECK(b[0] == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(b[1] == 0.0);
    CHECK(b[2] == 0.0);
}

TEST_CASE("a neighbor inside the hard core is a domain error") {
    auto pair = PairPotential::lennard_jones(1.0, 1.0);
    std::vector<double> x = {0.4, 0.0, 0.0};
    CHECK_THROWS_AS(evaluate_drift(x, {{0.0, 0.0, 0.0}}, pair, FreePotential::zero()),
                    std::domain_error);
}

TEST_CASE("drift antisymmetry for two balls") {
    auto pair = PairPotential::lennard_jones(1.7, 1.0);
    std::vector<double> x = {0.3, -0.2, 1.1};
    std::vector<double> y = {1.5, 0.4, 0.2};
    auto bx = evaluate_drift(x, {y}, pair, FreePotential::zero());
    auto by = evaluate_drift(y, {x}, pair, FreePotential::zero());
    for (int c = 0; c < 3; ++c) CHECK(bx[c] == -by[c]);
}

TEST_CASE("radial derivative matches finite differences of psi") {
    auto lj = PairPotential::lennard_jones(1.3, 1.0);
    auto rz = PairPotential::riesz(4.0, 0.8, 1.0);
    for (const auto& pair : {lj, rz}) {
        for (double s : {1.0, 1.2, 1.7, 2.5, 4.0, 7.0}) {
            const double h = 1e-6 * s;
            const double fd = (pair.psi(s + h) - pair.psi(s - h)) / (2.0 * h);
            CHECK(pair.dpsi(s) == Catch::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("Ruelle certificates are finite for the admissible examples") {
    auto lj = ruelle_check(PairPotential::lennard_jones(1.0, 1.0), 1.0, 3);
    CHECK(lj.finite);
    CHECK(lj.sum_grad_bound > 0.0);
    CHECK(lj.sum_hess_bound > 0.0);

    auto rz = ruelle_check(PairPotential::riesz(4.0, 1.0, 1.0), 1.0, 3);
    CHECK(rz.finite);
    CHECK(rz.sum_grad_bound > 0.0);

    CHECK(ruelle_check(PairPotential::none(1.0), 1.0, 3).finite);
}

TEST_CASE("Riesz-like decay with exponent d-1 diverges") {
    // a = d - 1 = 2 in d = 3 gives the harmonic-type shell series.
    auto cert = ruelle_check(PairPotential::riesz(2.0, 1.0, 1.0), 1.0, 3);
    CHECK_FALSE(cert.finite);
}

TEST_CASE("certificate bounds dominate a dense packed-shell witness sum") {
    // Any hard-core configuration realizes a sum below the certificate; a
    // cubic lattice at spacing exactly r is such a configuration.
    auto pair = PairPotential::lennard_jones(1.0, 1.0);
    auto cert = ruelle_check(pair, 1.0, 3);
    double grad_sum = 0.0, hess_sum = 0.0;
    const int R = 12;
    for (int i = -R; i <= R; ++i)
        for (int j = -R; j <= R; ++j)
            for (int k = -R; k <= R; ++k) {
                if (i == 0 && j == 0 && k == 0) continue;
                const double s = std::sqrt(double(i * i + j * j + k * k));
                if (s < 1.0) continue;
                grad_sum += pair.grad_norm(s);
                hess_sum += pair.hess_norm(s);
            }
    CHECK(grad_sum < cert.sum_grad_bound);
    CHECK(hess_sum < cert.sum_hess_bound);
}

TEST_CASE("cutoff drift error is inside the shell tail bound") {
    auto full = PairPotential::lennard_jones(1.0, 1.0);
    auto cut = PairPotential::lennard_jones(1.0, 1.0, 8.0);
    const double tail = ruelle_grad_tail(full, 1.0, 3, 8.0);
    CHECK(tail > 0.0);

    // Lattice test configuration: neighbors out to radius 16.
    std::vector<std::vector<double>> neighbors;
    const int R = 16;
    for (int i = -R; i <= R; ++i)
        for (int j = -R; j <= R; ++j)
            for (int k = -R; k <= R; ++k) {
                if (i == 0 && j == 0 && k == 0) continue;
                const double s = std::sqrt(double(i * i + j * j + k * k));
                if (s < 1.0 || s > R) continue;
                neighbors.push_back({double(i) * 1.0, double(j) * 1.0, double(k) * 1.0});
            }
    std::vector<double> x = {0.0, 0.0, 0.0};
    auto bf = evaluate_drift(x, neighbors, full, FreePotential::zero());
    auto bc = evaluate_drift(x, neighbors, cut, FreePotential::zero());
    double err = 0.0;
    for (int c = 0; c < 3; ++c) err = std::hypot(err, bf[c] - bc[c]);
    CHECK(err <= 0.5 * tail);
}

TEST_CASE("Lipschitz bound: zero potential gives zero, LJ gives a finite constant") {
    CHECK(lipschitz_bound(PairPotential::none(1.0), 1.0, 3) == 0.0);
    const double K = lipschitz_bound(PairPotential::lennard_jones(2.0, 1.0), 1.0, 3);
    CHECK(K > 0.0);
    CHECK(std::isfinite(K));
    CHECK_THROWS_AS(lipschitz_bound(PairPotential::riesz(2.0, 1.0, 1.0), 1.0, 3),
                    std::domain_error);
}

TEST_CASE("measured drift ratios stay below the Lipschitz bound") {
    auto pair = PairPotential::lennard_jones(1.0, 1.0);
    const double K = lipschitz_bound(pair, 1.0, 3);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    int tested = 0;
    while (tested < 500) {
        BallConfiguration a;
        a.dim = 3;
        a.radius = 1.0;
        a.pos.resize(4 * 3);
        for (auto& v : a.pos) v = u(gen);
        if (!validate(a, 0.0)) continue;
        BallConfiguration b = a;
        for (auto& v : b.pos) v += jitter(gen);
        if (!validate(b, 0.0)) continue;
        ++tested;
        auto drift = [&](const BallConfiguration& c) {
            std::vector<double> out;
            for (int i = 0; i < 4; ++i) {
                std::vector<std::vector<double>> nb;
                for (int j = 0; j < 4; ++j)
                    if (j != i) nb.push_back({c.ball(j)[0], c.ball(j)[1], c.ball(j)[2]});
                auto bi = evaluate_drift(c.ball(i), nb, pair, FreePotential::zero());
                out.insert(out.end(), bi.begin(), bi.end());
            }
            return out;
        };
        auto da = drift(a);
        auto db = drift(b);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < da.size(); ++i) {
            num += (da[i] - db[i]) * (da[i] - db[i]);
            den += (a.pos[i] - b.pos[i]) * (a.pos[i] - b.pos[i]);
        }
        if (den == 0.0) continue;
        CHECK(std::sqrt(num / den) <= K);
    }
}

TEST_CASE("Hamiltonian: empty set, pair convention, window restriction, hard core") {
    auto pair = PairPotential::lennard_jones(1.0, 1.0);
    const auto zero = FreePotential::zero();

    BallConfiguration empty;
    empty.dim = 2;
    empty.radius = 1.0;
    CHECK(hamiltonian(empty, 10.0, pair, zero) == 0.0);

    BallConfiguration two;
    two.dim = 2;
    two.radius = 1.0;
    two.pos = {0.0, 0.0, 2.0, 0.0};
    const double expected = 2.0 * (std::pow(2.0, -12.0) - std::pow(2.0, -6.0));
    CHECK(hamiltonian(two, 10.0, pair, zero) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(hamiltonian(two, 10.0, pair, zero) == Catch::Approx(-3.0762e-2).epsilon(1e-4));

    BallConfiguration far = two;
    far.pos[2] = 100.0;  // second ball outside the window contributes nothing
    CHECK(hamiltonian(far, 10.0, pair, zero) == 0.0);

    BallConfiguration overlap = two;
    overlap.pos[2] = 0.5;
    CHECK(std::isinf(hamiltonian(overlap, 10.0, pair, zero)));
}

TEST_CASE("riesz validation requires exponent above the dimension") {
    auto p = PairPotential::riesz(2.5, 1.0, 1.0);
    CHECK_THROWS_AS(p.validate(3), std::invalid_argument);
    CHECK_NOTHROW(p.validate(2));
}
