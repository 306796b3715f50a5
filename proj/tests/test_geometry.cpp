#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hardball/geometry.hpp"
#include "hardball/io.hpp"

using namespace hardball;

namespace {

BallConfiguration make_config(int dim, double r, std::vector<double> pos,
                              std::optional<double> box = std::nullopt) {
    BallConfiguration c;
    c.dim = dim;
    c.radius = r;
    c.box = box;
    c.pos = std::move(pos);
    return c;
}

} // namespace

TEST_CASE("validate accepts separated balls and rejects overlap") {
    CHECK(validate(make_config(2, 1.0, {0, 0, 2, 0}), 1e-9));
    CHECK_FALSE(validate(make_config(2, 1.0, {0, 0, 0.5, 0}), 1e-9));
    CHECK(validate(make_config(1, 1.0, {0.0, 1.0}), 1e-9));  // exactly touching
}

TEST_CASE("validate rejects non-finite coordinates") {
    auto c = make_config(2, 1.0, {0, 0, std::nan(""), 0});
    CHECK_THROWS_AS(validate(c, 1e-9), std::invalid_argument);
    auto empty = make_config(2, 1.0, {});
    CHECK_THROWS_AS(validate(empty, 1e-9), std::invalid_argument);
}

TEST_CASE("periodic distance uses the minimum image") {
    auto c = make_config(2, 1.0, {0.5, 0.5, 9.5, 0.5}, 10.0);
    CHECK(c.distance(0, 1) == Catch::Approx(1.0));
    CHECK(validate(c, 1e-9));
}

TEST_CASE("contact_pairs reports exactly the touching pairs with gaps") {
    auto c = make_config(2, 1.0, {0, 0, 1, 0, 5, 0});
    auto pairs = contact_pairs(c, 1e-6);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].j == 0);
    CHECK(pairs[0].k == 1);
    CHECK(pairs[0].gap == Catch::Approx(0.0).margin(1e-15));

    auto far = make_config(2, 1.0, {0, 0, 3, 0, 7, 0});
    CHECK(contact_pairs(far, 1e-6).empty());

    const double h = std::sqrt(3.0) / 2.0;
    auto tri = make_config(2, 1.0, {0, 0, 1, 0, 0.5, h});
    CHECK(contact_pairs(tri, 1e-6).size() == 3);
}

TEST_CASE("contact_pairs commutes with relabeling") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> pos;
        for (int i = 0; i < 10; ++i) pos.push_back(u(gen));
        auto c = make_config(2, 1.0, pos);
        if (!validate(c, 0.0)) continue;
        auto rev = c;
        const int n = c.n_balls();
        for (int b = 0; b < n; ++b)
            for (int d = 0; d < 2; ++d) rev.pos[(n - 1 - b) * 2 + d] = c.pos[b * 2 + d];
        auto pa = contact_pairs(c, 1e-6);
        auto pb = contact_pairs(rev, 1e-6);
        REQUIRE(pa.size() == pb.size());
        for (const auto& p : pa) {
            bool found = false;
            for (const auto& q : pb)
                if (q.j == std::min(n - 1 - p.j, n - 1 - p.k) &&
                    q.k == std::max(n - 1 - p.j, n - 1 - p.k))
                    found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("contact graph components split and join with the margin") {
    auto two = make_config(2, 1.0, {0, 0, 1.05, 0, 100, 0, 101.05, 0});
    CHECK(contact_graph_components(two, 0.1).size() == 2);

    auto chain = make_config(1, 1.0, {0.0, 1.05, 2.10});
    CHECK(contact_graph_components(chain, 0.1).size() == 1);
    CHECK(contact_graph_components(chain, 0.01).size() == 3);
}

TEST_CASE("components at eps=0 refine components at any larger eps") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> pos;
        for (int i = 0; i < 12; ++i) pos.push_back(u(gen));
        auto c = make_config(2, 1.0, pos);
        if (!validate(c, 0.0)) continue;
        auto fine = contact_graph_components(c, 0.0);
        auto coarse = contact_graph_components(c, 0.7);
        // every fine group lies inside one coarse group
        for (const auto& g : fine) {
            int owner = -1;
            for (std::size_t ci = 0; ci < coarse.size(); ++ci)
                for (int b : coarse[ci])
                    if (b == g.front()) owner = static_cast<int>(ci);
            REQUIRE(owner >= 0);
            for (int b : g)
                CHECK(std::find(coarse[owner].begin(), coarse[owner].end(), b) !=
                      coarse[owner].end());
        }
    }
}

TEST_CASE("normal direction blocks and unit norm") {
    auto c = make_config(2, 1.0, {0, 0, 1, 0});
    auto n = normal_direction(c, {0, 1, 0.0});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(n[0] == Catch::Approx(-inv_sqrt2));
    CHECK(n[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(n[2] == Catch::Approx(inv_sqrt2));
    CHECK(n[3] == Catch::Approx(0.0).margin(1e-15));
    double norm2 = 0.0;
    for (double v : n) norm2 += v * v;
    CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-12);
}

TEST_CASE("normal direction requires an actual contact") {
    auto single = make_config(2, 1.0, {0, 0});
    CHECK_THROWS_AS(normal_direction(single, {0, 0, 0.0}), std::invalid_argument);
    auto apart = make_config(2, 1.0, {0, 0, 3, 0});
    CHECK_THROWS_AS(normal_direction(apart, {0, 1, 2.0}), std::invalid_argument);
}

TEST_CASE("displacement along the normal opens the gap at first order") {
    auto c = make_config(2, 1.0, {0, 0, 1, 0});
    auto n = normal_direction(c, {0, 1, 0.0});
    const double delta = 1e-4;
    auto moved = c;
    for (std::size_t i = 0; i < moved.pos.size(); ++i) moved.pos[i] += delta * n[i];
    CHECK(moved.distance(0, 1) == Catch::Approx(1.0 + delta * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("pairwise exterior sanity: sliding along the normal stays feasible") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> angle(0.0, 6.28318);
    for (int rep = 0; rep < 10; ++rep) {
        const double a = angle(gen);
        auto c = make_config(2, 1.0, {0, 0, std::cos(a), std::sin(a)});
        auto n = normal_direction(c, {0, 1, 0.0});
        for (double t : {0.1, 0.5, 1.0}) {
            auto moved = c;
            for (std::size_t i = 0; i < moved.pos.size(); ++i) moved.pos[i] += t * n[i];
            CHECK(validate(moved, 1e-9));
        }
    }
}

TEST_CASE("configuration table round-trips exactly") {
    auto c = make_config(3, 0.75, {0.1234567890123456, -2.0 / 3.0, 1e-17, 4.0, 5.0, 6.0});
    const std::string table = io::configuration_table(c);
    auto back = io::parse_configuration_table(table);
    CHECK(back.dim == c.dim);
    CHECK(back.radius == c.radius);
    CHECK_FALSE(back.box.has_value());
    REQUIRE(back.pos.size() == c.pos.size());
    for (std::size_t i = 0; i < c.pos.size(); ++i) CHECK(back.pos[i] == c.pos[i]);

    c.box = 12.5;
    auto back2 = io::parse_configuration_table(io::configuration_table(c));
    REQUIRE(back2.box.has_value());
    CHECK(*back2.box == 12.5);
}
