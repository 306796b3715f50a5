#pragma once

// Configuration-space types for hard balls: containment checks, contact
// detection, pair normals, and the contact graph used by the cluster engine.
//
// A configuration is n labeled points in R^d with the pair constraint
// dist(x^j, x^k) >= r for j != k, where r is the hard-core diameter.
// Distances are Euclidean, or minimum-image when a periodic box is set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardball {

/// Contact detection is strictly looser than the hard-core tolerance so
/// local time can be attributed to pairs that sit exactly on the boundary.
inline constexpr double kHardCoreTolFactor = 1e-9;  // tol_hc = 1e-9 * r
inline constexpr double kContactTol = 1e-7;         // contacts: dist <= r*(1+1e-7)

struct BallConfiguration {
    int dim = 0;
    double radius = 0.0;                // hard-core diameter r
    std::optional<double> box;          // periodic box side, or free space
    std::vector<double> pos;            // n*dim coordinates, ball-major

    int n_balls() const { return dim > 0 ? static_cast<int>(pos.size()) / dim : 0; }

    std::span<const double> ball(int i) const {
        return {pos.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> ball(int i) {
        return {pos.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }

    /// Displacement x^i - x^j, minimum-image if periodic.
    void displacement(int i, int j, double* out) const {
        const double* a = pos.data() + static_cast<std::size_t>(i) * dim;
        const double* b = pos.data() + static_cast<std::size_t>(j) * dim;
        for (int c = 0; c < dim; ++c) {
            double d = a[c] - b[c];
            if (box) d -= *box * std::round(d / *box);
            out[c] = d;
        }
    }

    double distance(int i, int j) const {
        const double* a = pos.data() + static_cast<std::size_t>(i) * dim;
        const double* b = pos.data() + static_cast<std::size_t>(j) * dim;
        double s = 0.0;
        for (int c = 0; c < dim; ++c) {
            double d = a[c] - b[c];
            if (box) d -= *box * std::round(d / *box);
            s += d * d;
        }
        return std::sqrt(s);
    }
};

struct ContactPair {
    int j = 0;                          // j < k always
    int k = 0;
    double gap = 0.0;                   // dist - r, may be slightly negative
};

namespace detail {
inline void require_finite(const BallConfiguration& c) {
    for (double v : c.pos)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite coordinate in configuration");
    if (c.dim < 1) throw std::invalid_argument("configuration dimension must be >= 1");
    if (!(c.radius > 0.0)) throw std::invalid_argument("hard-core diameter must be positive");
    if (c.box && !(*c.box > 0.0)) throw std::invalid_argument("periodic box side must be positive");
}
} // namespace detail

inline double min_pair_distance(const BallConfiguration& c) {
    const int n = c.n_balls();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) best = std::min(best, c.distance(i, j));
    return best;
}

/// True iff all pairwise distances are >= r - tol_hc.
inline bool validate(const BallConfiguration& c, double tol_hc) {
    detail::require_finite(c);
    if (c.n_balls() == 0) throw std::invalid_argument("empty configuration");
    const int n = c.n_balls();
    const double thr = c.radius - tol_hc;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (c.distance(i, j) < thr) return false;
    return true;
}

inline bool validate(const BallConfiguration& c) {
    return validate(c, kHardCoreTolFactor * c.radius);
}

/// All pairs with dist <= r*(1 + tol_contact), each with its gap.
inline std::vector<ContactPair> contact_pairs(const BallConfiguration& c, double tol_contact = kContactTol) {
    const int n = c.n_balls();
    const double thr = c.radius * (1.0 + tol_contact);
    std::vector<ContactPair> out;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = c.distance(i, j);
            if (d <= thr) out.push_back({i, j, d - c.radius});
        }
    return out;
}

namespace detail {
class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    int find(int x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a); b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }
private:
    std::vector<int> parent_;
};
} // namespace detail

/// Connected components of the graph linking j,k whenever dist <= r + eps.
/// Components are sorted internally and ordered by smallest member.
inline std::vector<std::vector<int>> contact_graph_components(const BallConfiguration& c, double eps) {
    if (eps < 0.0) throw std::invalid_argument("contact graph margin must be >= 0");
    const int n = c.n_balls();
    detail::UnionFind uf(n);
    const double thr = c.radius + eps;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (c.distance(i, j) <= thr) uf.unite(i, j);
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& g : groups)
        if (!g.empty()) out.push_back(std::move(g));
    return out;
}

/// Configuration-space inward unit normal of a contact pair: block j gets
/// u/sqrt(2), block k gets -u/sqrt(2) with u = (x^j - x^k)/|x^j - x^k|.
/// Moving along it strictly increases dist(x^j, x^k).
inline std::vector<double> normal_direction(const BallConfiguration& c, const ContactPair& p) {
    const int n = c.n_balls();
    if (p.j == p.k || p.j < 0 || p.k < 0 || p.j >= n || p.k >= n)
        throw std::invalid_argument("contact pair indices out of range");
    if (!(p.gap <= c.radius * kContactTol))
        throw std::invalid_argument("pair is not in contact");
    std::vector<double> u(c.dim);
    c.displacement(p.j, p.k, u.data());
    double nrm = 0.0;
    for (double v : u) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw std::invalid_argument("degenerate contact pair: coincident centers");
    std::vector<double> out(static_cast<std::size_t>(n) * c.dim, 0.0);
    const double s = 1.0 / (nrm * std::numbers::sqrt2);
    for (int c2 = 0; c2 < c.dim; ++c2) {
        out[static_cast<std::size_t>(p.j) * c.dim + c2] = u[c2] * s;
        out[static_cast<std::size_t>(p.k) * c.dim + c2] = -u[c2] * s;
    }
    return out;
}

} // namespace hardball
