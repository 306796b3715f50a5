#pragma once

// Finite-cluster-property certificates. Searches for a decreasing sequence
// of open sets O_0 .. O_{M-1} (finite unions of axis-aligned boxes on an
// eps/2 grid) such that over window i every ball's (r+eps)/2-neighborhood
// stays wholly inside or wholly outside O_i according to its side at the
// window start, with the containments
//   O_0 inside the centered ball of radius a + M + M^p,
//   eps-neighborhood of O_{i+1} inside O_i,
//   centered ball of radius a + M inside O_{M-1}.
//
// Construction is backward and greedy: O_{M-1} starts as a grid cover of
// the inner ball, each earlier O_i as the eps-inflation of its successor,
// and every set absorbs whole ball sweeps until a fixed point. A sweep that
// must enter a set but escapes the outer ball produces a refusal naming the
// window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardball/geometry.hpp"

namespace hardball {

struct FcpParams {
    double eps = 0.0;
    int p = 1;
    double T = 0.0;
    int a = 1;
    int M = 1;
};

struct FcpBox {
    std::vector<double> lo, hi;
};

struct FcpWitness {
    FcpParams params;
    double cell = 0.0;                            // grid cell side (= eps/2)
    std::vector<std::vector<FcpBox>> open_sets;   // O_0 .. O_{M-1}
};

struct FcpRefusal {
    int window = -1;
    std::string reason;
};

struct FcpResult {
    bool ok = false;
    FcpWitness witness;
    FcpRefusal refusal;
};

namespace fcp_detail {

/// Dense boolean grid over [-extent, extent)^d with cells of side `cell`.
struct Grid {
    int dim = 0;
    int half = 0;        // cells per half axis; index range [-half, half)
    double cell = 0.0;
    std::vector<std::uint8_t> bits;

    Grid(int dim_, int half_, double cell_)
        : dim(dim_), half(half_), cell(cell_) {
        std::size_t total = 1;
        for (int c = 0; c < dim; ++c) {
            total *= static_cast<std::size_t>(2 * half);
            if (total > (std::size_t{1} << 27)) throw std::invalid_argument("witness grid too large");
        }
        bits.assign(total, 0);
    }

    std::size_t flat(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (int c = 0; c < dim; ++c) f = f * static_cast<std::size_t>(2 * half) +
                                          static_cast<std::size_t>(idx[c] + half);
        return f;
    }

    bool in_range(const std::vector<int>& idx) const {
        for (int c = 0; c < dim; ++c)
            if (idx[c] < -half || idx[c] >= half) return false;
        return true;
    }

    bool get(const std::vector<int>& idx) const { return bits[flat(idx)] != 0; }
    void set(const std::vector<int>& idx) { bits[flat(idx)] = 1; }

    void cell_center(const std::vector<int>& idx, std::vector<double>& out) const {
        out.resize(dim);
        for (int c = 0; c < dim; ++c) out[c] = (idx[c] + 0.5) * cell;
    }
};

/// Iterate an axis-aligned index box, calling f(idx).
template <typename F>
void for_each_index(const std::vector<int>& lo, const std::vector<int>& hi, F&& f) {
    std::vector<int> idx = lo;
    const int dim = static_cast<int>(lo.size());
    while (true) {
        f(idx);
        int c = dim - 1;
        while (c >= 0) {
            if (++idx[c] <= hi[c]) break;
            idx[c] = lo[c];
            --c;
        }
        if (c < 0) break;
    }
}

inline double point_segment_distance(const std::vector<double>& p, const double* a,
                                     const double* b, int dim) {
    double ab2 = 0.0, ap_ab = 0.0;
    for (int c = 0; c < dim; ++c) {
        const double d = b[c] - a[c];
        ab2 += d * d;
        ap_ab += (p[c] - a[c]) * d;
    }
    const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
    double s2 = 0.0;
    for (int c = 0; c < dim; ++c) {
        const double q = a[c] + t * (b[c] - a[c]);
        s2 += (p[c] - q) * (p[c] - q);
    }
    return std::sqrt(s2);
}

/// Conservative cell cover of the swept neighborhood of one ball across one
/// window: all cells whose center is within radius + cell diagonal / 2 of
/// any inter-step segment. `escaped` marks sweeps leaving the grid.
struct Sweep {
    std::vector<std::vector<int>> cells;
    bool escaped = false;
};

inline Sweep rasterize_sweep(const std::vector<BallConfiguration>& traj, std::size_t step_begin,
                             std::size_t step_end, int ball, double radius, const Grid& grid) {
    Sweep sweep;
    const int dim = traj.front().dim;
    const double reach = radius + 0.5 * grid.cell * std::sqrt(static_cast<double>(dim));
    std::vector<double> center;
    std::vector<int> lo(dim), hi(dim);
    std::vector<std::uint8_t> seen(grid.bits.size(), 0);
    for (std::size_t k = step_begin; k < step_end; ++k) {
        const double* a = traj[k].ball(ball).data();
        const double* b = traj[k + 1].ball(ball).data();
        for (int c = 0; c < dim; ++c) {
            const double mn = std::min(a[c], b[c]) - reach;
            const double mx = std::max(a[c], b[c]) + reach;
            lo[c] = static_cast<int>(std::floor(mn / grid.cell));
            hi[c] = static_cast<int>(std::floor(mx / grid.cell));
            // Clip to the grid; anything beyond counts as an escape.
            if (lo[c] < -grid.half || hi[c] >= grid.half) sweep.escaped = true;
            lo[c] = std::max(lo[c], -grid.half);
            hi[c] = std::min(hi[c], grid.half - 1);
            if (lo[c] > hi[c]) lo[c] = hi[c];
        }
        for_each_index(lo, hi, [&](const std::vector<int>& idx) {
            grid.cell_center(idx, center);
            if (point_segment_distance(center, a, b, dim) > reach) return;
            const std::size_t f = grid.flat(idx);
            if (!seen[f]) {
                seen[f] = 1;
                sweep.cells.push_back(idx);
            }
        });
    }
    return sweep;
}

/// Offsets within Euclidean box-to-box distance `dist` of the origin cell.
inline std::vector<std::vector<int>> inflation_stencil(int dim, double cell, double dist) {
    const int reach = static_cast<int>(std::ceil(dist / cell)) + 1;
    std::vector<std::vector<int>> stencil;
    std::vector<int> lo(dim, -reach), hi(dim, reach);
    for_each_index(lo, hi, [&](const std::vector<int>& off) {
        double s2 = 0.0;
        for (int c = 0; c < dim; ++c) {
            const double gap = std::max(std::abs(off[c]) - 1, 0) * cell;
            s2 += gap * gap;
        }
        if (std::sqrt(s2) <= dist) stencil.push_back(off);
    });
    return stencil;
}

/// Merge marked cells into boxes: runs along the last axis.
inline std::vector<FcpBox> grid_to_boxes(const Grid& grid) {
    std::vector<FcpBox> boxes;
    std::vector<int> lo(grid.dim, -grid.half), hi(grid.dim, grid.half - 1);
    std::optional<std::vector<int>> run_start;
    std::vector<int> prev;
    auto flush = [&](const std::vector<int>& run_end) {
        FcpBox box;
        box.lo.resize(grid.dim);
        box.hi.resize(grid.dim);
        for (int c = 0; c < grid.dim; ++c) {
            box.lo[c] = (*run_start)[c] * grid.cell;
            box.hi[c] = (run_end[c] + 1) * grid.cell;
        }
        boxes.push_back(std::move(box));
    };
    for_each_index(lo, hi, [&](const std::vector<int>& idx) {
        const bool on = grid.get(idx);
        const bool contiguous = run_start && idx.back() == prev.back() + 1 &&
                                std::equal(idx.begin(), idx.end() - 1, prev.begin());
        if (on) {
            if (!contiguous) {
                if (run_start) flush(prev);
                run_start = idx;
            }
        } else if (run_start) {
            flush(prev);
            run_start.reset();
        }
        prev = idx;
    });
    if (run_start) flush(prev);
    return boxes;
}

} // namespace fcp_detail

/// Search for a witness over the trajectory (boundaries at multiples of dt
/// covering [0, T]). Returns the witness, or a refusal naming the first
/// violated containment.
inline FcpResult fcp_certificate(const std::vector<BallConfiguration>& trajectory, double /*dt*/,
                                 double eps, int p, double T, int a, int M) {
    using namespace fcp_detail;
    if (trajectory.size() < 2) throw std::invalid_argument("trajectory too short");
    if (!(eps > 0.0) || M < 1 || a < 1 || p < 1 || !(T > 0.0))
        throw std::invalid_argument("bad witness parameters");
    const int dim = trajectory.front().dim;
    const double r = trajectory.front().radius;
    const double outer = a + M + std::pow(static_cast<double>(M), p);
    const double cell = eps / 2.0;
    const int half = static_cast<int>(std::ceil(outer / cell));

    FcpResult result;
    result.witness.params = {eps, p, T, a, M};
    result.witness.cell = cell;
    result.witness.open_sets.resize(M);

    const std::size_t total_steps = trajectory.size() - 1;
    if (total_steps < static_cast<std::size_t>(M))
        throw std::invalid_argument("more windows than steps");

    const int n = trajectory.front().n_balls();
    const double sweep_radius = (r + eps) / 2.0;

    // Backward pass: O_{M-1} first. Keep every grid alive to emit boxes.
    std::vector<Grid> sets;
    sets.reserve(M);
    const auto eps_stencil = inflation_stencil(dim, cell, eps);
    for (int i = M - 1; i >= 0; --i) {
        Grid grid(dim, half, cell);
        if (i == M - 1) {
            // Conservative cover of the centered ball of radius a + M.
            const double inner = a + M;
            const int reach = static_cast<int>(std::ceil(inner / cell)) + 1;
            std::vector<int> lo(dim, -reach), hi(dim, reach);
            std::vector<double> center;
            for_each_index(lo, hi, [&](const std::vector<int>& idx) {
                grid.cell_center(idx, center);
                double s2 = 0.0;
                for (double v : center) s2 += v * v;
                if (std::sqrt(s2) <= inner + 0.5 * cell * std::sqrt(static_cast<double>(dim)))
                    grid.set(idx);
            });
        } else {
            const Grid& next = sets.back();
            std::vector<int> lo(dim, -half), hi(dim, half - 1);
            std::vector<int> tgt(dim);
            for_each_index(lo, hi, [&](const std::vector<int>& idx) {
                if (!next.get(idx)) return;
                for (const auto& off : eps_stencil) {
                    for (int c = 0; c < dim; ++c) tgt[c] = idx[c] + off[c];
                    if (!grid.in_range(tgt)) {
                        result.refusal = {i, "eps-neighborhood of O_" + std::to_string(i + 1) +
                                                 " leaves the outer ball"};
                        return;
                    }
                    grid.set(tgt);
                }
            });
            if (result.refusal.window >= 0) {
                result.ok = false;
                return result;
            }
        }

        // Absorb whole ball sweeps of window i until a fixed point.
        const std::size_t begin = total_steps * static_cast<std::size_t>(i) / M;
        const std::size_t end = total_steps * static_cast<std::size_t>(i + 1) / M;
        std::vector<Sweep> sweeps(n);
        for (int b = 0; b < n; ++b)
            sweeps[b] = rasterize_sweep(trajectory, begin, end, b, sweep_radius, grid);
        std::vector<bool> inside(n, false);
        bool changed = true;
        while (changed) {
            changed = false;
            for (int b = 0; b < n; ++b) {
                if (inside[b]) continue;
                bool touches = false, covered = true;
                for (const auto& idx : sweeps[b].cells) {
                    if (grid.get(idx)) touches = true;
                    else covered = false;
                }
                if (!touches) continue;
                if (sweeps[b].escaped) {
                    result.ok = false;
                    result.refusal = {i, "ball " + std::to_string(b + 1) +
                                             " sweep crosses O_" + std::to_string(i) +
                                             " and leaves the outer ball in window " +
                                             std::to_string(i)};
                    return result;
                }
                if (!covered) {
                    for (const auto& idx : sweeps[b].cells) grid.set(idx);
                    changed = true;
                }
                inside[b] = true;
            }
        }
        sets.push_back(std::move(grid));
    }

    // sets holds O_{M-1} .. O_0; emit in ascending order.
    for (int i = 0; i < M; ++i)
        result.witness.open_sets[i] = grid_to_boxes(sets[static_cast<std::size_t>(M - 1 - i)]);
    result.ok = true;
    return result;
}

/// Exact (;41c)-style containment check on a stored witness, in grid units.
inline bool fcp_witness_valid(const FcpWitness& witness) {
    using namespace fcp_detail;
    const int M = witness.params.M;
    if (static_cast<int>(witness.open_sets.size()) != M || M < 1) return false;
    if (witness.open_sets[0].empty()) return false;
    const int dim = static_cast<int>(witness.open_sets[0][0].lo.size());
    const double cell = witness.cell;
    const double outer = witness.params.a + M + std::pow(static_cast<double>(M), witness.params.p);
    const int half = static_cast<int>(std::ceil(outer / cell));

    auto to_grid = [&](const std::vector<FcpBox>& boxes) {
        Grid g(dim, half, cell);
        for (const auto& box : boxes) {
            std::vector<int> lo(dim), hi(dim);
            for (int c = 0; c < dim; ++c) {
                lo[c] = static_cast<int>(std::llround(box.lo[c] / cell));
                hi[c] = static_cast<int>(std::llround(box.hi[c] / cell)) - 1;
            }
            for_each_index(lo, hi, [&](const std::vector<int>& idx) {
                if (!g.in_range(idx)) throw std::invalid_argument("witness box outside grid");
                g.set(idx);
            });
        }
        return g;
    };

    std::vector<Grid> grids;
    grids.reserve(M);
    for (const auto& boxes : witness.open_sets) grids.push_back(to_grid(boxes));

    // O_0 inside the outer ball: every cell corner within radius.
    for (const auto& box : witness.open_sets[0])
        for (int c = 0; c < dim; ++c)
            if (std::abs(box.lo[c]) > outer || std::abs(box.hi[c]) > outer) return false;

    // U_eps(O_{i+1}) inside O_i.
    const auto stencil = inflation_stencil(dim, cell, witness.params.eps);
    for (int i = 0; i + 1 < M; ++i) {
        std::vector<int> lo(dim, -half), hi(dim, half - 1);
        bool ok = true;
        std::vector<int> tgt(dim);
        for_each_index(lo, hi, [&](const std::vector<int>& idx) {
            if (!ok || !grids[static_cast<std::size_t>(i + 1)].get(idx)) return;
            for (const auto& off : stencil) {
                for (int c = 0; c < dim; ++c) tgt[c] = idx[c] + off[c];
                if (!grids[static_cast<std::size_t>(i)].in_range(tgt) ||
                    !grids[static_cast<std::size_t>(i)].get(tgt)) {
                    ok = false;
                    return;
                }
            }
        });
        if (!ok) return false;
    }

    // Centered ball of radius a + M inside O_{M-1}: test cell centers.
    {
        const double inner = witness.params.a + M;
        const int reach = static_cast<int>(std::ceil(inner / cell));
        std::vector<int> lo(dim, -reach), hi(dim, reach);
        bool ok = true;
        std::vector<double> center;
        for_each_index(lo, hi, [&](const std::vector<int>& idx) {
            if (!ok) return;
            Grid& g = grids[static_cast<std::size_t>(M - 1)];
            g.cell_center(idx, center);
            double s2 = 0.0;
            for (double v : center) s2 += v * v;
            if (std::sqrt(s2) <= inner && !g.get(idx)) ok = false;
        });
        if (!ok) return false;
    }
    return true;
}

} // namespace hardball
