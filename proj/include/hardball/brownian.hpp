#pragma once

// Dyadic Brownian driving noise with midpoint-bridge refinement.
//
// Increments are stored as integer multiples of a fixed quantum 2^-40, so
// that the two level-(n+1) children of a step sum to their level-n parent
// bit-exactly: the left child is drawn from the bridge law, the right child
// is defined as parent minus left. The quantum is far below every tolerance
// in play and statistically invisible.
//
// Streams are keyed by (seed, ball, coordinate, level, index); a ball's
// noise does not depend on how many other balls exist, which is what makes
// cluster-local and monolithic runs consume identical randomness.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hardball/rng.hpp"

namespace hardball {

class DyadicBrownianPath {
public:
    static constexpr double kQuantum = 0x1.0p-40;

    DyadicBrownianPath(std::uint64_t seed, int level, double horizon, int n_balls, int dim)
        : seed_(seed), level_(level), horizon_(horizon), n_balls_(n_balls), dim_(dim) {
        if (level < 0) throw std::invalid_argument("level must be >= 0");
        if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
        if (n_balls < 1 || dim < 1) throw std::invalid_argument("need at least one ball and one dimension");
        const double raw_steps = horizon * std::pow(2.0, level);
        steps_ = static_cast<std::int64_t>(std::llround(raw_steps));
        if (std::abs(raw_steps - static_cast<double>(steps_)) > 1e-9 || steps_ < 1)
            throw std::invalid_argument("horizon * 2^level must be a positive integer");
        if (steps_ > (std::int64_t{1} << 34)) throw std::invalid_argument("step count overflow");
        units_ = static_cast<std::int64_t>(std::ceil(horizon - 1e-12));
        counts_.resize(static_cast<std::size_t>(n_balls) * dim);
        for (int b = 0; b < n_balls; ++b)
            for (int c = 0; c < dim; ++c)
                counts_[stream_index(b, c)] = build_stream(b, c);
    }

    std::uint64_t seed() const { return seed_; }
    int level() const { return level_; }
    double horizon() const { return horizon_; }
    int n_balls() const { return n_balls_; }
    int dim() const { return dim_; }
    std::int64_t steps() const { return steps_; }
    double dt() const { return std::pow(2.0, -level_); }

    double increment(int ball, std::int64_t step, int coord) const {
        return static_cast<double>(counts_[stream_index(ball, coord)][step]) * kQuantum;
    }

    /// Write the dim increments of (ball, step) into out.
    void increment(int ball, std::int64_t step, double* out) const {
        for (int c = 0; c < dim_; ++c) out[c] = increment(ball, step, c);
    }

    std::int64_t increment_counts(int ball, std::int64_t step, int coord) const {
        return counts_[stream_index(ball, coord)][step];
    }

    /// Path value B(t_step) by prefix sum (exact in counts).
    double value(int ball, std::int64_t step, int coord) const {
        std::int64_t acc = 0;
        const auto& s = counts_[stream_index(ball, coord)];
        for (std::int64_t k = 0; k < step; ++k) acc += s[k];
        return static_cast<double>(acc) * kQuantum;
    }

private:
    std::size_t stream_index(int ball, int coord) const {
        return static_cast<std::size_t>(ball) * dim_ + coord;
    }

    std::int64_t quantize(double z, double sigma) const {
        return std::llround(z * sigma / kQuantum);
    }

    /// Build the increment stream of one (ball, coordinate) at level_, by
    /// refining unit-interval root draws level by level. The left child of
    /// each parent is parent/2 plus a keyed bridge offset; the right child
    /// is the exact integer remainder.
    std::vector<std::int64_t> build_stream(int ball, int coord) const {
        std::vector<std::int64_t> cur(static_cast<std::size_t>(units_));
        for (std::int64_t u = 0; u < units_; ++u)
            cur[u] = quantize(rng::standard_normal(seed_, ball, coord, 0, u), 1.0);
        for (int m = 1; m <= level_; ++m) {
            const double sigma = std::pow(2.0, -0.5 * (m + 1));
            std::vector<std::int64_t> next(cur.size() * 2);
            for (std::size_t s = 0; s < cur.size(); ++s) {
                const std::int64_t offset =
                    quantize(rng::standard_normal(seed_, ball, coord, m, s), sigma);
                const std::int64_t left = cur[s] / 2 + offset;
                next[2 * s] = left;
                next[2 * s + 1] = cur[s] - left;
            }
            cur = std::move(next);
        }
        cur.resize(static_cast<std::size_t>(steps_));
        return cur;
    }

    std::uint64_t seed_;
    int level_;
    double horizon_;
    int n_balls_;
    int dim_;
    std::int64_t steps_ = 0;
    std::int64_t units_ = 0;
    std::vector<std::vector<std::int64_t>> counts_;
};

inline DyadicBrownianPath sample_path(std::uint64_t seed, int level, double horizon,
                                      int n_balls, int dim) {
    return DyadicBrownianPath(seed, level, horizon, n_balls, dim);
}

/// Same driving noise one dyadic level finer.
inline DyadicBrownianPath refine(const DyadicBrownianPath& path) {
    return DyadicBrownianPath(path.seed(), path.level() + 1, path.horizon(), path.n_balls(),
                              path.dim());
}

} // namespace hardball
