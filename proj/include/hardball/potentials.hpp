#pragma once

// Free and pair potentials, the drift field they induce, summability
// certificates over hard-core configurations, and a global Lipschitz
// constant for the drift.
//
// Conventions. The inverse temperature beta is folded into the smooth pair
// potential, so the drift of a ball at x with neighbors {y} is uniformly
//     b(x,{y}) = -(1/2) grad Phi(x) - (1/2) sum_y grad Psi(x - y).
// For Lennard-Jones 6-12 this gives b = (beta/2) sum [12u/|u|^14 - 6u/|u|^8]
// with u = x - y; for a Riesz exponent a it gives b = (beta/2) sum u/|u|^{a+2}.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hardball/geometry.hpp"

namespace hardball {

enum class PairKind { None, LennardJones, Riesz, Custom };

/// One term of a radial power-law envelope c * s^-p. Envelopes are valid
/// upper bounds of |psi'| (gradient norm) or the Hessian operator norm for
/// s >= hard core, and drive the shell-series tail bounds.
struct PowerTerm {
    double coef = 0.0;
    double exponent = 0.0;
};

class PairPotential {
public:
    static PairPotential none(double hardcore) {
        PairPotential p;
        p.kind_ = PairKind::None;
        p.hardcore_ = hardcore;
        return p;
    }

    static PairPotential lennard_jones(double beta, double hardcore,
                                       std::optional<double> cutoff = std::nullopt) {
        PairPotential p;
        p.kind_ = PairKind::LennardJones;
        p.beta_ = beta;
        p.hardcore_ = hardcore;
        p.cutoff_ = cutoff;
        p.grad_envelope_ = {{12.0 * beta, 13.0}, {6.0 * beta, 7.0}};
        p.hess_envelope_ = {{156.0 * beta, 14.0}, {42.0 * beta, 8.0}};
        return p;
    }

    static PairPotential riesz(double a, double beta, double hardcore,
                               std::optional<double> cutoff = std::nullopt) {
        if (!(a > 0.0)) throw std::invalid_argument("riesz exponent must be positive");
        PairPotential p;
        p.kind_ = PairKind::Riesz;
        p.beta_ = beta;
        p.riesz_a_ = a;
        p.hardcore_ = hardcore;
        p.cutoff_ = cutoff;
        p.grad_envelope_ = {{beta, a + 1.0}};
        p.hess_envelope_ = {{beta * (a + 1.0), a + 2.0}};
        return p;
    }

    /// Custom truncated radial potential. Callers supply psi, psi', and
    /// power-law envelopes for the summability certificates.
    static PairPotential custom(std::function<double(double)> psi,
                                std::function<double(double)> dpsi,
                                std::vector<PowerTerm> grad_envelope,
                                std::vector<PowerTerm> hess_envelope,
                                double hardcore,
                                std::optional<double> cutoff = std::nullopt) {
        PairPotential p;
        p.kind_ = PairKind::Custom;
        p.hardcore_ = hardcore;
        p.cutoff_ = cutoff;
        p.psi_ = std::move(psi);
        p.dpsi_ = std::move(dpsi);
        p.grad_envelope_ = std::move(grad_envelope);
        p.hess_envelope_ = std::move(hess_envelope);
        return p;
    }

    PairKind kind() const { return kind_; }
    double beta() const { return beta_; }
    double riesz_exponent() const { return riesz_a_; }
    double hardcore() const { return hardcore_; }
    std::optional<double> cutoff() const { return cutoff_; }

    /// Invariant checks that need the ambient dimension (Riesz wants a > d).
    void validate(int dim) const {
        if (kind_ == PairKind::Riesz && !(riesz_a_ > dim))
            throw std::invalid_argument("riesz exponent must exceed the dimension");
    }

    /// Effective pair potential value at separation s (includes beta).
    double psi(double s) const {
        switch (kind_) {
            case PairKind::None: return 0.0;
            case PairKind::LennardJones: return beta_ * (std::pow(s, -12.0) - std::pow(s, -6.0));
            case PairKind::Riesz: return (beta_ / riesz_a_) * std::pow(s, -riesz_a_);
            case PairKind::Custom: return psi_(s);
        }
        return 0.0;
    }

    /// Radial derivative psi'(s).
    double dpsi(double s) const {
        switch (kind_) {
            case PairKind::None: return 0.0;
            case PairKind::LennardJones:
                return beta_ * (-12.0 * std::pow(s, -13.0) + 6.0 * std::pow(s, -7.0));
            case PairKind::Riesz: return -beta_ * std::pow(s, -riesz_a_ - 1.0);
            case PairKind::Custom: return dpsi_(s);
        }
        return 0.0;
    }

    /// |grad Psi| at separation s.
    double grad_norm(double s) const { return std::abs(dpsi(s)); }

    /// Operator norm of the Hessian at separation s: the Hessian of a radial
    /// function splits into psi'' along the axis and psi'/s across it.
    double hess_norm(double s) const {
        switch (kind_) {
            case PairKind::None: return 0.0;
            case PairKind::LennardJones: {
                const double dd = beta_ * (156.0 * std::pow(s, -14.0) - 42.0 * std::pow(s, -8.0));
                return std::max(std::abs(dd), grad_norm(s) / s);
            }
            case PairKind::Riesz: {
                const double dd = beta_ * (riesz_a_ + 1.0) * std::pow(s, -riesz_a_ - 2.0);
                return std::max(std::abs(dd), grad_norm(s) / s);
            }
            case PairKind::Custom: return envelope_value(hess_envelope_, s);
        }
        return 0.0;
    }

    const std::vector<PowerTerm>& grad_envelope() const { return grad_envelope_; }
    const std::vector<PowerTerm>& hess_envelope() const { return hess_envelope_; }

    /// Accumulate the pair-drift contribution of one neighbor displacement u
    /// (= x - y, length d): out += -(1/2) grad Psi(u).
    void add_pair_drift(const double* u, int dim, double* out) const {
        if (kind_ == PairKind::None) return;
        double s2 = 0.0;
        for (int c = 0; c < dim; ++c) s2 += u[c] * u[c];
        const double s = std::sqrt(s2);
        // -(1/2) psi'(s) * u/s
        const double scale = -0.5 * dpsi(s) / s;
        for (int c = 0; c < dim; ++c) out[c] += scale * u[c];
    }

    static double envelope_value(const std::vector<PowerTerm>& env, double s) {
        double v = 0.0;
        for (const auto& t : env) v += t.coef * std::pow(s, -t.exponent);
        return v;
    }

private:
    PairKind kind_ = PairKind::None;
    double beta_ = 1.0;
    double riesz_a_ = 0.0;
    double hardcore_ = 1.0;
    std::optional<double> cutoff_;
    std::function<double(double)> psi_;
    std::function<double(double)> dpsi_;
    std::vector<PowerTerm> grad_envelope_;
    std::vector<PowerTerm> hess_envelope_;
};

class FreePotential {
public:
    static FreePotential zero() { return FreePotential{}; }

    static FreePotential custom(std::function<double(std::span<const double>)> phi,
                                std::function<std::vector<double>(std::span<const double>)> grad) {
        FreePotential f;
        f.zero_ = false;
        f.phi_ = std::move(phi);
        f.grad_ = std::move(grad);
        return f;
    }

    bool is_zero() const { return zero_; }

    double value(std::span<const double> x) const { return zero_ ? 0.0 : phi_(x); }

    /// out += -(1/2) grad Phi(x)
    void add_drift(std::span<const double> x, double* out) const {
        if (zero_) return;
        const std::vector<double> g = grad_(x);
        for (std::size_t c = 0; c < g.size(); ++c) out[c] -= 0.5 * g[c];
    }

private:
    bool zero_ = true;
    std::function<double(std::span<const double>)> phi_;
    std::function<std::vector<double>(std::span<const double>)> grad_;
};

/// Drift at x given explicit neighbor positions. Neighbors beyond the cutoff
/// contribute nothing; a neighbor inside the hard core is a domain error.
inline std::vector<double> evaluate_drift(std::span<const double> x,
                                          const std::vector<std::vector<double>>& neighbors,
                                          const PairPotential& pair,
                                          const FreePotential& free_potential) {
    const int dim = static_cast<int>(x.size());
    std::vector<double> out(dim, 0.0);
    free_potential.add_drift(x, out.data());
    const double tol_hc = kHardCoreTolFactor * pair.hardcore();
    std::vector<double> u(dim);
    for (const auto& y : neighbors) {
        if (static_cast<int>(y.size()) != dim) throw std::invalid_argument("neighbor dimension mismatch");
        double s2 = 0.0;
        for (int c = 0; c < dim; ++c) {
            u[c] = x[c] - y[c];
            s2 += u[c] * u[c];
        }
        const double s = std::sqrt(s2);
        if (s < pair.hardcore() - tol_hc) throw std::domain_error("neighbor inside hard core");
        if (pair.cutoff() && s > *pair.cutoff()) continue;
        pair.add_pair_drift(u.data(), dim, out.data());
    }
    return out;
}

/// Summability certificate for condition-style shell sums over hard-core
/// configurations: sup over configurations of sum |grad Psi| and of the
/// summed Hessian norms, both bounded by a shell decomposition.
struct RuelleCertificate {
    bool finite = false;
    double sum_grad_bound = 0.0;
    double sum_hess_bound = 0.0;
};

namespace detail {

/// Max number of hard-core centers in the shell [k r, (k+1) r): disjoint
/// r/2-balls must fit into the fattened annulus, so the count is at most
/// ((k+1.5)^d - (k-0.5)^d) * 2^d.
inline double shell_count(int k, int dim) {
    return (std::pow(k + 1.5, dim) - std::pow(k - 0.5, dim)) * std::pow(2.0, dim);
}

/// Coefficient A_d with shell_count(k) <= A_d k^(d-1) for all k >= 1.
inline double shell_count_coef(int dim) {
    return 2.0 * dim * std::pow(2.5, dim - 1) * std::pow(2.0, dim);
}

/// Shell sup of g over [lo, hi] by dense sampling; g is smooth with at most
/// a couple of critical points, so a fine grid is adequate.
template <typename F>
double shell_sup(F&& g, double lo, double hi) {
    constexpr int kSamples = 256;
    double best = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
        const double s = lo + (hi - lo) * i / kSamples;
        best = std::max(best, g(s));
    }
    return best;
}

/// Shell series sum_k shell_count(k) * sup_shell(g) from shell k0, with the
/// tail beyond the summed range bounded through the power-law envelope.
/// Returns infinity when the envelope says the series diverges.
template <typename F>
double shell_series(F&& g, const std::vector<PowerTerm>& envelope, double r, int dim, int k0 = 1) {
    for (const auto& t : envelope)
        if (t.coef > 0.0 && t.exponent <= dim) return std::numeric_limits<double>::infinity();
    constexpr int kShells = 512;
    double total = 0.0;
    for (int k = k0; k < k0 + kShells; ++k)
        total += shell_count(k, dim) * shell_sup(g, k * r, (k + 1) * r);
    // Tail over k >= K: shell_count <= A_d k^(d-1) and g(s) <= sum c s^-p for
    // s >= K r, so the tail is below A_d c r^-p K^(d-p) / (p - d) per term.
    const double K = k0 + kShells;
    const double A = shell_count_coef(dim);
    for (const auto& t : envelope) {
        if (t.coef == 0.0) continue;
        total += A * t.coef * std::pow(r, -t.exponent) * std::pow(K, dim - t.exponent) /
                 (t.exponent - dim);
    }
    return total;
}

} // namespace detail

/// Shell-decomposition certificate; `finite == false` means the series
/// diverges and the potential is outside the admissible class.
inline RuelleCertificate ruelle_check(const PairPotential& pair, double r, int dim) {
    RuelleCertificate cert;
    if (pair.kind() == PairKind::None) {
        cert.finite = true;
        return cert;
    }
    const double g = detail::shell_series([&](double s) { return pair.grad_norm(s); },
                                          pair.grad_envelope(), r, dim);
    const double h = detail::shell_series([&](double s) { return pair.hess_norm(s); },
                                          pair.hess_envelope(), r, dim);
    cert.finite = std::isfinite(g) && std::isfinite(h);
    cert.sum_grad_bound = g;
    cert.sum_hess_bound = h;
    return cert;
}

/// Upper bound on sum |grad Psi(x)| over hard-core configuration points with
/// |x| >= from_radius. Quantifies the drift error of a finite cutoff: the
/// dropped force on one ball is at most half of this bound.
inline double ruelle_grad_tail(const PairPotential& pair, double r, int dim, double from_radius) {
    if (pair.kind() == PairKind::None) return 0.0;
    const int k0 = std::max(1, static_cast<int>(std::floor(from_radius / r)));
    return detail::shell_series([&](double s) { return pair.grad_norm(s); },
                                pair.grad_envelope(), r, dim, k0);
}

/// Global Lipschitz constant K for the drift over hard-core configurations.
/// The Jacobian row associated with one ball collects the Hessian of every
/// neighbor once on the diagonal block and once across, each bounded by the
/// Ruelle Hessian sum; the pi/2 factor covers the chord-vs-geodesic gap of
/// the non-convex hard-core exterior.
inline double lipschitz_bound(const PairPotential& pair, double r, int dim) {
    const RuelleCertificate cert = ruelle_check(pair, r, dim);
    if (!cert.finite) throw std::domain_error("divergent summability certificate");
    const double local_term = cert.sum_hess_bound;
    return 0.5 * (cert.sum_hess_bound + local_term) * (std::numbers::pi / 2.0);
}

/// Energy of the balls inside the centered ball of radius ell. The pair sum
/// follows the ordered convention (each unordered pair counted twice);
/// +infinity when a counted pair violates the hard core.
inline double hamiltonian(const BallConfiguration& config, double ell,
                          const PairPotential& pair, const FreePotential& free_potential) {
    const int n = config.n_balls();
    std::vector<int> inside;
    for (int i = 0; i < n; ++i) {
        double s2 = 0.0;
        for (double v : config.ball(i)) s2 += v * v;
        if (std::sqrt(s2) <= ell) inside.push_back(i);
    }
    double energy = 0.0;
    for (int i : inside) energy += free_potential.value(config.ball(i));
    for (std::size_t a = 0; a < inside.size(); ++a)
        for (std::size_t b = a + 1; b < inside.size(); ++b) {
            double s2 = 0.0;
            const auto xi = config.ball(inside[a]);
            const auto xj = config.ball(inside[b]);
            for (int c = 0; c < config.dim; ++c) {
                const double d = xi[c] - xj[c];
                s2 += d * d;
            }
            const double s = std::sqrt(s2);
            if (s < config.radius) return std::numeric_limits<double>::infinity();
            energy += 2.0 * pair.psi(s);
        }
    return energy;
}

} // namespace hardball
