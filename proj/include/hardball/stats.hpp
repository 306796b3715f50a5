#pragma once

// Small statistics kit for the verification harness: regularized incomplete
// gamma (chi-square tail), a two-sample chi-square on histograms, and a
// two-sample Kolmogorov-Smirnov test.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hardball::stats {

namespace detail {

inline double gamma_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Lower regularized incomplete gamma P(a,x).
inline double gammp(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammp domain");
    if (x == 0.0) return 0.0;
    return x < a + 1.0 ? detail::gamma_series(a, x) : 1.0 - detail::gamma_cf(a, x);
}

/// Upper tail of the chi-square distribution with dof degrees of freedom.
inline double chi_square_tail(double statistic, double dof) {
    if (statistic <= 0.0) return 1.0;
    return 1.0 - gammp(dof / 2.0, statistic / 2.0);
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Two-sample chi-square on binned counts; bins where both samples are empty
/// are dropped. Handles unequal totals with the standard rescaling.
inline ChiSquareResult chi_square_two_sample(const std::vector<double>& counts_a,
                                             const std::vector<double>& counts_b) {
    if (counts_a.size() != counts_b.size()) throw std::invalid_argument("bin count mismatch");
    double na = 0.0, nb = 0.0;
    for (double v : counts_a) na += v;
    for (double v : counts_b) nb += v;
    if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("empty histogram");
    const double ra = std::sqrt(nb / na), rb = std::sqrt(na / nb);
    ChiSquareResult res;
    int used = 0;
    for (std::size_t i = 0; i < counts_a.size(); ++i) {
        const double a = counts_a[i], b = counts_b[i];
        if (a + b <= 0.0) continue;
        const double d = ra * a - rb * b;
        res.statistic += d * d / (a + b);
        ++used;
    }
    res.dof = std::max(1, used - 1);
    res.p_value = chi_square_tail(res.statistic, res.dof);
    return res;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic tail.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i; else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        p += term;
        sign = -sign;
        if (std::abs(term) < 1e-12) break;
    }
    KsResult res;
    res.statistic = d;
    res.p_value = std::clamp(2.0 * p, 0.0, 1.0);
    return res;
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace hardball::stats
