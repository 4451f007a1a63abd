#ifndef KOCHLAB_STATS_HPP
#define KOCHLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace kochlab {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Mergeable moment accumulator (sum / sum of squares / count).
struct RunningStat {
    double sum = 0.0;
    double sumsq = 0.0;
    uint64_t n = 0;

    void add(double x) noexcept {
        sum += x;
        sumsq += x * x;
        ++n;
    }
    void merge(const RunningStat& o) noexcept {
        sum += o.sum;
        sumsq += o.sumsq;
        n += o.n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double stderr_mean() const {
        return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

struct Estimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
    uint64_t n_paths = 0;
    double elapsed_s = 0.0;
    double tail_bound = 0.0;   // reported truncation tail, when applicable
    double extra_mass = 0.0;   // e.g. absorbed-by-t mass for Laplace functionals

    double ci_lo(double z = 1.96) const { return mean - z * stderr_mean; }
    double ci_hi(double z = 1.96) const { return mean + z * stderr_mean; }
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

inline Interval wilson_interval(uint64_t successes, uint64_t n, double z = 1.96) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    if (successes == 0) iv.lo = 0.0;
    if (successes == n) iv.hi = 1.0;
    return iv;
}

// Two-sample KS distance between lifetime laws truncated at a common
// horizon. Lifetimes beyond the horizon (censored paths) contribute no
// jump; their mass difference is reported separately.
struct KsResult {
    double ks = 0.0;
    double censored_mass_diff = 0.0;
};

inline KsResult ks_censored(std::vector<double> a, uint64_t n_a_total,
                            std::vector<double> b, uint64_t n_b_total,
                            double horizon) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(n_a_total);
    const double nb = static_cast<double>(n_b_total);
    std::size_t i = 0, j = 0;
    double ks = 0.0;
    while (i < a.size() || j < b.size()) {
        double t;
        if (i < a.size() && (j >= b.size() || a[i] <= b[j]))
            t = a[i];
        else
            t = b[j];
        if (t > horizon) break;
        while (i < a.size() && a[i] <= t) ++i;
        while (j < b.size() && b[j] <= t) ++j;
        const double d = std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
        ks = std::max(ks, d);
    }
    const double ca = 1.0 - static_cast<double>(a.size()) / na;
    const double cb = 1.0 - static_cast<double>(b.size()) / nb;
    return {ks, std::fabs(ca - cb)};
}

// Least-squares slope/intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need two or more points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

}  // namespace kochlab

#endif
