#ifndef KOCHLAB_ORACLE1D_HPP
#define KOCHLAB_ORACLE1D_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kochlab/parallel.hpp"
#include "kochlab/stats.hpp"
#include "kochlab/walk1d.hpp"

namespace kochlab {

enum class SolutionFlag : uint8_t { Ok, NonIntegrable, SigmaUnreachable };

namespace detail {

// Two-basis representation per side: m(x) = p(x) + ca*f1(x) + cb*f2(x),
// with f = {1, x}, p = -x^2 for delta = 0 and f = {cosh kx, sinh kx},
// p = 1/delta for delta > 0 (generator (1/2) d^2/dx^2, so m'' = 2 delta m - 2).
struct OdeBasis {
    double delta = 0.0;
    double k = 0.0;

    double f1(double x) const { return delta > 0.0 ? std::cosh(k * x) : 1.0; }
    double f2(double x) const { return delta > 0.0 ? std::sinh(k * x) : x; }
    double df1(double x) const { return delta > 0.0 ? k * std::sinh(k * x) : 0.0; }
    double df2(double x) const { return delta > 0.0 ? k * std::cosh(k * x) : 1.0; }
    double p(double x) const { return delta > 0.0 ? 1.0 / delta : -x * x; }
    double dp(double x) const { return delta > 0.0 ? 0.0 : -2.0 * x; }

    static OdeBasis make(double delta) {
        OdeBasis b;
        b.delta = delta;
        b.k = delta > 0.0 ? std::sqrt(2.0 * delta) : 0.0;
        return b;
    }
};

// dense Gauss with partial pivoting; returns false when singular
template <int N>
bool solve_dense(std::array<std::array<double, N>, N>& a, std::array<double, N>& rhs,
                 std::array<double, N>& out) {
    std::array<int, N> piv;
    for (int i = 0; i < N; ++i) piv[i] = i;
    for (int col = 0; col < N; ++col) {
        int best = col;
        for (int r = col + 1; r < N; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[best][col])) best = r;
        if (std::fabs(a[best][col]) < 1e-13) return false;
        std::swap(a[col], a[best]);
        std::swap(rhs[col], rhs[best]);
        for (int r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (int r = N - 1; r >= 0; --r) {
        double s = rhs[r];
        for (int c = r + 1; c < N; ++c) s -= a[r][c] * out[c];
        out[r] = s / a[r][r];
    }
    return true;
}

}  // namespace detail

// Piecewise closed-form solution of (1/2)m'' - delta m = -1 on
// (0,r1) u (r1,r2), m(r2) = 0, continuity at r1 and transmission flux
// (1-nu) m'(r1-) = nu m'(r1+), left condition per the IntervalModel variant.
class IntervalSolution {
  public:
    IntervalSolution() = default;

    double operator()(double x) const {
        if (flag_ == SolutionFlag::NonIntegrable) return std::numeric_limits<double>::infinity();
        const bool sigma = x > r1_;
        const double ca = sigma ? c_[2] : c_[0];
        const double cb = sigma ? c_[3] : c_[1];
        return basis_.p(x) + ca * basis_.f1(x) + cb * basis_.f2(x);
    }

    double derivative(double x, bool sigma_side) const {
        if (flag_ == SolutionFlag::NonIntegrable) return std::numeric_limits<double>::quiet_NaN();
        const double ca = sigma_side ? c_[2] : c_[0];
        const double cb = sigma_side ? c_[3] : c_[1];
        return basis_.dp(x) + ca * basis_.df1(x) + cb * basis_.df2(x);
    }

    SolutionFlag flag() const noexcept { return flag_; }
    double r1() const noexcept { return r1_; }
    double r2() const noexcept { return r2_; }

    static IntervalSolution solve(const IntervalModel& m, double delta = 0.0) {
        m.validate();
        if (delta < 0.0) throw std::invalid_argument("IntervalSolution: delta must be >= 0");
        IntervalSolution s;
        s.r1_ = m.r1;
        s.r2_ = m.r2;
        s.basis_ = detail::OdeBasis::make(delta);
        const auto& B = s.basis_;
        const double nu = m.nu;

        std::array<std::array<double, 4>, 4> A{};
        std::array<double, 4> rhs{};
        // row 0: left condition at 0
        if (m.left == LeftBoundary::ReflectAtZero) {
            A[0] = {B.df1(0.0), B.df2(0.0), 0.0, 0.0};
            rhs[0] = -B.dp(0.0);
        } else {
            A[0] = {B.f1(0.0), B.f2(0.0), 0.0, 0.0};
            rhs[0] = -B.p(0.0);
        }
        // row 1: continuity at r1 (particular part cancels)
        A[1] = {B.f1(m.r1), B.f2(m.r1), -B.f1(m.r1), -B.f2(m.r1)};
        rhs[1] = 0.0;
        // row 2: transmission flux (1-nu) m'(r1-) = nu m'(r1+)
        A[2] = {(1.0 - nu) * B.df1(m.r1), (1.0 - nu) * B.df2(m.r1), -nu * B.df1(m.r1),
                -nu * B.df2(m.r1)};
        rhs[2] = (2.0 * nu - 1.0) * B.dp(m.r1);
        // row 3: absorption at r2
        A[3] = {0.0, 0.0, B.f1(m.r2), B.f2(m.r2)};
        rhs[3] = -B.p(m.r2);

        std::array<double, 4> c{};
        if (!detail::solve_dense<4>(A, rhs, c)) {
            s.flag_ = SolutionFlag::NonIntegrable;
            return s;
        }
        s.c_ = c;
        s.flag_ = nu == 0.0 ? SolutionFlag::SigmaUnreachable : SolutionFlag::Ok;
        return s;
    }

  private:
    detail::OdeBasis basis_{};
    std::array<double, 4> c_{};
    double r1_ = 0.0, r2_ = 0.0;
    SolutionFlag flag_ = SolutionFlag::Ok;
};

inline double mean_exit_closed_form(double x, const IntervalModel& m) {
    if (!(x >= 0.0 && x <= m.r2))
        throw std::invalid_argument("mean_exit_closed_form: x outside [0, r2]");
    return IntervalSolution::solve(m, 0.0)(x);
}

// Elastic-limit problem on [0, r1]: (1/2)v'' - delta v = -1 with
// v(r1) = 0 when c = infinity, v'(r1) = -c v(r1) for finite c, and the
// chosen left condition.
class ElasticLimitSolution {
  public:
    double operator()(double x) const {
        if (flag_ == SolutionFlag::NonIntegrable) return std::numeric_limits<double>::infinity();
        return basis_.p(x) + ca_ * basis_.f1(x) + cb_ * basis_.f2(x);
    }
    SolutionFlag flag() const noexcept { return flag_; }

    static ElasticLimitSolution solve(double r1, double c, LeftBoundary left,
                                      double delta = 0.0) {
        if (!(r1 > 0.0)) throw std::invalid_argument("elastic limit: r1 must be positive");
        if (c < 0.0) throw std::invalid_argument("elastic limit: c must be >= 0");
        ElasticLimitSolution s;
        s.basis_ = detail::OdeBasis::make(delta);
        const auto& B = s.basis_;
        std::array<std::array<double, 2>, 2> A{};
        std::array<double, 2> rhs{};
        if (left == LeftBoundary::ReflectAtZero) {
            A[0] = {B.df1(0.0), B.df2(0.0)};
            rhs[0] = -B.dp(0.0);
        } else {
            A[0] = {B.f1(0.0), B.f2(0.0)};
            rhs[0] = -B.p(0.0);
        }
        if (std::isinf(c)) {
            A[1] = {B.f1(r1), B.f2(r1)};
            rhs[1] = -B.p(r1);
        } else {
            A[1] = {B.df1(r1) + c * B.f1(r1), B.df2(r1) + c * B.f2(r1)};
            rhs[1] = -B.dp(r1) - c * B.p(r1);
        }
        // 2x2 solve
        const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
        const double scale = std::max({std::fabs(A[0][0]), std::fabs(A[0][1]),
                                       std::fabs(A[1][0]), std::fabs(A[1][1]), 1e-300});
        if (std::fabs(det) < 1e-13 * scale * scale) {
            s.flag_ = SolutionFlag::NonIntegrable;
            return s;
        }
        s.ca_ = (rhs[0] * A[1][1] - A[0][1] * rhs[1]) / det;
        s.cb_ = (A[0][0] * rhs[1] - rhs[0] * A[1][0]) / det;
        s.flag_ = SolutionFlag::Ok;
        return s;
    }

  private:
    detail::OdeBasis basis_{};
    double ca_ = 0.0, cb_ = 0.0;
    SolutionFlag flag_ = SolutionFlag::Ok;
};

inline ElasticLimitSolution elastic_limit_solution(double r1, double c, LeftBoundary left,
                                                   double delta = 0.0) {
    return ElasticLimitSolution::solve(r1, c, left, delta);
}

// Conservative P1 flux discretization of the same transmission problem
// (tridiagonal; nodal-exact at delta = 0). Independent of the closed-form
// algebra; used as the brute-force oracle.
struct FdSolution {
    std::vector<double> x;
    std::vector<double> v;

    double at(double xq) const {
        if (xq <= x.front()) return v.front();
        if (xq >= x.back()) return v.back();
        const auto it = std::upper_bound(x.begin(), x.end(), xq);
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        const double t = (xq - x[i - 1]) / (x[i] - x[i - 1]);
        return v[i - 1] * (1.0 - t) + v[i] * t;
    }
};

inline FdSolution fd_exit_solve(const IntervalModel& m, double delta = 0.0, int nodes = 10000) {
    m.validate();
    if (!(m.nu > 0.0 && m.nu < 1.0))
        throw std::invalid_argument("fd_exit_solve: nu must lie strictly in (0,1)");
    if (nodes < 16) throw std::invalid_argument("fd_exit_solve: too few nodes");
    const double frac = m.r1 / m.r2;
    int n1 = std::max(4, static_cast<int>(frac * nodes));
    int n2 = std::max(4, nodes - n1);
    const double d1 = m.r1 / n1;
    const double d2 = (m.r2 - m.r1) / n2;
    const int n = n1 + n2 + 1;

    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0), xs(n, 0.0);
    for (int i = 0; i <= n1; ++i) xs[i] = i * d1;
    for (int j = 1; j <= n2; ++j) xs[n1 + j] = m.r1 + j * d2;
    xs[n - 1] = m.r2;

    // assemble -(a u')' + 2 delta a u = 2a elementwise,
    // a = (1-nu) on (0,r1), nu on (r1,r2)
    auto add_element = [&](int i, double len, double a) {
        const double k = a / len;
        const double mloc = 2.0 * delta * a * len / 6.0;
        const double f = a * len;  // 2a * len / 2
        diag[i] += k + 2.0 * mloc;
        diag[i + 1] += k + 2.0 * mloc;
        sup[i] += -k + mloc;
        sub[i + 1] += -k + mloc;
        rhs[i] += f;
        rhs[i + 1] += f;
    };
    for (int i = 0; i < n1; ++i) add_element(i, d1, 1.0 - m.nu);
    for (int j = 0; j < n2; ++j) add_element(n1 + j, d2, m.nu);

    // right end absorbing; row n-2 keeps its coupling, back-substitution
    // against the pinned zero handles it
    diag[n - 1] = 1.0;
    sub[n - 1] = 0.0;
    rhs[n - 1] = 0.0;
    // left end: natural (reflecting) needs nothing; absorbing pins node 0
    if (m.left == LeftBoundary::PaperZeroValue) {
        diag[0] = 1.0;
        sup[0] = 0.0;
        rhs[0] = 0.0;
    }

    // Thomas
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    cp[0] = sup[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (int i = 1; i < n; ++i) {
        const double w = diag[i] - sub[i] * cp[i - 1];
        cp[i] = sup[i] / w;
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / w;
    }
    FdSolution out;
    out.x = std::move(xs);
    out.v.assign(n, 0.0);
    out.v[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) out.v[i] = dp[i] - cp[i] * out.v[i + 1];
    return out;
}

// --- convergence of the interval problem to the elastic limit -------------

struct SweepRow {
    double eps = 0.0;
    double nu = 0.0;
    double sup_err = 0.0;
};

// schedule entries are (eps_k, nu_k); the limit uses the elastic rate
// c_target (may be +inf)
inline std::vector<SweepRow> convergence_sweep(double c_target,
                                               const std::vector<std::pair<double, double>>& schedule,
                                               double r1, LeftBoundary left,
                                               double delta = 0.0, int grid = 101) {
    if (schedule.empty()) throw std::invalid_argument("convergence_sweep: empty schedule");
    double prev_eps = std::numeric_limits<double>::infinity();
    const auto limit = elastic_limit_solution(r1, c_target, left, delta);
    std::vector<SweepRow> rows;
    for (const auto& [eps, nu] : schedule) {
        if (!(nu > 0.0 && nu < 1.0))
            throw std::invalid_argument("convergence_sweep: schedule requires nu in (0,1)");
        if (!(eps > 0.0) || eps >= prev_eps)
            throw std::invalid_argument("convergence_sweep: eps must decrease");
        prev_eps = eps;
        IntervalModel m;
        m.r1 = r1;
        m.r2 = r1 + eps;
        m.nu = nu;
        m.left = left;
        const auto sol = IntervalSolution::solve(m, delta);
        double sup = 0.0;
        for (int i = 0; i < grid; ++i) {
            const double x = r1 * i / (grid - 1);
            sup = std::max(sup, std::fabs(sol(x) - limit(x)));
        }
        rows.push_back({eps, nu, sup});
    }
    return rows;
}

// nu_k/((1-nu_k) eps_k) = c exactly
inline std::vector<std::pair<double, double>> schedule_exact_ratio(double c, double eps0,
                                                                   int steps) {
    std::vector<std::pair<double, double>> s;
    double eps = eps0;
    for (int k = 0; k < steps; ++k, eps *= 0.5) s.push_back({eps, c * eps / (1.0 + c * eps)});
    return s;
}

// nu_k = c eps_k (plain product rule; first-order limit error)
inline std::vector<std::pair<double, double>> schedule_product(double c, double eps0, int steps) {
    std::vector<std::pair<double, double>> s;
    double eps = eps0;
    for (int k = 0; k < steps; ++k, eps *= 0.5) {
        const double nu = c * eps;
        if (!(nu > 0.0 && nu < 1.0))
            throw std::invalid_argument("schedule_product: c*eps must lie in (0,1)");
        s.push_back({eps, nu});
    }
    return s;
}

// --- Monte Carlo wrappers ---------------------------------------------------

struct Oracle1dMc {
    Estimate exit_time;
    Estimate local_time_at_exit;
};

namespace detail {
struct ExitAcc {
    RunningStat tau;
    RunningStat ltime;
    uint64_t horizon = 0;
    void merge(const ExitAcc& o) {
        tau.merge(o.tau);
        ltime.merge(o.ltime);
        horizon += o.horizon;
    }
};
}  // namespace detail

inline Oracle1dMc simulate_1d_skew(double x0, const IntervalModel& m, double h, uint64_t n_paths,
                                   uint64_t seed, double t_max = 1e9) {
    m.validate();
    SimConfig cfg;
    cfg.h = h;
    cfg.t_max = t_max;
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.seed = seed;
    cfg.paths = n_paths;
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto acc = run_paths_blocked<detail::ExitAcc>(n_paths, [&](uint64_t i, detail::ExitAcc& a) {
        const auto pf = walk_interval(m, cfg, i, x0);
        if (pf.cause == Cause::HorizonReached) {
            ++a.horizon;
            return;
        }
        a.tau.add(pf.lifetime);
        a.ltime.add(pf.l_sym);
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Oracle1dMc out;
    out.exit_time = {acc.tau.mean(), acc.tau.stderr_mean(), acc.tau.n, secs, 0.0,
                     static_cast<double>(acc.horizon) / static_cast<double>(n_paths)};
    out.local_time_at_exit = {acc.ltime.mean(), acc.ltime.stderr_mean(), acc.ltime.n, secs, 0.0, 0.0};
    return out;
}

// Shell estimator of the local time at a point for free 1D BM started on
// it, evaluated at time t. Pins the estimator convention: E L_t = sqrt(2t/pi).
inline Estimate local_time_calibration(double t, double h, uint64_t n_paths, uint64_t seed) {
    IntervalModel m;
    // interface far from the origin so the reflecting end is unreachable and
    // the walk behaves as free BM on the line
    m.r1 = 8.0 * std::sqrt(t) + 1.0;
    m.r2 = std::numeric_limits<double>::infinity();
    m.nu = 0.5;
    m.left = LeftBoundary::ReflectAtZero;
    SimConfig cfg;
    cfg.h = h;
    cfg.t_max = t;
    cfg.kill_mode = KillMode::AbsorbOuter;  // no clock; horizon stops the path
    cfg.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    struct Acc {
        RunningStat l;
        void merge(const Acc& o) { l.merge(o.l); }
    };
    auto acc = run_paths_blocked<Acc>(n_paths, [&](uint64_t i, Acc& a) {
        const auto pf = walk_interval(m, cfg, i, m.r1);
        a.l.add(pf.l_sym);
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {acc.l.mean(), acc.l.stderr_mean(), acc.l.n, secs, 0.0, 0.0};
}

// E exp(-c L_t) for free 1D BM started at the interface, one Estimate per
// rate; all rates share the same path set. Closed form:
// 2 exp(c^2 t / 2) Phi(-c sqrt(t)).
inline std::vector<Estimate> elastic_survival_1d(const std::vector<double>& rates, double t,
                                                 double h, uint64_t n_paths, uint64_t seed,
                                                 double kappa_l = 1.0) {
    IntervalModel m;
    m.r1 = 8.0 * std::sqrt(t) + 1.0;
    m.r2 = std::numeric_limits<double>::infinity();
    m.nu = 0.5;
    SimConfig cfg;
    cfg.h = h;
    cfg.t_max = t;
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.seed = seed;
    struct Acc {
        std::vector<RunningStat> s;
        void merge(const Acc& o) {
            if (s.empty()) s = o.s;
            else
                for (std::size_t i = 0; i < s.size(); ++i) s[i].merge(o.s[i]);
        }
    };
    const auto t0 = std::chrono::steady_clock::now();
    auto acc = run_paths_blocked<Acc>(n_paths, [&](uint64_t i, Acc& a) {
        if (a.s.empty()) a.s.resize(rates.size());
        const auto pf = walk_interval(m, cfg, i, m.r1);
        for (std::size_t k = 0; k < rates.size(); ++k)
            a.s[k].add(std::exp(-rates[k] * kappa_l * pf.l_sym));
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<Estimate> out;
    for (const auto& st : acc.s) out.push_back({st.mean(), st.stderr_mean(), st.n, secs, 0.0, 0.0});
    return out;
}

inline double elastic_survival_closed_form(double c, double t) {
    return 2.0 * std::exp(0.5 * c * c * t) * normal_cdf(-c * std::sqrt(t));
}

}  // namespace kochlab

#endif
