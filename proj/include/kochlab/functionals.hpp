#ifndef KOCHLAB_FUNCTIONALS_HPP
#define KOCHLAB_FUNCTIONALS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kochlab/parallel.hpp"
#include "kochlab/stats.hpp"
#include "kochlab/walk2d.hpp"

namespace kochlab {

// Step size and clock normalization bound to a domain level: h scales like
// alpha^{-2n} so steps resolve the fiber cells, and the elastic clock runs
// against sigma_n-renormalized local time.
inline SimConfig default_config(const DomainModel& dom, double h0 = 1e-3) {
    SimConfig cfg;
    cfg.h = std::max(h0 * std::pow(dom.alpha(), -2 * dom.level()), 1e-7);
    cfg.lt_clock_scale = dom.sigma_n();
    cfg.x0 = dom.deep_point();
    return cfg;
}

struct SurvivalCurve {
    std::vector<double> t;
    std::vector<double> survival;
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
    uint64_t n_paths = 0;
    int level = 0;
    double c_n = 0.0;
    KillMode kill_mode = KillMode::ElasticClock;
};

namespace detail {

class Timer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// exact exponential time weight over each sub-step (adaptive steps can be
// long in the bulk), values of f and L frozen at the left endpoint
inline double exp_time_weight(double rate, double t0, double t1) noexcept {
    if (rate == 0.0) return t1 - t0;
    return (std::exp(-rate * t0) - std::exp(-rate * t1)) / rate;
}

template <class F>
struct PathIntegral {
    const F* f = nullptr;
    double rate = 0.0;
    double c_kill = 0.0;
    double lt_scale = 1.0;

    Vec2 prev_pos{};
    double prev_t = 0.0;
    double prev_l = 0.0;
    double acc = 0.0;
    double max_abs_f = 0.0;
    bool bad = false;

    void reset(Vec2 x0) {
        prev_pos = x0;
        prev_t = 0.0;
        prev_l = 0.0;
        acc = 0.0;
        bad = false;
    }

    bool on_substep(double t, Vec2 pos, bool, double, const PathFunctionals& pf) {
        const double fn = (*f)(prev_pos);
        if (!std::isfinite(fn)) {
            bad = true;
            return false;
        }
        max_abs_f = std::max(max_abs_f, std::fabs(fn));
        acc += std::exp(-c_kill * lt_scale * prev_l) * fn * exp_time_weight(rate, prev_t, t);
        prev_pos = pos;
        prev_t = t;
        prev_l = pf.l_sym;
        return true;
    }
    double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
};

struct EstAcc {
    RunningStat stat;
    uint64_t discarded = 0;
    double max_abs_f = 0.0;
    void merge(const EstAcc& o) {
        stat.merge(o.stat);
        discarded += o.discarded;
        max_abs_f = std::max(max_abs_f, o.max_abs_f);
    }
};

inline Estimate finish(const EstAcc& acc, uint64_t n_requested, double secs,
                       const char* who) {
    if (acc.discarded * 1000 > n_requested)
        throw std::runtime_error(std::string(who) +
                                 ": more than 0.1% of paths hit a non-finite integrand");
    Estimate e;
    e.mean = acc.stat.mean();
    e.stderr_mean = acc.stat.stderr_mean();
    e.n_paths = acc.stat.n;
    e.elapsed_s = secs;
    e.extra_mass = static_cast<double>(acc.discarded) / static_cast<double>(n_requested);
    return e;
}

}  // namespace detail

// Solution functional of the reinforcement problem: mean of
// int_0^tau e^{-delta_n t} f dt along skew paths absorbed at the outer
// boundary.
template <class F>
Estimate estimate_u_n(const DomainModel& dom, SimConfig cfg, Vec2 x0, F&& f, uint64_t n_paths) {
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.x0 = x0;
    cfg.validate();
    detail::Timer timer;
    auto acc = run_paths_blocked<detail::EstAcc>(n_paths, [&](uint64_t i, detail::EstAcc& a) {
        detail::PathIntegral<std::decay_t<F>> vis;
        vis.f = &f;
        vis.rate = cfg.delta_n;
        vis.reset(x0);
        walk_domain(dom, cfg, i, vis);
        if (vis.bad) {
            ++a.discarded;
            return;
        }
        a.stat.add(vis.acc);
    });
    return detail::finish(acc, n_paths, timer.seconds(), "estimate_u_n");
}

// Robin solution functional on the reflected proxy: mean of
// int_0^infty e^{-delta0 t - c0 L_t} f dt, horizon-truncated.
template <class F>
std::vector<Estimate> estimate_robin_multi(const DomainModel& dom, SimConfig cfg, Vec2 x0, F&& f,
                                           double delta0, const std::vector<double>& c0s,
                                           uint64_t n_paths,
                                           std::vector<std::string>* warnings = nullptr) {
    for (const double c0 : c0s)
        if (!(c0 > 0.0) && !(delta0 > 0.0))
            throw std::invalid_argument("estimate_robin: need max(c0, delta0) > 0");
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.c_n = 0.0;
    cfg.x0 = x0;
    cfg.validate();
    const double c_min = *std::min_element(c0s.begin(), c0s.end());

    struct Acc {
        std::vector<RunningStat> s;
        double max_abs_f = 0.0;
        void merge(const Acc& o) {
            if (s.empty()) s = o.s;
            else
                for (std::size_t k = 0; k < s.size(); ++k) s[k].merge(o.s[k]);
            max_abs_f = std::max(max_abs_f, o.max_abs_f);
        }
    };
    detail::Timer timer;
    auto acc = run_paths_blocked<Acc>(n_paths, [&](uint64_t i, Acc& a) {
        if (a.s.empty()) a.s.resize(c0s.size());
        struct Multi {
            const std::decay_t<F>* f;
            const std::vector<double>* cs;
            double delta0, lt_scale, stop_log;
            Vec2 prev_pos{};
            double prev_t = 0.0, prev_l = 0.0;
            std::vector<double> acc;
            double max_abs_f = 0.0;
            bool on_substep(double t, Vec2 pos, bool, double, const PathFunctionals& pf) {
                const double fn = (*f)(prev_pos);
                max_abs_f = std::max(max_abs_f, std::fabs(fn));
                const double tw = detail::exp_time_weight(delta0, prev_t, t);
                const double lam = lt_scale * prev_l;
                for (std::size_t k = 0; k < cs->size(); ++k)
                    acc[k] += std::exp(-(*cs)[k] * lam) * fn * tw;
                // the 1e-6 floor applies to the kill weight only; the delta0
                // part is truncated at the horizon with a reported tail
                const bool keep = stop_log * lam <= -std::log(1e-6);
                prev_pos = pos;
                prev_t = t;
                prev_l = pf.l_sym;
                return keep;
            }
            double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
        } vis;
        vis.f = &f;
        vis.cs = &c0s;
        vis.delta0 = delta0;
        vis.lt_scale = cfg.kappa_l * cfg.lt_clock_scale;
        vis.stop_log = c_min;
        vis.prev_pos = x0;
        vis.acc.assign(c0s.size(), 0.0);
        walk_domain(dom, cfg, i, vis);
        for (std::size_t k = 0; k < c0s.size(); ++k) a.s[k].add(vis.acc[k]);
        a.max_abs_f = std::max(a.max_abs_f, vis.max_abs_f);
    });
    const double secs = timer.seconds();
    std::vector<Estimate> out;
    for (const auto& st : acc.s) {
        Estimate e;
        e.mean = st.mean();
        e.stderr_mean = st.stderr_mean();
        e.n_paths = st.n;
        e.elapsed_s = secs;
        if (delta0 > 0.0)
            e.tail_bound = std::exp(-delta0 * cfg.t_max) / delta0 * acc.max_abs_f;
        if (c_min > 0.0) e.tail_bound += 1e-6 * acc.max_abs_f * cfg.t_max;
        out.push_back(e);
    }
    if (warnings && delta0 == 0.0)
        warnings->push_back("estimate_robin: delta0 = 0, truncation controlled by the "
                            "kill-weight floor only");
    return out;
}

template <class F>
Estimate estimate_robin(const DomainModel& dom, const SimConfig& cfg, Vec2 x0, F&& f,
                        double delta0, double c0, uint64_t n_paths,
                        std::vector<std::string>* warnings = nullptr) {
    return estimate_robin_multi(dom, cfg, x0, std::forward<F>(f), delta0, {c0}, n_paths,
                                warnings)[0];
}

// Dirichlet solution functional: mean of int_0^tau e^{-delta0 t} f dt with
// tau the first contact with the pre-fractal boundary.
template <class F>
Estimate estimate_dirichlet(const DomainModel& dom, SimConfig cfg, Vec2 x0, F&& f, double delta0,
                            uint64_t n_paths, std::vector<std::string>* warnings = nullptr) {
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.stop_at_interface = true;
    cfg.c_n = 0.0;
    cfg.x0 = x0;
    cfg.validate();
    if (warnings && dom.dist_interface(x0, cfg.shell_width()) < cfg.shell_width())
        warnings->push_back("estimate_dirichlet: x0 within the boundary shell, immediate stop");
    detail::Timer timer;
    auto acc = run_paths_blocked<detail::EstAcc>(n_paths, [&](uint64_t i, detail::EstAcc& a) {
        detail::PathIntegral<std::decay_t<F>> vis;
        vis.f = &f;
        vis.rate = delta0;
        vis.reset(x0);
        walk_domain(dom, cfg, i, vis);
        if (vis.bad) {
            ++a.discarded;
            return;
        }
        a.stat.add(vis.acc);
    });
    return detail::finish(acc, n_paths, timer.seconds(), "estimate_dirichlet");
}

// Empirical P(lifetime > t) with Wilson intervals on the grid.
inline SurvivalCurve survival_curve(const DomainModel& dom, const SimConfig& cfg,
                                    const std::vector<double>& grid, uint64_t n_paths) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("survival_curve: grid must increase");
    cfg.validate();
    struct Acc {
        std::vector<uint64_t> alive;
        uint64_t n = 0;
        void merge(const Acc& o) {
            if (alive.empty()) alive = o.alive;
            else
                for (std::size_t k = 0; k < alive.size(); ++k) alive[k] += o.alive[k];
            n += o.n;
        }
    };
    auto acc = run_paths_blocked<Acc>(n_paths, [&](uint64_t i, Acc& a) {
        if (a.alive.empty()) a.alive.assign(grid.size(), 0);
        const auto pf = walk_domain(dom, cfg, i);
        const bool died = pf.cause == Cause::Absorbed || pf.cause == Cause::Killed;
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (!died || pf.lifetime > grid[k]) ++a.alive[k];
        ++a.n;
    });
    SurvivalCurve sc;
    sc.t = grid;
    sc.n_paths = acc.n;
    sc.level = dom.level();
    sc.c_n = cfg.c_n;
    sc.kill_mode = cfg.kill_mode;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        sc.survival.push_back(static_cast<double>(acc.alive[k]) / static_cast<double>(acc.n));
        const auto iv = wilson_interval(acc.alive[k], acc.n);
        sc.ci_lo.push_back(iv.lo);
        sc.ci_hi.push_back(iv.hi);
    }
    return sc;
}

// Laplace transform of the boundary local time: mean of
// exp(-c L_sym(t ^ lifetime)); absorbed-by-t mass reported in extra_mass.
inline Estimate laplace_local_time(const DomainModel& dom, SimConfig cfg, Vec2 x0, double t,
                                   double c, uint64_t n_paths) {
    if (c < 0.0) throw std::invalid_argument("laplace_local_time: c must be >= 0");
    if (t > cfg.t_max) throw std::invalid_argument("laplace_local_time: t exceeds the horizon");
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.t_max = t;
    cfg.x0 = x0;
    cfg.validate();
    const double scale = cfg.kappa_l * cfg.lt_clock_scale;
    struct Acc {
        RunningStat stat;
        uint64_t absorbed = 0;
        void merge(const Acc& o) {
            stat.merge(o.stat);
            absorbed += o.absorbed;
        }
    };
    detail::Timer timer;
    auto acc = run_paths_blocked<Acc>(n_paths, [&](uint64_t i, Acc& a) {
        const auto pf = walk_domain(dom, cfg, i);
        if (pf.cause == Cause::Absorbed) ++a.absorbed;
        a.stat.add(std::exp(-c * scale * pf.l_sym));
    });
    Estimate e;
    e.mean = acc.stat.mean();
    e.stderr_mean = acc.stat.stderr_mean();
    e.n_paths = acc.stat.n;
    e.elapsed_s = timer.seconds();
    e.extra_mass = static_cast<double>(acc.absorbed) / static_cast<double>(n_paths);
    return e;
}

// Resolvent functional: mean of int_0^tau e^{-(lambda + delta_n) t} f dt.
template <class F>
Estimate resolvent_estimate(const DomainModel& dom, SimConfig cfg, Vec2 x0, F&& f, double lambda,
                            uint64_t n_paths) {
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent_estimate: lambda must be > 0");
    cfg.delta_n += lambda;
    return estimate_u_n(dom, cfg, x0, std::forward<F>(f), n_paths);
}

}  // namespace kochlab

#endif
