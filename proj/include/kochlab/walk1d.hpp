#ifndef KOCHLAB_WALK1D_HPP
#define KOCHLAB_WALK1D_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "kochlab/rng.hpp"
#include "kochlab/skew_core.hpp"

namespace kochlab {

enum class LeftBoundary : uint8_t { ReflectAtZero, PaperZeroValue };

// Radial reduction of the collapsing-annulus problem: interface at r1 with
// skewness nu, absorbing outer point r2 (may be +inf for free-line
// calibration runs), reflecting or absorbing left end at 0.
struct IntervalModel {
    double r1 = 0.5;
    double r2 = 1.0;   // r1 + eps
    double nu = 0.5;
    LeftBoundary left = LeftBoundary::ReflectAtZero;

    void validate() const {
        if (!(r1 > 0.0) || !(r2 > r1))
            throw std::invalid_argument("IntervalModel: need 0 < r1 < r2");
        if (!(nu >= 0.0 && nu <= 1.0))
            throw std::invalid_argument("IntervalModel: nu must lie in [0,1]");
    }
};

// One path of the 1D skew walk. Identical snapping, mirroring, shell
// local-time and elastic-clock logic as the planar walker, so the
// calibration of the shell estimator transfers.
template <class Visitor>
PathFunctionals walk_interval(const IntervalModel& m, const SimConfig& cfg, uint64_t path_index,
                              double x0, Visitor&& vis) {
    PathRng rng(cfg.seed, path_index);
    PathFunctionals pf;
    const double exp_draw = rng.exponential();
    const bool clock_on = cfg.kill_mode == KillMode::ElasticClock && cfg.c_n > 0.0;
    pf.zeta = clock_on ? exp_draw / cfg.c_n : std::numeric_limits<double>::infinity();
    pf.exp_unit = exp_draw;

    const double delta = cfg.shell_width();
    const double rt_h = std::sqrt(cfg.h);
    const double near_band = delta + 6.0 * rt_h;
    const double h_cap = std::max(cfg.h, cfg.t_max / 64.0);
    const bool absorb_left = m.left == LeftBoundary::PaperZeroValue;

    double x = x0;
    double t = 0.0;

    if (x >= m.r2 || x <= 0.0) {
        // started on (or beyond) an absorbing end
        if (x >= m.r2 || absorb_left) {
            pf.cause = Cause::Absorbed;
            pf.lifetime = 0.0;
            return pf;
        }
        x = -x;  // reflect a nonpositive start
    }

    while (true) {
        const double t_rem = cfg.t_max - t;
        if (t_rem <= cfg.h * 1e-9) {
            pf.cause = Cause::HorizonReached;
            pf.lifetime = cfg.t_max;
            return pf;
        }

        double h_eff = cfg.h;
        const double d_int = std::fabs(x - m.r1);
        double margin = d_int - delta;
        margin = std::min(margin, m.r2 - x);
        margin = std::min(margin, x);
        if (cfg.adaptive_bulk && margin > 6.0 * rt_h) {
            const double big = (margin / 6.0) * (margin / 6.0);
            h_eff = std::min(std::max(big, cfg.h), h_cap);
        }
        const double cp_dt = std::max(vis.next_checkpoint() - t, 1e-9 * cfg.h);
        h_eff = std::min({h_eff, t_rem, cp_dt});

        const double step = std::sqrt(h_eff) * rng.normal();
        double cur = x;
        double target = x + step;
        bool plain = true;
        bool absorbed = false;

        for (int guard = 0; guard < 64; ++guard) {
            // nearest event between cur and target, in travel order
            const bool hits_r1 = (cur < m.r1 && target > m.r1) || (cur > m.r1 && target < m.r1);
            const bool hits_r2 = target >= m.r2;
            const bool hits_0 = target <= 0.0;
            double ev = std::numeric_limits<double>::infinity();
            int kind = -1;  // 0 = interface, 1 = outer wall r2, 2 = left end
            if (hits_r1) {
                ev = std::fabs(m.r1 - cur);
                kind = 0;
            }
            if (hits_r2 && (m.r2 - cur) < ev) {
                ev = m.r2 - cur;
                kind = 1;
            }
            if (hits_0 && cur < ev) {
                ev = cur;
                kind = 2;
            }
            if (kind < 0) break;

            plain = false;
            if (kind == 1) {
                absorbed = true;
                break;
            }
            if (kind == 2) {
                if (absorb_left) {
                    absorbed = true;
                    break;
                }
                target = -target;  // mirror the remainder at the reflecting end
                cur = 0.0;
                continue;
            }
            // interface crossing: Bernoulli side, mirror-or-keep
            ++pf.crossings;
            const bool to_sigma = m.nu >= 1.0 ? true : (m.nu <= 0.0 ? false : rng.bernoulli(m.nu));
            if (to_sigma) ++pf.crossings_sigma;
            const bool target_sigma = target > m.r1;
            if (target_sigma != to_sigma) target = 2.0 * m.r1 - target;
            if (target == m.r1) target = m.r1 + (to_sigma ? 1.0 : -1.0) * 1e-14 * m.r1;
            cur = m.r1;
        }

        if (absorbed) {
            pf.cause = Cause::Absorbed;
            pf.lifetime = t;  // sub-step time not interpolated
            return pf;
        }

        double x_new = target;

        // Undetected interface touch: both endpoints on one side, but the
        // bridge may have hit r1. Resolving the touch with the same
        // Bernoulli side draw makes the one-step law of the skew walk exact
        // at the interface (|skew BM| is reflected BM; excursion signs are
        // Bernoulli(nu)).
        if (cfg.bridge_absorb && plain) {
            const double d1 = x - m.r1;
            const double d2 = x_new - m.r1;
            const double cut = 4.0 * std::sqrt(h_eff);
            if (std::fabs(d1) < cut && std::fabs(d2) < cut &&
                rng.u01() < std::exp(-2.0 * d1 * d2 / h_eff)) {
                ++pf.crossings;
                const bool to_sigma =
                    m.nu >= 1.0 ? true : (m.nu <= 0.0 ? false : rng.bernoulli(m.nu));
                if (to_sigma) ++pf.crossings_sigma;
                if ((x_new > m.r1) != to_sigma) {
                    x_new = 2.0 * m.r1 - x_new;
                    if (x_new >= m.r2) {
                        pf.cause = Cause::Absorbed;
                        pf.lifetime = t;
                        return pf;
                    }
                    if (x_new <= 0.0) {
                        if (absorb_left) {
                            pf.cause = Cause::Absorbed;
                            pf.lifetime = t;
                            return pf;
                        }
                        x_new = -x_new;
                    }
                }
            }
        }

        // excursion-probability absorption test against the outer wall
        if (cfg.bridge_absorb && plain && std::isfinite(m.r2)) {
            const double d1 = m.r2 - x;
            const double d2 = m.r2 - x_new;
            if (d1 < 4.0 * std::sqrt(h_eff) && d2 < 4.0 * std::sqrt(h_eff)) {
                if (rng.u01() < std::exp(-2.0 * d1 * d2 / h_eff)) {
                    pf.cause = Cause::Absorbed;
                    pf.lifetime = t;
                    return pf;
                }
            }
        }
        if (cfg.bridge_absorb && plain && absorb_left) {
            const double d1 = x;
            const double d2 = x_new;
            if (d1 < 4.0 * std::sqrt(h_eff) && d2 < 4.0 * std::sqrt(h_eff)) {
                if (rng.u01() < std::exp(-2.0 * d1 * d2 / h_eff)) {
                    pf.cause = Cause::Absorbed;
                    pf.lifetime = t;
                    return pf;
                }
            }
        }

        t += h_eff;
        x = x_new;
        const bool in_sigma = x > m.r1;
        (in_sigma ? pf.gamma_sigma : pf.gamma_omega) += h_eff;
        detail::shell_accumulate(pf, std::fabs(x - m.r1), in_sigma, h_eff, delta);

        if (!vis.on_substep(t, x, in_sigma, h_eff, pf)) {
            pf.cause = Cause::Stopped;
            pf.lifetime = t;
            return pf;
        }
        if (clock_on && detail::clock_expired(pf, cfg)) {
            pf.cause = Cause::Killed;
            pf.lifetime = t;
            return pf;
        }
    }
}

inline PathFunctionals walk_interval(const IntervalModel& m, const SimConfig& cfg,
                                     uint64_t path_index, double x0) {
    NullVisitor nv;
    return walk_interval(m, cfg, path_index, x0, nv);
}

}  // namespace kochlab

#endif
