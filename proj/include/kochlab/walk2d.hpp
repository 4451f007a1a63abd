#ifndef KOCHLAB_WALK2D_HPP
#define KOCHLAB_WALK2D_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kochlab/rng.hpp"
#include "kochlab/skew_core.hpp"

namespace kochlab {

// Standalone interface resolution: draw the landing side ~ Bernoulli(nu)
// toward Sigma and keep or mirror the proposed endpoint across the
// segment's line. Returns the resolved endpoint.
inline Vec2 skew_resolve(Vec2 hit, Vec2 proposed, double nu, Vec2 seg_a, Vec2 seg_b,
                         PathRng& rng, bool* to_sigma_out = nullptr) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("skew_resolve: nu outside [0,1]");
    const Vec2 d = seg_b - seg_a;
    const Vec2 rem = proposed - hit;
    if (norm2(rem) == 0.0) {
        if (to_sigma_out) *to_sigma_out = false;
        return hit;
    }
    const bool to_sigma = nu >= 1.0 ? true : (nu <= 0.0 ? false : rng.bernoulli(nu));
    if (to_sigma_out) *to_sigma_out = to_sigma;
    const bool prop_sigma = cross(d, rem) > 0.0;  // outward (fiber) side is left of travel
    if (prop_sigma == to_sigma) return proposed;
    const double il2 = 1.0 / norm2(d);
    const double pr = dot(rem, d) * il2;
    const Vec2 mirrored{2.0 * pr * d.x - rem.x, 2.0 * pr * d.y - rem.y};
    return hit + mirrored;
}

namespace detail {

inline double nu_weight(const DomainModel& dom, const SimConfig& cfg, int seg, Vec2 at) noexcept {
    switch (cfg.nu_eval) {
        case NuEval::SigmaSide: return dom.sigma_n() * dom.weight_trace(seg, at);
        case NuEval::SigmaSideUnscaled: return dom.weight_trace(seg, at);
        case NuEval::Constant: return 1.0;
    }
    return 1.0;
}

inline bool seg_intersect(Vec2 p, Vec2 q, Vec2 a, Vec2 b, double& tpar, double& upar) noexcept {
    const Vec2 r = q - p;
    const Vec2 s = b - a;
    const double denom = cross(r, s);
    if (denom == 0.0) return false;
    const Vec2 ap = a - p;
    tpar = cross(ap, s) / denom;
    upar = cross(ap, r) / denom;
    return true;
}

inline Vec2 mirror_across(Vec2 v, Vec2 dir) noexcept {
    const double il2 = 1.0 / norm2(dir);
    const double pr = dot(v, dir) * il2;
    return {2.0 * pr * dir.x - v.x, 2.0 * pr * dir.y - v.y};
}

}  // namespace detail

// One path of the modified skew BM on Omega^n_eps. Gaussian stepping with
// in-order crossing resolution along the displacement, skew transmission at
// the pre-fractal interface, absorption (or none, under ReflectInterface)
// at the outer sawtooth, shell local time and the elastic killing clock.
template <class Visitor>
PathFunctionals walk_domain(const DomainModel& dom, const SimConfig& cfg, uint64_t path_index,
                            Visitor&& vis) {
    PathRng rng(cfg.seed, path_index);
    PathFunctionals pf;
    const double exp_draw = rng.exponential();
    const bool reflect_only = cfg.kill_mode == KillMode::ReflectInterface;
    // the clock also runs on reflected paths (c_n > 0): that is the Robin
    // reference process; AbsorbOuter never clocks
    const bool clock_on = cfg.kill_mode != KillMode::AbsorbOuter && cfg.c_n > 0.0;
    pf.zeta = clock_on ? exp_draw / cfg.c_n : std::numeric_limits<double>::infinity();
    pf.exp_unit = exp_draw;

    const double delta = cfg.shell_width();
    const double rt_h = std::sqrt(cfg.h);
    const double h_cap = std::max(cfg.h, cfg.t_max / 64.0);
    const double cell = dom.seg_len();
    const double refresh_cut = std::max(delta + 24.0 * rt_h, 1.5 * cell);
    const double stale_band = delta + 8.0 * rt_h;

    Vec2 pos = cfg.x0;
    bool in_sigma;
    if (dom.inside_omega(pos)) {
        in_sigma = false;
    } else if (!reflect_only && dom.inside_fiber(pos)) {
        in_sigma = true;
    } else if (dom.dist_interface(pos, 1e-9) < 1e-9) {
        in_sigma = false;  // on the pre-fractal boundary, i.e. in closure(Omega^n)
    } else {
        const double d_out = dom.dist_outer(pos, 1e-9);
        if (!reflect_only && d_out < 1e-9) {
            pf.cause = Cause::Absorbed;  // started on the outer boundary
            pf.lifetime = 0.0;
            return pf;
        }
        throw std::invalid_argument("walk_domain: x0 outside the admissible domain");
    }

    auto fresh_budget = [&](Vec2 p) {
        const double di = dom.dist_interface(p, refresh_cut);
        if (reflect_only) return di;
        return std::min(di, dom.dist_outer(p, refresh_cut));
    };
    double budget = fresh_budget(pos);

    double t = 0.0;
    std::vector<int32_t> cand_i, cand_o;

    while (true) {
        const double t_rem = cfg.t_max - t;
        if (t_rem <= cfg.h * 1e-9) {
            pf.cause = Cause::HorizonReached;
            pf.lifetime = cfg.t_max;
            return pf;
        }
        if (budget < stale_band) budget = fresh_budget(pos);

        double h_eff = cfg.h;
        const double margin = budget - delta;
        if (cfg.adaptive_bulk && margin > 6.0 * rt_h) {
            const double big = (margin / 6.0) * (margin / 6.0);
            h_eff = std::min(std::max(big, cfg.h), h_cap);
        }
        const double cp_dt = std::max(vis.next_checkpoint() - t, 1e-9 * cfg.h);
        h_eff = std::min({h_eff, t_rem, cp_dt});

        const double sd = std::sqrt(h_eff);
        const Vec2 step{sd * rng.normal(), sd * rng.normal()};
        const double slen = norm(step);

        if (slen + delta < budget) {
            // no boundary interaction possible
            pos = pos + step;
            budget -= slen;
            t += h_eff;
            (in_sigma ? pf.gamma_sigma : pf.gamma_omega) += h_eff;
            if (!vis.on_substep(t, pos, in_sigma, h_eff, pf)) {
                pf.cause = Cause::Stopped;
                pf.lifetime = t;
                return pf;
            }
            continue;
        }

        // boundary-resolving sub-step
        const Vec2 start = pos;
        const bool start_sigma = in_sigma;
        Vec2 p = pos;
        Vec2 r = step;
        int last_seg = -1;
        bool absorbed = false;
        bool crossed_interface = false;
        for (int guard = 0; guard < 64; ++guard) {
            Vec2 q = p + r;
            double best_t = std::numeric_limits<double>::infinity();
            int best_seg = -1;
            bool best_outer = false;
            dom.interface_candidates(p, q, cand_i);
            for (const int32_t i : cand_i) {
                if (i == last_seg) continue;
                double tp, up;
                if (!detail::seg_intersect(p, q, dom.seg_a(i), dom.seg_b(i), tp, up)) continue;
                if (tp <= 1e-12 || tp > 1.0 || up < 0.0 || up >= 1.0) continue;
                if (tp < best_t || (tp == best_t && !best_outer && i < best_seg)) {
                    best_t = tp;
                    best_seg = i;
                    best_outer = false;
                }
            }
            if (!reflect_only) {
                dom.outer_candidates(p, q, cand_o);
                for (const int32_t i : cand_o) {
                    double tp, up;
                    if (!detail::seg_intersect(p, q, dom.outer_a(i), dom.outer_b(i), tp, up))
                        continue;
                    if (tp <= 1e-12 || tp > 1.0 || up < 0.0 || up >= 1.0) continue;
                    if (tp < best_t) {
                        best_t = tp;
                        best_seg = i;
                        best_outer = true;
                    }
                }
            }
            if (best_seg < 0) {
                pos = q;
                break;
            }
            if (best_outer) {
                absorbed = true;
                pos = p + r * best_t;
                break;
            }
            // interface crossing
            const Vec2 a = dom.seg_a(best_seg);
            const Vec2 b = dom.seg_b(best_seg);
            const Vec2 dir = b - a;
            const Vec2 hit = p + r * best_t;
            ++pf.crossings;
            if (cfg.stop_at_interface) {
                absorbed = true;
                pos = hit;
                break;
            }
            double nu = 0.0;
            if (!reflect_only) nu = nu_of(cfg.c_n, detail::nu_weight(dom, cfg, best_seg, hit));
            const bool to_sigma = nu >= 1.0 ? true : (nu <= 0.0 ? false : rng.bernoulli(nu));
            if (to_sigma) ++pf.crossings_sigma;
            Vec2 rem = r * (1.0 - best_t);
            const bool rem_sigma = cross(dir, rem) > 0.0;
            if (rem_sigma != to_sigma) rem = detail::mirror_across(rem, dir);
            in_sigma = to_sigma;
            crossed_interface = true;
            if (norm2(rem) == 0.0) {
                // degenerate: nudge off the line toward the drawn side
                const Vec2 n = perp_left(dir);
                const double nn = norm(n);
                pos = hit + n * ((to_sigma ? 1.0 : -1.0) * 1e-13 * dom.seg_len() / nn);
                break;
            }
            p = hit;
            r = rem;
            last_seg = best_seg;
        }

        if (!absorbed && cfg.bridge_absorb && !crossed_interface) {
            // undetected interface touch between same-side endpoints; the
            // Bernoulli side draw on the touch event keeps the one-step law
            // of the skew walk exact against a locally straight interface
            const double cut = 4.0 * sd;
            int32_t seg = -1;
            Vec2 foot{};
            const double d2 = dom.dist_interface(pos, cut, &seg, &foot);
            if (seg >= 0 && d2 < cut) {
                const Vec2 a = dom.seg_a(seg);
                const Vec2 b = dom.seg_b(seg);
                const Vec2 dir = b - a;
                const double inv_len = 1.0 / norm(dir);
                const double s1 = cross(dir, start - a) * inv_len;
                const double s2 = cross(dir, pos - a) * inv_len;
                if (s1 * s2 > 0.0 && std::fabs(s1) < cut &&
                    rng.u01() < std::exp(-2.0 * std::fabs(s1) * std::fabs(s2) / h_eff)) {
                    ++pf.crossings;
                    if (cfg.stop_at_interface) {
                        pf.cause = Cause::Absorbed;
                        pf.lifetime = t;
                        return pf;
                    }
                    double nu = 0.0;
                    if (!reflect_only) nu = nu_of(cfg.c_n, detail::nu_weight(dom, cfg, seg, foot));
                    const bool to_sigma =
                        nu >= 1.0 ? true : (nu <= 0.0 ? false : rng.bernoulli(nu));
                    if (to_sigma) ++pf.crossings_sigma;
                    if (to_sigma != (s2 > 0.0)) {
                        const Vec2 mirrored = a + detail::mirror_across(pos - a, dir);
                        if (to_sigma) {
                            // mirrored into the fiber: absorbed if it left the tent
                            if (!dom.inside_fiber(mirrored)) {
                                absorbed = true;
                                pos = mirrored;
                            } else {
                                pos = mirrored;
                                in_sigma = true;
                            }
                        } else {
                            pos = mirrored;
                            in_sigma = false;
                        }
                    } else {
                        in_sigma = to_sigma;
                    }
                }
            }
        }

        if (!absorbed && cfg.bridge_absorb && !reflect_only && in_sigma && !crossed_interface &&
            start_sigma) {
            // excursion-probability absorption against the nearest roof
            const double cut = 4.0 * sd;
            int32_t seg = -1;
            Vec2 foot{};
            const double d2 = dom.dist_outer(pos, cut, &seg, &foot);
            if (seg >= 0 && d2 < cut) {
                const double d1 = dom.dist_outer(start, cut);
                if (d1 < cut && rng.u01() < std::exp(-2.0 * d1 * d2 / h_eff)) absorbed = true;
            }
        }

        if (absorbed) {
            pf.cause = Cause::Absorbed;
            pf.lifetime = t;  // sub-step time not interpolated
            return pf;
        }

        t += h_eff;
        (in_sigma ? pf.gamma_sigma : pf.gamma_omega) += h_eff;
        const double d_int = dom.dist_interface(pos, delta);
        detail::shell_accumulate(pf, d_int, in_sigma, h_eff, delta);

        if (!vis.on_substep(t, pos, in_sigma, h_eff, pf)) {
            pf.cause = Cause::Stopped;
            pf.lifetime = t;
            return pf;
        }
        if (clock_on && detail::clock_expired(pf, cfg)) {
            pf.cause = Cause::Killed;
            pf.lifetime = t;
            return pf;
        }
        budget = fresh_budget(pos);
    }
}

inline PathFunctionals walk_domain(const DomainModel& dom, const SimConfig& cfg,
                                   uint64_t path_index) {
    NullVisitor nv;
    return walk_domain(dom, cfg, path_index, nv);
}

}  // namespace kochlab

#endif
