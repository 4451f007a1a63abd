#ifndef KOCHLAB_SKEW_CORE_HPP
#define KOCHLAB_SKEW_CORE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kochlab/geometry.hpp"

namespace kochlab {

enum class KillMode : uint8_t { AbsorbOuter, ElasticClock, ReflectInterface };

// Weight fed to the transmission law at a crossing of the interface:
//   SigmaSide          sigma_n * w(y+), the divergence-form flux condition
//                      with the structural constant (default)
//   SigmaSideUnscaled  w(y+) alone
//   Constant           1 (the Omega-side trace)
enum class NuEval : uint8_t { SigmaSide, SigmaSideUnscaled, Constant };
enum class Cause : uint8_t { Running, Absorbed, Killed, HorizonReached, Stopped };

inline const char* to_string(Cause c) {
    switch (c) {
        case Cause::Running: return "Running";
        case Cause::Absorbed: return "Absorbed";
        case Cause::Killed: return "Killed";
        case Cause::HorizonReached: return "HorizonReached";
        case Cause::Stopped: return "Stopped";
    }
    return "?";
}

// Transmission probability toward the fiber side: nu = c w / (1 + c w).
inline double nu_of(double c_n, double w_val) {
    if (c_n < 0.0 || w_val < 0.0)
        throw std::invalid_argument("nu_of: negative input");
    const double cw = c_n * w_val;
    return cw / (1.0 + cw);
}

struct SimConfig {
    double h = 1e-5;           // time step
    double shell = 0.0;        // shell width for the local-time estimator; 0 -> 3*sqrt(h)
    double t_max = 1.0;        // horizon
    double delta_n = 0.0;      // zeroth-order killing drift rate (used by estimators)
    double c_n = 0.0;          // elastic rate / transmission coefficient
    KillMode kill_mode = KillMode::ElasticClock;
    NuEval nu_eval = NuEval::SigmaSide;
    double kappa_l = 1.0;      // local-time calibration factor (fitted in the 1D oracle)
    double lt_clock_scale = 1.0;  // extra scale on L_sym in the elastic clock
                                  // (sigma_n for pre-fractal domains, 1 in 1D)
    bool adaptive_bulk = true;    // exact Gaussian long steps away from all boundaries
    bool bridge_absorb = true;    // excursion-probability absorption test at absorbing walls
    bool stop_at_interface = false;  // terminate at first contact with the pre-fractal
                                     // (plain-BM Dirichlet runs); pairs with ReflectInterface
    uint64_t seed = 1;
    uint64_t paths = 1000;
    Vec2 x0{0.5, -0.29};

    double shell_width() const noexcept { return shell > 0.0 ? shell : 3.0 * std::sqrt(h); }

    std::vector<std::string> validate() const {
        if (!(h > 0.0)) throw std::invalid_argument("SimConfig: h must be positive");
        if (shell < 0.0) throw std::invalid_argument("SimConfig: shell must be non-negative");
        if (!(t_max > 0.0)) throw std::invalid_argument("SimConfig: t_max must be positive");
        if (delta_n < 0.0) throw std::invalid_argument("SimConfig: delta_n must be >= 0");
        if (c_n < 0.0) throw std::invalid_argument("SimConfig: c_n must be >= 0");
        if (kappa_l <= 0.0) throw std::invalid_argument("SimConfig: kappa_l must be positive");
        std::vector<std::string> warnings;
        if (shell_width() < 3.0 * std::sqrt(h) * (1.0 - 1e-12))
            warnings.push_back("shell width below the 3*sqrt(h) guideline; the local-time "
                               "estimator is under-resolved");
        return warnings;
    }
};

// Per-path accumulators. l_sym = (l_left + l_right)/2 holds by accounting:
// each in-shell sub-step credits h/(2 delta) to l_sym and h/delta to the
// one-sided time of the side it landed on.
struct PathFunctionals {
    double gamma_omega = 0.0;   // occupation of Omega^n
    double gamma_sigma = 0.0;   // occupation of Sigma^n
    double l_sym = 0.0;
    double l_left = 0.0;
    double l_right = 0.0;
    uint64_t crossings = 0;         // detected interface crossings
    uint64_t crossings_sigma = 0;   // crossings resolved to the fiber side
    double lifetime = 0.0;
    Cause cause = Cause::Running;
    double zeta = std::numeric_limits<double>::infinity();  // elastic threshold draw
    double exp_unit = 0.0;  // the unit-rate exponential behind zeta (= zeta * c_n)
};

namespace detail {

// One-sided shell bookkeeping; dist is to the interface, region tells the side.
inline void shell_accumulate(PathFunctionals& pf, double dist, bool in_sigma, double h_eff,
                             double delta_shell) noexcept {
    if (dist < delta_shell) {
        pf.l_sym += h_eff / (2.0 * delta_shell);
        if (in_sigma)
            pf.l_right += h_eff / delta_shell;
        else
            pf.l_left += h_eff / delta_shell;
    }
}

inline bool clock_expired(const PathFunctionals& pf, const SimConfig& cfg) noexcept {
    return cfg.kappa_l * cfg.lt_clock_scale * pf.l_sym > pf.zeta;
}

}  // namespace detail

struct NullVisitor {
    template <class Pos>
    bool on_substep(double, Pos, bool, double, const PathFunctionals&) noexcept {
        return true;
    }
    double next_checkpoint() const noexcept { return std::numeric_limits<double>::infinity(); }
};

}  // namespace kochlab

#endif
