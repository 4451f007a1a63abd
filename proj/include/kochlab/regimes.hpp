#ifndef KOCHLAB_REGIMES_HPP
#define KOCHLAB_REGIMES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "kochlab/functionals.hpp"

namespace kochlab {

enum class ScheduleKind : uint8_t { ConstantC0, Vanishing, Exploding, ExplodingLinear };
enum class RegimeLabel : uint8_t { Robin, Neumann, Dirichlet, Inconclusive };

inline const char* to_string(RegimeLabel l) {
    switch (l) {
        case RegimeLabel::Robin: return "Robin";
        case RegimeLabel::Neumann: return "Neumann";
        case RegimeLabel::Dirichlet: return "Dirichlet";
        case RegimeLabel::Inconclusive: return "Inconclusive";
    }
    return "?";
}

// c_n sequences with c_n -> c_inf in {c_0, 0, inf}; exploding schedules must
// keep c_n * max w^n decreasing toward 0 over the swept levels.
struct RegimeSchedule {
    ScheduleKind kind = ScheduleKind::ConstantC0;
    double cbar = 1.0;
    double power = 0.5;  // Exploding: c_n = cbar * alpha^{power n}, 0 < power < 1

    double c_at(int level, double alpha) const {
        switch (kind) {
            case ScheduleKind::ConstantC0: return cbar;
            case ScheduleKind::Vanishing: return cbar / level;
            case ScheduleKind::Exploding: return cbar * std::pow(alpha, power * level);
            case ScheduleKind::ExplodingLinear: return cbar * level;
        }
        return cbar;
    }

    std::string id() const {
        switch (kind) {
            case ScheduleKind::ConstantC0: return "const:" + std::to_string(cbar);
            case ScheduleKind::Vanishing: return "vanish:" + std::to_string(cbar);
            case ScheduleKind::Exploding: return "explode:" + std::to_string(cbar);
            case ScheduleKind::ExplodingLinear: return "explode-linear:" + std::to_string(cbar);
        }
        return "?";
    }

    // returns the levels that satisfy the insulation constraint; throws from
    // the first violating level for exploding schedules
    void check_constraint(const std::vector<int>& levels, double alpha, double b) const {
        if (kind != ScheduleKind::Exploding && kind != ScheduleKind::ExplodingLinear) return;
        double prev = std::numeric_limits<double>::infinity();
        for (const int n : levels) {
            const double maxw =
                3.0 * (0.5 * b) * std::pow(alpha, -n) / (3.0 + b * b);
            const double cw = c_at(n, alpha) * maxw;
            if (cw >= prev)
                throw std::invalid_argument("RegimeSchedule: c_n * max w^n not decreasing at level " +
                                            std::to_string(n));
            prev = cw;
        }
    }
};

struct LifetimeSample {
    std::vector<double> deaths;  // lifetimes of killed/absorbed paths
    uint64_t total = 0;
    uint64_t killed = 0;
    uint64_t absorbed = 0;
    uint64_t horizon = 0;
    uint64_t killed_shallow = 0;  // killed with fiber occupation below one step
    RunningStat life_capped;      // lifetime ^ horizon over all paths

    void merge(const LifetimeSample& o) {
        deaths.insert(deaths.end(), o.deaths.begin(), o.deaths.end());
        total += o.total;
        killed += o.killed;
        absorbed += o.absorbed;
        horizon += o.horizon;
        killed_shallow += o.killed_shallow;
        life_capped.merge(o.life_capped);
    }
};

inline LifetimeSample run_lifetimes(const DomainModel& dom, const SimConfig& cfg,
                                    uint64_t n_paths) {
    cfg.validate();
    return run_paths_blocked<LifetimeSample>(n_paths, [&](uint64_t i, LifetimeSample& a) {
        const auto pf = walk_domain(dom, cfg, i);
        ++a.total;
        a.life_capped.add(std::min(pf.lifetime, cfg.t_max));
        switch (pf.cause) {
            case Cause::Killed:
                ++a.killed;
                a.deaths.push_back(pf.lifetime);
                if (pf.gamma_sigma < cfg.h) ++a.killed_shallow;
                break;
            case Cause::Absorbed:
                ++a.absorbed;
                a.deaths.push_back(pf.lifetime);
                break;
            default: ++a.horizon; break;
        }
    });
}

// Coupled lifetimes for several elastic rates against one trajectory per
// path: the walk runs with the transmission of cfg.c_n and no primary
// clock; each rate c_k kills at the first time kappa sigma L exceeds
// exp_unit / c_k. Lifetimes are exactly non-increasing in c path by path.
struct MultiCSamples {
    std::vector<LifetimeSample> per_c;
    void merge(const MultiCSamples& o) {
        if (per_c.empty()) per_c = o.per_c;
        else
            for (std::size_t k = 0; k < per_c.size(); ++k) per_c[k].merge(o.per_c[k]);
    }
};

inline MultiCSamples run_lifetimes_multi_c(const DomainModel& dom, SimConfig cfg,
                                           const std::vector<double>& c_values,
                                           uint64_t n_paths) {
    for (const double c : c_values)
        if (!(c > 0.0)) throw std::invalid_argument("run_lifetimes_multi_c: rates must be > 0");
    const KillMode traj_mode =
        cfg.kill_mode == KillMode::ReflectInterface ? KillMode::ReflectInterface
                                                    : KillMode::AbsorbOuter;
    const double base_c = cfg.c_n;
    cfg.kill_mode = traj_mode;  // keeps the transmission nu(base_c), no primary clock
    if (traj_mode == KillMode::ReflectInterface) cfg.c_n = 0.0;
    cfg.validate();
    const double scale = cfg.kappa_l * cfg.lt_clock_scale;
    (void)base_c;

    return run_paths_blocked<MultiCSamples>(n_paths, [&](uint64_t i, MultiCSamples& a) {
        if (a.per_c.empty()) a.per_c.resize(c_values.size());
        struct KillTimes {
            const std::vector<double>* cs;
            double scale = 1.0;
            double exp_unit = 0.0;
            std::vector<double> kill_at;  // NaN until crossed
            bool on_substep(double t, Vec2, bool, double, const PathFunctionals& pf) {
                const double lam = scale * pf.l_sym;
                for (std::size_t k = 0; k < cs->size(); ++k)
                    if (std::isnan(kill_at[k]) && lam * (*cs)[k] > pf.exp_unit) kill_at[k] = t;
                return true;
            }
            double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
        } vis;
        vis.cs = &c_values;
        vis.scale = scale;
        vis.kill_at.assign(c_values.size(), std::numeric_limits<double>::quiet_NaN());
        const auto pf = walk_domain(dom, cfg, i, vis);
        for (std::size_t k = 0; k < c_values.size(); ++k) {
            auto& s = a.per_c[k];
            ++s.total;
            double life;
            Cause cause;
            if (!std::isnan(vis.kill_at[k]) &&
                (pf.cause == Cause::HorizonReached || vis.kill_at[k] <= pf.lifetime)) {
                life = vis.kill_at[k];
                cause = Cause::Killed;
            } else {
                life = pf.lifetime;
                cause = pf.cause;
            }
            s.life_capped.add(std::min(life, cfg.t_max));
            switch (cause) {
                case Cause::Killed:
                    ++s.killed;
                    s.deaths.push_back(life);
                    break;
                case Cause::Absorbed:
                    ++s.absorbed;
                    s.deaths.push_back(life);
                    break;
                default: ++s.horizon; break;
            }
        }
    });
}

inline SurvivalCurve survival_from_sample(const LifetimeSample& s, const std::vector<double>& grid) {
    SurvivalCurve sc;
    sc.t = grid;
    sc.n_paths = s.total;
    std::vector<double> deaths = s.deaths;
    std::sort(deaths.begin(), deaths.end());
    for (const double t : grid) {
        const auto it = std::upper_bound(deaths.begin(), deaths.end(), t);
        const uint64_t dead = static_cast<uint64_t>(it - deaths.begin());
        const uint64_t alive = s.total - dead;
        sc.survival.push_back(static_cast<double>(alive) / static_cast<double>(s.total));
        const auto iv = wilson_interval(alive, s.total);
        sc.ci_lo.push_back(iv.lo);
        sc.ci_hi.push_back(iv.hi);
    }
    return sc;
}

struct RegimeRow {
    int level = 0;
    double c_n = 0.0;
    Estimate mean_lifetime;  // capped at the horizon
    SurvivalCurve curve;
    double survival_at_tstar = 1.0;
    double ks_robin = 0.0;
    double ks_neumann = 0.0;
    double ks_dirichlet = 0.0;
    double censored_diff_robin = 0.0;
    double censored_diff_dirichlet = 0.0;
    double killed_fraction = 0.0;
    double absorbed_fraction = 0.0;
    double shallow_kill_fraction = 0.0;  // of killed paths
};

struct ResultTable {
    std::string schedule_id;
    double alpha = 3.0;
    double b = 0.0;
    double c_ref = 1.0;
    double t_star = 0.05;
    uint64_t n_paths = 0;
    std::vector<RegimeRow> rows;
};

struct StudyConfig {
    double alpha = 3.0;
    double b = 0.0;          // 0: use tan(theta/2)
    double h0 = 1e-3;        // h_n = h0 * alpha^{-2n}, floored at 1e-7
    double t_max = 0.07;     // common horizon for lifetime laws
    double t_star = 0.05;    // survival checkpoint
    double c_ref = 1.0;      // Robin reference rate
    Vec2 x0{0.5, -0.29};
    uint64_t paths = 10000;
    uint64_t seed = 20240901;
    std::vector<double> grid;  // survival grid; empty: 24 points to t_max

    double fiber_b() const { return b > 0.0 ? b : std::tan(koch_theta(alpha) / 2.0); }
    std::vector<double> survival_grid() const {
        if (!grid.empty()) return grid;
        std::vector<double> g;
        for (int i = 1; i <= 24; ++i) g.push_back(t_max * i / 24.0);
        return g;
    }
};

// Orchestrates the regime study; reference lifetime laws (same-level
// Dirichlet and Robin processes) are cached across schedules.
class RegimeLab {
  public:
    explicit RegimeLab(StudyConfig sc) : sc_(sc) {}

    const DomainModel& domain(int level) {
        auto it = domains_.find(level);
        if (it == domains_.end())
            it = domains_
                     .emplace(level, std::make_unique<DomainModel>(sc_.alpha, level,
                                                                   sc_.fiber_b()))
                     .first;
        return *it->second;
    }

    SimConfig level_config(int level) {
        SimConfig cfg = default_config(domain(level), sc_.h0);
        cfg.t_max = sc_.t_max;
        cfg.x0 = sc_.x0;
        cfg.seed = sc_.seed;
        return cfg;
    }

    struct LevelRefs {
        LifetimeSample dirichlet;
        LifetimeSample robin;
    };

    static uint64_t level_seed(uint64_t base, int level) {
        return base + static_cast<uint64_t>(level) * 0x51ED2701u;
    }

    // References share the study's per-level seed: common random numbers
    // couple the trajectories, so KS distances measure the systematic
    // law difference without the two-sample noise floor.
    const LevelRefs& references(int level) {
        auto it = refs_.find(level);
        if (it != refs_.end()) return it->second;
        const auto& dom = domain(level);
        LevelRefs refs;

        SimConfig dir_cfg = level_config(level);
        dir_cfg.kill_mode = KillMode::ReflectInterface;
        dir_cfg.stop_at_interface = true;
        dir_cfg.seed = level_seed(sc_.seed, level);
        refs.dirichlet = run_lifetimes(dom, dir_cfg, sc_.paths);

        SimConfig rob_cfg = level_config(level);
        rob_cfg.kill_mode = KillMode::ReflectInterface;
        rob_cfg.c_n = sc_.c_ref;
        rob_cfg.seed = level_seed(sc_.seed, level);
        refs.robin = run_lifetimes(dom, rob_cfg, sc_.paths);

        return refs_.emplace(level, std::move(refs)).first->second;
    }

    ResultTable run(const RegimeSchedule& schedule, const std::vector<int>& levels) {
        for (std::size_t i = 1; i < levels.size(); ++i)
            if (levels[i] <= levels[i - 1])
                throw std::invalid_argument("RegimeLab: levels must increase");
        schedule.check_constraint(levels, sc_.alpha, sc_.fiber_b());

        ResultTable table;
        table.schedule_id = schedule.id();
        table.alpha = sc_.alpha;
        table.b = sc_.fiber_b();
        table.c_ref = sc_.c_ref;
        table.t_star = sc_.t_star;
        table.n_paths = sc_.paths;
        const auto grid = sc_.survival_grid();

        for (const int n : levels) {
            const auto& dom = domain(n);
            SimConfig cfg = level_config(n);
            cfg.kill_mode = KillMode::ElasticClock;
            cfg.c_n = schedule.c_at(n, sc_.alpha);
            cfg.seed = level_seed(sc_.seed, n);
            const auto sample = run_lifetimes(dom, cfg, sc_.paths);
            const auto& refs = references(n);

            RegimeRow row;
            row.level = n;
            row.c_n = cfg.c_n;
            row.mean_lifetime = {sample.life_capped.mean(), sample.life_capped.stderr_mean(),
                                 sample.life_capped.n, 0.0, 0.0, 0.0};
            row.curve = survival_from_sample(sample, grid);
            row.curve.level = n;
            row.curve.c_n = cfg.c_n;
            row.curve.kill_mode = cfg.kill_mode;
            {
                const auto it = std::lower_bound(grid.begin(), grid.end(), sc_.t_star);
                const std::size_t k = std::min<std::size_t>(
                    static_cast<std::size_t>(it - grid.begin()), grid.size() - 1);
                row.survival_at_tstar = row.curve.survival[k];
            }
            const auto ks_d = ks_censored(sample.deaths, sample.total, refs.dirichlet.deaths,
                                          refs.dirichlet.total, sc_.t_max);
            const auto ks_r = ks_censored(sample.deaths, sample.total, refs.robin.deaths,
                                          refs.robin.total, sc_.t_max);
            const auto ks_n =
                ks_censored(sample.deaths, sample.total, {}, sc_.paths, sc_.t_max);
            row.ks_dirichlet = ks_d.ks;
            row.ks_robin = ks_r.ks;
            row.ks_neumann = ks_n.ks;
            row.censored_diff_dirichlet = ks_d.censored_mass_diff;
            row.censored_diff_robin = ks_r.censored_mass_diff;
            row.killed_fraction =
                static_cast<double>(sample.killed) / static_cast<double>(sample.total);
            row.absorbed_fraction =
                static_cast<double>(sample.absorbed) / static_cast<double>(sample.total);
            row.shallow_kill_fraction =
                sample.killed ? static_cast<double>(sample.killed_shallow) /
                                    static_cast<double>(sample.killed)
                              : 0.0;
            table.rows.push_back(std::move(row));
        }
        return table;
    }

  private:
    StudyConfig sc_;
    std::map<int, std::unique_ptr<DomainModel>> domains_;
    std::map<int, LevelRefs> refs_;
};

struct ClassifyThresholds {
    double margin = 0.0;  // 0: noise scale 1.36 sqrt(2/N)
};

// Nearest-reference rule with margin over the final level's distances.
inline RegimeLabel classify_limit(const ResultTable& table, ClassifyThresholds th = {}) {
    if (table.rows.size() < 3)
        throw std::invalid_argument("classify_limit: need at least 3 levels");
    const auto& row = table.rows.back();
    double margin = th.margin;
    if (margin <= 0.0)
        margin = 1.36 * std::sqrt(2.0 / static_cast<double>(table.n_paths ? table.n_paths : 1));
    struct Cand {
        RegimeLabel label;
        double d;
    };
    Cand c[3] = {{RegimeLabel::Robin, row.ks_robin},
                 {RegimeLabel::Neumann, row.ks_neumann},
                 {RegimeLabel::Dirichlet, row.ks_dirichlet}};
    std::sort(std::begin(c), std::end(c), [](const Cand& a, const Cand& b) { return a.d < b.d; });
    if (c[1].d - c[0].d < margin) return RegimeLabel::Inconclusive;
    return c[0].label;
}

// --- Proposition-rr style quadrature comparison ----------------------------

struct RrRow {
    int level = 0;
    double arc_quadrature = 0.0;
    double reference = 0.0;
    double abs_err = 0.0;
};

template <class G>
std::vector<RrRow> check_prop_rr(G&& g, const std::vector<int>& levels, int n_ref, double alpha,
                                 double b) {
    const double ref = selfsimilar_quadrature(g, n_ref, alpha);
    std::vector<RrRow> rows;
    for (const int n : levels) {
        const DomainModel dom(alpha, n, b);
        const double q = dom.arclength_quadrature(g);
        rows.push_back({n, q, ref, std::fabs(q - ref)});
    }
    return rows;
}

// --- local-time increment moment diagnostics --------------------------------

struct MomentReport {
    bool skipped = false;
    std::string warning;
    double c_fit = 0.0;        // least-squares C in E|L_t - L_s|^2 <= C|t-s|^2
    double exponent_fit = 0.0; // log-log slope of E|L_t-L_s|^2 against |t-s|
    double worst_ratio = 0.0;  // max over pairs of moment / (C_fit |t-s|^2)
};

inline MomentReport moment_diagnostics(const DomainModel& dom, SimConfig cfg,
                                       const std::vector<double>& grid, uint64_t n_paths) {
    MomentReport rep;
    if (n_paths < 8 || grid.size() < 3) {
        rep.skipped = true;
        rep.warning = "moment_diagnostics: insufficient traces, diagnostic skipped";
        return rep;
    }
    cfg.validate();
    struct Acc {
        std::vector<RunningStat> inc2;  // indexed by (i,j) pair
        void merge(const Acc& o) {
            if (inc2.empty()) inc2 = o.inc2;
            else
                for (std::size_t k = 0; k < inc2.size(); ++k) inc2[k].merge(o.inc2[k]);
        }
    };
    const std::size_t m = grid.size();
    const std::size_t n_pairs = m * (m - 1) / 2;
    auto acc = run_paths_blocked<Acc>(n_paths, [&](uint64_t i, Acc& a) {
        if (a.inc2.empty()) a.inc2.resize(n_pairs);
        struct GridL {
            const std::vector<double>* marks;
            std::size_t next = 0;
            std::vector<double> l_at;
            bool on_substep(double t, Vec2, bool, double, const PathFunctionals& pf) {
                while (next < marks->size() && t >= (*marks)[next] - 1e-12) {
                    l_at.push_back(pf.l_sym);
                    ++next;
                }
                return true;
            }
            double next_checkpoint() const {
                return next < marks->size() ? (*marks)[next]
                                            : std::numeric_limits<double>::infinity();
            }
        } vis;
        vis.marks = &grid;
        const auto pf = walk_domain(dom, cfg, i, vis);
        while (vis.l_at.size() < m) vis.l_at.push_back(pf.l_sym);  // frozen after death
        std::size_t k = 0;
        for (std::size_t s = 0; s < m; ++s)
            for (std::size_t t = s + 1; t < m; ++t, ++k) {
                const double d = vis.l_at[t] - vis.l_at[s];
                a.inc2[k].add(d * d);
            }
    });
    std::vector<double> lx, ly;
    double cmax = 0.0;
    std::size_t k = 0;
    for (std::size_t s = 0; s < m; ++s)
        for (std::size_t t = s + 1; t < m; ++t, ++k) {
            const double dt = grid[t] - grid[s];
            const double m2 = acc.inc2[k].mean();
            if (m2 > 0.0) {
                lx.push_back(std::log(dt));
                ly.push_back(std::log(m2));
                cmax = std::max(cmax, m2 / (dt * dt));
            }
        }
    if (lx.size() < 2) {
        rep.skipped = true;
        rep.warning = "moment_diagnostics: degenerate local-time increments";
        return rep;
    }
    rep.c_fit = cmax;
    rep.exponent_fit = fit_line(lx, ly).slope;
    double worst = 0.0;
    k = 0;
    for (std::size_t s = 0; s < m; ++s)
        for (std::size_t t = s + 1; t < m; ++t, ++k) {
            const double dt = grid[t] - grid[s];
            worst = std::max(worst, acc.inc2[k].mean() / (cmax * dt * dt));
        }
    rep.worst_ratio = worst;
    return rep;
}

}  // namespace kochlab

#endif
