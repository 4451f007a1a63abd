#include <catch2/catch_amalgamated.hpp>

#include "kochlab/parallel.hpp"
#include "kochlab/stats.hpp"
#include "kochlab/walk2d.hpp"

#include <cmath>
#include <cstring>

using namespace kochlab;

namespace {

const DomainModel& level2_domain() {
    static DomainModel dom(3.0, 2, std::tan(M_PI / 6.0));
    return dom;
}

SimConfig base_cfg(int level) {
    SimConfig cfg;
    cfg.h = 1e-3 * std::pow(3.0, -2 * level);
    cfg.t_max = 0.05;
    cfg.seed = 12345;
    cfg.x0 = {0.5, -0.29};
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.h = 1e-4;
    cfg.shell = 0.0;
    REQUIRE(cfg.validate().empty());
    REQUIRE(cfg.shell_width() == Catch::Approx(3.0 * std::sqrt(cfg.h)).epsilon(1e-12));
    cfg.shell = 0.5 * std::sqrt(cfg.h);
    REQUIRE(cfg.validate().size() == 1);
    cfg.h = -1.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("nu_of") {
    REQUIRE(nu_of(0.0, 0.5) == 0.0);
    REQUIRE(nu_of(2.0, 0.5) == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(nu_of(1e9, 1.0) == Catch::Approx(1.0).epsilon(1e-8));
    REQUIRE_THROWS_AS(nu_of(-1.0, 0.5), std::invalid_argument);
}

TEST_CASE("skew_resolve side statistics and mirroring") {
    const Vec2 a{0.0, 0.0}, b{1.0, 0.0};
    PathRng rng(7, 0);
    const Vec2 hit{0.5, 0.0};

    // nu = 0: always the Omega side (below), mirrored if needed
    for (int i = 0; i < 100; ++i) {
        const Vec2 prop{0.45 + 0.001 * i, (i % 2 ? 0.02 : -0.02)};
        const Vec2 out = skew_resolve(hit, prop, 0.0, a, b, rng);
        REQUIRE(out.y < 0.0);
        REQUIRE(std::fabs(out.y) == Catch::Approx(std::fabs(prop.y)).epsilon(1e-12));
        REQUIRE(out.x == Catch::Approx(prop.x).epsilon(1e-12));
    }

    for (double nu : {0.5, 0.9}) {
        uint64_t sigma_count = 0;
        const uint64_t n = 100000;
        for (uint64_t i = 0; i < n; ++i) {
            const Vec2 prop{0.5, (i % 2 ? 0.015 : -0.015)};
            bool to_sigma = false;
            skew_resolve(hit, prop, nu, a, b, rng, &to_sigma);
            sigma_count += to_sigma;
        }
        const auto ci = wilson_interval(sigma_count, n, 2.576);  // 99%
        REQUIRE(ci.lo <= nu);
        REQUIRE(nu <= ci.hi);
    }

    // degenerate displacement returns the hit point
    const Vec2 same = skew_resolve(hit, hit, 0.7, a, b, rng);
    REQUIRE(same.x == hit.x);
    REQUIRE(same.y == hit.y);
}

TEST_CASE("determinism: same seed and path index give identical functionals") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::ElasticClock;
    cfg.c_n = 1.0;
    cfg.lt_clock_scale = dom.sigma_n();
    const auto a = walk_domain(dom, cfg, 17);
    const auto b = walk_domain(dom, cfg, 17);
    REQUIRE(std::memcmp(&a, &b, sizeof(a)) == 0);
    const auto c = walk_domain(dom, cfg, 18);
    REQUIRE(std::memcmp(&a, &c, sizeof(a)) != 0);
}

TEST_CASE("reduction independent of worker count") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.c_n = 2.0;
    struct Acc {
        RunningStat life;
        void merge(const Acc& o) { life.merge(o.life); }
    };
    auto run = [&](unsigned threads) {
        return run_paths_blocked<Acc>(
            600, [&](uint64_t i, Acc& a) { a.life.add(walk_domain(dom, cfg, i).lifetime); },
            threads);
    };
    const auto s1 = run(1);
    const auto s4 = run(4);
    REQUIRE(s1.life.sum == s4.life.sum);
    REQUIRE(s1.life.sumsq == s4.life.sumsq);
}

TEST_CASE("local time identity and monotonicity") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.t_max = 0.05;

    struct Mono {
        double last = 0.0;
        bool ok = true;
        bool on_substep(double, Vec2, bool, double, const PathFunctionals& pf) {
            if (pf.l_sym < last) ok = false;
            last = pf.l_sym;
            return true;
        }
        double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
    };
    for (uint64_t i = 0; i < 32; ++i) {
        Mono mono;
        const auto pf = walk_domain(dom, cfg, i, mono);
        REQUIRE(mono.ok);
        REQUIRE(pf.l_sym == Catch::Approx((pf.l_left + pf.l_right) / 2.0).epsilon(1e-12));
        REQUIRE(pf.l_right == 0.0);  // reflected path never sits in Sigma
        REQUIRE(pf.crossings_sigma == 0);
        REQUIRE(pf.gamma_sigma == 0.0);
        REQUIRE(pf.cause == Cause::HorizonReached);
        REQUIRE(pf.gamma_omega == Catch::Approx(cfg.t_max).epsilon(1e-9));
    }
}

TEST_CASE("occupation accounting under absorption") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.c_n = 5.0;  // generous transmission so paths can die through the fiber
    cfg.t_max = 0.2;
    int absorbed = 0;
    for (uint64_t i = 0; i < 48; ++i) {
        const auto pf = walk_domain(dom, cfg, i);
        REQUIRE(pf.gamma_omega + pf.gamma_sigma <= pf.lifetime + 1e-9);
        if (pf.cause == Cause::Absorbed) {
            ++absorbed;
            REQUIRE(pf.crossings_sigma > 0);
        }
    }
    REQUIRE(absorbed > 0);
}

TEST_CASE("region tag stays consistent with containment") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.c_n = 3.0;
    cfg.t_max = 0.02;
    struct Last {
        Vec2 pos{};
        bool sigma = false;
        bool on_substep(double, Vec2 p, bool s, double, const PathFunctionals&) {
            pos = p;
            sigma = s;
            return true;
        }
        double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
    };
    for (uint64_t i = 0; i < 64; ++i) {
        Last last;
        const auto pf = walk_domain(dom, cfg, i, last);
        if (pf.cause == Cause::Absorbed) continue;
        const Region r = dom.classify(last.pos, 1e-12);
        if (r == Region::InteriorOmega) REQUIRE_FALSE(last.sigma);
        if (r == Region::Fiber) REQUIRE(last.sigma);
        REQUIRE(r != Region::Outside);
    }
}

TEST_CASE("interface side-choice frequency matches nu (smoke scale)") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.nu_eval = NuEval::Constant;  // nu = c/(1+c) at every crossing
    cfg.t_max = 0.02;
    cfg.x0 = {0.055, -0.01};  // above a flat stretch of the A-B side
    for (double nu : {0.1, 0.5}) {
        cfg.c_n = nu / (1.0 - nu);
        uint64_t crossings = 0, to_sigma = 0;
        for (uint64_t i = 0; i < 4000 && crossings < 30000; ++i) {
            const auto pf = walk_domain(dom, cfg, i);
            crossings += pf.crossings;
            to_sigma += pf.crossings_sigma;
        }
        REQUIRE(crossings >= 30000);
        const auto ci = wilson_interval(to_sigma, crossings, 2.576);
        REQUIRE(ci.lo <= nu);
        REQUIRE(nu <= ci.hi);
    }
}

TEST_CASE("reflected occupation matches area fraction (ergodicity)", "[slow]") {
    const DomainModel dom(3.0, 1, std::tan(M_PI / 6.0));
    SimConfig cfg = base_cfg(1);
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.t_max = 400.0;
    cfg.seed = 999;
    cfg.x0 = {0.3, -0.55};
    const Vec2 centre{0.5, -0.29};
    const double radius = 0.12;
    struct DiscTime {
        Vec2 c{};
        double r2 = 0.0;
        double inside = 0.0;
        bool on_substep(double, Vec2 p, bool, double h, const PathFunctionals&) {
            if (norm2(p - c) < r2) inside += h;
            return true;
        }
        double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
    };
    double frac = 0.0;
    const int n_paths = 32;
    for (uint64_t i = 0; i < n_paths; ++i) {
        DiscTime v;
        v.c = centre;
        v.r2 = radius * radius;
        walk_domain(dom, cfg, i, v);
        frac += v.inside / cfg.t_max / n_paths;
    }
    const double want = M_PI * radius * radius / dom.area_omega();
    REQUIRE(std::fabs(frac - want) / want < 0.05);
}

TEST_CASE("non-trap diagnostic: disc hitting times bounded over starting points") {
    const DomainModel dom(3.0, 1, std::tan(M_PI / 6.0));
    SimConfig cfg = base_cfg(1);
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.t_max = 50.0;
    const Vec2 centre{0.5, -0.29};
    const double r2 = 0.1 * 0.1;
    const Vec2 starts[4] = {{0.05, -0.05}, {0.95, -0.05}, {0.5, -0.8}, {0.5, -0.05}};
    struct HitDisc {
        Vec2 c{};
        double r2 = 0.0;
        double hit_at = -1.0;
        bool on_substep(double t, Vec2 p, bool, double, const PathFunctionals&) {
            if (norm2(p - c) < r2) {
                hit_at = t;
                return false;
            }
            return true;
        }
        double next_checkpoint() const { return std::numeric_limits<double>::infinity(); }
    };
    for (const Vec2 s : starts) {
        cfg.x0 = s;
        double mean_hit = 0.0;
        const int n = 12;
        for (uint64_t i = 0; i < n; ++i) {
            HitDisc v;
            v.c = centre;
            v.r2 = r2;
            walk_domain(dom, cfg, i, v);
            REQUIRE(v.hit_at >= 0.0);  // always hits well before the horizon
            mean_hit += v.hit_at / n;
        }
        REQUIRE(mean_hit < 5.0);
    }
}

TEST_CASE("elastic clock: c_n = 0 never kills, huge c_n kills on first shell entry") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::ElasticClock;
    cfg.lt_clock_scale = dom.sigma_n();
    cfg.t_max = 0.05;
    cfg.x0 = {0.055, -0.03};  // close enough to touch the boundary within the horizon

    cfg.c_n = 0.0;
    for (uint64_t i = 0; i < 16; ++i) {
        const auto pf = walk_domain(dom, cfg, i);
        REQUIRE(pf.cause != Cause::Killed);
        REQUIRE(std::isinf(pf.zeta));
    }

    cfg.c_n = 1e7;
    int killed = 0;
    for (uint64_t i = 0; i < 32; ++i) {
        const auto pf = walk_domain(dom, cfg, i);
        if (pf.cause == Cause::Killed) {
            ++killed;
            REQUIRE(pf.l_sym <= 4.0 * cfg.h / cfg.shell_width());
        }
    }
    REQUIRE(killed >= 24);
}

TEST_CASE("start on the outer boundary is absorbed immediately; far starts rejected") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::AbsorbOuter;
    cfg.x0 = dom.apex(5);
    const auto pf = walk_domain(dom, cfg, 0);
    REQUIRE(pf.cause == Cause::Absorbed);
    REQUIRE(pf.lifetime == 0.0);

    cfg.x0 = {4.0, 4.0};
    REQUIRE_THROWS_AS(walk_domain(dom, cfg, 0), std::invalid_argument);
}

TEST_CASE("stop-at-interface terminates on first pre-fractal contact") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.stop_at_interface = true;
    cfg.t_max = 5.0;
    for (uint64_t i = 0; i < 16; ++i) {
        const auto pf = walk_domain(dom, cfg, i);
        REQUIRE(pf.cause == Cause::Absorbed);
        REQUIRE(pf.crossings == 1);
        REQUIRE(pf.lifetime > 0.0);
    }
}

TEST_CASE("visitor checkpoints are honored") {
    const auto& dom = level2_domain();
    SimConfig cfg = base_cfg(2);
    cfg.kill_mode = KillMode::ReflectInterface;
    cfg.t_max = 0.02;
    struct Grid {
        std::vector<double> marks;
        std::size_t next = 0;
        std::vector<double> seen;
        bool on_substep(double t, Vec2, bool, double, const PathFunctionals&) {
            while (next < marks.size() && t >= marks[next] - 1e-12) {
                seen.push_back(t);
                ++next;
            }
            return true;
        }
        double next_checkpoint() const {
            return next < marks.size() ? marks[next] : std::numeric_limits<double>::infinity();
        }
    };
    Grid g;
    g.marks = {0.004, 0.008, 0.012, 0.0199};
    walk_domain(dom, cfg, 3, g);
    REQUIRE(g.seen.size() == g.marks.size());
    for (std::size_t k = 0; k < g.marks.size(); ++k)
        REQUIRE(g.seen[k] == Catch::Approx(g.marks[k]).margin(1e-9));
}
