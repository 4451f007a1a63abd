#include <catch2/catch_amalgamated.hpp>

#include "kochlab/rng.hpp"
#include "kochlab/stats.hpp"

#include <cmath>
#include <vector>

using namespace kochlab;

TEST_CASE("philox streams are deterministic and distinct") {
    PathRng a(42, 7);
    PathRng b(42, 7);
    PathRng c(42, 8);
    PathRng d(43, 7);
    bool same_c = true, same_d = true;
    for (int i = 0; i < 64; ++i) {
        const double xa = a.u01();
        REQUIRE(xa == b.u01());
        if (xa != c.u01()) same_c = false;
        if (xa != d.u01()) same_d = false;
        REQUIRE(xa > 0.0);
        REQUIRE(xa <= 1.0);
    }
    REQUIRE_FALSE(same_c);
    REQUIRE_FALSE(same_d);
}

TEST_CASE("uniform and normal moments") {
    PathRng rng(1234, 0);
    RunningStat u, n;
    for (int i = 0; i < 200000; ++i) u.add(rng.u01());
    for (int i = 0; i < 200000; ++i) n.add(rng.normal());
    REQUIRE(u.mean() == Catch::Approx(0.5).margin(0.005));
    REQUIRE(u.variance() == Catch::Approx(1.0 / 12.0).margin(0.002));
    REQUIRE(n.mean() == Catch::Approx(0.0).margin(0.01));
    REQUIRE(n.variance() == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("exponential draws") {
    PathRng rng(99, 3);
    RunningStat s;
    for (int i = 0; i < 100000; ++i) s.add(rng.exponential());
    REQUIRE(s.mean() == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("normal cdf") {
    REQUIRE(normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(normal_cdf(-1.0) == Catch::Approx(0.158655253931).epsilon(1e-9));
    REQUIRE(normal_cdf(2.0) == Catch::Approx(0.977249868052).epsilon(1e-9));
}

TEST_CASE("wilson interval") {
    const auto iv = wilson_interval(50, 100, 1.96);
    REQUIRE(iv.lo == Catch::Approx(0.404).margin(0.005));
    REQUIRE(iv.hi == Catch::Approx(0.596).margin(0.005));
    const auto edge = wilson_interval(0, 10, 1.96);
    REQUIRE(edge.lo == 0.0);
    REQUIRE(edge.hi > 0.0);
}

TEST_CASE("censored two-sample KS") {
    // identical samples -> 0
    std::vector<double> a = {0.1, 0.2, 0.5};
    auto r = ks_censored(a, 5, a, 5, 1.0);
    REQUIRE(r.ks == 0.0);
    REQUIRE(r.censored_mass_diff == 0.0);

    // b kills everything by 0.3, a keeps mass censored; sup gap is at t=0.3
    std::vector<double> b = {0.05, 0.1, 0.15, 0.2, 0.3};
    r = ks_censored(a, 5, b, 5, 1.0);
    REQUIRE(r.ks == Catch::Approx(0.6).epsilon(1e-12));
    REQUIRE(r.censored_mass_diff == Catch::Approx(0.4).epsilon(1e-12));

    // events beyond the horizon are ignored
    std::vector<double> c = {0.1, 0.2, 0.5, 7.0};
    r = ks_censored(a, 5, c, 5, 1.0);
    REQUIRE(r.ks == 0.0);
}

TEST_CASE("line fit") {
    std::vector<double> x = {0, 1, 2, 3};
    std::vector<double> y = {1, 3, 5, 7};
    const auto f = fit_line(x, y);
    REQUIRE(f.slope == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(f.intercept == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("running stat merge") {
    RunningStat a, b, whole;
    PathRng rng(5, 5);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.normal();
        whole.add(x);
        (i < 500 ? a : b).add(x);
    }
    a.merge(b);
    REQUIRE(a.n == whole.n);
    REQUIRE(a.mean() == Catch::Approx(whole.mean()).epsilon(1e-12));
    REQUIRE(a.variance() == Catch::Approx(whole.variance()).epsilon(1e-10));
}
