#include <catch2/catch_amalgamated.hpp>

#include "kochlab/oracle1d.hpp"

#include <cmath>

using namespace kochlab;

namespace {
IntervalModel model(double r1, double r2, double nu, LeftBoundary left) {
    IntervalModel m;
    m.r1 = r1;
    m.r2 = r2;
    m.nu = nu;
    m.left = left;
    return m;
}
}  // namespace

TEST_CASE("symmetric case: m(x) = r2^2 - x^2 under reflection") {
    const auto m = model(0.5, 0.8, 0.5, LeftBoundary::ReflectAtZero);
    // nu = 1/2: no kink, plain reflected BM exit time for (1/2)m'' = -1
    REQUIRE(mean_exit_closed_form(0.0, m) == Catch::Approx(0.64).epsilon(1e-12));
    REQUIRE(mean_exit_closed_form(0.3, m) == Catch::Approx(0.64 - 0.09).epsilon(1e-12));
    REQUIRE(mean_exit_closed_form(m.r2, m) == Catch::Approx(0.0).margin(1e-12));

    const auto sol = IntervalSolution::solve(m);
    REQUIRE(sol.derivative(m.r1, false) == Catch::Approx(sol.derivative(m.r1, true)).epsilon(1e-10));
}

TEST_CASE("flux condition holds at the interface") {
    for (double nu : {0.2, 0.35, 0.5, 0.65, 0.9}) {
        const auto m = model(0.6, 1.0, nu, LeftBoundary::ReflectAtZero);
        const auto sol = IntervalSolution::solve(m);
        const double lhs = (1.0 - nu) * sol.derivative(m.r1, false);
        const double rhs = nu * sol.derivative(m.r1, true);
        REQUIRE(std::fabs(lhs - rhs) < 1e-8);
        // numerical differentiation route as well
        const double eps = 1e-6;
        const double dl = (sol(m.r1) - sol(m.r1 - eps)) / eps;
        const double dr = (sol(m.r1 + eps) - sol(m.r1)) / eps;
        REQUIRE(std::fabs((1.0 - nu) * dl - nu * dr) < 1e-4);
    }
}

TEST_CASE("closed form vs finite-difference oracle") {
    for (double delta : {0.0, 0.7}) {
        for (double nu : {0.25, 0.5, 0.75}) {
            for (auto left : {LeftBoundary::ReflectAtZero, LeftBoundary::PaperZeroValue}) {
                const auto m = model(0.55, 0.9, nu, left);
                const auto sol = IntervalSolution::solve(m, delta);
                const auto fd = fd_exit_solve(m, delta, 10000);
                for (double x : {0.0, 0.1, 0.3, 0.55, 0.7, 0.85}) {
                    const double a = sol(x);
                    const double b = fd.at(x);
                    const double scale = std::max({1e-9, std::fabs(a), std::fabs(b)});
                    REQUIRE(std::fabs(a - b) / scale < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("degenerate skewness") {
    // nu = 0 with reflecting origin: no route to r2, non-integrable
    const auto m0 = model(0.5, 0.8, 0.0, LeftBoundary::ReflectAtZero);
    const auto s0 = IntervalSolution::solve(m0);
    REQUIRE(s0.flag() == SolutionFlag::NonIntegrable);
    REQUIRE(std::isinf(s0(0.6)));

    // nu = 0 with absorbing origin: exits through 0; Sigma flagged unreachable
    const auto m1 = model(0.5, 0.8, 0.0, LeftBoundary::PaperZeroValue);
    const auto s1 = IntervalSolution::solve(m1);
    REQUIRE(s1.flag() == SolutionFlag::SigmaUnreachable);
    REQUIRE(s1(0.25) == Catch::Approx(-0.0625 + 0.25).epsilon(1e-12));  // -x^2 + 2 r1 x

    // nu = 1: Neumann on the fiber side of the interface
    const auto m2 = model(0.5, 0.8, 1.0, LeftBoundary::ReflectAtZero);
    const auto s2 = IntervalSolution::solve(m2);
    REQUIRE(s2.flag() == SolutionFlag::Ok);
    REQUIRE(s2.derivative(m2.r1, true) == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("elastic limit closed forms") {
    // c = infinity, reflecting: v(x) = r1^2 - x^2
    const auto v_inf = elastic_limit_solution(1.0, std::numeric_limits<double>::infinity(),
                                              LeftBoundary::ReflectAtZero);
    REQUIRE(v_inf(0.0) == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(v_inf(0.5) == Catch::Approx(0.75).epsilon(1e-12));

    // c = 1, reflecting, r1 = 1: v(x) = 3 - x^2, pinned by the FD oracle
    const auto v1 = elastic_limit_solution(1.0, 1.0, LeftBoundary::ReflectAtZero);
    REQUIRE(v1(1.0) == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(v1(0.0) == Catch::Approx(3.0).epsilon(1e-12));
    {
        // FD check through a thin-layer proxy with nu/((1-nu)eps) = 1
        const double eps = 1e-4;
        const double nu = eps / (1.0 + eps);
        const auto fd = fd_exit_solve(model(1.0, 1.0 + eps, nu, LeftBoundary::ReflectAtZero),
                                      0.0, 40000);
        REQUIRE(fd.at(0.0) == Catch::Approx(3.0).margin(2e-3));
        REQUIRE(fd.at(1.0) == Catch::Approx(2.0).margin(2e-3));
    }

    // c = 0 with reflection: both fluxes vanish, no finite solution
    const auto v0 = elastic_limit_solution(1.0, 0.0, LeftBoundary::ReflectAtZero);
    REQUIRE(v0.flag() == SolutionFlag::NonIntegrable);

    // c = 0 with absorbing origin is fine: v = -x^2 + 2 r1 x
    const auto vz = elastic_limit_solution(1.0, 0.0, LeftBoundary::PaperZeroValue);
    REQUIRE(vz.flag() == SolutionFlag::Ok);
    REQUIRE(vz(1.0) == Catch::Approx(1.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(elastic_limit_solution(1.0, -2.0, LeftBoundary::ReflectAtZero),
                      std::invalid_argument);
}

TEST_CASE("Neumann-delta limit is the constant 1/delta") {
    const auto v = elastic_limit_solution(0.7, 0.0, LeftBoundary::ReflectAtZero, 2.0);
    REQUIRE(v.flag() == SolutionFlag::Ok);
    REQUIRE(v(0.0) == Catch::Approx(0.5).epsilon(1e-10));
    REQUIRE(v(0.5) == Catch::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("convergence sweep: fixed c") {
    for (double c : {0.5, 2.0}) {
        const auto rows = convergence_sweep(c, schedule_exact_ratio(c, 0.1, 6), 0.7,
                                            LeftBoundary::ReflectAtZero);
        for (std::size_t k = 1; k < rows.size(); ++k)
            REQUIRE(rows[k].sup_err <= rows[k - 1].sup_err + 1e-9);
        REQUIRE(rows.back().sup_err < 1e-4);
    }
    // product rule: first-order decay, slope about 1 in log-log
    const auto rows = convergence_sweep(2.0, schedule_product(2.0, 0.05, 6), 0.7,
                                        LeftBoundary::ReflectAtZero);
    std::vector<double> lx, ly;
    for (const auto& r : rows) {
        lx.push_back(std::log(r.eps));
        ly.push_back(std::log(r.sup_err));
    }
    const auto fit = fit_line(lx, ly);
    REQUIRE(fit.slope > 0.8);
    REQUIRE(fit.slope < 1.3);
}

TEST_CASE("convergence sweep: Dirichlet proxy nu_k = sqrt(eps_k)") {
    std::vector<std::pair<double, double>> sched;
    double eps = 0.01;
    for (int k = 0; k < 13; ++k, eps *= 0.25) sched.push_back({eps, std::sqrt(eps)});
    const auto rows = convergence_sweep(std::numeric_limits<double>::infinity(), sched, 0.7,
                                        LeftBoundary::ReflectAtZero);
    for (std::size_t k = 1; k < rows.size(); ++k)
        REQUIRE(rows[k].sup_err <= rows[k - 1].sup_err + 1e-9);
    REQUIRE(rows.back().sup_err < 5e-5);
}

TEST_CASE("convergence sweep: Neumann proxy nu_k = eps_k^2 with delta regularization") {
    std::vector<std::pair<double, double>> sched;
    double eps = 0.05;
    for (int k = 0; k < 8; ++k, eps *= 0.5) sched.push_back({eps, eps * eps});
    const auto rows =
        convergence_sweep(0.0, sched, 0.7, LeftBoundary::ReflectAtZero, /*delta=*/1.5);
    for (std::size_t k = 1; k < rows.size(); ++k)
        REQUIRE(rows[k].sup_err <= rows[k - 1].sup_err + 1e-9);
    // limit is the constant 1/delta on [0, r1]
    REQUIRE(rows.back().sup_err < 1e-3);
}

TEST_CASE("sweep input validation") {
    REQUIRE_THROWS_AS(convergence_sweep(1.0, {{0.1, 1.5}}, 0.7, LeftBoundary::ReflectAtZero),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(convergence_sweep(1.0, {{0.1, 0.5}, {0.2, 0.5}}, 0.7,
                                        LeftBoundary::ReflectAtZero),
                      std::invalid_argument);
}

TEST_CASE("interval walk matches the closed form (smoke scale)") {
    const auto m = model(0.3, 0.45, 0.5, LeftBoundary::ReflectAtZero);
    const auto mc = simulate_1d_skew(0.2, m, 2e-5, 4000, 20240501);
    const double exact = mean_exit_closed_form(0.2, m);
    REQUIRE(std::fabs(mc.exit_time.mean - exact) < 4.0 * mc.exit_time.stderr_mean + 1e-4);
}

TEST_CASE("skewed interval walk matches the closed form (smoke scale)") {
    const auto m = model(0.3, 0.45, 0.3, LeftBoundary::ReflectAtZero);
    const auto mc = simulate_1d_skew(0.25, m, 2e-5, 4000, 77);
    const double exact = mean_exit_closed_form(0.25, m);
    REQUIRE(std::fabs(mc.exit_time.mean - exact) < 4.0 * mc.exit_time.stderr_mean + 1e-3);
}

TEST_CASE("local time calibration (smoke scale)") {
    const auto est = local_time_calibration(1.0, 1e-4, 8000, 31);
    REQUIRE(std::fabs(est.mean - std::sqrt(2.0 / M_PI)) < 4.0 * est.stderr_mean + 0.01);
}

TEST_CASE("elastic survival closed form sanity and MC (smoke scale)") {
    REQUIRE(elastic_survival_closed_form(0.0, 1.0) == Catch::Approx(1.0).epsilon(1e-12));
    // quadrature oracle for E exp(-c|N(0,t)|)
    auto quad = [](double c, double t) {
        const double s = std::sqrt(t);
        double acc = 0.0;
        const int n = 200000;
        const double hi = 10.0;
        for (int i = 0; i < n; ++i) {
            const double z = (i + 0.5) * hi / n;
            acc += std::exp(-c * s * z) * std::exp(-0.5 * z * z);
        }
        return 2.0 * acc * (hi / n) / std::sqrt(2.0 * M_PI);
    };
    for (double c : {0.5, 1.0, 2.0})
        REQUIRE(elastic_survival_closed_form(c, 1.0) == Catch::Approx(quad(c, 1.0)).epsilon(1e-6));

    const auto est = elastic_survival_1d({1.0}, 1.0, 1e-4, 8000, 99);
    REQUIRE(std::fabs(est[0].mean - elastic_survival_closed_form(1.0, 1.0)) <
            4.0 * est[0].stderr_mean + 0.01);
}

TEST_CASE("fd solver rejects degenerate skewness") {
    REQUIRE_THROWS_AS(fd_exit_solve(model(0.5, 0.8, 0.0, LeftBoundary::ReflectAtZero)),
                      std::invalid_argument);
}
