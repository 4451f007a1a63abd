// kochlab: pre-fractal Koch snowflake domains, skew Brownian paths across
// insulating fiber layers, and the elastic/reflecting/absorbing regime
// study. Exit codes: 0 ok, 2 config error, 3 geometry error, 4 statistical
// acceptance failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "kochlab/io.hpp"
#include "kochlab/oracle1d.hpp"

using namespace kochlab;

namespace {

Params load_params(const std::string& config_path) {
    Params p;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        p = parse_config(ss.str());
    }
    return p;
}

std::vector<int> parse_levels(const std::string& spec) {
    const auto dots = spec.find("..");
    if (dots == std::string::npos) {
        const int single = std::stoi(spec);
        return {single};
    }
    const int lo = std::stoi(spec.substr(0, dots));
    const int hi = std::stoi(spec.substr(dots + 2));
    if (hi < lo) throw ConfigError("bad level range '" + spec + "'");
    std::vector<int> out;
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
}

RegimeSchedule parse_schedule(const std::string& spec) {
    RegimeSchedule s;
    const auto c1 = spec.find(':');
    const std::string kind = spec.substr(0, c1);
    std::string rest = c1 == std::string::npos ? "" : spec.substr(c1 + 1);
    std::string power;
    const auto c2 = rest.find(':');
    if (c2 != std::string::npos) {
        power = rest.substr(c2 + 1);
        rest = rest.substr(0, c2);
    }
    if (kind == "const") s.kind = ScheduleKind::ConstantC0;
    else if (kind == "vanish") s.kind = ScheduleKind::Vanishing;
    else if (kind == "explode") s.kind = ScheduleKind::Exploding;
    else if (kind == "explode-linear") s.kind = ScheduleKind::ExplodingLinear;
    else throw ConfigError("unknown schedule kind '" + kind + "'");
    if (!rest.empty()) s.cbar = std::stod(rest);
    if (!power.empty()) s.power = std::stod(power);
    return s;
}

std::function<double(Vec2)> named_field(const std::string& name) {
    if (name == "one") return [](Vec2) { return 1.0; };
    if (name == "zero") return [](Vec2) { return 0.0; };
    if (name == "x") return [](Vec2 p) { return p.x; };
    if (name == "y") return [](Vec2 p) { return p.y; };
    if (name == "x2py") return [](Vec2 p) { return p.x * p.x + p.y; };
    throw ConfigError("unknown field '" + name + "' (one|zero|x|y|x2py)");
}

int run_geometry(const Params& p, const std::string& out_dir) {
    const DomainModel dom(p.alpha, p.level, p.fiber_b());
    RunManifest man(out_dir, p);
    man.write_text("interface.txt", vertices_text(dom.ring()));
    man.write_text("outer.txt", vertices_text(dom.outer_ring()));
    man.write_text("sketch.svg", domain_svg(dom));
    man.finish();
    std::printf("geometry: level %d, %zu segments, sigma_n = %s -> %s\n", dom.level(),
                dom.segment_count(), format_number(dom.sigma_n()).c_str(),
                man.dir().string().c_str());
    return 0;
}

int run_simulate(const Params& p, const std::string& out_dir) {
    const DomainModel dom(p.alpha, p.level, p.fiber_b());
    SimConfig cfg = p.sim_config(dom);
    for (const auto& w : cfg.validate()) std::fprintf(stderr, "warning: %s\n", w.c_str());
    RunManifest man(out_dir, p);

    if (p.trace_every > 0) {
        std::ostringstream csv;
        csv << "path,t,x,y,region,L_sym\n";
        for (uint64_t i = 0; i < cfg.paths; i += p.trace_every) {
            struct Tracer {
                std::ostringstream* out;
                uint64_t idx;
                uint64_t stride = 16;
                uint64_t k = 0;
                bool on_substep(double t, Vec2 pos, bool sigma, double,
                                const PathFunctionals& pf) {
                    if (++k % stride == 0)
                        (*out) << idx << ',' << format_number(t) << ',' << format_number(pos.x)
                               << ',' << format_number(pos.y) << ',' << (sigma ? "Sigma" : "Omega")
                               << ',' << format_number(pf.l_sym) << "\n";
                    return true;
                }
                double next_checkpoint() const {
                    return std::numeric_limits<double>::infinity();
                }
            } tracer;
            tracer.out = &csv;
            tracer.idx = i;
            walk_domain(dom, cfg, i, tracer);
        }
        man.write_text("trace.csv", csv.str());
    }

    const auto sample = run_lifetimes(dom, cfg, cfg.paths);
    std::vector<double> grid;
    for (int i = 1; i <= 32; ++i) grid.push_back(cfg.t_max * i / 32.0);
    man.write_text("survival.csv", survival_csv(survival_from_sample(sample, grid)));

    std::ostringstream js;
    js << "{\n";
    js << "  \"paths\": " << sample.total << ",\n";
    js << "  \"killed\": " << sample.killed << ",\n";
    js << "  \"absorbed\": " << sample.absorbed << ",\n";
    js << "  \"horizon\": " << sample.horizon << ",\n";
    js << "  \"mean_lifetime_capped\": " << format_number(sample.life_capped.mean()) << ",\n";
    js << "  \"stderr\": " << format_number(sample.life_capped.stderr_mean()) << ",\n";
    js << "  \"seed\": " << p.seed << "\n}\n";
    man.write_text("summary.json", js.str());
    man.finish();
    std::printf("simulate: %llu paths, killed %llu, absorbed %llu, horizon %llu -> %s\n",
                static_cast<unsigned long long>(sample.total),
                static_cast<unsigned long long>(sample.killed),
                static_cast<unsigned long long>(sample.absorbed),
                static_cast<unsigned long long>(sample.horizon), man.dir().string().c_str());
    return 0;
}

int run_estimate(const Params& p, const std::string& estimator, const std::string& field,
                 const std::string& out_dir) {
    const DomainModel dom(p.alpha, p.level, p.fiber_b());
    SimConfig cfg = p.sim_config(dom);
    const auto f = named_field(field);
    const Vec2 x0{p.x0_x, p.x0_y};
    RunManifest man(out_dir, p);
    Estimate e;
    std::string extra;
    std::vector<std::string> warnings;
    if (estimator == "u_n") {
        e = estimate_u_n(dom, cfg, x0, f, p.paths);
    } else if (estimator == "robin") {
        e = estimate_robin(dom, cfg, x0, f, p.delta0, p.c0, p.paths, &warnings);
    } else if (estimator == "dirichlet") {
        e = estimate_dirichlet(dom, cfg, x0, f, p.delta0, p.paths, &warnings);
    } else if (estimator == "laplace") {
        e = laplace_local_time(dom, cfg, x0, p.tstar, p.c0, p.paths);
        extra = "  \"t\": " + format_number(p.tstar) + ",\n  \"c\": " + format_number(p.c0);
    } else if (estimator == "resolvent") {
        e = resolvent_estimate(dom, cfg, x0, f, p.lambda, p.paths);
        extra = "  \"lambda\": " + format_number(p.lambda);
    } else if (estimator == "survival") {
        std::vector<double> grid;
        for (int i = 1; i <= 50; ++i) grid.push_back(cfg.t_max * i / 50.0);
        const auto sc = survival_curve(dom, cfg, grid, p.paths);
        man.write_text("survival.csv", survival_csv(sc));
        e.mean = sc.survival.back();
        e.n_paths = sc.n_paths;
    } else {
        throw ConfigError("unknown estimator '" + estimator +
                          "' (u_n|robin|dirichlet|laplace|resolvent|survival)");
    }
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    man.write_text("estimate.json", estimate_json(estimator, e, p, extra));
    man.finish();
    std::printf("%s: mean = %s +- %s (N = %llu) -> %s\n", estimator.c_str(),
                format_number(e.mean).c_str(), format_number(e.stderr_mean).c_str(),
                static_cast<unsigned long long>(e.n_paths), man.dir().string().c_str());
    return 0;
}

int run_oracle(const Params& p, double r1, double r2, double nu, double c,
               const std::string& variant, bool sweep, bool with_mc, const std::string& out_dir) {
    IntervalModel m;
    m.r1 = r1;
    m.r2 = r2;
    m.nu = nu;
    m.left = variant == "paper-zero" ? LeftBoundary::PaperZeroValue : LeftBoundary::ReflectAtZero;
    m.validate();
    RunManifest man(out_dir, p);
    int rc = 0;

    if (sweep) {
        const double eps0 = r2 - r1;
        const auto rows = convergence_sweep(c, schedule_exact_ratio(c, eps0, 6), r1, m.left);
        man.write_text("sweep.csv", sweep_csv(rows));
        std::printf("oracle sweep: eps %s -> %s, sup_err %s -> %s\n",
                    format_number(rows.front().eps).c_str(),
                    format_number(rows.back().eps).c_str(),
                    format_number(rows.front().sup_err).c_str(),
                    format_number(rows.back().sup_err).c_str());
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].sup_err > rows[i - 1].sup_err + 1e-12) rc = 4;
    } else {
        const auto sol = IntervalSolution::solve(m);
        const auto fd = fd_exit_solve(m, 0.0, 10000);
        std::ostringstream csv;
        csv << "x,closed_form,finite_difference,mc_mean,mc_stderr\n";
        double worst = 0.0;
        for (int i = 0; i <= 20; ++i) {
            const double x = r2 * i / 20.0;
            const double a = sol(x);
            const double b = fd.at(x);
            worst = std::max(worst, std::fabs(a - b) / std::max({1e-9, std::fabs(a)}));
            std::string mc_m = "", mc_s = "";
            if (with_mc && i % 4 == 0 && x < r2) {
                const auto mc = simulate_1d_skew(x, m, p.h > 0 ? p.h : 1e-5, p.paths, p.seed);
                mc_m = format_number(mc.exit_time.mean);
                mc_s = format_number(mc.exit_time.stderr_mean);
                if (std::fabs(mc.exit_time.mean - a) > 4.0 * mc.exit_time.stderr_mean + 1e-4)
                    rc = 4;
            }
            csv << format_number(x) << ',' << format_number(a) << ',' << format_number(b) << ','
                << mc_m << ',' << mc_s << "\n";
        }
        man.write_text("oracle.csv", csv.str());
        std::printf("oracle: closed-vs-fd worst relative %s%s\n", format_number(worst).c_str(),
                    rc == 4 ? " [MC MISMATCH]" : "");
        if (worst > 1e-6) rc = 4;
    }
    man.finish();
    return rc;
}

int run_regimes(const Params& p, const std::string& expect, const std::string& out_dir) {
    StudyConfig sc;
    sc.alpha = p.alpha;
    sc.b = p.b;
    sc.h0 = p.h0;
    sc.t_max = p.tmax;
    sc.t_star = p.tstar;
    sc.c_ref = p.c_ref;
    sc.x0 = {p.x0_x, p.x0_y};
    sc.paths = p.paths;
    sc.seed = p.seed;
    RegimeLab lab(sc);
    const auto schedule = parse_schedule(p.schedule);
    const auto levels = parse_levels(p.levels);
    const auto table = lab.run(schedule, levels);
    const auto label = classify_limit(table);

    RunManifest man(out_dir, p);
    man.write_text("regimes.csv", regime_csv(table));
    for (const auto& row : table.rows)
        man.write_text("survival_n" + std::to_string(row.level) + ".csv",
                       survival_csv(row.curve));
    std::ostringstream js;
    js << "{\n  \"schedule\": \"" << table.schedule_id << "\",\n";
    js << "  \"classification\": \"" << to_string(label) << "\",\n";
    js << "  \"levels\": [";
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        js << (i ? ", " : "") << table.rows[i].level;
    js << "],\n  \"seed\": " << p.seed << ",\n  \"paths\": " << p.paths << "\n}\n";
    man.write_text("summary.json", js.str());
    man.finish();
    std::printf("regimes %s: classification = %s -> %s\n", table.schedule_id.c_str(),
                to_string(label), man.dir().string().c_str());
    if (!expect.empty() && expect != to_string(label)) {
        std::fprintf(stderr, "expected %s, classified %s\n", expect.c_str(), to_string(label));
        return 4;
    }
    return 0;
}

int run_rr_check(const Params& p, int n_ref, const std::string& field,
                 const std::string& out_dir) {
    const auto g = named_field(field);
    const auto rows = check_prop_rr(g, parse_levels(p.levels), n_ref, p.alpha, p.fiber_b());
    RunManifest man(out_dir, p);
    man.write_text("rr_check.csv", rr_csv(rows));
    man.finish();
    std::printf("rr-check (%s): err %s -> %s\n", field.c_str(),
                format_number(rows.front().abs_err).c_str(),
                format_number(rows.back().abs_err).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for skew Brownian motion across pre-fractal Koch "
                 "interfaces with insulating fiber layers"};
    app.require_subcommand(1);

    std::string config_path, out_dir, estimator = "u_n", field = "one", expect;
    std::string variant = "reflect";
    double r1 = 0.3, r2 = 0.45, nu = 0.5, c = 1.0;
    bool sweep = false, with_mc = false;
    int n_ref = 12;

    Params cli;  // command-line overrides collected per option

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--out", out_dir, "output directory (default $KOCHLAB_OUT/<cmd>)");
        sub->add_option("--alpha", cli.alpha, "IFS family parameter in (2,4)");
        sub->add_option("--level,-n", cli.level, "pre-fractal level n >= 1");
        sub->add_option("--b", cli.b, "fiber cell height parameter (0: tan(theta/2))");
        sub->add_option("--paths,-N", cli.paths, "number of Monte Carlo paths");
        sub->add_option("--seed", cli.seed, "master seed");
    };

    std::vector<double> x0_opt;

    auto* geo = app.add_subcommand("geometry", "construct and export a composite domain");
    add_common(geo);

    auto* sim = app.add_subcommand("simulate", "skew BM paths with functionals");
    add_common(sim);
    sim->add_option("--cn", cli.cn, "elastic rate / transmission coefficient");
    sim->add_option("--deltan", cli.deltan, "zeroth-order killing rate");
    sim->add_option("--kill-mode", cli.kill_mode, "absorb|elastic|reflect");
    sim->add_option("--nu-eval", cli.nu_eval, "sigma-side|sigma-side-unscaled|constant");
    sim->add_option("--h", cli.h, "time step (0: h0 alpha^{-2n})");
    sim->add_option("--shell", cli.shell, "local-time shell width (0: 3 sqrt(h))");
    sim->add_option("--tmax", cli.tmax, "horizon");
    sim->add_option("--x0", x0_opt, "start point: --x0 X Y")->expected(2);
    sim->add_option("--trace-every", cli.trace_every, "dump every k-th path trace");

    auto* est = app.add_subcommand("estimate", "Monte Carlo solution functionals");
    add_common(est);
    est->add_option("--estimator", estimator, "u_n|robin|dirichlet|laplace|resolvent|survival");
    est->add_option("--f", field, "integrand: one|zero|x|y|x2py");
    est->add_option("--cn", cli.cn, "transmission coefficient");
    est->add_option("--deltan", cli.deltan, "discount for u_n/resolvent");
    est->add_option("--c0", cli.c0, "Robin rate / Laplace rate");
    est->add_option("--delta0", cli.delta0, "Robin/Dirichlet discount");
    est->add_option("--lambda", cli.lambda, "resolvent parameter");
    est->add_option("--tmax", cli.tmax, "horizon");
    est->add_option("--t", cli.tstar, "evaluation time for laplace");
    est->add_option("--x0", x0_opt, "start point: --x0 X Y")->expected(2);

    auto* ora = app.add_subcommand("oracle", "1D radial oracle: closed forms, FD, sweeps");
    add_common(ora);
    ora->add_option("--r1", r1, "interface radius");
    ora->add_option("--r2", r2, "absorbing outer radius");
    ora->add_option("--nu", nu, "skewness in [0,1]");
    ora->add_option("--c", c, "elastic limit coefficient");
    ora->add_option("--variant", variant, "reflect|paper-zero left condition");
    ora->add_flag("--sweep", sweep, "run the collapsing-layer convergence sweep");
    ora->add_flag("--mc", with_mc, "include Monte Carlo columns");
    ora->add_option("--h", cli.h, "walker step");

    auto* reg = app.add_subcommand("regimes", "elastic/reflecting/absorbing regime study");
    add_common(reg);
    reg->add_option("--schedule", cli.schedule, "const:c0 | vanish:cbar | explode:cbar[:power]");
    reg->add_option("--levels", cli.levels, "level range, e.g. 2..4");
    reg->add_option("--tmax", cli.tmax, "lifetime-law horizon");
    reg->add_option("--tstar", cli.tstar, "survival checkpoint");
    reg->add_option("--c-ref", cli.c_ref, "Robin reference rate");
    reg->add_option("--expect", expect, "exit 4 unless classified as this label");

    auto* rr = app.add_subcommand("rr-check", "sigma_n arc-length vs self-similar quadrature");
    add_common(rr);
    rr->add_option("--levels", cli.levels, "level range, e.g. 2..8");
    rr->add_option("--nref", n_ref, "self-similar reference level");
    rr->add_option("--g", field, "test field: one|zero|x|y|x2py");

    CLI11_PARSE(app, argc, argv);

    try {
        Params p = load_params(config_path);
        // command line overrides the config file where given
        for (auto* sub : {geo, sim, est, ora, reg, rr}) {
            if (!sub->parsed()) continue;
            auto pick = [&](const char* name, auto& dst, const auto& src) {
                if (sub->get_option_no_throw(name) && sub->count(name)) dst = src;
            };
            pick("--alpha", p.alpha, cli.alpha);
            pick("--level", p.level, cli.level);
            pick("--b", p.b, cli.b);
            pick("--paths", p.paths, cli.paths);
            pick("--seed", p.seed, cli.seed);
            pick("--cn", p.cn, cli.cn);
            pick("--deltan", p.deltan, cli.deltan);
            pick("--kill-mode", p.kill_mode, cli.kill_mode);
            pick("--nu-eval", p.nu_eval, cli.nu_eval);
            pick("--h", p.h, cli.h);
            pick("--shell", p.shell, cli.shell);
            pick("--tmax", p.tmax, cli.tmax);
            pick("--t", p.tstar, cli.tstar);
            pick("--tstar", p.tstar, cli.tstar);
            pick("--c0", p.c0, cli.c0);
            pick("--delta0", p.delta0, cli.delta0);
            pick("--lambda", p.lambda, cli.lambda);
            pick("--c-ref", p.c_ref, cli.c_ref);
            pick("--schedule", p.schedule, cli.schedule);
            pick("--levels", p.levels, cli.levels);
            pick("--trace-every", p.trace_every, cli.trace_every);
            if (sub->get_option_no_throw("--x0") && sub->count("--x0") && x0_opt.size() == 2) {
                p.x0_x = x0_opt[0];
                p.x0_y = x0_opt[1];
            }
        }
        if (!(p.alpha > 2.0 && p.alpha < 4.0))
            throw ConfigError("alpha must lie in (2,4)");

        auto outdir_for = [&](const char* name) {
            return out_dir.empty() ? (default_out_root() / name).string() : out_dir;
        };
        if (geo->parsed()) return run_geometry(p, outdir_for("geometry"));
        if (sim->parsed()) return run_simulate(p, outdir_for("simulate"));
        if (est->parsed()) return run_estimate(p, estimator, field, outdir_for("estimate"));
        if (ora->parsed())
            return run_oracle(p, r1, r2, nu, c, variant, sweep, with_mc, outdir_for("oracle"));
        if (reg->parsed()) return run_regimes(p, expect, outdir_for("regimes"));
        if (rr->parsed()) return run_rr_check(p, n_ref, field, outdir_for("rr-check"));
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const GeometryError& e) {
        std::fprintf(stderr, "geometry error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
