#ifndef KOCHLAB_IO_HPP
#define KOCHLAB_IO_HPP

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kochlab/functionals.hpp"
#include "kochlab/oracle1d.hpp"
#include "kochlab/regimes.hpp"

namespace kochlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const char* version_tag() { return "kochlab 1.0.0"; }

// ---- typed parameter set ----------------------------------------------------

struct Params {
    double alpha = 3.0;
    int level = 2;
    double b = 0.0;  // 0: open-set-condition bound tan(theta/2)
    double cn = 1.0;
    double deltan = 0.0;
    double c0 = 1.0;
    double delta0 = 0.0;
    std::string kill_mode = "elastic";  // absorb | elastic | reflect
    std::string nu_eval = "sigma-side";  // sigma-side | sigma-side-unscaled | constant
    double h = 0.0;  // 0: h0 * alpha^{-2 level}
    double h0 = 1e-3;
    double shell = 0.0;  // 0: 3 sqrt(h)
    double tmax = 0.07;
    double tstar = 0.05;
    double c_ref = 1.0;
    double lambda = 1.0;
    double kappa_l = 1.0;
    uint64_t paths = 10000;
    uint64_t seed = 20240901;
    double x0_x = 0.5;
    double x0_y = -0.29;
    uint64_t trace_every = 0;  // dump every k-th path trace (0: off)
    std::string schedule = "const:1";
    std::string levels = "2..4";

    double fiber_b() const { return b > 0.0 ? b : std::tan(koch_theta(alpha) / 2.0); }

    SimConfig sim_config(const DomainModel& dom) const {
        SimConfig cfg = default_config(dom, h0);
        if (h > 0.0) cfg.h = h;
        cfg.shell = shell;
        cfg.t_max = tmax;
        cfg.delta_n = deltan;
        cfg.c_n = cn;
        cfg.kappa_l = kappa_l;
        cfg.seed = seed;
        cfg.paths = paths;
        cfg.x0 = {x0_x, x0_y};
        if (kill_mode == "absorb") cfg.kill_mode = KillMode::AbsorbOuter;
        else if (kill_mode == "elastic") cfg.kill_mode = KillMode::ElasticClock;
        else if (kill_mode == "reflect") cfg.kill_mode = KillMode::ReflectInterface;
        else throw ConfigError("unknown kill_mode '" + kill_mode + "'");
        if (nu_eval == "sigma-side") cfg.nu_eval = NuEval::SigmaSide;
        else if (nu_eval == "sigma-side-unscaled") cfg.nu_eval = NuEval::SigmaSideUnscaled;
        else if (nu_eval == "constant") cfg.nu_eval = NuEval::Constant;
        else throw ConfigError("unknown nu_eval '" + nu_eval + "'");
        return cfg;
    }
};

namespace detail_io {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

template <class T>
T parse_number(const std::string& v, int line, const std::string& key);

template <>
inline double parse_number<double>(const std::string& v, int line, const std::string& key) {
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": value of '" + key +
                          "' is not a number: '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("line " + std::to_string(line) + ": trailing characters in '" + key +
                          "' value '" + v + "'");
    return out;
}

template <>
inline uint64_t parse_number<uint64_t>(const std::string& v, int line, const std::string& key) {
    if (!v.empty() && v[0] == '-')
        throw ConfigError("line " + std::to_string(line) + ": '" + key + "' must be non-negative");
    std::size_t pos = 0;
    uint64_t out;
    try {
        out = std::stoull(v, &pos);
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": value of '" + key +
                          "' is not an integer: '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("line " + std::to_string(line) + ": trailing characters in '" + key +
                          "' value '" + v + "'");
    return out;
}

template <>
inline int parse_number<int>(const std::string& v, int line, const std::string& key) {
    const uint64_t u = parse_number<uint64_t>(v, line, key);
    if (u > 1000000)
        throw ConfigError("line " + std::to_string(line) + ": '" + key + "' out of range");
    return static_cast<int>(u);
}

}  // namespace detail_io

// `key = value` lines, '#' comments; unknown keys, type mismatches and range
// violations are rejected with the offending line number.
inline Params parse_config(const std::string& text) {
    Params p;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail_io::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
        const std::string key = detail_io::trim(s.substr(0, eq));
        const std::string val = detail_io::trim(s.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(line) + ": empty key or value");

        using detail_io::parse_number;
        if (key == "alpha") p.alpha = parse_number<double>(val, line, key);
        else if (key == "level") p.level = parse_number<int>(val, line, key);
        else if (key == "b") p.b = parse_number<double>(val, line, key);
        else if (key == "cn") p.cn = parse_number<double>(val, line, key);
        else if (key == "deltan") p.deltan = parse_number<double>(val, line, key);
        else if (key == "c0") p.c0 = parse_number<double>(val, line, key);
        else if (key == "delta0") p.delta0 = parse_number<double>(val, line, key);
        else if (key == "kill_mode") p.kill_mode = val;
        else if (key == "nu_eval") p.nu_eval = val;
        else if (key == "h") p.h = parse_number<double>(val, line, key);
        else if (key == "h0") p.h0 = parse_number<double>(val, line, key);
        else if (key == "shell") p.shell = parse_number<double>(val, line, key);
        else if (key == "tmax") p.tmax = parse_number<double>(val, line, key);
        else if (key == "tstar") p.tstar = parse_number<double>(val, line, key);
        else if (key == "c_ref") p.c_ref = parse_number<double>(val, line, key);
        else if (key == "lambda") p.lambda = parse_number<double>(val, line, key);
        else if (key == "kappa_l") p.kappa_l = parse_number<double>(val, line, key);
        else if (key == "paths") p.paths = parse_number<uint64_t>(val, line, key);
        else if (key == "seed") p.seed = parse_number<uint64_t>(val, line, key);
        else if (key == "x0_x") p.x0_x = parse_number<double>(val, line, key);
        else if (key == "x0_y") p.x0_y = parse_number<double>(val, line, key);
        else if (key == "trace_every") p.trace_every = parse_number<uint64_t>(val, line, key);
        else if (key == "schedule") p.schedule = val;
        else if (key == "levels") p.levels = val;
        else
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");

        // range validation with the line at hand
        auto reject = [&](const std::string& why) {
            throw ConfigError("line " + std::to_string(line) + ": " + why);
        };
        if (key == "alpha" && !(p.alpha > 2.0 && p.alpha < 4.0))
            reject("alpha must lie in (2,4)");
        if (key == "level" && p.level < 1) reject("level must be >= 1");
        if (key == "b" && p.b != 0.0) {
            const double bmax = std::tan(koch_theta(p.alpha) / 2.0);
            if (!(p.b > 0.0 && p.b <= bmax * (1 + 1e-12)))
                reject("b must lie in (0, tan(theta/2)] = (0, " + std::to_string(bmax) + "]");
        }
        if ((key == "cn" || key == "deltan" || key == "c0" || key == "delta0" ||
             key == "c_ref" || key == "shell") &&
            parse_number<double>(val, line, key) < 0.0)
            reject(key + " must be >= 0");
        if ((key == "h" || key == "h0" || key == "tmax" || key == "tstar" || key == "lambda" ||
             key == "kappa_l") &&
            parse_number<double>(val, line, key) < 0.0)
            reject(key + " must be >= 0");
        if (key == "paths" && p.paths == 0) reject("paths must be >= 1");
    }
    return p;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// parameter echo; parse_config(emit_config(p)) reproduces p
inline std::string emit_config(const Params& p) {
    std::ostringstream out;
    out << "alpha = " << format_number(p.alpha) << "\n";
    out << "level = " << p.level << "\n";
    out << "b = " << format_number(p.b) << "\n";
    out << "cn = " << format_number(p.cn) << "\n";
    out << "deltan = " << format_number(p.deltan) << "\n";
    out << "c0 = " << format_number(p.c0) << "\n";
    out << "delta0 = " << format_number(p.delta0) << "\n";
    out << "kill_mode = " << p.kill_mode << "\n";
    out << "nu_eval = " << p.nu_eval << "\n";
    out << "h = " << format_number(p.h) << "\n";
    out << "h0 = " << format_number(p.h0) << "\n";
    out << "shell = " << format_number(p.shell) << "\n";
    out << "tmax = " << format_number(p.tmax) << "\n";
    out << "tstar = " << format_number(p.tstar) << "\n";
    out << "c_ref = " << format_number(p.c_ref) << "\n";
    out << "lambda = " << format_number(p.lambda) << "\n";
    out << "kappa_l = " << format_number(p.kappa_l) << "\n";
    out << "paths = " << p.paths << "\n";
    out << "seed = " << p.seed << "\n";
    out << "x0_x = " << format_number(p.x0_x) << "\n";
    out << "x0_y = " << format_number(p.x0_y) << "\n";
    out << "trace_every = " << p.trace_every << "\n";
    out << "schedule = " << p.schedule << "\n";
    out << "levels = " << p.levels << "\n";
    return out.str();
}

// ---- emitters ---------------------------------------------------------------

inline uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Collects emitted files and writes the manifest last; metadata lines are
// comments so the manifest itself parses as a config file.
class RunManifest {
  public:
    RunManifest(std::filesystem::path dir, const Params& params)
        : dir_(std::move(dir)), params_(params) {
        std::filesystem::create_directories(dir_);
        t0_ = std::chrono::steady_clock::now();
    }

    const std::filesystem::path& dir() const { return dir_; }

    void write_text(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << content;
        out.close();
        checksums_[name] = fnv1a64(content);
    }

    void finish() {
        std::ostringstream m;
        m << "# " << version_tag() << " run manifest\n";
        m << "# wall_clock_s = "
          << format_number(
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count())
          << "\n";
        for (const auto& [name, sum] : checksums_) {
            char hex[20];
            std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(sum));
            m << "# checksum " << name << " = " << hex << "\n";
        }
        m << emit_config(params_);
        std::ofstream out(dir_ / "manifest.txt", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
        out << m.str();
    }

  private:
    std::filesystem::path dir_;
    Params params_;
    std::map<std::string, uint64_t> checksums_;
    std::chrono::steady_clock::time_point t0_;
};

inline std::string survival_csv(const SurvivalCurve& sc) {
    std::ostringstream out;
    out << "t,survival,ci_lo,ci_hi\n";
    for (std::size_t i = 0; i < sc.t.size(); ++i)
        out << format_number(sc.t[i]) << ',' << format_number(sc.survival[i]) << ','
            << format_number(sc.ci_lo[i]) << ',' << format_number(sc.ci_hi[i]) << "\n";
    return out.str();
}

inline std::string regime_csv(const ResultTable& table) {
    std::ostringstream out;
    out << "level,c_n,mean_lifetime,stderr,survival_at_tstar,ks_robin,ks_neumann,ks_dirichlet,"
           "killed_fraction,absorbed_fraction,shallow_kill_fraction\n";
    for (const auto& r : table.rows)
        out << r.level << ',' << format_number(r.c_n) << ','
            << format_number(r.mean_lifetime.mean) << ','
            << format_number(r.mean_lifetime.stderr_mean) << ','
            << format_number(r.survival_at_tstar) << ',' << format_number(r.ks_robin) << ','
            << format_number(r.ks_neumann) << ',' << format_number(r.ks_dirichlet) << ','
            << format_number(r.killed_fraction) << ',' << format_number(r.absorbed_fraction)
            << ',' << format_number(r.shallow_kill_fraction) << "\n";
    return out.str();
}

inline std::string rr_csv(const std::vector<RrRow>& rows) {
    std::ostringstream out;
    out << "level,arc_quadrature,reference,abs_err\n";
    for (const auto& r : rows)
        out << r.level << ',' << format_number(r.arc_quadrature) << ','
            << format_number(r.reference) << ',' << format_number(r.abs_err) << "\n";
    return out.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "eps,nu,sup_err\n";
    for (const auto& r : rows)
        out << format_number(r.eps) << ',' << format_number(r.nu) << ','
            << format_number(r.sup_err) << "\n";
    return out.str();
}

inline std::string vertices_text(const std::vector<Vec2>& ring) {
    std::ostringstream out;
    for (const Vec2 v : ring) out << format_number(v.x) << ' ' << format_number(v.y) << "\n";
    return out.str();
}

// single-file sketch of Omega^n, the fiber cells and the outer boundary
inline std::string domain_svg(const DomainModel& dom) {
    const double s = 700.0;  // scale; y flipped for screen coordinates
    auto X = [&](double x) { return (x + 0.35) * s; };
    auto Ys = [&](double y) { return (0.45 - y) * s; };
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << static_cast<int>(1.7 * s)
        << "' height='" << static_cast<int>(1.7 * s) << "' viewBox='0 0 "
        << static_cast<int>(1.7 * s) << ' ' << static_cast<int>(1.7 * s) << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    // fiber cells
    out << "<g fill='#f4b183' stroke='#c55a11' stroke-width='0.4'>\n";
    for (std::size_t i = 0; i < dom.segment_count(); ++i) {
        const Vec2 a = dom.seg_a(static_cast<int>(i));
        const Vec2 b = dom.seg_b(static_cast<int>(i));
        const Vec2 c = dom.apex(static_cast<int>(i));
        out << "<polygon points='" << X(a.x) << ',' << Ys(a.y) << ' ' << X(b.x) << ',' << Ys(b.y)
            << ' ' << X(c.x) << ',' << Ys(c.y) << "'/>\n";
    }
    out << "</g>\n";
    // snowflake interior
    out << "<polygon fill='#bdd7ee' fill-opacity='0.8' stroke='#2e74b5' stroke-width='0.8' "
           "points='";
    for (const Vec2 v : dom.ring()) out << X(v.x) << ',' << Ys(v.y) << ' ';
    out << "'/>\n";
    // outer boundary
    out << "<polyline fill='none' stroke='#7f3f00' stroke-width='0.6' points='";
    const auto outer = dom.outer_ring();
    for (const Vec2 v : outer) out << X(v.x) << ',' << Ys(v.y) << ' ';
    out << X(outer.front().x) << ',' << Ys(outer.front().y);
    out << "'/>\n</svg>\n";
    return out.str();
}

inline std::string estimate_json(const std::string& name, const Estimate& e, const Params& p,
                                 const std::string& extra = "") {
    std::ostringstream out;
    out << "{\n  \"estimator\": \"" << name << "\",\n";
    out << "  \"mean\": " << format_number(e.mean) << ",\n";
    out << "  \"stderr\": " << format_number(e.stderr_mean) << ",\n";
    out << "  \"ci_lo\": " << format_number(e.ci_lo()) << ",\n";
    out << "  \"ci_hi\": " << format_number(e.ci_hi()) << ",\n";
    out << "  \"n_paths\": " << e.n_paths << ",\n";
    out << "  \"elapsed_s\": " << format_number(e.elapsed_s) << ",\n";
    out << "  \"tail_bound\": " << format_number(e.tail_bound) << ",\n";
    out << "  \"extra_mass\": " << format_number(e.extra_mass) << ",\n";
    out << "  \"seed\": " << p.seed << ",\n";
    out << "  \"x0\": [" << format_number(p.x0_x) << ", " << format_number(p.x0_y) << "],\n";
    out << "  \"alpha\": " << format_number(p.alpha) << ",\n";
    out << "  \"level\": " << p.level;
    if (!extra.empty()) out << ",\n" << extra;
    out << "\n}\n";
    return out.str();
}

inline std::filesystem::path default_out_root() {
    if (const char* env = std::getenv("KOCHLAB_OUT")) return env;
    return "out";
}

}  // namespace kochlab

#endif
