#ifndef KOCHLAB_GEOMETRY_HPP
#define KOCHLAB_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace kochlab {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const noexcept { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const noexcept { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
};

inline double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) noexcept { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) noexcept { return std::sqrt(norm2(a)); }
inline Vec2 perp_left(Vec2 a) noexcept { return {-a.y, a.x}; }

inline double dist2_point_segment(Vec2 p, Vec2 a, Vec2 b, double* t_out = nullptr) noexcept {
    const Vec2 d = b - a;
    const double len2 = norm2(d);
    double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    if (t_out) *t_out = t;
    const Vec2 c = a + d * t;
    return norm2(p - c);
}

// Angle of the 4-map Koch family, theta(alpha) = asin(sqrt(alpha(4-alpha))/2).
inline double koch_theta(double alpha) {
    if (!(alpha > 2.0 && alpha < 4.0))
        throw std::invalid_argument("koch_theta: alpha must lie in (2,4)");
    return std::asin(std::sqrt(alpha * (4.0 - alpha)) / 2.0);
}

// Contractive similitude z -> m z + t (reflection-free), stored with its
// geometric parameters.
struct IfsSimilitude {
    double scale = 1.0;      // = 1/alpha
    double rotation = 0.0;   // radians
    Vec2 translation{};      // t
    double mr = 1.0, mi = 0.0;  // m = scale * exp(i rotation)

    static IfsSimilitude make(double scale, double rotation, Vec2 t) {
        IfsSimilitude s;
        s.scale = scale;
        s.rotation = rotation;
        s.translation = t;
        s.mr = scale * std::cos(rotation);
        s.mi = scale * std::sin(rotation);
        return s;
    }

    Vec2 apply(Vec2 p) const noexcept {
        return {mr * p.x - mi * p.y + translation.x, mi * p.x + mr * p.y + translation.y};
    }
};

inline std::array<IfsSimilitude, 4> build_similitudes(double alpha) {
    const double theta = koch_theta(alpha);
    const double ia = 1.0 / alpha;
    const double peak_y = std::sqrt(ia - 0.25);
    std::array<IfsSimilitude, 4> psi = {
        IfsSimilitude::make(ia, 0.0, {0.0, 0.0}),
        IfsSimilitude::make(ia, theta, {ia, 0.0}),
        IfsSimilitude::make(ia, -theta, {0.5, peak_y}),
        IfsSimilitude::make(ia, 0.0, {1.0 - ia, 0.0}),
    };
    return psi;
}

// Ordered polyline realization of the pre-fractal boundary: three sides
// between A=(0,0), B=(1,0), C=(1/2,-sqrt(3)/2), each with 4^n segments.
class PrefractalBoundary {
  public:
    static constexpr int kMaxLevel = 12;

    static Vec2 vertex_a() noexcept { return {0.0, 0.0}; }
    static Vec2 vertex_b() noexcept { return {1.0, 0.0}; }
    static Vec2 vertex_c() noexcept { return {0.5, -std::sqrt(3.0) / 2.0}; }

    static PrefractalBoundary base(double alpha) {
        koch_theta(alpha);  // validates alpha
        PrefractalBoundary pb;
        pb.alpha_ = alpha;
        pb.level_ = 0;
        pb.unit_ = {{0.0, 0.0}, {1.0, 0.0}};
        pb.materialize_sides();
        return pb;
    }

    static PrefractalBoundary build(double alpha, int level) {
        PrefractalBoundary pb = base(alpha);
        for (int i = 0; i < level; ++i) pb = refine(pb);
        return pb;
    }

    static PrefractalBoundary refine(const PrefractalBoundary& cur) {
        if (cur.level_ + 1 > kMaxLevel)
            throw std::invalid_argument("PrefractalBoundary: refinement level too deep");
        const auto psi = build_similitudes(cur.alpha_);
        PrefractalBoundary nxt;
        nxt.alpha_ = cur.alpha_;
        nxt.level_ = cur.level_ + 1;
        nxt.unit_.reserve(4 * (cur.unit_.size() - 1) + 1);
        for (int i = 0; i < 4; ++i)
            for (std::size_t k = 0; k + 1 < cur.unit_.size(); ++k)
                nxt.unit_.push_back(psi[i].apply(cur.unit_[k]));
        nxt.unit_.push_back({1.0, 0.0});
        nxt.materialize_sides();
        return nxt;
    }

    int level() const noexcept { return level_; }
    double alpha() const noexcept { return alpha_; }
    std::size_t segments_per_side() const noexcept { return unit_.size() - 1; }

    // side j in {0,1,2}: A->B, B->C, C->A; 4^n + 1 vertices
    const std::vector<Vec2>& side(int j) const { return sides_.at(static_cast<std::size_t>(j)); }

    // canonical side on [0,1] (side 0 equals it)
    const std::vector<Vec2>& unit_side() const noexcept { return unit_; }

  private:
    void materialize_sides() {
        const Vec2 corners[4] = {vertex_a(), vertex_b(), vertex_c(), vertex_a()};
        for (int j = 0; j < 3; ++j) {
            const Vec2 p = corners[j];
            const Vec2 d = corners[j + 1] - corners[j];
            auto& s = sides_[static_cast<std::size_t>(j)];
            s.resize(unit_.size());
            for (std::size_t k = 0; k < unit_.size(); ++k) {
                const Vec2 u = unit_[k];
                s[k] = {p.x + d.x * u.x - d.y * u.y, p.y + d.y * u.x + d.x * u.y};
            }
            s.front() = corners[j];
            s.back() = corners[j + 1];
        }
    }

    double alpha_ = 3.0;
    int level_ = 0;
    std::vector<Vec2> unit_;
    std::array<std::vector<Vec2>, 3> sides_;
};

enum class Region : uint8_t { InteriorOmega, Fiber, Outside, OnInterface, OnOuterBoundary };

struct Address {
    int side = 0;    // 0,1,2
    int index = 0;   // segment index within the side, base-4 digits = IFS word

    std::string word(int level) const {
        std::string w(static_cast<std::size_t>(level), '1');
        int v = index;
        for (int d = level - 1; d >= 0; --d) {
            w[static_cast<std::size_t>(d)] = static_cast<char>('1' + (v & 3));
            v >>= 2;
        }
        return w;
    }
};

struct Projection {
    Vec2 foot{};
    int segment = 0;
    double distance = 0.0;
};

// Uniform grid over segment soup; supports swept-segment candidate
// collection and nearest-distance with cutoff.
class SegmentGrid {
  public:
    SegmentGrid() = default;

    void build(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double cell) {
        ax_ = &a;
        bx_ = &b;
        cell_ = cell;
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (std::size_t i = 0; i < a.size(); ++i) {
            xmin = std::min({xmin, a[i].x, b[i].x});
            xmax = std::max({xmax, a[i].x, b[i].x});
            ymin = std::min({ymin, a[i].y, b[i].y});
            ymax = std::max({ymax, a[i].y, b[i].y});
        }
        x0_ = xmin - cell;
        y0_ = ymin - cell;
        nx_ = static_cast<int>((xmax - x0_) / cell) + 2;
        ny_ = static_cast<int>((ymax - y0_) / cell) + 2;
        std::vector<uint32_t> counts(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
        auto cells_of = [&](std::size_t i, auto&& fn) {
            const int cx0 = col(std::min(a[i].x, b[i].x));
            const int cx1 = col(std::max(a[i].x, b[i].x));
            const int cy0 = row(std::min(a[i].y, b[i].y));
            const int cy1 = row(std::max(a[i].y, b[i].y));
            for (int cy = cy0; cy <= cy1; ++cy)
                for (int cx = cx0; cx <= cx1; ++cx) fn(idx(cx, cy));
        };
        for (std::size_t i = 0; i < a.size(); ++i)
            cells_of(i, [&](std::size_t c) { ++counts[c + 1]; });
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        offsets_ = counts;
        items_.resize(offsets_.back());
        std::vector<uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t i = 0; i < a.size(); ++i)
            cells_of(i, [&](std::size_t c) { items_[cursor[c]++] = static_cast<int32_t>(i); });
    }

    // all segments whose grid cells intersect the bbox of p->q
    void candidates(Vec2 p, Vec2 q, std::vector<int32_t>& out) const {
        out.clear();
        const int cx0 = col(std::min(p.x, q.x));
        const int cx1 = col(std::max(p.x, q.x));
        const int cy0 = row(std::min(p.y, q.y));
        const int cy1 = row(std::max(p.y, q.y));
        for (int cy = cy0; cy <= cy1; ++cy)
            for (int cx = cx0; cx <= cx1; ++cx) {
                const std::size_t c = idx(cx, cy);
                for (uint32_t k = offsets_[c]; k < offsets_[c + 1]; ++k)
                    out.push_back(items_[k]);
            }
        if (out.size() > 1) {
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
        }
    }

    // nearest distance to any segment, exact up to cutoff; returns cutoff
    // if nothing is closer. Optionally reports the argmin segment.
    double nearest(Vec2 p, double cutoff, int32_t* seg_out = nullptr, Vec2* foot_out = nullptr) const {
        const auto& a = *ax_;
        const auto& b = *bx_;
        double best2 = cutoff * cutoff;
        int32_t best_seg = -1;
        Vec2 best_foot{};
        const int pcx = col(p.x);
        const int pcy = row(p.y);
        const int max_ring = static_cast<int>(cutoff / cell_) + 1;
        for (int ring = 0; ring <= max_ring; ++ring) {
            const double ring_min = (ring - 1) * cell_;
            if (ring > 0 && ring_min * ring_min > best2) break;
            for (int cy = pcy - ring; cy <= pcy + ring; ++cy) {
                for (int cx = pcx - ring; cx <= pcx + ring; ++cx) {
                    if (ring > 0 && std::abs(cx - pcx) != ring && std::abs(cy - pcy) != ring)
                        continue;
                    const std::size_t c = idx(cx, cy);
                    for (uint32_t k = offsets_[c]; k < offsets_[c + 1]; ++k) {
                        const int32_t i = items_[k];
                        double t;
                        const double d2 =
                            dist2_point_segment(p, a[static_cast<std::size_t>(i)],
                                                b[static_cast<std::size_t>(i)], &t);
                        if (d2 < best2 || (d2 == best2 && best_seg >= 0 && i < best_seg)) {
                            best2 = d2;
                            best_seg = i;
                            const Vec2 d = b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)];
                            best_foot = a[static_cast<std::size_t>(i)] + d * t;
                        }
                    }
                }
            }
        }
        if (seg_out) *seg_out = best_seg;
        if (foot_out) *foot_out = best_foot;
        return best_seg >= 0 ? std::sqrt(best2) : cutoff;
    }

    double cell() const noexcept { return cell_; }

  private:
    int col(double x) const noexcept {
        return std::clamp(static_cast<int>((x - x0_) / cell_), 0, nx_ - 1);
    }
    int row(double y) const noexcept {
        return std::clamp(static_cast<int>((y - y0_) / cell_), 0, ny_ - 1);
    }
    std::size_t idx(int cx, int cy) const noexcept {
        cx = std::clamp(cx, 0, nx_ - 1);
        cy = std::clamp(cy, 0, ny_ - 1);
        return static_cast<std::size_t>(cy) * nx_ + cx;
    }

    const std::vector<Vec2>* ax_ = nullptr;
    const std::vector<Vec2>* bx_ = nullptr;
    double x0_ = 0, y0_ = 0, cell_ = 1;
    int nx_ = 1, ny_ = 1;
    std::vector<uint32_t> offsets_;
    std::vector<int32_t> items_;
};

// Immutable composite geometry: snowflake Omega^n, fiber layer Sigma^n of
// 3*4^n triangular cells, outer boundary (union of cell roofs), spatial
// indices and the weight rule. Shared read-only by all path workers.
class DomainModel {
  public:
    DomainModel(double alpha, int level, double b) : alpha_(alpha), level_(level), b_(b) {
        theta_ = koch_theta(alpha);
        if (level < 1) throw std::invalid_argument("DomainModel: level must be >= 1");
        const double b_max = std::tan(theta_ / 2.0);
        if (!(b > 0.0)) throw std::invalid_argument("DomainModel: b must be positive");
        if (b > b_max * (1.0 + 1e-12)) {
            // locate one violating pair for the message (adjacent cells hit first)
            DomainModel probe(alpha, level, b, Unchecked{});
            const auto pair = probe.find_overlapping_cells();
            std::string msg = "DomainModel: fiber cells overlap for b=" + std::to_string(b) +
                              " > tan(theta/2)=" + std::to_string(b_max);
            if (pair.first >= 0)
                msg += "; cells " + probe.address(pair.first).word(level) + "(side " +
                       std::to_string(probe.address(pair.first).side) + ") and " +
                       probe.address(pair.second).word(level) + "(side " +
                       std::to_string(probe.address(pair.second).side) + ")";
            throw GeometryError(msg);
        }
        construct();
    }

    // the spatial indices hold references into the model's own storage
    DomainModel(const DomainModel&) = delete;
    DomainModel& operator=(const DomainModel&) = delete;

    double alpha() const noexcept { return alpha_; }
    int level() const noexcept { return level_; }
    double b() const noexcept { return b_; }
    double theta() const noexcept { return theta_; }
    double sigma_n() const noexcept { return sigma_; }
    double seg_len() const noexcept { return seg_len_; }
    double fiber_height() const noexcept { return 0.5 * b_ * seg_len_; }
    double area_omega() const noexcept { return area_; }
    std::size_t segment_count() const noexcept { return ring_.size(); }

    const std::vector<Vec2>& ring() const noexcept { return ring_; }
    Vec2 seg_a(int i) const noexcept { return ring_[static_cast<std::size_t>(i)]; }
    Vec2 seg_b(int i) const noexcept {
        const std::size_t n = ring_.size();
        return ring_[(static_cast<std::size_t>(i) + 1) % n];
    }
    Vec2 apex(int i) const noexcept { return apex_[static_cast<std::size_t>(i)]; }

    Address address(int seg) const noexcept {
        const int per_side = static_cast<int>(ring_.size() / 3);
        return {seg / per_side, seg % per_side};
    }

    // closed outer polyline v0, apex0, v1, apex1, ...
    std::vector<Vec2> outer_ring() const {
        std::vector<Vec2> out;
        out.reserve(2 * ring_.size());
        for (std::size_t i = 0; i < ring_.size(); ++i) {
            out.push_back(ring_[i]);
            out.push_back(apex_[i]);
        }
        return out;
    }

    bool inside_omega(Vec2 p) const noexcept { return crossing_test(p, ring_); }

    bool inside_fiber(Vec2 p, int* cell_out = nullptr) const {
        std::vector<int32_t> cand;
        grid_interface_.candidates({p.x - fiber_height(), p.y - fiber_height()},
                                   {p.x + fiber_height(), p.y + fiber_height()}, cand);
        for (int32_t i : cand) {
            if (point_in_cell(p, i)) {
                if (cell_out) *cell_out = i;
                return true;
            }
        }
        return false;
    }

    Region classify(Vec2 p, double tol) const {
        if (!(tol > 0.0)) throw std::invalid_argument("classify: tol must be positive");
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return Region::Outside;
        if (dist_interface(p, tol) < tol) return Region::OnInterface;
        if (dist_outer(p, tol) < tol) return Region::OnOuterBoundary;
        if (inside_omega(p)) return Region::InteriorOmega;
        if (inside_fiber(p)) return Region::Fiber;
        return Region::Outside;
    }

    Projection project_to_interface(Vec2 p) const {
        int32_t seg = -1;
        Vec2 foot{};
        double cutoff = 4.0 * grid_interface_.cell();
        double d = grid_interface_.nearest(p, cutoff, &seg, &foot);
        while (seg < 0) {
            cutoff *= 4.0;
            d = grid_interface_.nearest(p, cutoff, &seg, &foot);
        }
        return {foot, seg, d};
    }

    double dist_interface(Vec2 p, double cutoff) const noexcept {
        return grid_interface_.nearest(p, cutoff);
    }
    double dist_interface(Vec2 p, double cutoff, int32_t* seg, Vec2* foot) const noexcept {
        return grid_interface_.nearest(p, cutoff, seg, foot);
    }
    double dist_outer(Vec2 p, double cutoff) const noexcept {
        return grid_outer_.nearest(p, cutoff);
    }
    double dist_outer(Vec2 p, double cutoff, int32_t* seg, Vec2* foot) const noexcept {
        return grid_outer_.nearest(p, cutoff, seg, foot);
    }

    // Sigma-side trace of the weight on interface segment `seg` at a point
    // on (or projected to) that segment: 3*tent/(3+b^2), tent the normal
    // chord length of the fiber cell above the point.
    double weight_trace(int seg, Vec2 p) const noexcept {
        const Vec2 a = seg_a(seg);
        const Vec2 d = seg_b(seg) - a;
        const double len = seg_len_;
        double s = dot(p - a, d) / norm2(d) * len;
        s = std::clamp(s, 0.0, len);
        const double tent = b_ * std::min(s, len - s);
        return 3.0 * tent / (3.0 + b_ * b_);
    }

    double max_weight() const noexcept {
        return 3.0 * fiber_height() / (3.0 + b_ * b_);
    }

    // Weight field w^n: 1 on closure(Omega^n), fiber rule on Sigma^n.
    double weight_at(Vec2 p) const {
        if (inside_omega(p)) return 1.0;
        const double on_tol = 1e-12;
        if (dist_interface(p, on_tol) < on_tol) return 1.0;
        int cell = -1;
        if (inside_fiber(p, &cell)) return weight_trace(cell, project_onto_base(p, cell));
        throw std::domain_error("weight_at: point outside Omega^n_eps");
    }

    // sigma_n * sum over segments g(midpoint) * alpha^{-n}; the combined
    // node weight sigma_n*alpha^{-n} = 4^{-n} is exact in binary floating
    // point, making g == 1 integrate to 3 exactly.
    template <class G>
    double arclength_quadrature(G&& g) const {
        const double w = std::ldexp(1.0, -2 * level_);
        double acc = 0.0;
        for (std::size_t i = 0; i < ring_.size(); ++i) {
            const Vec2 m = (seg_a(static_cast<int>(i)) + seg_b(static_cast<int>(i))) * 0.5;
            acc += g(m);
        }
        return acc * w;
    }

    // segment candidates along a swept segment, for the path stepper
    void interface_candidates(Vec2 p, Vec2 q, std::vector<int32_t>& out) const {
        grid_interface_.candidates(p, q, out);
    }
    void outer_candidates(Vec2 p, Vec2 q, std::vector<int32_t>& out) const {
        grid_outer_.candidates(p, q, out);
    }
    Vec2 outer_a(int i) const noexcept { return outer_a_[static_cast<std::size_t>(i)]; }
    Vec2 outer_b(int i) const noexcept { return outer_b_[static_cast<std::size_t>(i)]; }

    // interior reference point (deep inside Omega^n for any level)
    Vec2 deep_point() const noexcept { return {0.5, -0.29}; }

  private:
    struct Unchecked {};
    DomainModel(double alpha, int level, double b, Unchecked)
        : alpha_(alpha), level_(level), b_(b) {
        theta_ = koch_theta(alpha);
        construct();
    }

    void construct() {
        const auto pb = PrefractalBoundary::build(alpha_, level_);
        const std::size_t per_side = pb.segments_per_side();
        ring_.reserve(3 * per_side);
        for (int j = 0; j < 3; ++j) {
            const auto& s = pb.side(j);
            for (std::size_t k = 0; k + 1 < s.size(); ++k) ring_.push_back(s[k]);
        }
        seg_len_ = std::pow(alpha_, -level_);
        sigma_ = std::pow(alpha_, level_) * std::ldexp(1.0, -2 * level_);
        const std::size_t m = ring_.size();
        apex_.resize(m);
        seg_a_store_.resize(m);
        seg_b_store_.resize(m);
        outer_a_.resize(2 * m);
        outer_b_.resize(2 * m);
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 a = ring_[i];
            const Vec2 b = ring_[(i + 1) % m];
            seg_a_store_[i] = a;
            seg_b_store_[i] = b;
            const Vec2 mid = (a + b) * 0.5;
            apex_[i] = mid + perp_left(b - a) * (0.5 * b_);
            outer_a_[2 * i] = a;
            outer_b_[2 * i] = apex_[i];
            outer_a_[2 * i + 1] = apex_[i];
            outer_b_[2 * i + 1] = b;
        }
        // polygon area (ring is counter-oriented: traversal A->B->C is clockwise,
        // so take the absolute value)
        double twice = 0.0;
        for (std::size_t i = 0; i < m; ++i) twice += cross(ring_[i], ring_[(i + 1) % m]);
        area_ = std::fabs(twice) * 0.5;

        const double target_cell = std::max(seg_len_, extent() / 1024.0);
        grid_interface_.build(seg_a_store_, seg_b_store_, target_cell);
        grid_outer_.build(outer_a_, outer_b_, target_cell);
    }

    double extent() const noexcept { return 2.2; }

    bool crossing_test(Vec2 p, const std::vector<Vec2>& poly) const noexcept {
        // half-open crossing rule: robust, deterministic on-edge behaviour
        bool in = false;
        const std::size_t m = poly.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 a = poly[i];
            const Vec2 b = poly[(i + 1) % m];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if (p.x < xint) in = !in;
            }
        }
        return in;
    }

    bool point_in_cell(Vec2 p, int i) const noexcept {
        const Vec2 a = seg_a(i);
        const Vec2 b = seg_b(i);
        const Vec2 c = apex_[static_cast<std::size_t>(i)];
        const double d1 = cross(b - a, p - a);
        const double d2 = cross(c - b, p - b);
        const double d3 = cross(a - c, p - c);
        return (d1 >= 0 && d2 >= 0 && d3 >= 0) || (d1 <= 0 && d2 <= 0 && d3 <= 0);
    }

    Vec2 project_onto_base(Vec2 p, int i) const noexcept {
        const Vec2 a = seg_a(i);
        const Vec2 d = seg_b(i) - a;
        const double t = std::clamp(dot(p - a, d) / norm2(d), 0.0, 1.0);
        return a + d * t;
    }

    std::pair<int, int> find_overlapping_cells() const {
        const int m = static_cast<int>(ring_.size());
        for (int i = 0; i < m; ++i)
            for (int off = 1; off <= 8; ++off) {
                const int j = (i + off) % m;
                if (cells_overlap(i, j)) return {std::min(i, j), std::max(i, j)};
            }
        return {-1, -1};
    }

  public:
    // strict interior overlap test (shared edges/vertices do not count)
    bool cells_overlap(int i, int j) const {
        const Vec2 t1[3] = {seg_a(i), seg_b(i), apex_[static_cast<std::size_t>(i)]};
        const Vec2 t2[3] = {seg_a(j), seg_b(j), apex_[static_cast<std::size_t>(j)]};
        const double eps = 1e-12 * seg_len_;
        auto separated = [&](const Vec2* u, const Vec2* v) {
            for (int e = 0; e < 3; ++e) {
                const Vec2 axis = perp_left(u[(e + 1) % 3] - u[e]);
                double umin = std::numeric_limits<double>::infinity(), umax = -umin;
                double vmin = umin, vmax = -umin;
                for (int k = 0; k < 3; ++k) {
                    umin = std::min(umin, dot(axis, u[k]));
                    umax = std::max(umax, dot(axis, u[k]));
                    vmin = std::min(vmin, dot(axis, v[k]));
                    vmax = std::max(vmax, dot(axis, v[k]));
                }
                if (umax <= vmin + eps || vmax <= umin + eps) return true;
            }
            return false;
        };
        return !separated(t1, t2) && !separated(t2, t1);
    }

  private:
    double alpha_;
    int level_;
    double b_;
    double theta_ = 0.0;
    double sigma_ = 1.0;
    double seg_len_ = 1.0;
    double area_ = 0.0;
    std::vector<Vec2> ring_;
    std::vector<Vec2> apex_;
    std::vector<Vec2> seg_a_store_, seg_b_store_;
    std::vector<Vec2> outer_a_, outer_b_;
    SegmentGrid grid_interface_;
    SegmentGrid grid_outer_;
};

namespace detail {

template <class G>
void selfsimilar_dfs(const std::array<IfsSimilitude, 4>& psi, double mr, double mi, double tx,
                     double ty, int depth, double node_w, G&& g, double& acc) {
    if (depth == 0) {
        // cell representative: image of the base midpoint (1/2, 0)
        acc += g(Vec2{mr * 0.5 + tx, mi * 0.5 + ty}) * node_w;
        return;
    }
    for (int i = 0; i < 4; ++i) {
        const auto& s = psi[static_cast<std::size_t>(i)];
        // compose (m,t) o (s.m, s.t)
        const double nmr = mr * s.mr - mi * s.mi;
        const double nmi = mr * s.mi + mi * s.mr;
        const double ntx = mr * s.translation.x - mi * s.translation.y + tx;
        const double nty = mi * s.translation.x + mr * s.translation.y + ty;
        selfsimilar_dfs(psi, nmr, nmi, ntx, nty, depth - 1, node_w, g, acc);
    }
}

}  // namespace detail

// One side of the snowflake, mass 1: sum over 4^N addresses of
// 4^{-N} g(representative).
template <class G>
double selfsimilar_quadrature_side(G&& g, int level, double alpha, int side) {
    if (level < 1) throw std::invalid_argument("selfsimilar_quadrature: level must be >= 1");
    if (level > PrefractalBoundary::kMaxLevel)
        throw std::invalid_argument("selfsimilar_quadrature: level too deep");
    const auto psi = build_similitudes(alpha);
    const Vec2 corners[4] = {PrefractalBoundary::vertex_a(), PrefractalBoundary::vertex_b(),
                             PrefractalBoundary::vertex_c(), PrefractalBoundary::vertex_a()};
    const Vec2 p = corners[side];
    const Vec2 d = corners[side + 1] - corners[side];
    double acc = 0.0;
    detail::selfsimilar_dfs(psi, d.x, d.y, p.x, p.y, level, std::ldexp(1.0, -2 * level), g, acc);
    return acc;
}

// All three sides, total mass 3 (one per side).
template <class G>
double selfsimilar_quadrature(G&& g, int level, double alpha) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) acc += selfsimilar_quadrature_side(g, level, alpha, j);
    return acc;
}

}  // namespace kochlab

#endif
