#ifndef KOCHLAB_RNG_HPP
#define KOCHLAB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace kochlab {

// Philox4x32-10 counter-based generator. Streams are addressed by
// (master seed, path index, block counter), so any path's draws can be
// regenerated independently of thread scheduling or other paths.
class Philox4x32 {
  public:
    struct Block {
        uint32_t v[4];
    };

    Philox4x32(uint64_t key, uint64_t stream) noexcept
        : key0_(static_cast<uint32_t>(key)),
          key1_(static_cast<uint32_t>(key >> 32)),
          stream_lo_(static_cast<uint32_t>(stream)),
          stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

    Block operator()(uint64_t block_index) const noexcept {
        uint32_t c0 = static_cast<uint32_t>(block_index);
        uint32_t c1 = static_cast<uint32_t>(block_index >> 32);
        uint32_t c2 = stream_lo_;
        uint32_t c3 = stream_hi_;
        uint32_t k0 = key0_;
        uint32_t k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const uint64_t p0 = kMul0 * static_cast<uint64_t>(c0);
            const uint64_t p1 = kMul1 * static_cast<uint64_t>(c2);
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
            const uint32_t lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
            const uint32_t lo1 = static_cast<uint32_t>(p1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return Block{{c0, c1, c2, c3}};
    }

  private:
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    uint32_t key0_, key1_, stream_lo_, stream_hi_;
};

// Per-path random stream: uniforms, normals (polar method), exponentials.
class PathRng {
  public:
    PathRng(uint64_t master_seed, uint64_t path_index) noexcept
        : engine_(master_seed, path_index) {}

    // uniform on (0,1]
    double u01() noexcept {
        if (fill_ == 0) refill();
        const uint32_t hi = buf_[--fill_];
        const uint32_t lo = buf_[--fill_];
        const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double exponential() noexcept { return -std::log(u01()); }

    bool bernoulli(double p) noexcept { return u01() <= p; }

  private:
    void refill() noexcept {
        const Philox4x32::Block b = engine_(block_++);
        buf_[0] = b.v[0];
        buf_[1] = b.v[1];
        buf_[2] = b.v[2];
        buf_[3] = b.v[3];
        fill_ = 4;
    }

    Philox4x32 engine_;
    uint64_t block_ = 0;
    uint32_t buf_[4] = {0, 0, 0, 0};
    int fill_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace kochlab

#endif
