#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace edgelab {

/// Counter-based generator (Philox4x32-10). Each (seed, stream) pair yields an
/// independent sequence of 2^64 64-bit words, reproducible across platforms.
/// Streams live in the upper counter words, so replicas can derive their own
/// generator from (master seed, replica index) without coordination.
class Philox {
public:
    explicit Philox(uint64_t seed, uint64_t stream = 0)
        : key0_(static_cast<uint32_t>(seed)),
          key1_(static_cast<uint32_t>(seed >> 32)),
          stream_lo_(static_cast<uint32_t>(stream)),
          stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

    uint64_t next_u64() {
        if (have_word_) {
            have_word_ = false;
            return spare_word_;
        }
        uint32_t c0 = static_cast<uint32_t>(block_);
        uint32_t c1 = static_cast<uint32_t>(block_ >> 32);
        ++block_;
        uint32_t x0 = c0, x1 = c1, x2 = stream_lo_, x3 = stream_hi_;
        uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            uint64_t p0 = static_cast<uint64_t>(kMul0) * x0;
            uint64_t p1 = static_cast<uint64_t>(kMul1) * x2;
            uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
            uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
            uint32_t y0 = hi1 ^ x1 ^ k0;
            uint32_t y1 = lo1;
            uint32_t y2 = hi0 ^ x3 ^ k1;
            uint32_t y3 = lo0;
            x0 = y0; x1 = y1; x2 = y2; x3 = y3;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        spare_word_ = (static_cast<uint64_t>(x2) << 32) | x3;
        have_word_ = true;
        return (static_cast<uint64_t>(x0) << 32) | x1;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draws are consumed in pairs.
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_normal_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * 3.14159265358979323846 * u2;
        spare_normal_ = r * std::sin(t);
        have_normal_ = true;
        return r * std::cos(t);
    }

    /// Gamma(shape, 1) by Marsaglia-Tsang, boosted for shape < 1.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            double g = gamma(shape + 1.0);
            return g * std::pow(uniform(), 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Chi random variable with (possibly fractional) shape parameter dof.
    double chi(double dof) { return std::sqrt(2.0 * gamma(0.5 * dof)); }

    static constexpr const char* algorithm() { return "philox4x32-10"; }

private:
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    uint32_t key0_, key1_;
    uint32_t stream_lo_, stream_hi_;
    uint64_t block_ = 0;
    uint64_t spare_word_ = 0;
    bool have_word_ = false;
    double spare_normal_ = 0.0;
    bool have_normal_ = false;
};

} // namespace edgelab
