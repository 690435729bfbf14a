#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace estlab {

// Counter-based generator (splitmix64 in counter mode). Streams are keyed by
// (seed, tag) so that independent operations and parallel trials never share
// a stream. Output is identical across platforms.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view tag) : key_(derive_key(seed, tag)) {}

    explicit Rng(std::uint64_t raw_key) : key_(raw_key) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [a, b)
    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller; both branches consume two uniforms so
    // the stream advances deterministically
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 1e-300) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // child stream for a trial index; independent of the parent position
    Rng stream(std::uint64_t index) const {
        return Rng(mix(key_ ^ mix(index + 0x5851f42d4c957f2dULL)));
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::string_view tag) {
        std::uint64_t h = 1469598103934665603ULL;  // FNV offset
        for (const char c : tag) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 1099511628211ULL;
        }
        return mix(seed ^ mix(h));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace estlab
