#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vano {

// Separated random streams. Each (seed, purpose, index) triple names an
// independent stream; the same triple always yields the same sequence.
enum class StreamPurpose : uint64_t {
    data = 1,
    init = 2,
    latent_noise = 3,
    rff_matrix = 4,
    shuffle = 5,
};

namespace detail {
inline uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

class RngStream {
public:
    RngStream(uint64_t seed, StreamPurpose purpose, uint64_t index) {
        uint64_t s = seed;
        uint64_t a = detail::splitmix64(s);
        s ^= static_cast<uint64_t>(purpose) * 0xda942042e4dd58b5ULL;
        uint64_t b = detail::splitmix64(s);
        s ^= index * 0x2545f4914f6cdd1dULL;
        uint64_t c = detail::splitmix64(s);
        gen_.seed(a ^ (b << 1) ^ (c << 2));
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller on consecutive uniforms.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // First uniform mapped to (0, 1] so the log is finite.
        const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Deterministic in-place Fisher-Yates shuffle.
template <class T>
void shuffle(std::vector<T>& xs, RngStream& rng) {
    for (size_t i = xs.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(xs[i - 1], xs[j]);
    }
}

} // namespace vano
