#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace vnfmig {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stable sub-stream seed for (base, salt); used to key snapshots, folds,
/// stages and so on without correlated streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(base ^ splitmix64(salt + 0x51ed2701389cf1b5ULL));
}

/// mt19937_64 with hand-rolled draws. The stdlib distributions are
/// implementation-defined, which would break byte-identical reruns, so all
/// bounded draws go through these helpers instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    /// Uniform integer in [lo, hi], inclusive.
    long uniform_int(long lo, long hi) {
        return lo + static_cast<long>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform over the multiples of 10^-decimals in [lo, hi]; bounds are
    /// expected to be representable at that resolution.
    double uniform_decimal(double lo, double hi, int decimals = 1) {
        double scale = 1.0;
        for (int i = 0; i < decimals; ++i) scale *= 10.0;
        const long ilo = std::lround(lo * scale);
        const long ihi = std::lround(hi * scale);
        return static_cast<double>(uniform_int(ilo, ihi)) / scale;
    }

    /// Fisher-Yates; deterministic across platforms, unlike std::shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace vnfmig
