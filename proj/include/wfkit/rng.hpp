#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace wfkit {

// splitmix64: tiny, platform-independent generator. Every seeded feature in
// the toolkit (candidate sampling, fixture generation, shuffles) goes through
// this so that identical seeds give identical bytes on every build.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Unbiased draw from [0, bound) via rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double unit() {  // [0, 1), 53-bit resolution
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Stable per-sample seed derivation from a run seed and an index.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t index) {
    SplitMix64 g(run_seed ^ (0xD1B54A32D192ED03ull * (index + 1)));
    return g.next();
}

}  // namespace wfkit
