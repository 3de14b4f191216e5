#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace regrank {

// mt19937_64 with our own value mapping. The standard pins down the raw
// engine sequence but not the distributions, so every draw here goes through
// hand-rolled mappings to keep generated data identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform integer in [0, n), n > 0
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % n;
    }

    // uniform in [0, 1)
    double next_real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double next_real(double lo, double hi) { return lo + (hi - lo) * next_real(); }

    bool bernoulli(double p) { return next_real() < p; }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace regrank
