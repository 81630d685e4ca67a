#pragma once

// Frozen pseudo-random generator for reproducible splits.
//
// All stochastic behavior in the toolkit flows through Xoshiro256ss seeded
// with SplitMix64, drawing bounded integers by modulo rejection and shuffling
// with Fisher-Yates. None of it depends on std::random distributions, whose
// output is implementation-defined, so a (dataset, seed) pair produces the
// same splits on every platform and compiler.

#include <cstdint>
#include <vector>

namespace sbss {

// Reference constants from Steele, Lea & Flood's SplitMix64.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Blackman & Vigna's xoshiro256**, state expanded from the seed via SplitMix64.
class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased draw from [0, n) by modulo rejection. n must be >= 1.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

// In-place Fisher-Yates; consumes exactly size-1 bounded draws for size >= 2.
template <typename T>
void fisher_yates_shuffle(std::vector<T>& values, Xoshiro256ss& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::uint64_t j = rng.bounded(i);
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace sbss
