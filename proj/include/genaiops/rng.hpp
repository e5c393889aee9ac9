#pragma once
// Seeded PCG32 generator with a pinned bounded-draw and shuffle algorithm.
// Demo selection and the randomized fairness post-processors must reproduce
// bit-for-bit across platforms, so none of <random>'s distributions are used
// (their outputs are implementation-defined).

#include <cstdint>
#include <vector>

namespace genaiops {

class Pcg32 {
public:
    explicit Pcg32(uint64_t seed, uint64_t stream = 0x14057b7ef767814fULL) {
        state_ = 0;
        inc_ = (stream << 1) | 1;
        next();
        state_ += seed;
        next();
    }

    uint32_t next() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = uint32_t(((old >> 18) ^ old) >> 27);
        uint32_t rot = uint32_t(old >> 59);
        return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
    }

    // Unbiased draw in [0, bound) via rejection below the wrap threshold.
    uint32_t bounded(uint32_t bound) {
        if (bound <= 1) return 0;
        uint32_t threshold = uint32_t(-bound) % bound;
        for (;;) {
            uint32_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform double in [0, 1) with 32 bits of resolution.
    double uniform() { return next() * (1.0 / 4294967296.0); }

private:
    uint64_t state_;
    uint64_t inc_;
};

// In-place Fisher-Yates; the loop direction and draw order are part of the
// pinned algorithm.
template <typename T>
void fisher_yates_shuffle(std::vector<T>& items, Pcg32& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = rng.bounded(uint32_t(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace genaiops
