#pragma once

#include <cstdint>
#include <vector>

namespace ezr {

// xoshiro256** seeded via splitmix64. Hand-rolled so that seeded runs are
// reproducible across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
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

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n); n must be > 0
    std::size_t below(std::size_t n) {
        // rejection sampling keeps the draw unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return static_cast<std::size_t>(v % n);
    }

    // derive an independent stream; salt distinguishes sibling streams
    Rng fork(std::uint64_t salt) const {
        std::uint64_t x = state_[0] ^ (salt * 0x9E3779B97F4A7C15ULL);
        return Rng(splitmix64(x));
    }

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            using std::swap;
            swap(items[i - 1], items[below(i)]);
        }
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace ezr
