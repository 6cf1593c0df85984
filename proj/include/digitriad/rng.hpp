#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace digitriad {

// Deterministic random source. All randomness in the library flows through an
// explicit Rng value; there is no global state. Draws avoid std::*_distribution
// so that streams are identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo,hi).
    template <class T>
    T uniform(T lo, T hi) {
        return lo + static_cast<T>(next_double()) * (hi - lo);
    }

    // Uniform index in [0,n). Rejection sampling keeps it unbiased.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Derive an independent child stream; mixing keeps nearby keys apart.
    Rng split(std::uint64_t key) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (key + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    // Fisher–Yates.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::uint64_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace digitriad
