#pragma once

#include <cstdint>
#include <random>

namespace deid {

// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
// standard; the bounded helpers below avoid std::uniform_int_distribution,
// whose mapping is implementation-defined, so identical seeds give identical
// streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform in [0, n). n must be > 0.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    // Uniform in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Uniform in [0, 1) with 53-bit precision.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Derive an independent child seed; used to give each document its own
    // stream so per-document output does not depend on sibling documents.
    std::uint64_t fork_seed() { return next() ^ 0x9e3779b97f4a7c15ULL; }

  private:
    std::mt19937_64 gen_;
};

}  // namespace deid
