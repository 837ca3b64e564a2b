#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace diffdcm {

// Deterministic generator used everywhere randomness is needed.
// SplitMix64 (Steele, Lea, Flood 2014): a fixed 64-bit integer recurrence,
// so a given seed yields the same stream on every platform. Floating-point
// draws are derived from the top 53 bits only.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be >= 1.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Index drawn from a discrete distribution given by `probs` (need not be
    // exactly normalised; inverse-CDF over the running sum, one draw).
    std::size_t categorical(const std::vector<double>& probs) {
        double total = std::accumulate(probs.begin(), probs.end(), 0.0);
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
            acc += probs[k];
            if (u < acc) return k;
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(idx[i - 1], idx[j]);
        }
        return idx;
    }

  private:
    std::uint64_t state_;
};

} // namespace diffdcm
