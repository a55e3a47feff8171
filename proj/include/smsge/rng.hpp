#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace smsge {

// xoshiro256++ with splitmix64 seeding. Self-contained so that random
// streams are identical across platforms and the 4-word state can be
// serialized into checkpoints byte-exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; stateless between calls (no cached
    // spare), which keeps the serialized state a plain 4-word snapshot.
    double normal();

    // Uniform in [0, n), unbiased. n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    // Fisher-Yates shuffle of an index permutation 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    // Uniformly chosen k-subset of {0..n-1} in increasing order
    // (Knuth selection sampling).
    std::vector<int> ordered_subset(int n, int k);

    std::array<std::uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

private:
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& x);

// Decorrelated seed for a named substream of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace smsge
