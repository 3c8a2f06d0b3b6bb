#pragma once

// Philox4x32-10 counter-based generator. A (seed, stream) pair names an
// independent sequence, so parallel Monte Carlo loops can give every sample
// its own stream and stay reproducible for any thread count.

#include <array>
#include <cstdint>

namespace dpconic {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxBlock philox4x32_10(PhiloxBlock counter, PhiloxKey key);

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53 random bits.
    double uniform();
    double normal();
    /// Laplace with unit scale (variance 2).
    double laplace();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    PhiloxBlock buffer_{};
    int used_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Mixes a parent seed with labels into a child seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label);

}  // namespace dpconic
