#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

namespace resched {

// Splittable random stream.
//
// A stream is identified by a 64-bit seed and a path of integers, e.g.
// (iteration, context, rollout). The path is hashed into a key with
// SplitMix64 finalizers; the key seeds a xoshiro256** state. Child streams
// are derived from the key alone, never from the consumed state, so any
// stream can be recreated in isolation and handed to a worker thread.
//
// Satisfies std::uniform_random_bit_generator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {});
    RandomStream(std::uint64_t seed, const std::vector<std::uint64_t>& path);

    /// Independent substream at `path + {index}`.
    RandomStream child(std::uint64_t index) const;

    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::uint64_t>& path() const noexcept { return path_; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next(); }
    result_type next() noexcept;

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;

    /// Standard normal (Marsaglia polar method).
    double normal() noexcept;

private:
    RandomStream(std::uint64_t seed, std::vector<std::uint64_t> path, std::uint64_t key);
    void init_state() noexcept;

    std::uint64_t seed_;
    std::vector<std::uint64_t> path_;
    std::uint64_t key_;
    std::array<std::uint64_t, 4> state_{};
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer; bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace resched
