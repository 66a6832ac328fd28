#include "resched/random_stream.hpp"

#include <cmath>

namespace resched {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t derive_key(std::uint64_t key, std::uint64_t index) noexcept {
    return mix64(key ^ mix64(index + kGolden));
}

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    : RandomStream(seed, std::vector<std::uint64_t>(path)) {}

RandomStream::RandomStream(std::uint64_t seed, const std::vector<std::uint64_t>& path)
    : seed_(seed), path_(path), key_(mix64(seed + kGolden)) {
    for (std::uint64_t p : path_) key_ = derive_key(key_, p);
    init_state();
}

RandomStream::RandomStream(std::uint64_t seed, std::vector<std::uint64_t> path, std::uint64_t key)
    : seed_(seed), path_(std::move(path)), key_(key) {
    init_state();
}

RandomStream RandomStream::child(std::uint64_t index) const {
    std::vector<std::uint64_t> path = path_;
    path.push_back(index);
    return RandomStream(seed_, std::move(path), derive_key(key_, index));
}

void RandomStream::init_state() noexcept {
    // SplitMix64 sequence from the key fills the xoshiro state; never all-zero.
    std::uint64_t x = key_;
    for (auto& s : state_) {
        x += kGolden;
        s = mix64(x);
    }
}

std::uint64_t RandomStream::next() noexcept {
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

double RandomStream::uniform() noexcept {
    // (k + 0.5) / 2^53 never hits 0 or 1.
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

}  // namespace resched
