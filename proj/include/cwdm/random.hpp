#ifndef CWDM_RANDOM_HPP
#define CWDM_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace cwdm {

/// An independent pseudorandom stream. Every stochastic operation takes one
/// of these explicitly; streams are derived from the run seed plus a label,
/// so adding a consumer never perturbs the draws of another.
class RandomStream {
public:
    RandomStream(std::uint64_t run_seed, std::string_view label, std::uint64_t index = 0);

    std::uint64_t next_u64() { return engine_(); }
    double gaussian() { return normal_(engine_); }

    std::uint64_t stream_seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

} // namespace cwdm

#endif // CWDM_RANDOM_HPP
