#pragma once

#include <cmath>
#include <cstdint>

namespace rdme {

// xoshiro256** with splitmix64 seeding. Self-contained so that frozen seeds
// reproduce bit-identical streams across platforms and standard libraries
// (std:: distributions are implementation-defined, which would break golden
// trajectories).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) word = splitmix64(x);
    }

    // Independent stream for one trajectory of an ensemble.
    static Rng for_trajectory(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t x = master_seed;
        std::uint64_t a = splitmix64(x);
        x ^= 0x9e3779b97f4a7c15ULL * (index + 1);
        return Rng(a ^ splitmix64(x));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on the open interval (0,1): never 0, never 1, so logs are safe.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Exponential with rate lambda; +inf when lambda is zero.
    double exponential(double rate) {
        if (rate <= 0.0) return INFINITY;
        return -std::log(uniform()) / rate;
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

  private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace rdme
