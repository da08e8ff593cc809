#pragma once

// Self-contained random number generation. Everything downstream (sampling,
// churn noise, synthetic verifier noise, bench generation) must be bitwise
// reproducible from a seed, across platforms and standard libraries, so the
// generator and the normal transform are pinned here instead of relying on
// std::normal_distribution, whose output is implementation-defined.
//
// Core generator: xoshiro256++ seeded through splitmix64. Normal deviates via
// Box-Muller on fixed 53-bit uniforms; each normal() consumes exactly two
// 64-bit draws, which keeps stream consumption easy to replay in tests.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "common.hpp"

namespace noisesearch {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Order-sensitive combine used to derive independent sub-streams from a root
// seed plus a path of labels (prompt hash, purpose tag, trajectory index...).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = mix_seed(seed, 0x6e6f697365ULL);
        for (std::uint64_t p : path) h = mix_seed(h, p);
        return Rng(h);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1], safe as a log() argument.
    double uniform_open01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal, Box-Muller cosine branch. Two u64 draws per call.
    double normal() {
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Uniform integer in [0, n). Plain modulo; the bias at 64-bit range is
    // irrelevant at bench scale and keeps the draw count fixed at one.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    Vec normal_vec(std::size_t dims) {
        Vec v(dims);
        for (auto& x : v) x = normal();
        return v;
    }

  private:
    static constexpr double kPi = 3.14159265358979323846;
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_;
};

// Purpose tags for stream derivation. Generator noise is keyed by
// (seed, prompt, trajectory) and deliberately not by strategy, so strategies
// compared at a fixed seed see common random numbers where their consumption
// patterns align. Verifier noise lives on its own stream for the same reason.
namespace stream {
constexpr std::uint64_t kGenerator = fnv1a64("generator");
constexpr std::uint64_t kVerifier = fnv1a64("verifier");
constexpr std::uint64_t kBench = fnv1a64("bench");
constexpr std::uint64_t kCalibration = fnv1a64("calibration");
}  // namespace stream

inline Rng make_generator_rng(std::uint64_t seed, const std::string& prompt_id,
                              std::uint64_t trajectory) {
    return Rng::derive(seed, {fnv1a64(prompt_id), stream::kGenerator, trajectory});
}

inline Rng make_verifier_rng(std::uint64_t seed, const std::string& prompt_id,
                             std::uint64_t seed_stream) {
    return Rng::derive(seed, {fnv1a64(prompt_id), stream::kVerifier, seed_stream});
}

}  // namespace noisesearch
