// Per-path random streams for reproducible parallel Monte Carlo.
//
// Every path owns a stream keyed by (base_seed, path_index). The draws of a
// stream are a pure function of that pair, so results never depend on how
// paths are scheduled over threads.
//
// Algorithm: xoshiro256++ (Blackman & Vigna, https://prng.di.unimi.it). The
// 256-bit state of a stream is filled by SplitMix64 seeded with
// mix64(base_seed) ^ mix64(path_index + golden gamma). Uniforms use the top
// 53 bits of each output. Normals use the Marsaglia polar method with the
// second variate of each accepted pair cached for the next call.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "spinsim/geom3.hpp"

namespace spinsim {

inline constexpr std::string_view kRngAlgorithm =
    "xoshiro256++/splitmix64-seeded/marsaglia-polar/v1";

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}
  constexpr std::uint64_t operator()() {
    return mix64(state_ += 0x9E3779B97F4A7C15ull);
  }

 private:
  std::uint64_t state_;
};

class Xoshiro256pp {
 public:
  explicit constexpr Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm();
  }

  constexpr std::uint64_t operator()() {
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

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t path_index)
      : base_seed_(base_seed),
        path_index_(path_index),
        engine_(mix64(base_seed) ^ mix64(path_index + 0x9E3779B97F4A7C15ull)) {}

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t path_index() const { return path_index_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Brownian increment over a step of size dt: three N(0, dt) components.
  Vec3 increment(double sqrt_dt) {
    const double a = normal();
    const double b = normal();
    const double c = normal();
    return {sqrt_dt * a, sqrt_dt * b, sqrt_dt * c};
  }

 private:
  std::uint64_t base_seed_;
  std::uint64_t path_index_;
  Xoshiro256pp engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spinsim
