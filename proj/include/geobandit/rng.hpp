#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "geobandit/common.hpp"

namespace geobandit {

// Counter-based generator (Philox4x32-10).  A stream is identified by a
// 128-bit key derived from (campaign seed, method id, seed index, tag); the
// output at a given counter value depends on nothing else, so adding methods
// or running cells in any order never perturbs existing streams.  All
// variate transforms are implemented here rather than taken from
// <random>, which keeps the byte streams identical across standard
// libraries.
class Rng {
 public:
  Rng() : Rng(0, "", 0, "") {}

  Rng(std::uint64_t campaign_seed, std::string_view method_id,
      std::uint64_t seed_index, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over all fields
    auto mix_u64 = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffull;
        h *= 0x100000001b3ull;
      }
    };
    auto mix_str = [&h](std::string_view s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
      }
      h ^= 0xff;  // field separator
      h *= 0x100000001b3ull;
    };
    mix_u64(campaign_seed);
    mix_str(method_id);
    mix_u64(seed_index);
    mix_str(tag);
    const std::uint64_t k0 = splitmix(h);
    const std::uint64_t k1 = splitmix(h);
    key_[0] = static_cast<std::uint32_t>(k0);
    key_[1] = static_cast<std::uint32_t>(k0 >> 32);
    ctr_[0] = ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(k1);
    ctr_[3] = static_cast<std::uint32_t>(k1 >> 32);
    buf_pos_ = 4;
    have_cached_normal_ = false;
  }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) {
      philox_block();
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n must be positive.  Rejection-free modulo of
  // a 64-bit draw; bias is < 2^-32 for the small n used here.
  std::int64_t uniform_int(std::int64_t n) {
    if (n <= 0) throw ContractError("uniform_int: n must be positive");
    return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller; second variate cached.
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
  }

  // One raw block; exposed so the round function can be checked against the
  // published reference vectors.
  static void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                            std::uint32_t out[4]) {
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void philox_block() {
    philox4x32_10(ctr_, key_, buf_);
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
  }

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t buf_[4];
  int buf_pos_;
  double cached_normal_ = 0.0;
  bool have_cached_normal_;
};

}  // namespace geobandit
