#pragma once

// Counter-based random numbers.
//
// Block function: Philox4x32 with 10 rounds (Salmon et al., SC'11), the same
// generator as Random123 / cuRAND / numpy's Philox. A stream is identified by
// a 64-bit key; the key is a SplitMix64 fold of the master seed and every
// (label, index) pair on the stream path. Output block n of a stream is
// Philox(key, counter = n), so draws never depend on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace reprolab {

inline constexpr const char* kRngAlgorithm = "philox4x32-10/splitmix64-path";

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fold_path_step(std::uint64_t key, const std::string& label, std::int64_t index) {
  key = splitmix64(key ^ fnv1a(label));
  return splitmix64(key ^ static_cast<std::uint64_t>(index));
}

}  // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

struct PathEntry {
  std::string label;
  std::int64_t index;
  bool operator==(const PathEntry&) const = default;
};

// Immutable description of a stream. Derivation is pure.
class RngState {
 public:
  explicit RngState(std::uint64_t master_seed = 0) : seed_(master_seed), key_(detail::splitmix64(master_seed)) {}

  RngState(std::uint64_t master_seed, const std::vector<PathEntry>& path) : RngState(master_seed) {
    for (const auto& p : path) *this = derive(p.label, p.index);
  }

  RngState derive(const std::string& label, std::int64_t index) const {
    RngState child = *this;
    child.path_.push_back({label, index});
    child.key_ = detail::fold_path_step(key_, label, index);
    return child;
  }

  std::uint64_t master_seed() const { return seed_; }
  const std::vector<PathEntry>& path() const { return path_; }
  std::uint64_t key() const { return key_; }
  static const char* algorithm_id() { return kRngAlgorithm; }

  std::string path_string() const {
    std::string s = std::to_string(seed_);
    for (const auto& p : path_) s += "/" + p.label + ":" + std::to_string(p.index);
    return s;
  }

  bool operator==(const RngState& o) const { return seed_ == o.seed_ && path_ == o.path_; }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::vector<PathEntry> path_;
};

// Sequential reader over one stream; owns its block counter.
class RngStream {
 public:
  explicit RngStream(const RngState& s) : key_{std::uint32_t(s.key()), std::uint32_t(s.key() >> 32)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe to take the log of.
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Box-Muller with the sine half discarded, so one normal costs exactly two uniforms.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double rademacher() { return (next_u32() & 1u) ? 1.0 : -1.0; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do v = next_u64();
    while (v >= limit);
    return v % n;
  }

  std::uint64_t blocks_used() const { return counter_; }

 private:
  void refill() {
    block_ = philox4x32_10({std::uint32_t(counter_), std::uint32_t(counter_ >> 32), 0u, 0u}, key_);
    ++counter_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  PhiloxBlock block_{};
  int pos_ = 4;
};

}  // namespace reprolab
