#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

namespace npnf {

// xoshiro256++ with splitmix64 seeding. Small serializable state so
// checkpoints can resume bit-identically.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, bound)
  uint64_t uniform_int(uint64_t bound) {
    return uint64_t((__uint128_t(next_u64()) * bound) >> 64);
  }

  // first n entries of a seeded permutation of 0..count-1 (Fisher-Yates)
  std::vector<uint32_t> sample_without_replacement(uint32_t count, uint32_t n) {
    std::vector<uint32_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0u);
    if (n > count) n = count;
    for (uint32_t i = 0; i < n; ++i) {
      uint32_t j = i + uint32_t(uniform_int(count - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<uint64_t, 4> s_{};
};

}  // namespace npnf
