#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

#include "svosim/common.hpp"

namespace svosim {

// 64-bit FNV-1a. Used for map/state/content hashing in replay and
// checkpoint files, where the hash must be stable across builds.
inline uint64_t fnv1a64(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* bytes = static_cast<const uint8_t*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x00000100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// Incremental FNV-1a accumulator for hashing composite state.
class Hasher {
 public:
  void bytes(const void* data, size_t size) { hash_ = fnv1a64(data, size, hash_); }

  template <typename T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    bytes(&v, sizeof v);
  }

  void u64(uint64_t v) { pod(v); }
  void i32(int32_t v) { pod(v); }
  void f64(double v) { pod(v); }

  uint64_t digest() const { return hash_; }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ull;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// PCG32 (pcg-random.org, XSH-RR variant). Hand-rolled so simulation
// streams are bit-stable regardless of standard library version.
class Rng {
 public:
  Rng() : Rng(0x853c49e6748fea9bull) {}

  explicit Rng(uint64_t seed, uint64_t stream = 0xda3e39cb94b95bdbull) { reseed(seed, stream); }

  void reseed(uint64_t seed, uint64_t stream = 0xda3e39cb94b95bdbull) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += splitmix64(seed);
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Unbiased integer in [0, bound).
  uint32_t bounded(uint32_t bound) {
    if (bound <= 1) return 0;
    uint32_t threshold = (-bound) % bound;
    for (;;) {
      uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  // Box-Muller; the spare variate is discarded to keep the generator
  // state the only carried state.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * mag * std::cos(2.0 * kPi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = bounded(static_cast<uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), order randomized (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
      const uint32_t j = i + bounded(static_cast<uint32_t>(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  uint64_t state() const { return state_; }
  uint64_t inc() const { return inc_; }

  void restore(uint64_t state, uint64_t inc) {
    state_ = state;
    inc_ = inc;
  }

  void hash_into(Hasher& h) const {
    h.u64(state_);
    h.u64(inc_);
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 0;
};

// Derives independent child seeds from a master seed; used to give each
// arena/round/purpose its own stream so parallel execution stays
// reproducible.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ull);
  h = splitmix64(h ^ splitmix64(a));
  h = splitmix64(h ^ splitmix64(b + 0x9e3779b97f4a7c15ull));
  h = splitmix64(h ^ splitmix64(c + 0x3c6ef372fe94f82bull));
  return h;
}

}  // namespace svosim
