#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "srkrp/error.hpp"

namespace srkrp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream split: mixing a salt (point index, trial index) into a
// parent seed yields an independent child seed, so concurrent tasks can seed
// their own streams without coordination.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) {
  return splitmix64(parent ^ splitmix64(salt + 0x632be59bd9b4e019ULL));
}

// Deterministic random stream. Never shared between concurrent tasks; each
// task derives its own via derive_seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  static RandomStream for_trial(std::uint64_t campaign_seed, std::uint64_t trial) {
    return RandomStream(derive_seed(campaign_seed, trial));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0,1). Exact zero is resampled.
  double uniform01() {
    for (;;) {
      double v = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
      if (v > 0.0) return v;
    }
  }

  double standard_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; mt19937_64 plus explicit math keeps the sequence identical
    // across standard library implementations.
    double u1 = uniform01();
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform on [0, bound). Rejection keeps the draw exactly uniform.
  int uniform_int(int bound) {
    if (bound < 1) throw ParameterError("uniform_int: bound must be >= 1");
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    for (;;) {
      std::uint64_t r = gen_();
      if (r < limit) return static_cast<int>(r % b);
    }
  }

  // Uniformly random k-subset of {0, ..., universe-1}, ascending.
  std::vector<int> sample_subset(int universe, int k) {
    if (universe < 0 || k < 0 || k > universe)
      throw ParameterError("sample_subset: cannot pick " + std::to_string(k) + " of " +
                           std::to_string(universe));
    std::vector<int> pool(universe);
    for (int i = 0; i < universe; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + uniform_int(universe - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace srkrp
