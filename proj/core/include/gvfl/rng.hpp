#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace gvfl {

/// Deterministic splittable random stream. The generator is splitmix64 over a
/// state derived from (seed, stream), so equal (seed, stream) pairs yield the
/// same sequence on every platform and independent streams can be carved off
/// a single experiment seed without coordinating counters.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Derives an independent generator; child streams never collide with the
  /// parent's own sequence.
  SeededRng split(std::uint64_t stream) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  /// Standard normal via Box-Muller (cached pair).
  double normal();

  /// Laplace(0, scale). scale == 0 returns exactly 0.
  double laplace(double scale);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<std::size_t>(i)],
                v[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace gvfl
