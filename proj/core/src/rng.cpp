#include "gvfl/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gvfl {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  // Decorrelate streams sharing a seed by folding the mixed stream id in.
  state_ = mix64(seed + 0x9e3779b97f4a7c15ULL) ^
           mix64(stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
}

SeededRng SeededRng::split(std::uint64_t stream) const {
  return SeededRng(mix64(seed_ ^ mix64(stream_ + 1)), stream);
}

std::uint64_t SeededRng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int SeededRng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  // Rejection sampling keeps the distribution exactly uniform.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % bound);
}

double SeededRng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  have_cached_normal_ = true;
  return r * std::cos(theta);
}

double SeededRng::laplace(double scale) {
  if (scale < 0.0) throw std::invalid_argument("laplace: negative scale");
  if (scale == 0.0) return 0.0;
  const double u = uniform() - 0.5;
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

}  // namespace gvfl
