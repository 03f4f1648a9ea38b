#include "curveball/numerics/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "curveball/errors.hpp"

namespace curveball {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(splitmix64(seed)) {}

Rng Rng::derive(std::uint64_t index) const {
  Rng child(0);
  child.key_ = splitmix64(key_ ^ splitmix64(index ^ 0xD1B54A32D192ED03ULL));
  return child;
}

std::uint64_t Rng::next_u64() {
  // Two rounds so that nearby keys and counters decorrelate.
  return splitmix64(splitmix64(key_ + kGolden * counter_++) ^ key_);
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  if (!(lo <= hi)) {
    throw InvalidRange("uniform: lo > hi");
  }
  const double u = uniform01();
  if (lo == hi) return lo;
  const double x = lo + (hi - lo) * u;
  return x < hi ? x : std::nextafter(hi, lo);
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw InvalidRange("index: empty range");
  return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(out[i - 1], out[rng.index(i)]);
  }
  return out;
}

}  // namespace curveball
