#include "vmsid/rng.hpp"

#include <cmath>
#include <numbers>

namespace vmsid {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream)
    : eng_(splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ stream)) {}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  double rad = std::sqrt(-2.0 * std::log(u1));
  double th = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(th);
  has_spare_ = true;
  return rad * std::cos(th);
}

double Rng::truncated_gaussian(double sigma, double bound) {
  if (bound <= 0.0) return 0.0;
  while (true) {
    double g = sigma * gaussian();
    if (std::abs(g) <= bound) return g;
  }
}

}  // namespace vmsid
