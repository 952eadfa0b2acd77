#pragma once

#include <cstdint>
#include <random>

namespace vmsid {

// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);

// mt19937_64 keyed by (seed, trial, stream). Each key gets its own
// engine so paired campaigns can share noise streams per trial.
// Doubles are built from the top 53 bits and normals by Box-Muller, so
// sequences do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t trial = 0, std::uint64_t stream = 0);

  std::uint64_t next() { return eng_(); }
  double uniform();                       // [0, 1)
  double uniform(double a, double b);     // [a, b)
  double gaussian();                      // N(0, 1)
  double truncated_gaussian(double sigma, double bound);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

namespace streams {
inline constexpr std::uint64_t process_noise = 1;
inline constexpr std::uint64_t output_noise = 2;
inline constexpr std::uint64_t input = 3;
inline constexpr std::uint64_t model = 4;
}  // namespace streams

}  // namespace vmsid
