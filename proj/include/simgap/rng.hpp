#pragma once

#include <cstdint>
#include <vector>

namespace simgap {

std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** seeded through splitmix64. Substreams are derived by hashing
// (seed, hi, lo), so parallel generation is independent of scheduling and
// identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng substream(std::uint64_t seed, std::uint64_t hi, std::uint64_t lo = 0);

  std::uint64_t next_u64();
  double u01();  // [0, 1), 53-bit resolution
  double uniform(double a, double b);
  long uniform_int(long lo, long hi);  // inclusive bounds
  bool bernoulli(double p) { return u01() < p; }
  double normal(double mean = 0.0, double sd = 1.0);
  double gamma(double shape);  // unit scale
  std::vector<double> dirichlet(const std::vector<double>& alpha);
  std::size_t categorical(const std::vector<double>& probs);

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace simgap
