#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace seisfrag {

/// Named random streams; every consumer of randomness derives its seed from
/// (master seed, stream, index...) so results never depend on call order.
enum class Stream : std::uint64_t {
  pool = 1,
  validation_points = 2,
  replication = 3,
  subsample = 4,
  fit = 5,
  surrogate = 6,
  ccdf = 7,
  surface = 8,
  surface_reference = 9,
  classical = 10,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Seeded stream: Mersenne twister engine with portable (Boost) variate generators.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  boost::random::uniform_01<double> uniform_;
};

}  // namespace seisfrag
