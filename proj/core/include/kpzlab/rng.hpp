#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace kpzlab {

/// Identifies one reproducible random substream. Distinct (base_seed,
/// replica_index) pairs feed distinct seed sequences into the engine, so a
/// replica's draws never depend on which thread runs it or in what order.
struct SeedStream {
  std::uint64_t base_seed = 0;
  std::uint64_t replica_index = 0;

  [[nodiscard]] SeedStream with_replica(std::uint64_t r) const { return {base_seed, r}; }
  /// Derived stream for an independent purpose inside the same replica.
  [[nodiscard]] SeedStream fork(std::uint64_t tag) const;
};

class Rng {
 public:
  explicit Rng(const SeedStream& stream);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace kpzlab
