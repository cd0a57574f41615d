#include "kpzlab/rng.hpp"

namespace kpzlab {
namespace {

std::mt19937_64 seeded_engine(const SeedStream& s) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(s.base_seed), hi(s.base_seed), lo(s.replica_index), hi(s.replica_index),
                    0x6b707a6cu};
  return std::mt19937_64(seq);
}

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

SeedStream SeedStream::fork(std::uint64_t tag) const {
  return {mix(base_seed ^ mix(tag + 0x51ed270b)), replica_index};
}

Rng::Rng(const SeedStream& stream) : engine_(seeded_engine(stream)) {}

}  // namespace kpzlab
