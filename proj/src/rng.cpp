#include "ridgeless/rng.hpp"

namespace ridgeless {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

std::uint64_t repetition_seed(std::uint64_t base_seed, std::uint64_t rep) {
  return splitmix64(base_seed ^ rep);
}

Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

Matrix standard_normal(Index rows, Index cols, Engine& engine) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(engine);
  }
  return out;
}

Vector standard_normal(Index size, Engine& engine) {
  std::normal_distribution<double> normal;
  Vector out(size);
  for (Index i = 0; i < size; ++i) out(i) = normal(engine);
  return out;
}

}  // namespace ridgeless
