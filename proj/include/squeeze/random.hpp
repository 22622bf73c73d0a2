#pragma once

// Seeded random source and generators for random states, POVMs and
// ensembles. Floating-point draws are built from raw 64-bit engine output so
// sequences do not depend on the standard library's distribution code.

#include <cstdint>
#include <random>

#include "squeeze/quantum.hpp"

namespace squeeze {

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream seed for (base, stream); used for retries and trials.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  // Standard normal via Box-Muller.
  double normal();
  cplx complex_normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

CMatrix random_ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);
CVector random_unit_vector(Eigen::Index d, Rng& rng);
CMatrix random_unitary(Eigen::Index d, Rng& rng);
CMatrix random_hermitian(Eigen::Index d, Rng& rng);

// Induced-measure mixed state of the given rank (rank = d gives full rank).
DensityMatrix random_density(Eigen::Index d, Rng& rng, Eigen::Index rank = -1);
DensityMatrix random_pure_state(Eigen::Index d, Rng& rng);

// a_j = S^{-1/2} G_j S^{-1/2} with G_j random PSD of the given rank.
Povm random_povm(Eigen::Index d, std::size_t m, Rng& rng, Eigen::Index element_rank = -1);

std::vector<double> random_probabilities(std::size_t n, Rng& rng);
Ensemble random_ensemble(Eigen::Index d, std::size_t n, Rng& rng, bool pure_states);

}  // namespace squeeze
