#include "squeeze/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace squeeze {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u <= 0.0) u = uniform01();
  const double v = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u));
  const double angle = 2.0 * std::numbers::pi * v;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

cplx Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re, im};
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

CMatrix random_ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.complex_normal();
  }
  return g;
}

CVector random_unit_vector(Eigen::Index d, Rng& rng) {
  CVector v = random_ginibre(d, 1, rng).col(0);
  return v / v.norm();
}

CMatrix random_unitary(Eigen::Index d, Rng& rng) {
  const CMatrix g = random_ginibre(d, d, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0.0) q.col(i) *= r(i, i) / mag;
  }
  return q;
}

CMatrix random_hermitian(Eigen::Index d, Rng& rng) {
  return hermitian_part(random_ginibre(d, d, rng));
}

DensityMatrix random_density(Eigen::Index d, Rng& rng, Eigen::Index rank) {
  if (rank <= 0 || rank > d) rank = d;
  const CMatrix g = random_ginibre(d, rank, rng);
  CMatrix rho = hermitian_part(g * g.adjoint());
  return DensityMatrix(rho / rho.trace().real());
}

DensityMatrix random_pure_state(Eigen::Index d, Rng& rng) {
  return DensityMatrix::pure(random_unit_vector(d, rng));
}

Povm random_povm(Eigen::Index d, std::size_t m, Rng& rng, Eigen::Index element_rank) {
  if (element_rank <= 0 || element_rank > d) element_rank = d;
  std::vector<CMatrix> g;
  CMatrix total = CMatrix::Zero(d, d);
  for (std::size_t j = 0; j < m; ++j) {
    const CMatrix x = random_ginibre(d, element_rank, rng);
    g.push_back(hermitian_part(x * x.adjoint()));
    total += g.back();
  }
  const CMatrix w = op_inv_sqrt_on_support(total);
  std::vector<CMatrix> elements;
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& gj : g) {
    elements.push_back(hermitian_part(w * gj * w));
    sum += elements.back();
  }
  // Fold rounding residue into the last element so completeness is tight.
  elements.back() += CMatrix::Identity(d, d) - sum;
  elements.back() = hermitian_part(elements.back());
  return Povm(std::move(elements));
}

std::vector<double> random_probabilities(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    double u = 0.0;
    while (u <= 0.0) u = rng.uniform01();
    x = -std::log(u);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

Ensemble random_ensemble(Eigen::Index d, std::size_t n, Rng& rng, bool pure_states) {
  std::vector<DensityMatrix> states;
  for (std::size_t i = 0; i < n; ++i) {
    states.push_back(pure_states ? random_pure_state(d, rng) : random_density(d, rng));
  }
  return Ensemble(std::move(states), random_probabilities(n, rng));
}

}  // namespace squeeze
