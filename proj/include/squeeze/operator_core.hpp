#pragma once

// Dense complex-matrix substrate: Hermitian eigendecomposition with a
// canonical eigenbasis, matrix functions, Kronecker products, partial traces,
// norms and Löwner-order tests.

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace squeeze {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// Thrown for shape mismatches (non-square, wrong factor dimensions, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an operator violates a numerical precondition (non-Hermitian,
// non-PSD, degenerate weights, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double hermitian_rel = 1e-12;
inline constexpr double psd_clamp = 1e-10;
inline constexpr double psd_error = 1e-8;
inline constexpr double degenerate_gap = 1e-10;
inline constexpr double rank_rel = 1e-12;
}  // namespace tol

// Eigenvalues sorted descending; eigenvectors are the matching columns.
struct Spectrum {
  RVector values;
  CMatrix vectors;

  Eigen::Index dim() const { return values.size(); }
};

// Max entrywise |M - M^†| <= rel_tol * ||M||_F.
bool is_hermitian(const CMatrix& m, double rel_tol = tol::hermitian_rel);
CMatrix hermitian_part(const CMatrix& m);

// Within every degenerate cluster (consecutive gap < 1e-10) the eigenvectors
// are produced by Gram-Schmidt on the cluster-projected standard basis
// vectors, taken in index order. Non-degenerate eigenvectors follow the same
// rule, so the first component with non-negligible weight is real positive.
Spectrum eig_hermitian(const CMatrix& h);

// Eigenvalues only (descending); no canonical basis work.
RVector eigenvalues_hermitian(const CMatrix& h);

double min_eigenvalue(const CMatrix& h);
double max_eigenvalue(const CMatrix& h);

CMatrix op_sqrt(const CMatrix& h);

// Pseudo-inverse square root: eigenvalues above rank_tol (default
// 1e-12 * ||H||) are mapped to 1/sqrt, the kernel to 0.
CMatrix op_inv_sqrt_on_support(const CMatrix& h,
                               std::optional<double> rank_tol = std::nullopt);

// Projector onto the span of eigenvectors with eigenvalue >= threshold.
// Basis independent, so the raw solver output is used.
CMatrix spectral_projector(const CMatrix& h, double threshold);

// Trace of the positive part of a Hermitian operator.
double positive_part_trace(const CMatrix& h);

// Kronecker product; the first factor is the most significant index.
CMatrix tensor_product(const CMatrix& a, const CMatrix& b);
CMatrix tensor_power(const CMatrix& a, int l);
CMatrix tensor_product(const std::vector<CMatrix>& factors);
CVector tensor_product(const std::vector<CVector>& factors);

// (F^{⊗l}) X for square F of size d; X has d^l rows. Applied factor by
// factor, never materialising F^{⊗l}.
CMatrix apply_tensor_power(const CMatrix& f, int l, const CMatrix& x);

// (F^{⊗l}) X (F^{⊗l})^†.
CMatrix conjugate_by_tensor_power(const CMatrix& f, int l, const CMatrix& x);

// Traces out the factors listed in `traced` (0-based positions into
// factor_dims). Kept factors retain their relative order.
CMatrix partial_trace(const CMatrix& c, const std::vector<int>& factor_dims,
                      const std::vector<int>& traced);

// Convenience: trace out every position except `keep`.
CMatrix partial_trace_keep(const CMatrix& c, const std::vector<int>& factor_dims,
                           const std::vector<int>& keep);

struct Norms {
  double operator_norm = 0.0;
  double trace_norm = 0.0;
  cplx trace{0.0, 0.0};
};

// Hermitian input uses the spectrum; anything else falls back to singular
// values.
Norms norms(const CMatrix& h);
double operator_norm(const CMatrix& h);
double trace_norm(const CMatrix& h);

// True iff min eig(B - A) >= -tol.
bool loewner_leq(const CMatrix& a, const CMatrix& b, double tol);

// Largest entrywise |A - B|.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

}  // namespace squeeze
