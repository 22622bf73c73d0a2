#include "squeeze/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace squeeze {

namespace {

void require_square(const CMatrix& m, const char* where) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(where) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void require_hermitian(const CMatrix& m, const char* where) {
  require_square(m, where);
  if (!is_hermitian(m)) throw NumericError(std::string(where) + ": operator is not Hermitian");
}

// Ascending eigenpairs straight from the solver.
Eigen::SelfAdjointEigenSolver<CMatrix> solve(const CMatrix& h, bool with_vectors) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(
      hermitian_part(h), with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("Hermitian eigensolver did not converge");
  return solver;
}

// Replaces columns [start, start + size) by the Gram-Schmidt image of the
// projected standard basis vectors, in index order.
void canonicalize_cluster(CMatrix& vectors, Eigen::Index start, Eigen::Index size) {
  const Eigen::Index n = vectors.rows();
  const CMatrix q = vectors.middleCols(start, size);
  const CMatrix projector = q * q.adjoint();
  CMatrix basis(n, size);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < n && found < size; ++i) {
    CVector v = projector.col(i);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index f = 0; f < found; ++f) v -= basis.col(f) * basis.col(f).dot(v);
    }
    const double norm = v.norm();
    if (norm < 1e-4) continue;
    basis.col(found++) = v / norm;
  }
  if (found < size) throw NumericError("eig_hermitian: could not canonicalize a degenerate cluster");
  vectors.middleCols(start, size) = basis;
}

}  // namespace

bool is_hermitian(const CMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym == 0.0) return true;
  return asym <= rel_tol * m.norm();
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

Spectrum eig_hermitian(const CMatrix& h) {
  require_hermitian(h, "eig_hermitian");
  const auto solver = solve(h, true);
  const Eigen::Index n = h.rows();
  Spectrum out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = solver.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && out.values[end - 1] - out.values[end] < tol::degenerate_gap) ++end;
    canonicalize_cluster(out.vectors, start, end - start);
    if (end - start > 1) {
      const double mean = out.values.segment(start, end - start).mean();
      out.values.segment(start, end - start).setConstant(mean);
    }
    start = end;
  }
  return out;
}

RVector eigenvalues_hermitian(const CMatrix& h) {
  require_square(h, "eigenvalues_hermitian");
  const RVector ascending = solve(h, false).eigenvalues();
  return ascending.reverse();
}

double min_eigenvalue(const CMatrix& h) { return eigenvalues_hermitian(h).minCoeff(); }
double max_eigenvalue(const CMatrix& h) { return eigenvalues_hermitian(h).maxCoeff(); }

CMatrix op_sqrt(const CMatrix& h) {
  require_hermitian(h, "op_sqrt");
  const auto solver = solve(h, true);
  RVector values = solver.eigenvalues();
  if (values.minCoeff() < -tol::psd_error) {
    throw NumericError("op_sqrt: operator is not positive semidefinite (eigenvalue " +
                       std::to_string(values.minCoeff()) + ")");
  }
  values = values.cwiseMax(0.0).cwiseSqrt();
  const CMatrix& v = solver.eigenvectors();
  return hermitian_part(v * values.cast<cplx>().asDiagonal() * v.adjoint());
}

CMatrix op_inv_sqrt_on_support(const CMatrix& h, std::optional<double> rank_tol) {
  require_hermitian(h, "op_inv_sqrt_on_support");
  const auto solver = solve(h, true);
  const RVector& values = solver.eigenvalues();
  const double threshold = rank_tol.value_or(tol::rank_rel * values.cwiseAbs().maxCoeff());
  RVector inv(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    inv[i] = values[i] > threshold ? 1.0 / std::sqrt(values[i]) : 0.0;
  }
  const CMatrix& v = solver.eigenvectors();
  return hermitian_part(v * inv.cast<cplx>().asDiagonal() * v.adjoint());
}

CMatrix spectral_projector(const CMatrix& h, double threshold) {
  require_square(h, "spectral_projector");
  const auto solver = solve(h, true);
  const CMatrix& v = solver.eigenvectors();
  CMatrix p = CMatrix::Zero(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    if (solver.eigenvalues()[i] >= threshold) p += v.col(i) * v.col(i).adjoint();
  }
  return hermitian_part(p);
}

double positive_part_trace(const CMatrix& h) {
  return eigenvalues_hermitian(h).cwiseMax(0.0).sum();
}

CMatrix tensor_product(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix tensor_power(const CMatrix& a, int l) {
  if (l < 0) throw DimensionError("tensor_power: negative exponent");
  CMatrix out = CMatrix::Identity(1, 1);
  for (int k = 0; k < l; ++k) out = tensor_product(out, a);
  return out;
}

CMatrix tensor_product(const std::vector<CMatrix>& factors) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (const auto& f : factors) out = tensor_product(out, f);
  return out;
}

CVector tensor_product(const std::vector<CVector>& factors) {
  CVector out = CVector::Ones(1);
  for (const auto& f : factors) {
    CVector next(out.size() * f.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * f.size(), f.size()) = out[i] * f;
    out = std::move(next);
  }
  return out;
}

CMatrix apply_tensor_power(const CMatrix& f, int l, const CMatrix& x) {
  require_square(f, "apply_tensor_power");
  const Eigen::Index d = f.rows();
  Eigen::Index total = 1;
  for (int k = 0; k < l; ++k) total *= d;
  if (x.rows() != total) throw DimensionError("apply_tensor_power: row count is not d^l");

  const CMatrix ft = f.transpose();
  CMatrix current = x;
  CMatrix next(x.rows(), x.cols());
  Eigen::Index right = total;
  for (int p = 0; p < l; ++p) {
    right /= d;
    const Eigen::Index left = total / (right * d);
    for (Eigen::Index col = 0; col < x.cols(); ++col) {
      for (Eigen::Index a = 0; a < left; ++a) {
        const Eigen::Index offset = col * total + a * d * right;
        // Column-major slice: element (b, t) sits at t * right + b.
        Eigen::Map<const CMatrix> in(current.data() + offset, right, d);
        Eigen::Map<CMatrix> out(next.data() + offset, right, d);
        out.noalias() = in * ft;
      }
    }
    std::swap(current, next);
  }
  return current;
}

CMatrix conjugate_by_tensor_power(const CMatrix& f, int l, const CMatrix& x) {
  const CMatrix left = apply_tensor_power(f, l, x);
  const CMatrix both = apply_tensor_power(f, l, left.adjoint());
  return both.adjoint();
}

CMatrix partial_trace(const CMatrix& c, const std::vector<int>& factor_dims,
                      const std::vector<int>& traced) {
  require_square(c, "partial_trace");
  const auto n = static_cast<int>(factor_dims.size());
  std::vector<bool> is_traced(n, false);
  for (int p : traced) {
    if (p < 0 || p >= n || is_traced[p]) throw DimensionError("partial_trace: invalid traced factor list");
    is_traced[p] = true;
  }
  Eigen::Index total = 1;
  Eigen::Index kept_dim = 1;
  for (int p = 0; p < n; ++p) {
    if (factor_dims[p] <= 0) throw DimensionError("partial_trace: factor dimensions must be positive");
    total *= factor_dims[p];
    if (!is_traced[p]) kept_dim *= factor_dims[p];
  }
  if (total != c.rows()) {
    throw DimensionError("partial_trace: product of factor dimensions (" + std::to_string(total) +
                         ") does not match operator dimension (" + std::to_string(c.rows()) + ")");
  }
  const Eigen::Index traced_dim = total / kept_dim;

  // table[t * kept_dim + k] = composite index with traced part t, kept part k.
  std::vector<Eigen::Index> table(static_cast<std::size_t>(total));
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    Eigen::Index rest = idx;
    Eigen::Index kept = 0, kept_stride = 1, tr = 0, tr_stride = 1;
    for (int p = n - 1; p >= 0; --p) {
      const Eigen::Index digit = rest % factor_dims[p];
      rest /= factor_dims[p];
      if (is_traced[p]) {
        tr += digit * tr_stride;
        tr_stride *= factor_dims[p];
      } else {
        kept += digit * kept_stride;
        kept_stride *= factor_dims[p];
      }
    }
    table[static_cast<std::size_t>(tr * kept_dim + kept)] = idx;
  }

  CMatrix out = CMatrix::Zero(kept_dim, kept_dim);
  for (Eigen::Index t = 0; t < traced_dim; ++t) {
    const Eigen::Index* row = table.data() + t * kept_dim;
    for (Eigen::Index b = 0; b < kept_dim; ++b) {
      for (Eigen::Index a = 0; a < kept_dim; ++a) out(a, b) += c(row[a], row[b]);
    }
  }
  return out;
}

CMatrix partial_trace_keep(const CMatrix& c, const std::vector<int>& factor_dims,
                           const std::vector<int>& keep) {
  std::vector<int> traced;
  for (int p = 0; p < static_cast<int>(factor_dims.size()); ++p) {
    if (std::find(keep.begin(), keep.end(), p) == keep.end()) traced.push_back(p);
  }
  return partial_trace(c, factor_dims, traced);
}

Norms norms(const CMatrix& h) {
  require_square(h, "norms");
  Norms out;
  out.trace = h.trace();
  if (is_hermitian(h)) {
    const RVector values = eigenvalues_hermitian(h).cwiseAbs();
    out.operator_norm = values.maxCoeff();
    out.trace_norm = values.sum();
  } else {
    Eigen::BDCSVD<CMatrix> svd(h);
    out.operator_norm = svd.singularValues().maxCoeff();
    out.trace_norm = svd.singularValues().sum();
  }
  return out;
}

double operator_norm(const CMatrix& h) { return norms(h).operator_norm; }
double trace_norm(const CMatrix& h) { return norms(h).trace_norm; }

bool loewner_leq(const CMatrix& a, const CMatrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("loewner_leq: dimension mismatch");
  return min_eigenvalue(b - a) >= -tol;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: dimension mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace squeeze
