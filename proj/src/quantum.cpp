#include "squeeze/quantum.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace squeeze {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

CMatrix checked_hermitian(const CMatrix& op, const char* what) {
  if (op.rows() != op.cols() || op.rows() == 0) {
    throw ValidationError("shape", std::string(what) + " must be a non-empty square matrix");
  }
  if (!is_hermitian(op)) throw ValidationError("hermitian", std::string(what) + " is not Hermitian");
  return hermitian_part(op);
}

void check_psd(const CMatrix& op, double tol, const std::string& what) {
  const double lo = min_eigenvalue(op);
  if (lo < -tol) throw ValidationError("psd", what + " has negative eigenvalue " + fmt(lo));
}

std::vector<CMatrix> checked_elements(std::vector<CMatrix> elements, const char* family) {
  if (elements.empty()) throw ValidationError("shape", std::string(family) + " has no elements");
  const Eigen::Index d = elements.front().rows();
  for (std::size_t j = 0; j < elements.size(); ++j) {
    const std::string name = std::string(family) + " element " + std::to_string(j);
    if (elements[j].rows() != d || elements[j].cols() != d) {
      throw ValidationError("shape", name + " has inconsistent dimension");
    }
    elements[j] = checked_hermitian(elements[j], name.c_str());
    check_psd(elements[j], tol::state_psd, name);
  }
  return elements;
}

CMatrix element_sum(const std::vector<CMatrix>& elements) {
  CMatrix sum = CMatrix::Zero(elements.front().rows(), elements.front().cols());
  for (const auto& e : elements) sum += e;
  return sum;
}

Povm induced_povm(const std::vector<std::vector<CMatrix>>& ops) {
  if (ops.empty()) throw ValidationError("kraus", "instrument has no outcomes");
  std::vector<CMatrix> elements;
  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (ops[j].empty()) throw ValidationError("kraus", "outcome " + std::to_string(j) + " has no Kraus operators");
    const Eigen::Index in_dim = ops[j].front().cols();
    CMatrix a = CMatrix::Zero(in_dim, in_dim);
    for (const auto& v : ops[j]) {
      if (v.cols() != in_dim) throw ValidationError("kraus", "Kraus operators disagree on input dimension");
      a += v.adjoint() * v;
    }
    elements.push_back(hermitian_part(a));
  }
  return Povm(std::move(elements));
}

}  // namespace

ValidationError::ValidationError(std::string kind, const std::string& message)
    : std::invalid_argument(kind + ": " + message), kind_(std::move(kind)) {}

DensityMatrix::DensityMatrix(const CMatrix& op) : op_(checked_hermitian(op, "density matrix")) {
  check_psd(op_, tol::state_psd, "density matrix");
  const double tr = op_.trace().real();
  if (std::abs(tr - 1.0) > tol::state_trace) {
    throw ValidationError("trace", "density matrix has trace " + fmt(tr));
  }
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  const double n = psi.norm();
  if (n == 0.0) throw ValidationError("trace", "zero state vector");
  const CVector u = psi / n;
  return DensityMatrix(u * u.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index d) {
  return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
}

Povm::Povm(std::vector<CMatrix> elements) : elements_(checked_elements(std::move(elements), "POVM")) {
  const CMatrix sum = element_sum(elements_);
  const double gap = operator_norm(sum - CMatrix::Identity(sum.rows(), sum.cols()));
  if (gap > tol::completeness) {
    throw ValidationError("completeness", "POVM elements sum to I only within " + fmt(gap));
  }
}

Povm Povm::trivial(Eigen::Index d) { return Povm({CMatrix::Identity(d, d)}); }

Povm Povm::computational(Eigen::Index d) {
  std::vector<CMatrix> elements;
  for (Eigen::Index t = 0; t < d; ++t) {
    CMatrix e = CMatrix::Zero(d, d);
    e(t, t) = 1.0;
    elements.push_back(e);
  }
  return Povm(std::move(elements));
}

SubPovm::SubPovm(std::vector<CMatrix> elements)
    : elements_(checked_elements(std::move(elements), "sub-POVM")) {
  const CMatrix sum = element_sum(elements_);
  if (!loewner_leq(sum, CMatrix::Identity(sum.rows(), sum.cols()), tol::completeness)) {
    throw ValidationError("subnormalization", "sub-POVM elements sum beyond I");
  }
}

Ensemble::Ensemble(std::vector<DensityMatrix> states, std::vector<double> probs)
    : states_(std::move(states)), probs_(std::move(probs)) {
  if (states_.empty()) throw ValidationError("shape", "ensemble has no states");
  if (states_.size() != probs_.size()) throw ValidationError("shape", "ensemble states and probabilities differ in length");
  for (const auto& s : states_) {
    if (s.dim() != states_.front().dim()) throw ValidationError("shape", "ensemble states differ in dimension");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0)) {
      throw ValidationError("probability", "probability " + std::to_string(i) + " is negative (" + fmt(probs_[i]) + ")");
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > tol::probability_sum) {
    throw ValidationError("probability", "probabilities sum to " + fmt(total));
  }
}

FidelityMatrix::FidelityMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) throw ValidationError("shape", "fidelity matrix is empty");
  if (entries_.cwiseAbs().maxCoeff() > 1.0) throw ValidationError("fidelity", "fidelity entries must satisfy |F_ij| <= 1");
}

KrausInstrument::KrausInstrument(std::vector<std::vector<CMatrix>> ops)
    : ops_(std::move(ops)), povm_(induced_povm(ops_)) {}

KrausInstrument KrausInstrument::square_root(const Povm& a, const std::vector<CMatrix>& unitaries) {
  std::vector<std::vector<CMatrix>> ops;
  for (std::size_t j = 0; j < a.size(); ++j) {
    CMatrix v = op_sqrt(a[j]);
    if (!unitaries.empty()) v = unitaries.at(j) * v;
    ops.push_back({v});
  }
  return KrausInstrument(std::move(ops));
}

double shannon_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

double shannon_entropy(const RVector& p) {
  return shannon_entropy(std::vector<double>(p.data(), p.data() + p.size()));
}

double spectral_entropy(const CMatrix& psd) {
  RVector values = eigenvalues_hermitian(psd).cwiseMax(0.0);
  const double total = values.sum();
  if (total <= 0.0) return 0.0;
  return shannon_entropy(RVector(values / total));
}

double von_neumann_entropy(const DensityMatrix& rho) { return spectral_entropy(rho.op()); }

DensityMatrix ensemble_average(const Ensemble& e) {
  CMatrix avg = CMatrix::Zero(e.dim(), e.dim());
  for (std::size_t i = 0; i < e.size(); ++i) avg += e.probs()[i] * e.states()[i].op();
  return DensityMatrix(avg);
}

CMatrix Support::restrict(const CMatrix& op) const {
  if (!restricted) return op;
  return hermitian_part(isometry.adjoint() * op * isometry);
}

Support support_of(const CMatrix& rho, std::optional<double> rank_tol) {
  const Spectrum sp = eig_hermitian(rho);
  const double threshold = rank_tol.value_or(tol::rank_rel * sp.values.cwiseAbs().maxCoeff());
  Eigen::Index rank = 0;
  while (rank < sp.dim() && sp.values[rank] > threshold) ++rank;
  Support s;
  s.full_dim = rho.rows();
  if (rank == rho.rows()) {
    s.isometry = CMatrix::Identity(rho.rows(), rho.rows());
    s.restricted = false;
  } else {
    if (rank == 0) throw NumericError("support_of: operator has empty support");
    s.isometry = sp.vectors.leftCols(rank);
    s.restricted = true;
  }
  return s;
}

Ensemble CanonicalEnsemble::ensemble() const { return Ensemble(states, lambda); }

CanonicalEnsemble canonical_ensemble(const DensityMatrix& rho, const Povm& a, double weight_tol) {
  if (a.dim() != rho.dim()) throw DimensionError("canonical_ensemble: state and POVM dimensions differ");
  CanonicalEnsemble out;
  out.support = support_of(rho.op());
  out.rho = out.support.restrict(rho.op());
  out.sqrt_rho = op_sqrt(out.rho);
  out.inv_sqrt_rho = op_inv_sqrt_on_support(out.rho);

  std::vector<double> kept_weights;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const CMatrix aj = out.support.restrict(a[j]);
    const double lambda = (out.rho * aj).trace().real();
    if (lambda <= weight_tol) {
      out.dropped.push_back(static_cast<int>(j));
      continue;
    }
    const CMatrix sandwich = hermitian_part(out.sqrt_rho * aj * out.sqrt_rho);
    out.povm.push_back(aj);
    out.lambda.push_back(lambda);
    out.states.emplace_back(sandwich / sandwich.trace().real());
    out.outcome_labels.push_back(static_cast<int>(j));
  }
  if (out.lambda.empty()) throw NumericError("canonical_ensemble: every outcome has negligible weight");
  // Renormalize away rounding so lambda is an exact probability vector.
  const double total = std::accumulate(out.lambda.begin(), out.lambda.end(), 0.0);
  for (double& l : out.lambda) l /= total;
  return out;
}

PrettyGoodMeasurement pretty_good_measurement(const Ensemble& e) {
  const DensityMatrix avg = ensemble_average(e);
  PrettyGoodMeasurement out;
  out.support = support_of(avg.op());
  const CMatrix inv_sqrt = op_inv_sqrt_on_support(out.support.restrict(avg.op()));
  for (std::size_t i = 0; i < e.size(); ++i) {
    const CMatrix s = out.support.restrict(e.probs()[i] * e.states()[i].op());
    out.elements.push_back(hermitian_part(inv_sqrt * s * inv_sqrt));
  }
  return out;
}

double conditional_entropy(const Ensemble& e) {
  double h = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.probs()[i] > 0.0) h += e.probs()[i] * von_neumann_entropy(e.states()[i]);
  }
  return h;
}

double entropy_defect(const Ensemble& e) {
  return von_neumann_entropy(ensemble_average(e)) - conditional_entropy(e);
}

double single_letter_fidelity(const Ensemble& e, const FidelityMatrix& f, const Povm& a) {
  if (static_cast<std::size_t>(f.entries().rows()) != e.size() ||
      static_cast<std::size_t>(f.entries().cols()) != a.size()) {
    throw DimensionError("single_letter_fidelity: fidelity matrix shape does not match ensemble x POVM");
  }
  if (a.dim() != e.dim()) throw DimensionError("single_letter_fidelity: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      total += e.probs()[i] * (e.states()[i].op() * a[j]).trace().real() * f(i, j);
    }
  }
  return total;
}

PostMeasurement post_measurement_state(const KrausInstrument& ins, const DensityMatrix& rho_in,
                                       std::size_t j) {
  if (j >= ins.size()) throw DimensionError("post_measurement_state: outcome out of range");
  if (ins.povm().dim() != rho_in.dim()) throw DimensionError("post_measurement_state: dimension mismatch");
  const double prob = (rho_in.op() * ins.povm()[j]).trace().real();
  if (prob <= tol::weight) {
    throw NumericError("post_measurement_state: outcome " + std::to_string(j) + " is unreachable");
  }
  const auto& ops = ins.ops()[j];
  CMatrix out = CMatrix::Zero(ops.front().rows(), ops.front().rows());
  for (const auto& v : ops) out += v * rho_in.op() * v.adjoint();
  return {DensityMatrix(hermitian_part(out) / prob), prob};
}

SpectrumConjugacy spectrum_conjugacy_check(const DensityMatrix& rho, const CMatrix& a_j) {
  if (a_j.rows() != rho.dim()) throw DimensionError("spectrum_conjugacy_check: dimension mismatch");
  const CMatrix sr = op_sqrt(rho.op());
  const CMatrix sa = op_sqrt(a_j);
  SpectrumConjugacy out;
  out.sandwich_rho = eigenvalues_hermitian(hermitian_part(sr * a_j * sr));
  out.sandwich_a = eigenvalues_hermitian(hermitian_part(sa * rho.op() * sa));
  out.max_gap = (out.sandwich_rho - out.sandwich_a).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace squeeze
