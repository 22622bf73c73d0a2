#pragma once

// States, ensembles, POVMs, entropies, the canonical ensemble / pretty-good
// measurement pair, and post-measurement states of Kraus instruments.

#include <string>
#include <vector>

#include "squeeze/operator_core.hpp"

namespace squeeze {

// Validation failure of a domain object. kind() is a short machine-readable
// tag: "psd", "trace", "hermitian", "completeness", "subnormalization",
// "probability", "shape", "fidelity", "kraus".
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string kind, const std::string& message);
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

namespace tol {
inline constexpr double state_psd = 1e-10;
inline constexpr double state_trace = 1e-10;
inline constexpr double completeness = 1e-9;
inline constexpr double probability_sum = 1e-10;
inline constexpr double weight = 1e-12;
}  // namespace tol

class DensityMatrix {
 public:
  // Validates Hermiticity, PSD (to -1e-10) and unit trace (to 1e-10).
  explicit DensityMatrix(const CMatrix& op);

  static DensityMatrix pure(const CVector& psi);
  static DensityMatrix maximally_mixed(Eigen::Index d);

  const CMatrix& op() const noexcept { return op_; }
  Eigen::Index dim() const noexcept { return op_.rows(); }

 private:
  CMatrix op_;
};

class Povm {
 public:
  // Elements must be PSD (to -1e-10) and sum to I (operator norm 1e-9).
  explicit Povm(std::vector<CMatrix> elements);

  static Povm trivial(Eigen::Index d);
  static Povm computational(Eigen::Index d);

  const std::vector<CMatrix>& elements() const noexcept { return elements_; }
  const CMatrix& operator[](std::size_t j) const { return elements_.at(j); }
  std::size_t size() const noexcept { return elements_.size(); }
  Eigen::Index dim() const noexcept { return elements_.front().rows(); }

 private:
  std::vector<CMatrix> elements_;
};

class SubPovm {
 public:
  // Elements PSD (to -1e-10) with sum <= I (Löwner, 1e-9).
  explicit SubPovm(std::vector<CMatrix> elements);

  const std::vector<CMatrix>& elements() const noexcept { return elements_; }
  std::size_t size() const noexcept { return elements_.size(); }
  Eigen::Index dim() const noexcept { return elements_.front().rows(); }

 private:
  std::vector<CMatrix> elements_;
};

class Ensemble {
 public:
  Ensemble(std::vector<DensityMatrix> states, std::vector<double> probs);

  const std::vector<DensityMatrix>& states() const noexcept { return states_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return states_.size(); }
  Eigen::Index dim() const noexcept { return states_.front().dim(); }

 private:
  std::vector<DensityMatrix> states_;
  std::vector<double> probs_;
};

class FidelityMatrix {
 public:
  explicit FidelityMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXd entries_;
};

class KrausInstrument {
 public:
  // ops[j] lists V_{j,nu}; the induced family sum_nu V^† V must be a POVM.
  explicit KrausInstrument(std::vector<std::vector<CMatrix>> ops);

  // One Kraus operator per outcome, V_j = U_j sqrt(a_j). U_j defaults to I.
  static KrausInstrument square_root(const Povm& a,
                                     const std::vector<CMatrix>& unitaries = {});

  const std::vector<std::vector<CMatrix>>& ops() const noexcept { return ops_; }
  const Povm& povm() const noexcept { return povm_; }
  std::size_t size() const noexcept { return ops_.size(); }

 private:
  std::vector<std::vector<CMatrix>> ops_;
  Povm povm_;
};

double shannon_entropy(const std::vector<double>& p);
double shannon_entropy(const RVector& p);
double von_neumann_entropy(const DensityMatrix& rho);
// Entropy of a PSD operator's normalized spectrum; zero operator gives 0.
double spectral_entropy(const CMatrix& psd);

DensityMatrix ensemble_average(const Ensemble& e);

// Orthonormal basis of the support of rho. For a full-rank rho the isometry
// is the identity so no basis change happens.
struct Support {
  CMatrix isometry;
  Eigen::Index full_dim = 0;
  bool restricted = false;

  Eigen::Index dim() const noexcept { return isometry.cols(); }
  CMatrix restrict(const CMatrix& op) const;
};

Support support_of(const CMatrix& rho, std::optional<double> rank_tol = std::nullopt);

// Canonical ensemble of (rho, a), built on the support of rho. Outcomes with
// lambda_j <= weight_tol are dropped and listed.
struct CanonicalEnsemble {
  Support support;
  CMatrix rho;            // on the support
  CMatrix sqrt_rho;
  CMatrix inv_sqrt_rho;
  std::vector<CMatrix> povm;      // kept elements restricted to the support
  std::vector<double> lambda;
  std::vector<DensityMatrix> states;
  std::vector<int> outcome_labels;  // original index of each kept outcome
  std::vector<int> dropped;

  std::size_t size() const noexcept { return lambda.size(); }
  Eigen::Index dim() const noexcept { return rho.rows(); }
  Ensemble ensemble() const;
};

CanonicalEnsemble canonical_ensemble(const DensityMatrix& rho, const Povm& a,
                                     double weight_tol = tol::weight);

struct PrettyGoodMeasurement {
  Support support;
  std::vector<CMatrix> elements;  // on the support of the average state
};

PrettyGoodMeasurement pretty_good_measurement(const Ensemble& e);

double conditional_entropy(const Ensemble& e);
double entropy_defect(const Ensemble& e);

double single_letter_fidelity(const Ensemble& e, const FidelityMatrix& f, const Povm& a);

struct PostMeasurement {
  DensityMatrix state;
  double prob;
};

// Throws NumericError when Tr(rho_in a_j) <= weight_tol.
PostMeasurement post_measurement_state(const KrausInstrument& ins, const DensityMatrix& rho_in,
                                       std::size_t j);

struct SpectrumConjugacy {
  RVector sandwich_rho;   // spectrum of sqrt(rho) a sqrt(rho)
  RVector sandwich_a;     // spectrum of sqrt(a) rho sqrt(a)
  double max_gap = 0.0;
};

SpectrumConjugacy spectrum_conjugacy_check(const DensityMatrix& rho, const CMatrix& a_j);

}  // namespace squeeze
