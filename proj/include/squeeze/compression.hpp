#pragma once

// Collective POVM compression: marginals and closeness conditions, the staged
// sub-POVMs B -> C -> D -> E, the spectral cutoff, random selection of words
// and distribution of the remainder.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "squeeze/parallel.hpp"
#include "squeeze/quantum.hpp"
#include "squeeze/typicality.hpp"

namespace squeeze {

struct Tolerances {
  double loewner = 1e-9;
  double completeness = 1e-9;
  double norm = 1e-10;
};

enum class Stage { product, B, C, D, E, selected, compressed };
const char* stage_name(Stage s);

// Dense operators on (C^d)^{(x) l} indexed by words over m letters.
struct WordIndexedSubPovm {
  Stage stage = Stage::product;
  int l = 0;
  int m = 0;
  Eigen::Index d = 0;
  std::vector<std::uint64_t> words;  // ascending
  std::vector<CMatrix> ops;

  std::size_t size() const noexcept { return words.size(); }
  Eigen::Index dim() const noexcept { return ops.empty() ? 0 : ops.front().rows(); }
  // Sum in word order.
  CMatrix sum() const;
};

// Elementwise PSD and sum <= I, both to tol.
bool is_sub_povm(const WordIndexedSubPovm& x, double tol);

CMatrix product_povm_element(const std::vector<CMatrix>& a, const Word& w);
CMatrix product_povm_element(const Povm& a, const Word& w);

// The full product POVM a^{(x) l} over all m^l words.
WordIndexedSubPovm product_povm(const std::vector<CMatrix>& a, int l, const Caps& caps = {},
                                Exec exec = Exec::serial);

// table[k][j] = Tr_{!=k}( sqrt(rho)^l sum_{w: w_k = j} X_w sqrt(rho)^l ).
using MarginalTable = std::vector<std::vector<CMatrix>>;
MarginalTable sandwiched_marginals(const WordIndexedSubPovm& x, const CMatrix& sqrt_rho,
                                   Exec exec = Exec::serial);

// A^(k)_j for every k and j. rho must be full rank (pass to the support
// first); the POVM lives on the same space.
MarginalTable marginal_povms(const WordIndexedSubPovm& x, const CMatrix& rho, Exec exec = Exec::serial);
std::vector<CMatrix> marginal_povm(const WordIndexedSubPovm& x, int k, const CMatrix& rho);

// A^(K)_{j^K} for a sorted position set K, indexed by the base-m encoding of
// j^K. Throws if |K| > nu.
std::vector<CMatrix> k_subset_marginal(const WordIndexedSubPovm& x, const std::vector<int>& positions,
                                       const CMatrix& rho, int nu);

enum class Condition { C0, C1, C2, C2half, C3, C4, C5 };
const char* condition_name(Condition c);

struct ConditionInputs {
  const Ensemble* ensemble = nullptr;        // states on the same space as rho
  const FidelityMatrix* fidelity = nullptr;  // rows: states, cols: outcomes of a
  int nu = 2;
};

// Left-hand side of the named condition for the collective POVM x against
// the single-letter POVM a. C0-C2 need an ensemble, C0 also a fidelity matrix.
double check_condition(Condition cond, const WordIndexedSubPovm& x, const std::vector<CMatrix>& a,
                       const CMatrix& rho, const ConditionInputs& in, Exec exec = Exec::serial);

// (1/l) sum_k sum_ij p_i Tr(rho_i A^(k)_j) F_ij.
double block_fidelity(const MarginalTable& marginals, const Ensemble& e, const FidelityMatrix& f);

struct ConditionValues {
  std::optional<double> c0, c1, c2;
  double c2half = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;
  // dev[k][j] = ||A^(k)_j - a_j|| (operator norm).
  std::vector<std::vector<double>> deviation;
};

ConditionValues evaluate_conditions(const WordIndexedSubPovm& x, const std::vector<CMatrix>& a,
                                    const CMatrix& rho, const ConditionInputs& in,
                                    Exec exec = Exec::serial);

// Shared quantities of one (rho, a, l, delta) instance, all on the support
// of rho.
struct PipelineContext {
  CanonicalEnsemble canon;
  int l = 0;
  double delta = 0.0;
  int m = 0;
  Eigen::Index d = 0;
  double r = 0.0;  // smallest eigenvalue of rho on its support
  std::vector<EigenLabeling> hat_labels;
  std::optional<EigenLabeling> rho_labels;
  CMatrix rho_l;
  CMatrix sqrt_rho_l;
  CMatrix inv_sqrt_rho_l;
  TypicalProjector typical;
  TypicalSet tset;
  Caps caps;
  Exec exec = Exec::serial;
  Tolerances tol;

  Eigen::Index dim() const noexcept { return rho_l.rows(); }
  double c() const;        // (m+1)(d+1)/delta^2
  double c_tilde() const;  // 2c + m/delta^2 + (m^2 d + 4md)/delta^2 + md/delta^2
  // lambda^l of a word.
  double word_weight(std::uint64_t word) const;
};

PipelineContext make_context(const DensityMatrix& rho, const Povm& a, int l, double delta,
                             const Caps& caps = {}, Exec exec = Exec::serial, Tolerances tol = {});

WordIndexedSubPovm stage_B(const PipelineContext& ctx);
WordIndexedSubPovm stage_C(const WordIndexedSubPovm& b, const PipelineContext& ctx);
WordIndexedSubPovm stage_D(const WordIndexedSubPovm& c, const PipelineContext& ctx);

struct Cutoff {
  CMatrix omega;
  CMatrix pi;
  double c = 0.0;
  double alpha = 0.0;          // smallest nonzero eigenvalue of Pi_typ rho^l Pi_typ
  double threshold = 0.0;      // eigenvalue cut actually applied
  std::uint64_t rank = 0;
  double trace_omega_pi = 0.0;
  double delta4_trace = 0.0;   // Tr(rho^l - omega)
};

Cutoff cutoff_projector(const WordIndexedSubPovm& d, const PipelineContext& ctx);

WordIndexedSubPovm stage_E(const WordIndexedSubPovm& d, const Cutoff& cut, const PipelineContext& ctx);

// S * max_{w in T} ||Pi Pi(w) rhohat_w Pi(w) Pi||, read off sqrt(rho)^l E_w sqrt(rho)^l.
double exact_beta(const WordIndexedSubPovm& e, const PipelineContext& ctx);

// Smallest integer strictly above 2 ln2 (1 - log2 alpha) / (eta^2 c) * beta / alpha.
// beta = 0 gives 1.
std::uint64_t choose_M(double alpha, double beta, double c, double eta,
                       std::uint64_t max_draws = std::uint64_t{1} << 27);

struct SelectionAttempt {
  int attempt = 0;
  std::uint64_t seed = 0;
  bool dominated = false;
  bool marginals_close = false;
  double dominance_min_eigenvalue = 0.0;  // of Pi_typ - sum A~
  double marginal_max = 0.0;             // max_{k,j} trace-norm deviation
  double marginal_bound = 0.0;
  std::string cause;                 // empty on success
};

struct Selection {
  std::vector<std::uint64_t> draws;         // J_1..J_M in draw order
  std::vector<std::uint64_t> multiplicity;  // per distinct word of `tilde`
  WordIndexedSubPovm tilde;                 // merged A~ over distinct words
  bool success = false;
  int success_attempt = 0;                  // 1-based; 0 when none succeeded
  std::vector<SelectionAttempt> attempts;
  std::uint64_t excluded_words = 0;         // typical words with lambda^l < 1e-300
};

Selection random_select(const WordIndexedSubPovm& e, const PipelineContext& ctx, std::uint64_t M,
                        double eta, std::uint64_t seed, int max_attempts = 32);

// A_w = A~_w + (n_w / N) R with R = I - sum A~ and N = sum n_w. An empty
// multiplicity means one draw per element.
WordIndexedSubPovm distribute_remainder(const WordIndexedSubPovm& tilde,
                                        const std::vector<std::uint64_t>& multiplicity = {},
                                        double tol = 1e-9);

struct CompressionConfig {
  int l = 2;
  double delta = 2.0;
  std::optional<double> eta;               // default delta^-2
  std::optional<std::uint64_t> m_override;
  std::uint64_t seed = 42;
  int nu = 2;
  int max_attempts = 32;
  Caps caps;
  Tolerances tol;
  Exec exec = Exec::serial;
  bool diagnostics = true;
};

struct StageCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool upper = true;  // value <= bound when true, value >= bound otherwise
  bool pass = false;
};

struct RateLowerBound {
  double raw = 0.0;
  double bound = 0.0;  // max(0, raw)
  bool applicable = false;
};

// l (defect + (3 eps / lambda0^2) log2(2 eps / (lambda0^2 d))); eps = 0 is
// taken as the limit l * defect. Applicable iff 0 <= eps <= (lambda0/2)^2.
RateLowerBound thm3_lower_bound(double defect, double lambda0, double eps, Eigen::Index d, int l);

struct CompressionResult {
  int l = 0;
  double delta = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  int m = 0;
  Eigen::Index d = 0;
  Eigen::Index full_dim = 0;
  bool support_restricted = false;
  std::vector<int> outcome_labels;
  std::vector<int> dropped;

  double entropy_rho = 0.0;
  double entropy_defect = 0.0;
  double lambda0 = 0.0;
  double r = 0.0;
  double S = 0.0;
  double c = 0.0;
  double c_tilde = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double cutoff_threshold = 0.0;
  std::uint64_t typical_rank = 0;
  std::uint64_t typical_set_size = 0;
  std::uint64_t cutoff_rank = 0;
  double trace_omega_pi = 0.0;

  std::uint64_t draws = 0;         // M used for the random selection
  std::uint64_t draws_formula = 0; // value from choose_M
  bool draws_overridden = false;
  std::uint64_t outcomes = 0;      // distinct selected words
  double rate = 0.0;               // log2(outcomes) / l
  std::vector<std::uint64_t> selected_draws;

  bool success = false;
  int success_attempt = 0;
  std::vector<SelectionAttempt> attempts;
  std::uint64_t excluded_words = 0;

  bool has_povm = false;
  WordIndexedSubPovm povm;
  double completeness_error = 0.0;
  double min_element_eigenvalue = 0.0;

  ConditionValues conditions;
  double c3_budget = 0.0;
  bool c3_within_budget = false;
  RateLowerBound rate_bound;

  double product_marginal_gap = 0.0;
  std::vector<StageCheck> stage_checks;
  ProjectorBoundsReport typicality;
  std::vector<DeletionCheck> deletion;
  std::vector<DeletionCheck> conditional_deletion;

  bool stage_checks_pass() const;
  bool typicality_pass() const;
};

// Runs the whole construction. The ensemble/fidelity pair, when given, feeds
// the C0-C2 checks; its states must average to rho.
CompressionResult compress(const DensityMatrix& rho, const Povm& a, const CompressionConfig& cfg,
                           const Ensemble* ensemble = nullptr, const FidelityMatrix* fidelity = nullptr);

}  // namespace squeeze
