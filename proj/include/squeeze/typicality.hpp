#pragma once

// Frequency-typical projectors, conditional typical projectors and typical
// sequence sets. Words over an alphabet of size m are encoded as base-m
// integers with the first letter most significant, so ascending index order
// is lexicographic word order.

#include <cstdint>
#include <string>
#include <vector>

#include "squeeze/parallel.hpp"
#include "squeeze/quantum.hpp"

namespace squeeze {

using Word = std::vector<int>;

// Enumeration and materialisation limits. `entries` bounds the number of
// complex entries held by a word-indexed family of dense operators.
struct Caps {
  std::uint64_t dim = 4096;
  std::uint64_t words = 65536;
  std::uint64_t entries = std::uint64_t{1} << 26;
};

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// base^exp, throwing CapExceeded if it exceeds cap.
std::uint64_t checked_power(std::uint64_t base, int exp, std::uint64_t cap, const std::string& what);

Word decode_word(std::uint64_t index, int alphabet, int length);
std::uint64_t encode_word(const Word& w, int alphabet);
// Letters as base-m digits (0-9a-z); larger alphabets are dot separated.
std::string word_string(const Word& w, int alphabet);

std::vector<int> letter_counts(const Word& w, int alphabet);
RVector empirical_distribution(const Word& w, int alphabet);

// |N(t) - n p_t| <= delta sqrt(n) sqrt(p_t (1 - p_t)) for every t, with a
// 1e-9 absolute slack so exact boundary cases are not lost to rounding.
bool is_frequency_typical(const std::vector<int>& counts, const RVector& probs, int n, double delta);

// Eigenbasis of a state in the canonical operator-core ordering.
class EigenLabeling {
 public:
  explicit EigenLabeling(const CMatrix& state);

  const RVector& values() const noexcept { return values_; }
  const CMatrix& vectors() const noexcept { return vectors_; }
  Eigen::Index dim() const noexcept { return values_.size(); }
  double min_eigenvalue() const { return values_.minCoeff(); }

 private:
  RVector values_;
  CMatrix vectors_;
};

// Projector diagonal in a product basis: position k uses bases[k], and
// `selected` lists the chosen label words (ascending).
struct TypicalProjector {
  int l = 0;
  std::vector<CMatrix> bases;
  std::vector<std::uint64_t> selected;
  CMatrix dense;  // empty when not materialised

  std::uint64_t rank() const noexcept { return selected.size(); }
};

// Dense sum of the selected product-basis rank-one projectors.
CMatrix materialize_product_projector(const std::vector<CMatrix>& bases,
                                      const std::vector<std::uint64_t>& selected);

std::vector<std::uint64_t> typical_labels(const EigenLabeling& lab, int l, double delta,
                                          const Caps& caps, Exec exec = Exec::serial);

TypicalProjector typical_projector(const EigenLabeling& lab, int l, double delta,
                                   const Caps& caps = {}, Exec exec = Exec::serial,
                                   bool materialize = true);
TypicalProjector typical_projector(const DensityMatrix& rho, int l, double delta,
                                   const Caps& caps = {}, Exec exec = Exec::serial);

// Label words typical block-wise: positions holding letter j are tested
// against hats[j] with block length |I_j|.
std::vector<std::uint64_t> conditional_typical_labels(const std::vector<EigenLabeling>& hats,
                                                      const Word& w, double delta,
                                                      const Caps& caps);

TypicalProjector conditional_typical_projector(const std::vector<EigenLabeling>& hats,
                                               const Word& w, double delta,
                                               const Caps& caps = {}, bool materialize = true);

// Sum over selected label words of the product eigenvalue weights.
double product_basis_mass(const std::vector<const RVector*>& weights,
                          const std::vector<std::uint64_t>& selected);

struct TypicalSet {
  double delta = 0.0;
  int l = 0;
  int alphabet = 0;
  std::vector<std::uint64_t> words;   // ascending
  std::vector<double> probs;          // lambda^l of each word
  double mass = 0.0;                  // S

  bool contains(std::uint64_t word) const;
  // Newline-delimited word strings.
  std::string export_words() const;
};

TypicalSet typical_sequences(const std::vector<double>& lambda, int l, double delta,
                             const Caps& caps = {}, Exec exec = Exec::serial);

struct ConditionalMass {
  std::uint64_t word = 0;
  double mass = 0.0;
};

struct ProjectorBoundsReport {
  int l = 0;
  double delta = 0.0;
  int d = 0;
  int m = 0;
  std::uint64_t trace_pi = 0;
  double mass = 0.0;                 // Tr(rho^l Pi)
  double mass_bound = 0.0;           // 1 - d/delta^2
  bool mass_pass = false;
  double entropy_ratio = 0.0;        // (log2 Tr Pi - l H(rho)) / sqrt(l)
  std::vector<ConditionalMass> conditional;
  double conditional_bound = 0.0;    // 1 - m d/delta^2
  double min_conditional_mass = 1.0;
  bool conditional_pass = true;

  bool all_pass() const { return mass_pass && conditional_pass; }
};

// Conditional masses are evaluated on `words` (typically the typical set).
ProjectorBoundsReport verify_projector_bounds(const EigenLabeling& rho,
                                              const std::vector<EigenLabeling>& hats, int l,
                                              double delta, const std::vector<std::uint64_t>& words,
                                              const Caps& caps = {}, Exec exec = Exec::serial);

struct DeletionCheck {
  bool applicable = false;   // delta >= 2/r
  bool holds = false;
  double r = 0.0;
  double delta_prime = 0.0;
  double min_eigenvalue = 0.0;  // of LHS - RHS
};

// Pi^l_{rho,delta} >= Pi^{[l]\k}_{rho,delta'} (x) I_k with delta' = delta - 1/r,
// evaluated on the support of rho.
DeletionCheck verify_deletion_monotonicity(const DensityMatrix& rho, int l, double delta, int k,
                                           const Caps& caps = {});

// Conditional variant; r is the smallest eigenvalue among the hats[j] whose
// letter occurs in w.
DeletionCheck verify_deletion_monotonicity(const std::vector<EigenLabeling>& hats, const Word& w,
                                           double delta, int k, const Caps& caps = {});

struct PartialTraceLemmaCheck {
  bool premise = false;    // Pi >= I (x) Pi0
  bool holds = false;
  double premise_min_eigenvalue = 0.0;
  double min_eigenvalue = 0.0;
};

// C on H1 (x) H2 with dim H1 = d1 and Pi0 acting on H2; traces out H2.
PartialTraceLemmaCheck partial_trace_projection_lemma_check(const CMatrix& c, const CMatrix& pi,
                                                            const CMatrix& pi0, Eigen::Index d1,
                                                            double tol = 1e-9);

}  // namespace squeeze
