#pragma once

// Classical information quantities of ensemble/measurement triples, Holevo
// bounds in both forms, dual triples, entropy-inequality checkers, operator
// Chernoff Monte Carlo and the compression chain.

#include <cstdint>
#include <string>
#include <vector>

#include "squeeze/compression.hpp"
#include "squeeze/parallel.hpp"
#include "squeeze/quantum.hpp"

namespace squeeze {

// States sigma_i with weights mu_i, measured by the POVM a.
struct Triple {
  Ensemble ensemble;
  Povm povm;

  Triple(Ensemble e, Povm a);
  CMatrix average() const;
};

// P(i, j), rows indexed by states and columns by outcomes.
struct JointDistribution {
  Eigen::MatrixXd p;

  explicit JointDistribution(Eigen::MatrixXd probs);
  Eigen::VectorXd row_marginal() const;
  Eigen::VectorXd col_marginal() const;
};

JointDistribution joint_distribution(const Triple& t);

// Base 2, zero-probability terms dropped.
double mutual_information(const JointDistribution& p);
double mutual_information(const Eigen::MatrixXd& p);

// Holevo quantity H(sum s_i sigma_i) - sum s_i H(sigma_i).
double holevo_quantity(const std::vector<double>& s, const std::vector<CMatrix>& states);

struct HolevoReport {
  double mutual_information = 0.0;
  double chi_ensemble = 0.0;     // from the states and weights
  double chi_measurement = 0.0;  // entropy defect of (rho, a)
  double slack_ensemble = 0.0;
  double slack_measurement = 0.0;
};

HolevoReport holevo_check(const Triple& t);

struct DualTripleReport {
  Triple dual;
  double i2_max_gap = 0.0;       // max_ij |mu_i Tr(sigma_i a_j) - lambda_j Tr(S_i rhohat_j)|
  double average_gap = 0.0;      // max entry of |average(t) - average(dual)|
  std::vector<int> outcome_labels;  // original outcome of each dual state
};

// Canonical ensemble of (rho, a) with the pretty-good measurement of the
// original ensemble. Zero-weight outcomes have no dual state and are
// skipped. Throws NumericError when rho is rank deficient.
DualTripleReport dual_triple(const Triple& t);

enum class Lemma { mixture_entropy, product_superadditivity, coarse_graining, continuity };
const char* lemma_name(Lemma l);

struct LemmaInstanceResult {
  bool premise = true;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs for the inequality lhs <= rhs
};

// H(sum l_j s_j) <= H(l) + sum l_j H(s_j).
LemmaInstanceResult mixture_entropy_check(const std::vector<double>& weights, const std::vector<CMatrix>& states);
// I(s; sigma) >= I(s; Tr_2 sigma) + I(s; Tr_1 sigma) when the average is a
// product; the premise is checked to 1e-10 entrywise.
LemmaInstanceResult superadditivity_check(const std::vector<double>& s, const std::vector<CMatrix>& states,
                                 Eigen::Index d1, Eigen::Index d2);
// I(s; sigma) >= I(s~; sigma~) for the partition given as a group index per state.
LemmaInstanceResult coarse_graining_check(const std::vector<double>& s, const std::vector<CMatrix>& states,
                                 const std::vector<int>& group);
// |H(rho) - H(sigma)| <= -alpha log2(alpha/d) with alpha = ||rho - sigma||_1 <= 1/2.
LemmaInstanceResult continuity_check(const CMatrix& rho, const CMatrix& sigma);

struct LemmaReport {
  Lemma lemma = Lemma::mixture_entropy;
  int instances = 0;
  int discarded = 0;  // constructions that failed their premise
  double min_slack = 0.0;
  bool pass = false;
};

// Random instances at dimension <= max_dim; per-instance seeds derive from
// (seed, index).
LemmaReport entropy_lemma_checks(Lemma lemma, int instances, std::uint64_t seed, int max_dim = 4,
                                 Exec exec = Exec::serial, double tol = 1e-9);

struct ChernoffPoint {
  int dim_k = 1;
  double s = 0.25;
  double eta = 0.5;
  int M = 64;
  int trials = 10000;
  std::uint64_t failures = 0;
  double empirical_tail = 0.0;
  double bound = 0.0;       // dim_k 2^(-M eta^2 s / (2 ln 2))
  double std_error = 0.0;   // binomial standard error of empirical_tail
  bool pass = false;        // empirical_tail <= bound + 3 std_error
};

// A finite family of operators in [0, I] whose uniform mean has smallest
// eigenvalue exactly s; trials draw M of them i.i.d.
ChernoffPoint operator_chernoff_mc(int dim_k, double s, double eta, int M, int trials, std::uint64_t seed,
                                   Exec exec = Exec::serial);

struct ChernoffGridPoint {
  int dim_k;
  double s;
  double eta;
  int M;
};
std::vector<ChernoffGridPoint> default_chernoff_grid();

struct ChainLink {
  std::string name;
  double left = 0.0;
  double right = 0.0;
  double slack = 0.0;  // left - right for left >= right
};

struct ChainReport {
  int l = 0;
  std::uint64_t outcomes = 0;
  double epsilon = 0.0;          // max(0, rate_excess, fidelity_loss)
  double rate_excess = 0.0;      // rate - chi
  double fidelity_loss = 0.0;    // F(a) - F(A)
  double chi = 0.0;              // entropy defect of (rho, a)
  double rate = 0.0;             // log2(outcomes) / l
  double block_information = 0.0;    // I(X^l ^ Y) / l
  double letter_information = 0.0;   // sum_k I(X_k ^ Y) / l
  double coarse_information = 0.0;   // sum_k I(X_k ^ f_k(Y)) / l
  double fidelity_block = 0.0;   // F(A)
  double fidelity_letter = 0.0;  // F(a)
  std::vector<ChainLink> links;
  bool success = false;          // selection success of the compression run
  bool pass = false;             // every link slack >= -tol
};

// Compresses (average(t), a) with cfg and evaluates every link. Throws
// CapExceeded when n^l * outcomes exceeds max_joint.
ChainReport holevo_via_compression_chain(const Triple& t, const CompressionConfig& cfg,
                                         std::uint64_t max_joint = std::uint64_t{1} << 22,
                                         double tol = 1e-8);

}  // namespace squeeze
