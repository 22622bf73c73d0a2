#include "squeeze/info_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "squeeze/random.hpp"

namespace squeeze {

namespace {

CMatrix weighted_average(const std::vector<double>& w, const std::vector<CMatrix>& ops) {
  CMatrix total = CMatrix::Zero(ops.front().rows(), ops.front().cols());
  for (std::size_t i = 0; i < ops.size(); ++i) total += w[i] * ops[i];
  return hermitian_part(total);
}

Eigen::MatrixXd joint_of(const std::vector<double>& mu, const std::vector<CMatrix>& states,
                         const std::vector<CMatrix>& povm) {
  Eigen::MatrixXd p(states.size(), povm.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < povm.size(); ++j) {
      p(i, j) = std::max(0.0, mu[i] * (states[i] * povm[j]).trace().real());
    }
  }
  return p;
}

// out[prefix * n^depth + i...] = Tr((s_{i_1} (x) ... (x) s_{i_depth}) a).
void contract_first_factors(const CMatrix& a, const std::vector<CMatrix>& s, std::uint64_t prefix,
                            std::vector<double>& out) {
  if (a.rows() == 1) {
    out[prefix] = a(0, 0).real();
    return;
  }
  const Eigen::Index d = s.front().rows();
  const Eigen::Index rest = a.rows() / d;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CMatrix b = CMatrix::Zero(rest, rest);
    for (Eigen::Index x = 0; x < d; ++x) {
      for (Eigen::Index y = 0; y < d; ++y) {
        const cplx coeff = s[i](x, y);
        if (coeff != cplx(0.0, 0.0)) b += coeff * a.block(y * rest, x * rest, rest, rest);
      }
    }
    contract_first_factors(b, s, prefix * s.size() + i, out);
  }
}

}  // namespace

Triple::Triple(Ensemble e, Povm a) : ensemble(std::move(e)), povm(std::move(a)) {
  if (ensemble.dim() != povm.dim()) {
    throw ValidationError("shape", "ensemble dimension " + std::to_string(ensemble.dim()) +
                                       " differs from POVM dimension " + std::to_string(povm.dim()));
  }
}

CMatrix Triple::average() const { return ensemble_average(ensemble).op(); }

JointDistribution::JointDistribution(Eigen::MatrixXd probs) : p(std::move(probs)) {
  if (p.size() == 0) throw ValidationError("shape", "empty joint distribution");
  if (p.minCoeff() < -1e-12) throw ValidationError("probability", "negative joint probability");
  if (std::abs(p.sum() - 1.0) > tol::probability_sum) {
    throw ValidationError("probability", "joint probabilities do not sum to 1");
  }
  p = p.cwiseMax(0.0);
}

Eigen::VectorXd JointDistribution::row_marginal() const { return p.rowwise().sum(); }
Eigen::VectorXd JointDistribution::col_marginal() const { return p.colwise().sum().transpose(); }

JointDistribution joint_distribution(const Triple& t) {
  std::vector<CMatrix> states;
  for (const auto& s : t.ensemble.states()) states.push_back(s.op());
  return JointDistribution(joint_of(t.ensemble.probs(), states, t.povm.elements()));
}

double mutual_information(const Eigen::MatrixXd& p) {
  const Eigen::VectorXd px = p.rowwise().sum();
  const Eigen::VectorXd py = p.colwise().sum().transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (v > 0.0) total += v * std::log2(v / (px[i] * py[j]));
    }
  }
  return total;
}

double mutual_information(const JointDistribution& p) { return mutual_information(p.p); }

double holevo_quantity(const std::vector<double>& s, const std::vector<CMatrix>& states) {
  double mixed = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) mixed += s[i] * spectral_entropy(states[i]);
  return spectral_entropy(weighted_average(s, states)) - mixed;
}

HolevoReport holevo_check(const Triple& t) {
  HolevoReport r;
  r.mutual_information = mutual_information(joint_distribution(t));
  std::vector<CMatrix> states;
  for (const auto& s : t.ensemble.states()) states.push_back(s.op());
  r.chi_ensemble = holevo_quantity(t.ensemble.probs(), states);
  const DensityMatrix rho = ensemble_average(t.ensemble);
  r.chi_measurement = entropy_defect(canonical_ensemble(rho, t.povm).ensemble());
  r.slack_ensemble = r.chi_ensemble - r.mutual_information;
  r.slack_measurement = r.chi_measurement - r.mutual_information;
  return r;
}

DualTripleReport dual_triple(const Triple& t) {
  const DensityMatrix rho = ensemble_average(t.ensemble);
  const Support sup = support_of(rho.op());
  if (sup.restricted) throw NumericError("dual_triple: the average state is rank deficient");
  const CanonicalEnsemble canon = canonical_ensemble(rho, t.povm);
  const PrettyGoodMeasurement pgm = pretty_good_measurement(t.ensemble);
  DualTripleReport out{Triple(canon.ensemble(), Povm(pgm.elements)), 0.0, 0.0, canon.outcome_labels};

  const JointDistribution forward = joint_distribution(t);
  const JointDistribution backward = joint_distribution(out.dual);
  for (Eigen::Index i = 0; i < forward.p.rows(); ++i) {
    for (Eigen::Index j = 0; j < forward.p.cols(); ++j) {
      const auto it = std::find(canon.outcome_labels.begin(), canon.outcome_labels.end(), static_cast<int>(j));
      const double dual_value =
          it == canon.outcome_labels.end() ? 0.0 : backward.p(it - canon.outcome_labels.begin(), i);
      out.i2_max_gap = std::max(out.i2_max_gap, std::abs(forward.p(i, j) - dual_value));
    }
  }
  out.average_gap = (rho.op() - out.dual.average()).cwiseAbs().maxCoeff();
  return out;
}

const char* lemma_name(Lemma l) {
  switch (l) {
    case Lemma::mixture_entropy: return "mixture entropy";
    case Lemma::product_superadditivity: return "product superadditivity";
    case Lemma::coarse_graining: return "coarse graining";
    case Lemma::continuity: return "continuity";
  }
  return "?";
}

LemmaInstanceResult mixture_entropy_check(const std::vector<double>& weights, const std::vector<CMatrix>& states) {
  LemmaInstanceResult r;
  r.lhs = spectral_entropy(weighted_average(weights, states));
  r.rhs = shannon_entropy(weights);
  for (std::size_t j = 0; j < states.size(); ++j) r.rhs += weights[j] * spectral_entropy(states[j]);
  r.slack = r.rhs - r.lhs;
  return r;
}

LemmaInstanceResult superadditivity_check(const std::vector<double>& s, const std::vector<CMatrix>& states,
                                 Eigen::Index d1, Eigen::Index d2) {
  LemmaInstanceResult r;
  const std::vector<int> dims{static_cast<int>(d1), static_cast<int>(d2)};
  const CMatrix avg = weighted_average(s, states);
  const CMatrix product = tensor_product(partial_trace_keep(avg, dims, {0}), partial_trace_keep(avg, dims, {1}));
  r.premise = (avg - product).cwiseAbs().maxCoeff() <= 1e-10;
  std::vector<CMatrix> first;
  std::vector<CMatrix> second;
  for (const auto& x : states) {
    first.push_back(partial_trace_keep(x, dims, {0}));
    second.push_back(partial_trace_keep(x, dims, {1}));
  }
  r.lhs = holevo_quantity(s, first) + holevo_quantity(s, second);
  r.rhs = holevo_quantity(s, states);
  r.slack = r.rhs - r.lhs;
  return r;
}

LemmaInstanceResult coarse_graining_check(const std::vector<double>& s, const std::vector<CMatrix>& states,
                                 const std::vector<int>& group) {
  if (group.size() != states.size()) throw DimensionError("coarse_graining_check: one group index per state");
  LemmaInstanceResult r;
  const int groups = *std::max_element(group.begin(), group.end()) + 1;
  std::vector<double> ws(groups, 0.0);
  std::vector<CMatrix> grouped(groups, CMatrix::Zero(states.front().rows(), states.front().cols()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    ws[group[i]] += s[i];
    grouped[group[i]] += s[i] * states[i];
  }
  std::vector<double> kept_w;
  std::vector<CMatrix> kept;
  for (int g = 0; g < groups; ++g) {
    if (ws[g] <= 0.0) continue;
    kept_w.push_back(ws[g]);
    kept.push_back(hermitian_part(grouped[g] / ws[g]));
  }
  r.lhs = holevo_quantity(kept_w, kept);
  r.rhs = holevo_quantity(s, states);
  r.slack = r.rhs - r.lhs;
  return r;
}

LemmaInstanceResult continuity_check(const CMatrix& rho, const CMatrix& sigma) {
  LemmaInstanceResult r;
  const double alpha = trace_norm(rho - sigma);
  r.premise = alpha <= 0.5;
  r.lhs = std::abs(spectral_entropy(rho) - spectral_entropy(sigma));
  r.rhs = alpha > 0.0 ? -alpha * std::log2(alpha / static_cast<double>(rho.rows())) : 0.0;
  r.slack = r.rhs - r.lhs;
  return r;
}

namespace {

std::vector<CMatrix> random_states(std::size_t n, Eigen::Index d, Rng& rng) {
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto rank = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d))) + 1;
    out.push_back(random_density(d, rng, rank).op());
  }
  return out;
}

LemmaInstanceResult random_lemma_instance(Lemma lemma, Rng& rng, int max_dim) {
  const auto d = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(max_dim))) + 1;
  switch (lemma) {
    case Lemma::mixture_entropy: {
      const std::size_t n = 2 + rng.below(4);
      return mixture_entropy_check(random_probabilities(n, rng), random_states(n, d, rng));
    }
    case Lemma::product_superadditivity: {
      const Eigen::Index d1 = 2;
      const Eigen::Index d2 = 2 + static_cast<Eigen::Index>(rng.below(2));
      const std::size_t n = 2 + rng.below(3);
      const auto s = random_probabilities(n, rng);
      const auto tau = random_states(n, d1 * d2, rng);
      const CMatrix tau_bar = weighted_average(s, tau);
      const std::vector<int> dims{static_cast<int>(d1), static_cast<int>(d2)};
      const CMatrix product =
          tensor_product(partial_trace_keep(tau_bar, dims, {0}), partial_trace_keep(tau_bar, dims, {1}));
      const double floor = min_eigenvalue(product);
      if (floor < 1e-6) return {false, 0.0, 0.0, 0.0};
      const double kappa = 0.5 + 0.45 * rng.uniform01();
      const double scale = kappa * floor / max_eigenvalue(tau_bar);
      std::vector<CMatrix> sigma;
      for (const auto& x : tau) sigma.push_back(hermitian_part(product + scale * (x - tau_bar)));
      return superadditivity_check(s, sigma, d1, d2);
    }
    case Lemma::coarse_graining: {
      const std::size_t n = 2 + rng.below(5);
      const auto s = random_probabilities(n, rng);
      const auto states = random_states(n, d, rng);
      const int groups = 1 + static_cast<int>(rng.below(n));
      std::vector<int> raw(n);
      for (auto& g : raw) g = static_cast<int>(rng.below(static_cast<std::uint64_t>(groups)));
      // Compact labels so every group index in use is consecutive.
      std::vector<int> relabel(groups, -1);
      int next = 0;
      for (auto& g : raw) {
        if (relabel[g] < 0) relabel[g] = next++;
        g = relabel[g];
      }
      return coarse_graining_check(s, states, raw);
    }
    case Lemma::continuity: {
      const CMatrix rho = random_density(d, rng, 1 + static_cast<Eigen::Index>(rng.below(d))).op();
      const CMatrix tau = random_density(d, rng).op();
      const double gap = trace_norm(rho - tau);
      const double t = rng.uniform01() * (gap > 0.5 ? 0.5 / gap : 1.0);
      return continuity_check(rho, hermitian_part((1.0 - t) * rho + t * tau));
    }
  }
  return {};
}

}  // namespace

LemmaReport entropy_lemma_checks(Lemma lemma, int instances, std::uint64_t seed, int max_dim, Exec exec,
                                 double tol) {
  if (max_dim < 1) throw std::invalid_argument("entropy_lemma_checks: max_dim must be positive");
  std::vector<LemmaInstanceResult> results(instances);
  for_each_index(static_cast<std::size_t>(instances), exec, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    results[i] = random_lemma_instance(lemma, rng, max_dim);
  });
  LemmaReport rep;
  rep.lemma = lemma;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    if (!r.premise) {
      ++rep.discarded;
      continue;
    }
    ++rep.instances;
    rep.min_slack = std::min(rep.min_slack, r.slack);
  }
  rep.pass = rep.instances > 0 && rep.min_slack >= -tol;
  return rep;
}

ChernoffPoint operator_chernoff_mc(int dim_k, double s, double eta, int M, int trials, std::uint64_t seed,
                                   Exec exec) {
  if (dim_k < 1 || M < 1 || trials < 1) throw std::invalid_argument("operator_chernoff_mc: sizes must be positive");
  if (!(s > 0.0) || s > 1.0) throw std::invalid_argument("operator_chernoff_mc: s must lie in (0, 1]");
  if (!(eta > 0.0)) throw std::invalid_argument("operator_chernoff_mc: eta must be positive");
  ChernoffPoint out{dim_k, s, eta, M, trials};

  constexpr int family_size = 8;
  Rng family_rng(derive_seed(seed, 0));
  std::vector<CMatrix> family;
  for (int n = 0; n < family_size; ++n) {
    const auto rank = static_cast<Eigen::Index>(family_rng.below(static_cast<std::uint64_t>(dim_k))) + 1;
    const CMatrix g = random_ginibre(dim_k, rank, family_rng);
    const CMatrix x = hermitian_part(g * g.adjoint());
    family.push_back(x / operator_norm(x));
  }
  CMatrix mean = CMatrix::Zero(dim_k, dim_k);
  for (const auto& x : family) mean += x / static_cast<double>(family_size);
  const double floor = min_eigenvalue(mean);
  const CMatrix id = CMatrix::Identity(dim_k, dim_k);
  // Rescale (floor > s) or mix with I (floor < s) so the mean has minimum eigenvalue s.
  for (auto& x : family) {
    if (floor >= s) {
      x = (s / floor) * x;
    } else {
      const double t = (s - floor) / (1.0 - floor);
      x = (1.0 - t) * x + t * id;
    }
  }
  CMatrix sigma = CMatrix::Zero(dim_k, dim_k);
  for (const auto& x : family) sigma += x / static_cast<double>(family_size);
  const CMatrix ceiling = (1.0 + eta) * sigma;

  std::vector<unsigned char> failed(trials, 0);
  for_each_index(static_cast<std::size_t>(trials), exec, [&](std::size_t trial) {
    Rng rng(derive_seed(seed, trial + 1));
    CMatrix sum = CMatrix::Zero(dim_k, dim_k);
    for (int mu = 0; mu < M; ++mu) sum += family[rng.below(family_size)];
    failed[trial] = min_eigenvalue(ceiling - sum / static_cast<double>(M)) < 0.0 ? 1 : 0;
  });
  for (unsigned char f : failed) out.failures += f;
  out.empirical_tail = static_cast<double>(out.failures) / trials;
  out.bound = dim_k * std::exp2(-M * eta * eta * s / (2.0 * std::numbers::ln2));
  out.std_error = std::sqrt(out.empirical_tail * (1.0 - out.empirical_tail) / trials);
  out.pass = out.empirical_tail <= out.bound + 3.0 * out.std_error;
  return out;
}

std::vector<ChernoffGridPoint> default_chernoff_grid() {
  std::vector<ChernoffGridPoint> grid;
  for (int dim_k : {1, 2, 4}) {
    for (double s : {0.25, 0.5}) {
      for (double eta : {0.5, 1.0}) {
        for (int M : {16, 64, 256}) grid.push_back({dim_k, s, eta, M});
      }
    }
  }
  return grid;
}

ChainReport holevo_via_compression_chain(const Triple& t, const CompressionConfig& cfg, std::uint64_t max_joint,
                                         double tol) {
  const DensityMatrix rho = ensemble_average(t.ensemble);
  CompressionConfig run_cfg = cfg;
  run_cfg.diagnostics = false;
  const CompressionResult res = compress(rho, t.povm, run_cfg);
  if (!res.has_povm) throw NumericError("compression chain: no compressed POVM was produced");
  const CanonicalEnsemble canon = canonical_ensemble(rho, t.povm);

  ChainReport rep;
  rep.l = res.l;
  rep.outcomes = res.outcomes;
  rep.success = res.success;
  rep.chi = res.entropy_defect;
  rep.rate = res.rate;

  const std::vector<double>& mu = t.ensemble.probs();
  std::vector<CMatrix> states;
  for (const auto& s : t.ensemble.states()) states.push_back(canon.support.restrict(s.op()));
  const auto n = static_cast<int>(states.size());
  const int l = res.l;
  const std::uint64_t inputs = checked_power(n, l, max_joint, "input words n^l");
  if (inputs * res.outcomes > max_joint) throw CapExceeded("compression chain: joint table exceeds the cap");

  Eigen::MatrixXd joint(inputs, res.outcomes);
  for_each_index(res.outcomes, cfg.exec, [&](std::size_t o) {
    std::vector<double> col(inputs, 0.0);
    contract_first_factors(res.povm.ops[o], states, 0, col);
    for (std::uint64_t x = 0; x < inputs; ++x) {
      double w = 1.0;
      for (int letter : decode_word(x, n, l)) w *= mu[letter];
      joint(x, o) = std::max(0.0, w * col[x]);
    }
  });
  rep.block_information = mutual_information(joint) / l;

  for (int k = 0; k < l; ++k) {
    Eigen::MatrixXd per_letter = Eigen::MatrixXd::Zero(n, res.outcomes);
    Eigen::MatrixXd coarse = Eigen::MatrixXd::Zero(n, res.m);
    for (std::uint64_t x = 0; x < inputs; ++x) per_letter.row(decode_word(x, n, l)[k]) += joint.row(x);
    for (std::size_t o = 0; o < res.outcomes; ++o) {
      coarse.col(decode_word(res.povm.words[o], res.m, l)[k]) += per_letter.col(o);
    }
    rep.letter_information += mutual_information(per_letter) / l;
    rep.coarse_information += mutual_information(coarse) / l;
  }

  const MarginalTable marg = marginal_povms(res.povm, canon.rho, cfg.exec);
  for (const auto& row : marg) rep.fidelity_block += mutual_information(joint_of(mu, states, row)) / l;
  rep.fidelity_letter = mutual_information(joint_of(mu, states, canon.povm));

  rep.rate_excess = rep.rate - rep.chi;
  rep.fidelity_loss = rep.fidelity_letter - rep.fidelity_block;
  rep.epsilon = std::max({0.0, rep.rate_excess, rep.fidelity_loss});
  auto link = [&](const std::string& name, double left, double right) {
    rep.links.push_back({name, left, right, left - right});
  };
  link("chi + eps >= rate", rep.chi + rep.epsilon, rep.rate);
  link("rate >= block information", rep.rate, rep.block_information);
  link("block information >= per-letter information", rep.block_information, rep.letter_information);
  link("per-letter information >= coarse-grained information", rep.letter_information, rep.coarse_information);
  rep.links.push_back({"coarse-grained information == F(A)", rep.coarse_information, rep.fidelity_block,
                       -std::abs(rep.coarse_information - rep.fidelity_block)});
  link("F(A) >= F(a) - eps", rep.fidelity_block, rep.fidelity_letter - rep.epsilon);
  rep.pass = std::all_of(rep.links.begin(), rep.links.end(), [&](const ChainLink& c) { return c.slack >= -tol; });
  return rep;
}

}  // namespace squeeze
