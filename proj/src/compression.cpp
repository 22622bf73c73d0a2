#include "squeeze/compression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "squeeze/random.hpp"

namespace squeeze {

namespace {

std::vector<int> factor_dims(int l, Eigen::Index d) { return std::vector<int>(l, static_cast<int>(d)); }

CMatrix sandwich(const CMatrix& x, const CMatrix& factor, int l) {
  return hermitian_part(conjugate_by_tensor_power(factor, l, x));
}

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

MarginalTable unsandwich(const MarginalTable& t, const CMatrix& inv_sqrt) {
  MarginalTable out = t;
  for (auto& row : out) {
    for (auto& x : row) x = hermitian_part(inv_sqrt * x * inv_sqrt);
  }
  return out;
}

// max_k sum_j f(k, j)
template <class Fn>
double max_over_k_sum_j(std::size_t l, std::size_t m, Fn&& f) {
  double worst = 0.0;
  for (std::size_t k = 0; k < l; ++k) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += f(k, j);
    worst = std::max(worst, total);
  }
  return worst;
}

std::vector<std::vector<int>> subsets_up_to(int l, int nu) {
  std::vector<std::vector<int>> out;
  const int limit = std::min(nu, l);
  std::vector<int> current;
  // Depth-first in lexicographic order.
  auto recurse = [&](auto&& self, int start) -> void {
    if (!current.empty()) out.push_back(current);
    if (static_cast<int>(current.size()) == limit) return;
    for (int p = start; p < l; ++p) {
      current.push_back(p);
      self(self, p + 1);
      current.pop_back();
    }
  };
  recurse(recurse, 0);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return out;
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::product: return "product";
    case Stage::B: return "B";
    case Stage::C: return "C";
    case Stage::D: return "D";
    case Stage::E: return "E";
    case Stage::selected: return "selected";
    case Stage::compressed: return "compressed";
  }
  return "?";
}

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::C0: return "C0";
    case Condition::C1: return "C1";
    case Condition::C2: return "C2";
    case Condition::C2half: return "C2half";
    case Condition::C3: return "C3";
    case Condition::C4: return "C4";
    case Condition::C5: return "C5";
  }
  return "?";
}

CMatrix WordIndexedSubPovm::sum() const {
  CMatrix total = CMatrix::Zero(dim(), dim());
  for (const auto& op : ops) total += op;
  return total;
}

bool is_sub_povm(const WordIndexedSubPovm& x, double tol) {
  for (const auto& op : x.ops) {
    if (min_eigenvalue(op) < -tol) return false;
  }
  return x.ops.empty() || loewner_leq(x.sum(), identity(x.dim()), tol);
}

CMatrix product_povm_element(const std::vector<CMatrix>& a, const Word& w) {
  std::vector<CMatrix> factors;
  factors.reserve(w.size());
  for (int letter : w) factors.push_back(a.at(letter));
  return tensor_product(factors);
}

CMatrix product_povm_element(const Povm& a, const Word& w) { return product_povm_element(a.elements(), w); }

WordIndexedSubPovm product_povm(const std::vector<CMatrix>& a, int l, const Caps& caps, Exec exec) {
  WordIndexedSubPovm out;
  out.stage = Stage::product;
  out.l = l;
  out.m = static_cast<int>(a.size());
  out.d = a.front().rows();
  const std::uint64_t n = checked_power(out.m, l, caps.words, "product POVM words");
  checked_power(out.d, l, caps.dim, "product POVM dimension");
  out.words.resize(n);
  out.ops.resize(n);
  for_each_index(n, exec, [&](std::size_t i) {
    out.words[i] = i;
    out.ops[i] = product_povm_element(a, decode_word(i, out.m, l));
  });
  return out;
}

MarginalTable sandwiched_marginals(const WordIndexedSubPovm& x, const CMatrix& sqrt_rho, Exec exec) {
  const int l = x.l;
  const auto dims = factor_dims(l, x.d);
  std::vector<std::vector<CMatrix>> per_word(x.size());
  for_each_index(x.size(), exec, [&](std::size_t i) {
    const CMatrix y = sandwich(x.ops[i], sqrt_rho, l);
    per_word[i].resize(l);
    for (int k = 0; k < l; ++k) per_word[i][k] = partial_trace_keep(y, dims, {k});
  });
  MarginalTable table(l, std::vector<CMatrix>(x.m, CMatrix::Zero(x.d, x.d)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Word w = decode_word(x.words[i], x.m, l);
    for (int k = 0; k < l; ++k) table[k][w[k]] += per_word[i][k];
  }
  return table;
}

MarginalTable marginal_povms(const WordIndexedSubPovm& x, const CMatrix& rho, Exec exec) {
  const CMatrix sqrt_rho = op_sqrt(rho);
  const CMatrix inv_sqrt = op_inv_sqrt_on_support(rho);
  return unsandwich(sandwiched_marginals(x, sqrt_rho, exec), inv_sqrt);
}

std::vector<CMatrix> marginal_povm(const WordIndexedSubPovm& x, int k, const CMatrix& rho) {
  if (k < 0 || k >= x.l) throw DimensionError("marginal_povm: position out of range");
  return marginal_povms(x, rho)[k];
}

std::vector<CMatrix> k_subset_marginal(const WordIndexedSubPovm& x, const std::vector<int>& positions,
                                       const CMatrix& rho, int nu) {
  if (positions.empty() || static_cast<int>(positions.size()) > nu) {
    throw DimensionError("k_subset_marginal: position set must have 1..nu elements");
  }
  for (std::size_t s = 0; s < positions.size(); ++s) {
    if (positions[s] < 0 || positions[s] >= x.l || (s > 0 && positions[s] <= positions[s - 1])) {
      throw DimensionError("k_subset_marginal: positions must be sorted, distinct and in range");
    }
  }
  const int size = static_cast<int>(positions.size());
  const auto dims = factor_dims(x.l, x.d);
  const CMatrix sqrt_rho = op_sqrt(rho);
  const CMatrix inv_sqrt = op_inv_sqrt_on_support(rho);
  const std::uint64_t outcomes = checked_power(x.m, size, std::numeric_limits<std::uint64_t>::max(), "subset outcomes");
  Eigen::Index sub_dim = 1;
  for (int s = 0; s < size; ++s) sub_dim *= x.d;
  std::vector<CMatrix> out(outcomes, CMatrix::Zero(sub_dim, sub_dim));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Word w = decode_word(x.words[i], x.m, x.l);
    Word sub;
    for (int p : positions) sub.push_back(w[p]);
    out[encode_word(sub, x.m)] += partial_trace_keep(sandwich(x.ops[i], sqrt_rho, x.l), dims, positions);
  }
  for (auto& op : out) op = sandwich(op, inv_sqrt, size);
  return out;
}

double block_fidelity(const MarginalTable& marginals, const Ensemble& e, const FidelityMatrix& f) {
  const std::size_t l = marginals.size();
  double total = 0.0;
  for (std::size_t k = 0; k < l; ++k) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (std::size_t j = 0; j < marginals[k].size(); ++j) {
        total += e.probs()[i] * (e.states()[i].op() * marginals[k][j]).trace().real() * f(i, j);
      }
    }
  }
  return total / static_cast<double>(l);
}

ConditionValues evaluate_conditions(const WordIndexedSubPovm& x, const std::vector<CMatrix>& a,
                                    const CMatrix& rho, const ConditionInputs& in, Exec exec) {
  if (static_cast<int>(a.size()) != x.m) throw DimensionError("evaluate_conditions: alphabet mismatch");
  const MarginalTable marg = marginal_povms(x, rho, exec);
  const std::size_t l = x.l;
  const std::size_t m = a.size();
  ConditionValues out;
  out.deviation.assign(l, std::vector<double>(m, 0.0));
  for (std::size_t k = 0; k < l; ++k) {
    for (std::size_t j = 0; j < m; ++j) out.deviation[k][j] = operator_norm(marg[k][j] - a[j]);
  }
  out.c3 = max_over_k_sum_j(l, m, [&](std::size_t k, std::size_t j) { return out.deviation[k][j]; });
  for (const auto& row : out.deviation) {
    for (double v : row) out.c4 += v;
  }
  out.c2half = out.c4 / static_cast<double>(l);

  const auto subsets = subsets_up_to(x.l, in.nu);
  std::vector<double> subset_terms(subsets.size(), 0.0);
  for_each_index(subsets.size(), exec, [&](std::size_t s) {
    const auto marg_k = k_subset_marginal(x, subsets[s], rho, in.nu);
    const int size = static_cast<int>(subsets[s].size());
    double total = 0.0;
    for (std::size_t key = 0; key < marg_k.size(); ++key) {
      total += operator_norm(marg_k[key] - product_povm_element(a, decode_word(key, x.m, size)));
    }
    subset_terms[s] = total;
  });
  for (double v : subset_terms) out.c5 += v;

  if (in.ensemble) {
    const Ensemble& e = *in.ensemble;
    if (e.dim() != rho.rows()) throw DimensionError("evaluate_conditions: ensemble dimension mismatch");
    double c1 = 0.0;
    double c2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const CMatrix& s = e.states()[i].op();
      for (std::size_t j = 0; j < m; ++j) {
        const double ref = (s * a[j]).trace().real();
        double avg = 0.0;
        for (std::size_t k = 0; k < l; ++k) avg += (s * marg[k][j]).trace().real();
        c1 += e.probs()[i] * std::abs(avg / static_cast<double>(l) - ref);
      }
      for (std::size_t k = 0; k < l; ++k) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          row += std::abs((s * marg[k][j]).trace().real() - (s * a[j]).trace().real());
        }
        c2 = std::max(c2, row);
      }
    }
    out.c1 = c1;
    out.c2 = c2;
    if (in.fidelity) {
      const Povm ref_povm(a);
      out.c0 = std::abs(block_fidelity(marg, e, *in.fidelity) - single_letter_fidelity(e, *in.fidelity, ref_povm));
    }
  }
  return out;
}

double check_condition(Condition cond, const WordIndexedSubPovm& x, const std::vector<CMatrix>& a,
                       const CMatrix& rho, const ConditionInputs& in, Exec exec) {
  const bool needs_ensemble = cond == Condition::C0 || cond == Condition::C1 || cond == Condition::C2;
  if (needs_ensemble && !in.ensemble) {
    throw std::invalid_argument(std::string("check_condition: ") + condition_name(cond) + " needs an ensemble");
  }
  if (cond == Condition::C0 && !in.fidelity) throw std::invalid_argument("check_condition: C0 needs a fidelity matrix");
  const ConditionValues v = evaluate_conditions(x, a, rho, in, exec);
  switch (cond) {
    case Condition::C0: return *v.c0;
    case Condition::C1: return *v.c1;
    case Condition::C2: return *v.c2;
    case Condition::C2half: return v.c2half;
    case Condition::C3: return v.c3;
    case Condition::C4: return v.c4;
    case Condition::C5: return v.c5;
  }
  return 0.0;
}

double PipelineContext::c() const { return (m + 1.0) * (d + 1.0) / (delta * delta); }

double PipelineContext::c_tilde() const {
  const double dd = delta * delta;
  const double md = static_cast<double>(m) * d;
  return 2.0 * c() + m / dd + (static_cast<double>(m) * m * d + 4.0 * md) / dd + md / dd;
}

double PipelineContext::word_weight(std::uint64_t word) const {
  double p = 1.0;
  for (int letter : decode_word(word, m, l)) p *= canon.lambda[letter];
  return p;
}

PipelineContext make_context(const DensityMatrix& rho, const Povm& a, int l, double delta,
                             const Caps& caps, Exec exec, Tolerances tol) {
  if (l < 1) throw std::invalid_argument("block length l must be at least 1");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  PipelineContext ctx;
  ctx.canon = canonical_ensemble(rho, a);
  ctx.l = l;
  ctx.delta = delta;
  ctx.m = static_cast<int>(ctx.canon.size());
  ctx.d = ctx.canon.dim();
  ctx.caps = caps;
  ctx.exec = exec;
  ctx.tol = tol;
  const std::uint64_t dim = checked_power(ctx.d, l, caps.dim, "block dimension d^l");
  const std::uint64_t words = checked_power(ctx.m, l, caps.words, "word count m^l");
  if (words > caps.entries / (dim * dim)) {
    throw CapExceeded("word-indexed family of " + std::to_string(words) + " operators of dimension " +
                      std::to_string(dim) + " exceeds the entry cap");
  }
  ctx.rho_labels.emplace(ctx.canon.rho);
  ctx.r = ctx.rho_labels->min_eigenvalue();
  for (const auto& s : ctx.canon.states) ctx.hat_labels.emplace_back(s.op());
  ctx.rho_l = tensor_power(ctx.canon.rho, l);
  ctx.sqrt_rho_l = tensor_power(ctx.canon.sqrt_rho, l);
  ctx.inv_sqrt_rho_l = tensor_power(ctx.canon.inv_sqrt_rho, l);
  ctx.typical = typical_projector(*ctx.rho_labels, l, delta, caps, exec, true);
  ctx.tset = typical_sequences(ctx.canon.lambda, l, delta, caps, exec);
  return ctx;
}

WordIndexedSubPovm stage_B(const PipelineContext& ctx) {
  WordIndexedSubPovm out;
  out.stage = Stage::B;
  out.l = ctx.l;
  out.m = ctx.m;
  out.d = ctx.d;
  const std::uint64_t n = checked_power(ctx.m, ctx.l, ctx.caps.words, "stage B words");
  std::vector<CMatrix> letter_ops;
  for (int j = 0; j < ctx.m; ++j) letter_ops.push_back(ctx.canon.lambda[j] * ctx.canon.states[j].op());
  out.words.resize(n);
  out.ops.resize(n);
  for_each_index(n, ctx.exec, [&](std::size_t i) {
    const Word w = decode_word(i, ctx.m, ctx.l);
    const CMatrix pi_w = conditional_typical_projector(ctx.hat_labels, w, ctx.delta, ctx.caps).dense;
    const CMatrix y = pi_w * product_povm_element(letter_ops, w) * pi_w;
    out.words[i] = i;
    out.ops[i] = sandwich(y, ctx.canon.inv_sqrt_rho, ctx.l);
  });
  return out;
}

WordIndexedSubPovm stage_C(const WordIndexedSubPovm& b, const PipelineContext& ctx) {
  WordIndexedSubPovm out = b;
  out.stage = Stage::C;
  const CMatrix& p = ctx.typical.dense;
  for_each_index(out.size(), ctx.exec, [&](std::size_t i) { out.ops[i] = hermitian_part(p * b.ops[i] * p); });
  return out;
}

WordIndexedSubPovm stage_D(const WordIndexedSubPovm& c, const PipelineContext& ctx) {
  WordIndexedSubPovm out;
  out.stage = Stage::D;
  out.l = c.l;
  out.m = c.m;
  out.d = c.d;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (ctx.tset.contains(c.words[i])) {
      out.words.push_back(c.words[i]);
      out.ops.push_back(c.ops[i]);
    }
  }
  return out;
}

Cutoff cutoff_projector(const WordIndexedSubPovm& dfam, const PipelineContext& ctx) {
  Cutoff out;
  const Eigen::Index n = ctx.dim();
  std::vector<CMatrix> sandwiched(dfam.size());
  for_each_index(dfam.size(), ctx.exec,
                 [&](std::size_t i) { sandwiched[i] = sandwich(dfam.ops[i], ctx.canon.sqrt_rho, ctx.l); });
  out.omega = CMatrix::Zero(n, n);
  for (const auto& y : sandwiched) out.omega += y;
  out.c = ctx.c();

  const std::vector<const RVector*> weights(ctx.l, &ctx.rho_labels->values());
  out.alpha = 0.0;
  bool first = true;
  for (std::uint64_t label : ctx.typical.selected) {
    const double p = product_basis_mass(weights, {label});
    if (p > 0.0 && (first || p < out.alpha)) {
      out.alpha = p;
      first = false;
    }
  }
  out.delta4_trace = ctx.rho_l.trace().real() - out.omega.trace().real();
  if (out.alpha <= 0.0) {
    out.threshold = std::numeric_limits<double>::infinity();
    out.pi = CMatrix::Zero(n, n);
    return out;
  }
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() * operator_norm(out.omega);
  out.threshold = std::max(out.c * out.alpha * (1.0 - 1e-9), noise);
  out.pi = spectral_projector(out.omega, out.threshold);
  out.rank = static_cast<std::uint64_t>(std::llround(out.pi.trace().real()));
  out.trace_omega_pi = (out.omega * out.pi).trace().real();
  return out;
}

WordIndexedSubPovm stage_E(const WordIndexedSubPovm& dfam, const Cutoff& cut, const PipelineContext& ctx) {
  WordIndexedSubPovm out = dfam;
  out.stage = Stage::E;
  for_each_index(out.size(), ctx.exec, [&](std::size_t i) {
    const CMatrix y = sandwich(dfam.ops[i], ctx.canon.sqrt_rho, ctx.l);
    out.ops[i] = sandwich(cut.pi * y * cut.pi, ctx.canon.inv_sqrt_rho, ctx.l);
  });
  return out;
}

double exact_beta(const WordIndexedSubPovm& e, const PipelineContext& ctx) {
  std::vector<double> ratio(e.size(), 0.0);
  for_each_index(e.size(), ctx.exec, [&](std::size_t i) {
    const double w = ctx.word_weight(e.words[i]);
    if (w < 1e-300) return;
    ratio[i] = operator_norm(sandwich(e.ops[i], ctx.canon.sqrt_rho, ctx.l)) / w;
  });
  double worst = 0.0;
  for (double v : ratio) worst = std::max(worst, v);
  return ctx.tset.mass * worst;
}

std::uint64_t choose_M(double alpha, double beta, double c, double eta, std::uint64_t max_draws) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw NumericError("choose_M: alpha must be positive");
  if (!(eta > 0.0) || !(c > 0.0)) throw NumericError("choose_M: eta and c must be positive");
  if (beta <= 0.0) return 1;
  const double raw = 2.0 * std::numbers::ln2 * (1.0 - std::log2(alpha)) / (eta * eta * c) * beta / alpha;
  if (!std::isfinite(raw) || raw >= static_cast<double>(max_draws)) {
    throw CapExceeded("choose_M: required draw count exceeds the cap");
  }
  return static_cast<std::uint64_t>(std::floor(raw)) + 1;
}

Selection random_select(const WordIndexedSubPovm& e, const PipelineContext& ctx, std::uint64_t M,
                        double eta, std::uint64_t seed, int max_attempts) {
  if (M < 1) throw std::invalid_argument("random_select: M must be at least 1");
  Selection sel;
  const double S = ctx.tset.mass;
  const int l = ctx.l;
  const auto dims = factor_dims(l, ctx.d);

  std::vector<std::size_t> support;
  std::vector<double> cumulative;
  std::vector<double> weight;
  double running = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double w = ctx.word_weight(e.words[i]);
    if (w < 1e-300) {
      ++sel.excluded_words;
      continue;
    }
    support.push_back(i);
    weight.push_back(w);
    running += w / S;
    cumulative.push_back(running);
  }
  sel.tilde.stage = Stage::selected;
  sel.tilde.l = l;
  sel.tilde.m = ctx.m;
  sel.tilde.d = ctx.d;
  if (support.empty()) {
    SelectionAttempt att;
    att.cause = "empty sampling support";
    sel.attempts.push_back(att);
    return sel;
  }

  // X_w = (S / lambda_w) sqrt(rho)^l E_w sqrt(rho)^l and its one-site traces.
  std::vector<std::vector<CMatrix>> traces(support.size());
  for_each_index(support.size(), ctx.exec, [&](std::size_t s) {
    const CMatrix x = (S / weight[s]) * sandwich(e.ops[support[s]], ctx.canon.sqrt_rho, l);
    traces[s].resize(l);
    for (int k = 0; k < l; ++k) traces[s][k] = partial_trace_keep(x, dims, {k});
  });
  std::vector<Word> words(support.size());
  for (std::size_t s = 0; s < support.size(); ++s) words[s] = decode_word(e.words[support[s]], ctx.m, l);
  std::vector<CMatrix> target;
  for (int j = 0; j < ctx.m; ++j) target.push_back(ctx.canon.lambda[j] * ctx.canon.states[j].op());

  const double scale = 1.0 / ((1.0 + eta) * static_cast<double>(M));
  const double marginal_bound = ctx.c_tilde() + ctx.delta * std::sqrt(static_cast<double>(l)) / std::sqrt(static_cast<double>(M));
  const double total = cumulative.back();
  std::vector<std::uint64_t> counts;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    SelectionAttempt att;
    att.attempt = attempt + 1;
    att.seed = attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt));
    Rng rng(att.seed);
    counts.assign(support.size(), 0);
    sel.draws.clear();
    for (std::uint64_t mu = 0; mu < M; ++mu) {
      const double u = rng.uniform01() * total;
      auto pos = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      pos = std::min(pos, support.size() - 1);
      ++counts[pos];
      sel.draws.push_back(e.words[support[pos]]);
    }

    CMatrix sum = CMatrix::Zero(ctx.dim(), ctx.dim());
    for (std::size_t s = 0; s < support.size(); ++s) {
      if (counts[s]) sum += (counts[s] * scale * S / weight[s]) * e.ops[support[s]];
    }
    att.dominance_min_eigenvalue = min_eigenvalue(ctx.typical.dense - sum);
    att.dominated = att.dominance_min_eigenvalue >= -ctx.tol.loewner;

    att.marginal_bound = marginal_bound;
    for (int k = 0; k < l; ++k) {
      std::vector<CMatrix> acc(ctx.m, CMatrix::Zero(ctx.d, ctx.d));
      for (std::size_t s = 0; s < support.size(); ++s) {
        if (counts[s]) acc[words[s][k]] += static_cast<double>(counts[s]) * traces[s][k];
      }
      for (int j = 0; j < ctx.m; ++j) {
        const double dev = trace_norm(acc[j] / static_cast<double>(M) - target[j]);
        att.marginal_max = std::max(att.marginal_max, dev);
      }
    }
    att.marginals_close = att.marginal_max <= marginal_bound;
    if (!att.dominated && !att.marginals_close) {
      att.cause = "sum exceeds typical projector and marginal deviation too large";
    } else if (!att.dominated) {
      att.cause = "sum exceeds typical projector";
    } else if (!att.marginals_close) {
      att.cause = "marginal deviation too large";
    }
    sel.attempts.push_back(att);
    if (att.dominated && att.marginals_close) {
      sel.success = true;
      sel.success_attempt = att.attempt;
      break;
    }
  }

  for (std::size_t s = 0; s < support.size(); ++s) {
    if (!counts[s]) continue;
    sel.tilde.words.push_back(e.words[support[s]]);
    sel.tilde.ops.push_back((counts[s] * scale * S / weight[s]) * e.ops[support[s]]);
    sel.multiplicity.push_back(counts[s]);
  }
  return sel;
}

WordIndexedSubPovm distribute_remainder(const WordIndexedSubPovm& tilde,
                                        const std::vector<std::uint64_t>& multiplicity, double tol) {
  if (tilde.size() == 0) throw std::invalid_argument("distribute_remainder: empty family");
  if (!multiplicity.empty() && multiplicity.size() != tilde.size()) {
    throw DimensionError("distribute_remainder: multiplicity length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < tilde.size(); ++i) total += multiplicity.empty() ? 1.0 : static_cast<double>(multiplicity[i]);
  const CMatrix remainder = identity(tilde.dim()) - tilde.sum();
  const double lo = min_eigenvalue(remainder);
  if (lo < -tol) throw NumericError("distribute_remainder: elements sum beyond the identity");
  WordIndexedSubPovm out = tilde;
  out.stage = Stage::compressed;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double share = (multiplicity.empty() ? 1.0 : static_cast<double>(multiplicity[i])) / total;
    out.ops[i] = hermitian_part(tilde.ops[i] + share * remainder);
  }
  return out;
}

RateLowerBound thm3_lower_bound(double defect, double lambda0, double eps, Eigen::Index d, int l) {
  RateLowerBound out;
  const double limit = lambda0 * lambda0 / 4.0;
  out.applicable = eps >= 0.0 && eps <= limit;
  if (eps <= 0.0) {
    out.raw = l * defect;
  } else {
    const double l0sq = lambda0 * lambda0;
    out.raw = l * (defect + (3.0 * eps / l0sq) * std::log2(2.0 * eps / (l0sq * static_cast<double>(d))));
  }
  out.bound = std::max(0.0, out.raw);
  return out;
}

bool CompressionResult::stage_checks_pass() const {
  return std::all_of(stage_checks.begin(), stage_checks.end(), [](const StageCheck& p) { return p.pass; });
}

bool CompressionResult::typicality_pass() const {
  if (!typicality.all_pass()) return false;
  if (S < 1.0 - m / (delta * delta) - 1e-12) return false;
  for (const auto& c : deletion) {
    if (c.applicable && !c.holds) return false;
  }
  for (const auto& c : conditional_deletion) {
    if (c.applicable && !c.holds) return false;
  }
  return true;
}

namespace {

struct CheckBuilder {
  std::vector<StageCheck>& out;
  double tol;

  void upper(const std::string& name, double value, double bound) {
    out.push_back({name, value, bound, true, value <= bound + tol});
  }
  void lower(const std::string& name, double value, double bound) {
    out.push_back({name, value, bound, false, value >= bound - tol});
  }
};

std::vector<StageCheck> stage_checks(const PipelineContext& ctx, const WordIndexedSubPovm& b,
                                   const WordIndexedSubPovm& c, const WordIndexedSubPovm& dfam,
                                   const WordIndexedSubPovm& e, const Cutoff& cut) {
  std::vector<StageCheck> checks;
  CheckBuilder add{checks, ctx.tol.loewner};
  const double m = ctx.m;
  const double d = static_cast<double>(ctx.d);
  const double dd = ctx.delta * ctx.delta;
  const double r = ctx.r;
  const std::size_t l = ctx.l;
  const std::size_t mm = ctx.m;
  const CMatrix& sr = ctx.canon.sqrt_rho;
  const CMatrix& isr = ctx.canon.inv_sqrt_rho;

  std::vector<CMatrix> target;
  for (int j = 0; j < ctx.m; ++j) target.push_back(ctx.canon.lambda[j] * ctx.canon.states[j].op());

  auto traces = [&](const WordIndexedSubPovm& x) {
    std::vector<double> t(x.size());
    for_each_index(x.size(), ctx.exec,
                   [&](std::size_t i) { t[i] = sandwich(x.ops[i], sr, ctx.l).trace().real(); });
    return t;
  };
  const auto tb = traces(b);
  const auto tc = traces(c);
  const auto td = traces(dfam);
  const auto te = traces(e);

  // Stage B
  {
    std::vector<double> worst(b.size());
    for_each_index(b.size(), ctx.exec, [&](std::size_t i) {
      const CMatrix aw = product_povm_element(ctx.canon.povm, decode_word(b.words[i], ctx.m, ctx.l));
      worst[i] = std::min(min_eigenvalue(b.ops[i]), min_eigenvalue(aw - b.ops[i]));
    });
    add.lower("B: 0 <= B <= a (min eigenvalue)", *std::min_element(worst.begin(), worst.end()), 0.0);
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b.size(); ++i) {
      slack = std::min(slack, tb[i] - (1.0 - m * d / dd) * ctx.word_weight(b.words[i]));
    }
    add.lower("B: Tr(rho B) - (1 - md/delta^2) Tr(rho a)", slack, 0.0);
  }
  const MarginalTable mb = sandwiched_marginals(b, sr, ctx.exec);
  const MarginalTable mc = sandwiched_marginals(c, sr, ctx.exec);
  const MarginalTable md_ = sandwiched_marginals(dfam, sr, ctx.exec);
  const MarginalTable me = sandwiched_marginals(e, sr, ctx.exec);
  const MarginalTable ub = unsandwich(mb, isr);
  const MarginalTable uc = unsandwich(mc, isr);
  const MarginalTable ud = unsandwich(md_, isr);
  const MarginalTable ue = unsandwich(me, isr);
  {
    double order = std::numeric_limits<double>::infinity();
    double trace_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t j = 0; j < mm; ++j) {
        const CMatrix delta1 = target[j] - mb[k][j];
        order = std::min(order, min_eigenvalue(delta1));
        trace_excess = std::max(trace_excess, delta1.trace().real() - ctx.canon.lambda[j] * m * d / dd);
      }
    }
    add.lower("B: Delta1 >= 0 (min eigenvalue)", order, 0.0);
    add.upper("B: Tr Delta1 - lambda_j md/delta^2", trace_excess, 0.0);
    add.upper("B: trace-norm marginal gap B vs a",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return trace_norm(mb[k][j] - target[j]); }),
              m * d / dd);
    add.upper("B: operator-norm marginal gap B vs a",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return operator_norm(ub[k][j] - ctx.canon.povm[j]); }),
              m * d / (r * dd));
  }
  // Stage C
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, tc[i] - tb[i]);
    add.upper("C: Tr(rho C) - Tr(rho B)", worst, 0.0);
    double lower_excess = -std::numeric_limits<double>::infinity();
    double upper_part = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t j = 0; j < mm; ++j) {
        lower_excess = std::max(lower_excess, positive_part_trace(target[j] - mc[k][j]) -
                                                  ctx.canon.lambda[j] * (m * d + 4.0 * d) / dd);
        upper_part = std::max(upper_part, positive_part_trace(mc[k][j] - target[j]));
      }
    }
    add.upper("C: Tr(a - C)_+ - lambda_j (md+4d)/delta^2", lower_excess, 0.0);
    add.upper("C: Tr(C - a)_+", upper_part, (m * d + 4.0 * d) / dd);
    add.upper("C: trace-norm marginal gap C vs B",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return trace_norm(mc[k][j] - mb[k][j]); }),
              (m * m + 4.0 * m * d) / dd);
    add.upper("C: operator-norm marginal gap C vs B",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return operator_norm(uc[k][j] - ub[k][j]); }),
              (m * m * d + 4.0 * m * d) / (r * dd));
  }
  // Stage D
  {
    add.lower("D: typical mass S", ctx.tset.mass, 1.0 - m / dd);
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dfam.size(); ++i) {
      slack = std::min(slack, td[i] - (1.0 - 2.0 * m * m * m * d / (r * r * dd)) * ctx.word_weight(dfam.words[i]));
    }
    if (dfam.size()) add.lower("D: Tr(rho D) - (1 - 2m^3 d/(r^2 delta^2)) Tr(rho a)", slack, 0.0);
    double order = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t j = 0; j < mm; ++j) order = std::min(order, min_eigenvalue(mc[k][j] - md_[k][j]));
    }
    add.lower("D: Delta3 >= 0 (min eigenvalue)", order, 0.0);
    add.upper("D: sum_j Tr Delta3",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return (mc[k][j] - md_[k][j]).trace().real(); }),
              m / dd);
    add.upper("D: trace-norm marginal gap D vs C",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return trace_norm(md_[k][j] - mc[k][j]); }), m / dd);
    add.upper("D: operator-norm marginal gap D vs C",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return operator_norm(ud[k][j] - uc[k][j]); }),
              m / (r * dd));
  }
  // Cutoff
  add.upper("Tr Delta4", cut.delta4_trace, cut.c);
  add.lower("Tr(omega Pi)", cut.trace_omega_pi, 1.0 - 2.0 * cut.c);
  // Stage E
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, te[i] - td[i]);
    if (e.size()) add.upper("E: Tr(rho E) - Tr(rho D)", worst, 0.0);
    add.upper("E: trace-norm marginal gap E vs D",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return trace_norm(me[k][j] - md_[k][j]); }),
              2.0 * m * cut.c);
    add.upper("E: trace-norm marginal gap E vs D (unsandwiched)",
              max_over_k_sum_j(l, mm, [&](auto k, auto j) { return trace_norm(ue[k][j] - ud[k][j]); }),
              2.0 * m * cut.c / r);
  }
  // Every stage stays a sub-POVM.
  for (const auto* x : {&b, &c, &dfam, &e}) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& op : x->ops) lo = std::min(lo, min_eigenvalue(op));
    if (x->size()) lo = std::min(lo, min_eigenvalue(identity(ctx.dim()) - x->sum()));
    if (x->size()) add.lower(std::string("stage ") + stage_name(x->stage) + " is a sub-POVM (min eigenvalue)", lo, 0.0);
  }
  return checks;
}

Ensemble restrict_ensemble(const Ensemble& e, const Support& support) {
  std::vector<DensityMatrix> states;
  for (const auto& s : e.states()) states.emplace_back(support.restrict(s.op()));
  return Ensemble(std::move(states), e.probs());
}

}  // namespace

CompressionResult compress(const DensityMatrix& rho, const Povm& a, const CompressionConfig& cfg,
                           const Ensemble* ensemble, const FidelityMatrix* fidelity) {
  const double eta = cfg.eta.value_or(1.0 / (cfg.delta * cfg.delta));
  if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("eta must lie in (0, 1]");
  if (cfg.nu < 1) throw std::invalid_argument("nu must be at least 1");
  if (cfg.max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");

  const PipelineContext ctx = make_context(rho, a, cfg.l, cfg.delta, cfg.caps, cfg.exec, cfg.tol);
  CompressionResult res;
  res.l = cfg.l;
  res.delta = cfg.delta;
  res.eta = eta;
  res.seed = cfg.seed;
  res.m = ctx.m;
  res.d = ctx.d;
  res.full_dim = rho.dim();
  res.support_restricted = ctx.canon.support.restricted;
  res.outcome_labels = ctx.canon.outcome_labels;
  res.dropped = ctx.canon.dropped;
  res.entropy_rho = spectral_entropy(ctx.canon.rho);
  res.entropy_defect = entropy_defect(ctx.canon.ensemble());
  res.lambda0 = *std::min_element(ctx.canon.lambda.begin(), ctx.canon.lambda.end());
  res.r = ctx.r;
  res.S = ctx.tset.mass;
  res.c = ctx.c();
  res.c_tilde = ctx.c_tilde();
  res.typical_rank = ctx.typical.rank();
  res.typical_set_size = ctx.tset.words.size();

  WordIndexedSubPovm b = stage_B(ctx);
  WordIndexedSubPovm c = stage_C(b, ctx);
  WordIndexedSubPovm dfam = stage_D(c, ctx);
  const Cutoff cut = cutoff_projector(dfam, ctx);
  WordIndexedSubPovm e = stage_E(dfam, cut, ctx);
  res.alpha = cut.alpha;
  res.cutoff_threshold = cut.threshold;
  res.cutoff_rank = cut.rank;
  res.trace_omega_pi = cut.trace_omega_pi;
  res.beta = exact_beta(e, ctx);

  if (cfg.diagnostics) {
    res.stage_checks = stage_checks(ctx, b, c, dfam, e, cut);
    res.product_marginal_gap = 0.0;
    const auto prod = product_povm(ctx.canon.povm, ctx.l, ctx.caps, ctx.exec);
    const auto marg = marginal_povms(prod, ctx.canon.rho, ctx.exec);
    for (const auto& row : marg) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        res.product_marginal_gap = std::max(res.product_marginal_gap, operator_norm(row[j] - ctx.canon.povm[j]));
      }
    }
    res.typicality = verify_projector_bounds(*ctx.rho_labels, ctx.hat_labels, ctx.l, ctx.delta,
                                             ctx.tset.words, ctx.caps, ctx.exec);
    const DensityMatrix rho_support(ctx.canon.rho);
    for (int k = 0; k < ctx.l; ++k) {
      res.deletion.push_back(verify_deletion_monotonicity(rho_support, ctx.l, ctx.delta, k, ctx.caps));
    }
    const std::size_t stride = std::max<std::size_t>(1, ctx.tset.words.size() / 16);
    for (std::size_t s = 0; s < ctx.tset.words.size(); s += stride) {
      const Word w = decode_word(ctx.tset.words[s], ctx.m, ctx.l);
      for (int k = 0; k < ctx.l; ++k) {
        res.conditional_deletion.push_back(verify_deletion_monotonicity(ctx.hat_labels, w, ctx.delta, k, ctx.caps));
      }
    }
  }
  b = {};
  c = {};

  const bool degenerate = e.size() == 0 || cut.alpha <= 0.0 || res.beta <= 0.0;
  res.draws_formula = degenerate ? 1 : choose_M(cut.alpha, res.beta, res.c, eta);
  res.draws_overridden = cfg.m_override.has_value();
  res.draws = cfg.m_override.value_or(res.draws_formula);

  Selection sel = random_select(e, ctx, res.draws, eta, cfg.seed, cfg.max_attempts);
  res.success = sel.success;
  res.success_attempt = sel.success_attempt;
  res.attempts = sel.attempts;
  res.excluded_words = sel.excluded_words;
  res.selected_draws = std::move(sel.draws);

  if (sel.tilde.size() > 0) {
    try {
      res.povm = distribute_remainder(sel.tilde, sel.multiplicity, cfg.tol.loewner);
      res.has_povm = true;
    } catch (const NumericError&) {
      res.has_povm = false;
    }
  }
  if (!res.has_povm) {
    res.success = false;
    res.success_attempt = 0;
    res.conditions.c3 = std::numeric_limits<double>::quiet_NaN();
    res.c3_budget = (ctx.m + 1.0) * (eta + res.c_tilde + ctx.delta * std::sqrt(static_cast<double>(ctx.l)) /
                                                             std::sqrt(static_cast<double>(res.draws)));
    return res;
  }

  res.outcomes = res.povm.size();
  res.rate = std::log2(static_cast<double>(res.outcomes)) / ctx.l;
  const CMatrix total = res.povm.sum();
  res.completeness_error = operator_norm(total - identity(total.rows()));
  res.min_element_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& op : res.povm.ops) res.min_element_eigenvalue = std::min(res.min_element_eigenvalue, min_eigenvalue(op));

  std::optional<Ensemble> restricted;
  std::optional<FidelityMatrix> kept_fidelity;
  ConditionInputs in;
  in.nu = cfg.nu;
  if (ensemble) {
    restricted.emplace(restrict_ensemble(*ensemble, ctx.canon.support));
    in.ensemble = &*restricted;
    if (fidelity) {
      Eigen::MatrixXd cols(fidelity->entries().rows(), ctx.m);
      for (int j = 0; j < ctx.m; ++j) cols.col(j) = fidelity->entries().col(ctx.canon.outcome_labels[j]);
      kept_fidelity.emplace(cols);
      in.fidelity = &*kept_fidelity;
    }
  }
  res.conditions = evaluate_conditions(res.povm, ctx.canon.povm, ctx.canon.rho, in, ctx.exec);
  res.c3_budget = (ctx.m + 1.0) * (eta + res.c_tilde + ctx.delta * std::sqrt(static_cast<double>(ctx.l)) /
                                                           std::sqrt(static_cast<double>(res.draws)));
  res.c3_within_budget = res.conditions.c3 <= res.c3_budget + 1e-9;
  res.rate_bound = thm3_lower_bound(res.entropy_defect, res.lambda0, res.conditions.c3, ctx.d, ctx.l);
  return res;
}

}  // namespace squeeze
