#include "squeeze/typicality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace squeeze {

namespace {

constexpr double kTypicalSlack = 1e-9;

// Collects the indices in [0, n) accepted by pred, in ascending order.
template <class Pred>
std::vector<std::uint64_t> select_indices(std::uint64_t n, Exec exec, Pred&& pred) {
  std::vector<unsigned char> flags(n, 0);
  for_each_index(n, exec, [&](std::size_t i) { flags[i] = pred(static_cast<std::uint64_t>(i)) ? 1 : 0; });
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (flags[i]) out.push_back(i);
  }
  return out;
}

// Word typical block-wise against hats; positions and labels are parallel.
bool conditional_typical(const std::vector<EigenLabeling>& hats, const Word& w, const Word& labels,
                         double delta) {
  const int d = static_cast<int>(hats.front().dim());
  std::vector<std::vector<int>> counts(hats.size(), std::vector<int>(d, 0));
  std::vector<int> block(hats.size(), 0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    ++counts[w[k]][labels[k]];
    ++block[w[k]];
  }
  for (std::size_t j = 0; j < hats.size(); ++j) {
    if (block[j] == 0) continue;
    if (!is_frequency_typical(counts[j], hats[j].values(), block[j], delta)) return false;
  }
  return true;
}

Word erase_position(const Word& w, int k) {
  Word out = w;
  out.erase(out.begin() + k);
  return out;
}

}  // namespace

std::uint64_t checked_power(std::uint64_t base, int exp, std::uint64_t cap, const std::string& what) {
  if (exp < 0) throw DimensionError(what + ": negative exponent");
  std::uint64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && out > cap / base) {
      throw CapExceeded(what + ": " + std::to_string(base) + "^" + std::to_string(exp) +
                        " exceeds the cap " + std::to_string(cap));
    }
    out *= base;
  }
  if (out > cap) {
    throw CapExceeded(what + ": " + std::to_string(out) + " exceeds the cap " + std::to_string(cap));
  }
  return out;
}

Word decode_word(std::uint64_t index, int alphabet, int length) {
  Word w(length);
  for (int k = length - 1; k >= 0; --k) {
    w[k] = static_cast<int>(index % alphabet);
    index /= alphabet;
  }
  return w;
}

std::uint64_t encode_word(const Word& w, int alphabet) {
  std::uint64_t index = 0;
  for (int letter : w) {
    if (letter < 0 || letter >= alphabet) throw DimensionError("encode_word: letter out of range");
    index = index * alphabet + letter;
  }
  return index;
}

std::string word_string(const Word& w, int alphabet) {
  static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (alphabet <= 36) {
      out.push_back(digits[w[k]]);
    } else {
      if (k) out.push_back('.');
      out += std::to_string(w[k]);
    }
  }
  return out;
}

std::vector<int> letter_counts(const Word& w, int alphabet) {
  std::vector<int> counts(alphabet, 0);
  for (int letter : w) {
    if (letter < 0 || letter >= alphabet) throw DimensionError("letter_counts: letter out of range");
    ++counts[letter];
  }
  return counts;
}

RVector empirical_distribution(const Word& w, int alphabet) {
  const auto counts = letter_counts(w, alphabet);
  RVector p(alphabet);
  for (int j = 0; j < alphabet; ++j) p[j] = w.empty() ? 0.0 : static_cast<double>(counts[j]) / w.size();
  return p;
}

bool is_frequency_typical(const std::vector<int>& counts, const RVector& probs, int n, double delta) {
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index t = 0; t < probs.size(); ++t) {
    const double p = std::clamp(probs[t], 0.0, 1.0);
    const double width = delta * root_n * std::sqrt(p * (1.0 - p));
    if (std::abs(counts[t] - n * p) > width + kTypicalSlack) return false;
  }
  return true;
}

EigenLabeling::EigenLabeling(const CMatrix& state) {
  const Spectrum sp = eig_hermitian(state);
  values_ = sp.values.cwiseMax(0.0);
  vectors_ = sp.vectors;
}

CMatrix materialize_product_projector(const std::vector<CMatrix>& bases,
                                      const std::vector<std::uint64_t>& selected) {
  Eigen::Index total = 1;
  for (const auto& b : bases) total *= b.rows();
  if (selected.empty()) return CMatrix::Zero(total, total);
  const int d = static_cast<int>(bases.front().cols());
  const int l = static_cast<int>(bases.size());
  CMatrix u(total, static_cast<Eigen::Index>(selected.size()));
  std::vector<CVector> factors(l);
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const Word labels = decode_word(selected[s], d, l);
    for (int k = 0; k < l; ++k) factors[k] = bases[k].col(labels[k]);
    u.col(static_cast<Eigen::Index>(s)) = tensor_product(factors);
  }
  return hermitian_part(u * u.adjoint());
}

std::vector<std::uint64_t> typical_labels(const EigenLabeling& lab, int l, double delta,
                                          const Caps& caps, Exec exec) {
  const int d = static_cast<int>(lab.dim());
  const std::uint64_t total = checked_power(d, l, caps.dim, "typical projector dimension");
  return select_indices(total, exec, [&](std::uint64_t idx) {
    return is_frequency_typical(letter_counts(decode_word(idx, d, l), d), lab.values(), l, delta);
  });
}

TypicalProjector typical_projector(const EigenLabeling& lab, int l, double delta, const Caps& caps,
                                   Exec exec, bool materialize) {
  TypicalProjector out;
  out.l = l;
  out.bases.assign(l, lab.vectors());
  out.selected = typical_labels(lab, l, delta, caps, exec);
  if (materialize) out.dense = materialize_product_projector(out.bases, out.selected);
  return out;
}

TypicalProjector typical_projector(const DensityMatrix& rho, int l, double delta, const Caps& caps,
                                   Exec exec) {
  return typical_projector(EigenLabeling(rho.op()), l, delta, caps, exec, true);
}

std::vector<std::uint64_t> conditional_typical_labels(const std::vector<EigenLabeling>& hats,
                                                      const Word& w, double delta,
                                                      const Caps& caps) {
  if (hats.empty()) throw DimensionError("conditional_typical_labels: no conditional states");
  const int d = static_cast<int>(hats.front().dim());
  const int l = static_cast<int>(w.size());
  for (int letter : w) {
    if (letter < 0 || letter >= static_cast<int>(hats.size())) {
      throw DimensionError("conditional_typical_labels: letter out of range");
    }
  }
  const std::uint64_t total = checked_power(d, l, caps.dim, "conditional typical projector dimension");
  return select_indices(total, Exec::serial, [&](std::uint64_t idx) {
    return conditional_typical(hats, w, decode_word(idx, d, l), delta);
  });
}

TypicalProjector conditional_typical_projector(const std::vector<EigenLabeling>& hats,
                                               const Word& w, double delta, const Caps& caps,
                                               bool materialize) {
  TypicalProjector out;
  out.l = static_cast<int>(w.size());
  for (int letter : w) out.bases.push_back(hats.at(letter).vectors());
  out.selected = conditional_typical_labels(hats, w, delta, caps);
  if (materialize) out.dense = materialize_product_projector(out.bases, out.selected);
  return out;
}

double product_basis_mass(const std::vector<const RVector*>& weights,
                          const std::vector<std::uint64_t>& selected) {
  if (weights.empty()) return selected.empty() ? 0.0 : 1.0;
  const int d = static_cast<int>(weights.front()->size());
  const int l = static_cast<int>(weights.size());
  double total = 0.0;
  for (std::uint64_t idx : selected) {
    const Word labels = decode_word(idx, d, l);
    double p = 1.0;
    for (int k = 0; k < l; ++k) p *= (*weights[k])[labels[k]];
    total += p;
  }
  return total;
}

bool TypicalSet::contains(std::uint64_t word) const {
  return std::binary_search(words.begin(), words.end(), word);
}

std::string TypicalSet::export_words() const {
  std::string out;
  for (std::uint64_t w : words) {
    out += word_string(decode_word(w, alphabet, l), alphabet);
    out.push_back('\n');
  }
  return out;
}

TypicalSet typical_sequences(const std::vector<double>& lambda, int l, double delta,
                             const Caps& caps, Exec exec) {
  const int m = static_cast<int>(lambda.size());
  const std::uint64_t total = checked_power(m, l, caps.words, "typical sequence enumeration");
  const RVector probs = Eigen::Map<const RVector>(lambda.data(), m);
  TypicalSet out;
  out.delta = delta;
  out.l = l;
  out.alphabet = m;
  out.words = select_indices(total, exec, [&](std::uint64_t idx) {
    return is_frequency_typical(letter_counts(decode_word(idx, m, l), m), probs, l, delta);
  });
  out.probs.reserve(out.words.size());
  for (std::uint64_t idx : out.words) {
    double p = 1.0;
    for (int letter : decode_word(idx, m, l)) p *= lambda[letter];
    out.probs.push_back(p);
    out.mass += p;
  }
  return out;
}

ProjectorBoundsReport verify_projector_bounds(const EigenLabeling& rho,
                                              const std::vector<EigenLabeling>& hats, int l,
                                              double delta, const std::vector<std::uint64_t>& words,
                                              const Caps& caps, Exec exec) {
  ProjectorBoundsReport rep;
  rep.l = l;
  rep.delta = delta;
  rep.d = static_cast<int>(rho.dim());
  rep.m = static_cast<int>(hats.size());
  const auto labels = typical_labels(rho, l, delta, caps, exec);
  rep.trace_pi = labels.size();
  rep.mass = product_basis_mass(std::vector<const RVector*>(l, &rho.values()), labels);
  rep.mass_bound = 1.0 - rep.d / (delta * delta);
  rep.mass_pass = rep.mass >= rep.mass_bound - 1e-12;

  double h = 0.0;
  for (Eigen::Index t = 0; t < rho.dim(); ++t) {
    if (rho.values()[t] > 0.0) h -= rho.values()[t] * std::log2(rho.values()[t]);
  }
  rep.entropy_ratio = rep.trace_pi == 0
                          ? -std::numeric_limits<double>::infinity()
                          : (std::log2(static_cast<double>(rep.trace_pi)) - l * h) / std::sqrt(static_cast<double>(l));

  rep.conditional_bound = 1.0 - static_cast<double>(rep.m) * rep.d / (delta * delta);
  rep.conditional.resize(words.size());
  for_each_index(words.size(), exec, [&](std::size_t s) {
    const Word w = decode_word(words[s], rep.m, l);
    const auto sel = conditional_typical_labels(hats, w, delta, caps);
    std::vector<const RVector*> weights;
    for (int letter : w) weights.push_back(&hats[letter].values());
    rep.conditional[s] = {words[s], product_basis_mass(weights, sel)};
  });
  for (const auto& c : rep.conditional) {
    rep.min_conditional_mass = std::min(rep.min_conditional_mass, c.mass);
    if (c.mass < rep.conditional_bound - 1e-12) rep.conditional_pass = false;
  }
  return rep;
}

DeletionCheck verify_deletion_monotonicity(const DensityMatrix& rho, int l, double delta, int k,
                                           const Caps& caps) {
  if (l < 1 || k < 0 || k >= l) throw DimensionError("verify_deletion_monotonicity: position out of range");
  const Support support = support_of(rho.op());
  const EigenLabeling lab(support.restrict(rho.op()));
  DeletionCheck out;
  out.r = lab.min_eigenvalue();
  out.applicable = out.r > 0.0 && delta >= 2.0 / out.r;
  if (!out.applicable) return out;
  out.delta_prime = delta - 1.0 / out.r;

  const int d = static_cast<int>(lab.dim());
  const std::uint64_t total = checked_power(d, l, caps.dim, "deletion check dimension");
  const auto lhs = typical_labels(lab, l, delta, caps, Exec::serial);
  const auto rhs = select_indices(total, Exec::serial, [&](std::uint64_t idx) {
    const Word rest = erase_position(decode_word(idx, d, l), k);
    return is_frequency_typical(letter_counts(rest, d), lab.values(), l - 1, out.delta_prime);
  });
  const std::vector<CMatrix> bases(l, lab.vectors());
  const CMatrix diff = materialize_product_projector(bases, lhs) - materialize_product_projector(bases, rhs);
  out.min_eigenvalue = min_eigenvalue(diff);
  out.holds = out.min_eigenvalue >= -1e-9;
  return out;
}

DeletionCheck verify_deletion_monotonicity(const std::vector<EigenLabeling>& hats, const Word& w,
                                           double delta, int k, const Caps& caps) {
  const int l = static_cast<int>(w.size());
  if (l < 1 || k < 0 || k >= l) throw DimensionError("verify_deletion_monotonicity: position out of range");
  DeletionCheck out;
  out.r = std::numeric_limits<double>::infinity();
  for (int letter : w) out.r = std::min(out.r, hats.at(letter).min_eigenvalue());
  out.applicable = out.r > 0.0 && delta >= 2.0 / out.r;
  if (!out.applicable) return out;
  out.delta_prime = delta - 1.0 / out.r;

  const int d = static_cast<int>(hats.front().dim());
  const std::uint64_t total = checked_power(d, l, caps.dim, "deletion check dimension");
  const auto lhs = conditional_typical_labels(hats, w, delta, caps);
  const Word w_rest = erase_position(w, k);
  const auto rhs = select_indices(total, Exec::serial, [&](std::uint64_t idx) {
    return conditional_typical(hats, w_rest, erase_position(decode_word(idx, d, l), k), out.delta_prime);
  });
  std::vector<CMatrix> bases;
  for (int letter : w) bases.push_back(hats[letter].vectors());
  const CMatrix diff = materialize_product_projector(bases, lhs) - materialize_product_projector(bases, rhs);
  out.min_eigenvalue = min_eigenvalue(diff);
  out.holds = out.min_eigenvalue >= -1e-9;
  return out;
}

PartialTraceLemmaCheck partial_trace_projection_lemma_check(const CMatrix& c, const CMatrix& pi,
                                                            const CMatrix& pi0, Eigen::Index d1,
                                                            double tol) {
  const Eigen::Index d2 = pi0.rows();
  if (c.rows() != d1 * d2 || pi.rows() != d1 * d2) {
    throw DimensionError("partial_trace_projection_lemma_check: dimension mismatch");
  }
  const CMatrix embedded = tensor_product(CMatrix::Identity(d1, d1), pi0);
  PartialTraceLemmaCheck out;
  out.premise_min_eigenvalue = min_eigenvalue(pi - embedded);
  out.premise = out.premise_min_eigenvalue >= -tol;
  const std::vector<int> dims{static_cast<int>(d1), static_cast<int>(d2)};
  const CMatrix lhs = partial_trace(pi * c * pi, dims, {1});
  const CMatrix rhs = partial_trace(embedded * c * embedded, dims, {1});
  out.min_eigenvalue = min_eigenvalue(lhs - rhs);
  out.holds = out.min_eigenvalue >= -tol;
  return out;
}

}  // namespace squeeze
