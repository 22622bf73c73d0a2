#include "squeeze/suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "squeeze/harness.hpp"
#include "squeeze/random.hpp"

namespace squeeze {

namespace {

std::string fmt(double x) { return format_g12(x); }

struct Tally {
  explicit Tally(std::string n) : name(std::move(n)) {}

  std::string name;
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
  SuiteCheck done(const std::string& ok_detail) const { return {name, pass, pass ? ok_detail : detail}; }
};

std::string cell_label(int l, double delta) { return "l=" + std::to_string(l) + " delta=" + fmt(delta); }

// Projector Pi >= I (x) Pi0 on C^d1 (x) C^d2: the range of I (x) Pi0 plus
// a few random directions from its complement.
CMatrix random_dominating_projector(const CMatrix& embedded, Eigen::Index extra, Rng& rng) {
  const Eigen::Index n = embedded.rows();
  const CMatrix complement = CMatrix::Identity(n, n) - embedded;
  const CMatrix g = complement * random_ginibre(n, extra, rng);
  const CMatrix span = hermitian_part(g * g.adjoint());
  return hermitian_part(embedded + spectral_projector(span, 1e-9 * std::max(1.0, operator_norm(span))));
}

}  // namespace

bool SuiteReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.pass; });
}

SuiteOptions suite_options(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed_override) {
  SuiteOptions opt;
  opt.seed = seed_override.value_or(cfg.suite.seed);
  opt.instances = cfg.suite.instances;
  opt.chernoff_trials = cfg.chernoff.trials;
  opt.chernoff_seed = cfg.chernoff.seed;
  opt.chernoff_grid = cfg.chernoff.grid;
  if (!cfg.l.empty()) opt.l = cfg.l;
  if (!cfg.delta.empty()) opt.delta = cfg.delta;
  opt.caps = cfg.caps;
  opt.exec = Exec::parallel;
  return opt;
}

void pipeline_checks(const std::string& label, const Problem& problem, const SuiteOptions& opt,
                     std::vector<SuiteCheck>& out) {
  Tally validity{label + ": POVM validity"};
  Tally marginal{label + ": product marginal identity"};
  Tally stages{label + ": stage bounds"};
  Tally typical{label + ": typicality bounds and deletion"};
  Tally budget{label + ": C3 budget"};
  Tally rate_bound{label + ": rate lower bound"};
  const Ensemble* ens = problem.ensemble ? &*problem.ensemble : nullptr;
  const FidelityMatrix* fid = problem.fidelity ? &*problem.fidelity : nullptr;
  int cells = 0;
  for (int l : opt.l) {
    for (double delta : opt.delta) {
      CompressionConfig cfg;
      cfg.l = l;
      cfg.delta = delta;
      cfg.seed = opt.seed;
      cfg.caps = opt.caps;
      cfg.exec = opt.exec;
      const std::string where = cell_label(l, delta);
      try {
        const CompressionResult r = compress(problem.rho, problem.povm, cfg, ens, fid);
        ++cells;
        if (!r.has_povm) {
          validity.fail(where + ": no POVM produced");
        } else if (r.completeness_error > 1e-9 || r.min_element_eigenvalue < -1e-10) {
          validity.fail(where + ": completeness " + fmt(r.completeness_error) + ", min eigenvalue " +
                        fmt(r.min_element_eigenvalue));
        }
        if (r.product_marginal_gap > 1e-10) marginal.fail(where + ": gap " + fmt(r.product_marginal_gap));
        for (const auto& p : r.stage_checks) {
          if (!p.pass) stages.fail(where + ": " + p.name + " value " + fmt(p.value) + " bound " + fmt(p.bound));
        }
        if (!r.typicality_pass()) typical.fail(where);
        if (r.success && !r.c3_within_budget) {
          budget.fail(where + ": C3 " + fmt(r.conditions.c3) + " > " + fmt(r.c3_budget));
        }
        if (r.has_povm && r.rate_bound.applicable && std::log2(static_cast<double>(r.outcomes)) < r.rate_bound.bound - 1e-9) {
          rate_bound.fail(where + ": log2 M " + fmt(std::log2(static_cast<double>(r.outcomes))) + " < " + fmt(r.rate_bound.bound));
        }
      } catch (const std::exception& e) {
        for (Tally* t : {&validity, &marginal, &stages, &typical, &budget, &rate_bound}) t->fail(where + ": " + e.what());
      }
    }
  }
  const std::string ok = std::to_string(cells) + " cells";
  for (const Tally* t : {&validity, &marginal, &stages, &typical, &budget, &rate_bound}) out.push_back(t->done(ok));
}

void random_checks(const SuiteOptions& opt, std::vector<SuiteCheck>& out) {
  const int n = opt.instances;
  const std::uint64_t base = opt.seed;

  // Holevo slacks, dual triple identity and involution on random triples.
  {
    Tally holevo{"Holevo bounds (random triples)"};
    Tally dual{"dual triple identity (random triples)"};
    double worst_slack = std::numeric_limits<double>::infinity();
    double worst_gap = 0.0;
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(base, 1000 + static_cast<std::uint64_t>(i)));
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(3));
      const std::size_t states = 2 + rng.below(4);
      const std::size_t outcomes = 2 + rng.below(4);
      Ensemble e = random_ensemble(d, states, rng, false);
      Povm a = random_povm(d, outcomes, rng);
      const Triple t(std::move(e), std::move(a));
      const HolevoReport h = holevo_check(t);
      worst_slack = std::min({worst_slack, h.slack_ensemble, h.slack_measurement});
      if (h.slack_ensemble < -1e-9 || h.slack_measurement < -1e-9) {
        holevo.fail("instance " + std::to_string(i) + ": slacks " + fmt(h.slack_ensemble) + ", " +
                    fmt(h.slack_measurement));
      }
      const DualTripleReport dt = dual_triple(t);
      const DualTripleReport back = dual_triple(dt.dual);
      const Eigen::MatrixXd p0 = joint_distribution(t).p;
      const Eigen::MatrixXd p2 = joint_distribution(back.dual).p;
      double involution = 0.0;
      for (Eigen::Index r = 0; r < p2.rows(); ++r) {
        for (Eigen::Index c = 0; c < p2.cols(); ++c) {
          involution = std::max(involution, std::abs(p2(r, c) - p0(back.outcome_labels[r], dt.outcome_labels[c])));
        }
      }
      worst_gap = std::max({worst_gap, dt.i2_max_gap, dt.average_gap});
      if (dt.i2_max_gap > 1e-10 || dt.average_gap > 1e-10 || involution > 1e-9) {
        dual.fail("instance " + std::to_string(i) + ": I2 gap " + fmt(dt.i2_max_gap) + ", average gap " +
                  fmt(dt.average_gap) + ", involution gap " + fmt(involution));
      }
    }
    out.push_back(holevo.done("min slack " + fmt(worst_slack)));
    out.push_back(dual.done("max gap " + fmt(worst_gap)));
  }
  // Commuting states with the matching projective measurement.
  {
    Tally classical{"Holevo equality (classical triples)"};
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(base, 2000 + static_cast<std::uint64_t>(i)));
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(3));
      const std::size_t count = 2 + rng.below(4);
      std::vector<DensityMatrix> states;
      for (std::size_t s = 0; s < count; ++s) {
        const auto p = random_probabilities(static_cast<std::size_t>(d), rng);
        CMatrix diag = CMatrix::Zero(d, d);
        for (Eigen::Index k = 0; k < d; ++k) diag(k, k) = p[k];
        states.emplace_back(diag);
      }
      const Triple t(Ensemble(std::move(states), random_probabilities(count, rng)), Povm::computational(d));
      const HolevoReport h = holevo_check(t);
      worst = std::max(worst, std::abs(h.slack_ensemble));
      if (std::abs(h.slack_ensemble) > 1e-8) classical.fail("instance " + std::to_string(i) + ": slack " + fmt(h.slack_ensemble));
    }
    out.push_back(classical.done("max |slack| " + fmt(worst)));
  }
  // Spectrum conjugacy and post-measurement entropies.
  {
    Tally conj{"spectrum conjugacy"};
    Tally post{"post-measurement entropy"};
    double worst_conj = 0.0;
    double worst_post = 0.0;
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(base, 3000 + static_cast<std::uint64_t>(i)));
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(3));
      const DensityMatrix rho = random_density(d, rng);
      const Povm a = random_povm(d, 2 + rng.below(3), rng);
      std::vector<CMatrix> unitaries;
      for (std::size_t j = 0; j < a.size(); ++j) unitaries.push_back(random_unitary(d, rng));
      const KrausInstrument ins = KrausInstrument::square_root(a, unitaries);
      const CanonicalEnsemble canon = canonical_ensemble(rho, a);
      for (std::size_t j = 0; j < a.size(); ++j) {
        const SpectrumConjugacy sc = spectrum_conjugacy_check(rho, a[j]);
        worst_conj = std::max(worst_conj, sc.max_gap);
        if (sc.max_gap > 1e-9) conj.fail("instance " + std::to_string(i) + ": gap " + fmt(sc.max_gap));
      }
      for (std::size_t k = 0; k < canon.size(); ++k) {
        const auto j = static_cast<std::size_t>(canon.outcome_labels[k]);
        const PostMeasurement pm = post_measurement_state(ins, rho, j);
        const double gap = std::abs(von_neumann_entropy(pm.state) - von_neumann_entropy(canon.states[k]));
        worst_post = std::max(worst_post, gap);
        if (gap > 1e-8) post.fail("instance " + std::to_string(i) + ": entropy gap " + fmt(gap));
      }
    }
    out.push_back(conj.done("max gap " + fmt(worst_conj)));
    out.push_back(post.done("max gap " + fmt(worst_post)));
  }
  for (Lemma lemma : {Lemma::mixture_entropy, Lemma::product_superadditivity, Lemma::coarse_graining, Lemma::continuity}) {
    const LemmaReport rep = entropy_lemma_checks(lemma, n, derive_seed(base, 4000 + static_cast<int>(lemma)), 4, opt.exec);
    out.push_back({std::string("entropy inequality: ") + lemma_name(lemma), rep.pass,
                   std::to_string(rep.instances) + " instances, " + std::to_string(rep.discarded) +
                       " discarded, min slack " + fmt(rep.min_slack)});
  }
  // Partial trace of projected positive operators.
  {
    Tally lemma{"partial-trace projection lemma"};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(base, 5000 + static_cast<std::uint64_t>(i)));
      const Eigen::Index d1 = 2 + static_cast<Eigen::Index>(rng.below(2));
      const Eigen::Index d2 = 2 + static_cast<Eigen::Index>(rng.below(2));
      const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d2 - 1)));
      const CMatrix v = random_unitary(d2, rng).leftCols(k);
      const CMatrix pi0 = v * v.adjoint();
      const CMatrix embedded = tensor_product(CMatrix::Identity(d1, d1), pi0);
      const CMatrix pi = random_dominating_projector(embedded, 1 + static_cast<Eigen::Index>(rng.below(2)), rng);
      const CMatrix g = random_ginibre(d1 * d2, d1 * d2, rng);
      const PartialTraceLemmaCheck c = partial_trace_projection_lemma_check(hermitian_part(g * g.adjoint()), pi, pi0, d1);
      worst = std::min(worst, c.min_eigenvalue);
      if (!c.premise || !c.holds) lemma.fail("instance " + std::to_string(i) + ": min eigenvalue " + fmt(c.min_eigenvalue));
    }
    out.push_back(lemma.done("min eigenvalue " + fmt(worst)));
  }
  // Operator Chernoff bound.
  {
    Tally mc{"operator Chernoff Monte Carlo"};
    for (const auto& p : opt.chernoff_grid) {
      const ChernoffPoint r = operator_chernoff_mc(p.dim_k, p.s, p.eta, p.M, opt.chernoff_trials, opt.chernoff_seed, opt.exec);
      if (!r.pass) {
        mc.fail("dimK=" + std::to_string(p.dim_k) + " s=" + fmt(p.s) + " eta=" + fmt(p.eta) + " M=" +
                std::to_string(p.M) + ": tail " + fmt(r.empirical_tail) + " > bound " + fmt(r.bound));
      }
    }
    out.push_back(mc.done(std::to_string(opt.chernoff_grid.size()) + " grid points, " +
                          std::to_string(opt.chernoff_trials) + " trials each"));
  }
  // Compression chain on a classical and a random qubit triple.
  {
    Tally chain{"compression chain"};
    CompressionConfig cfg;
    cfg.l = 3;
    cfg.delta = 3.0;
    cfg.exec = opt.exec;
    std::vector<std::pair<std::string, Triple>> triples;
    {
      CMatrix s0 = CMatrix::Zero(2, 2);
      CMatrix s1 = CMatrix::Zero(2, 2);
      s0(0, 0) = 0.8;
      s0(1, 1) = 0.2;
      s1(0, 0) = 0.3;
      s1(1, 1) = 0.7;
      triples.emplace_back("classical",
                           Triple(Ensemble({DensityMatrix(s0), DensityMatrix(s1)}, {0.5, 0.5}), Povm::computational(2)));
    }
    for (int s = 0; s < 3; ++s) {
      Rng rng(derive_seed(base, 6000 + static_cast<std::uint64_t>(s)));
      Ensemble e = random_ensemble(2, 2, rng, false);
      Povm a = random_povm(2, 2, rng);
      triples.emplace_back("random " + std::to_string(s), Triple(std::move(e), std::move(a)));
    }
    for (std::size_t s = 0; s < triples.size(); ++s) {
      cfg.seed = derive_seed(base, 7000 + s);
      try {
        const ChainReport rep = holevo_via_compression_chain(triples[s].second, cfg);
        for (const auto& link : rep.links) {
          if (link.slack < -1e-8) chain.fail(triples[s].first + ": " + link.name + " slack " + fmt(link.slack));
        }
      } catch (const std::exception& e) {
        chain.fail(triples[s].first + ": " + e.what());
      }
    }
    out.push_back(chain.done(std::to_string(triples.size()) + " triples at l=3"));
  }
}

SuiteReport run_suite(const ExperimentConfig& cfg, const SuiteOptions& opt) {
  SuiteReport rep;
  pipeline_checks("reference qubit", reference_qubit_problem(), opt, rep.checks);
  if (cfg.problem) {
    try {
      pipeline_checks("config problem", load_problem(cfg), opt, rep.checks);
    } catch (const ValidationError& e) {
      rep.checks.push_back({"config problem: " + e.kind(), false, e.what()});
    }
  }
  random_checks(opt, rep.checks);
  return rep;
}

Json suite_json(const SuiteReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return Json{{"pass", r.pass()}, {"checks", checks}};
}

}  // namespace squeeze
