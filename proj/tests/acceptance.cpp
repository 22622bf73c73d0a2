// Acceptance run: one PASS/FAIL line per criterion. Exits 0 unless it
// crashes; with --strict any FAIL gives exit 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "squeeze/harness.hpp"
#include "squeeze/random.hpp"

using namespace squeeze;

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double x) { return format_g12(x); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string where(const CellRecord& c) {
  return "l=" + std::to_string(c.l) + " delta=" + fmt(c.delta) + " seed=" + std::to_string(c.seed);
}

struct GridFixture {
  ExperimentConfig cfg;
  Problem problem;
  GridRun run;
  double seconds = 0.0;
};

GridFixture reference_grid() {
  GridFixture g{load_config(std::string(SQUEEZE_TEST_DATA) + "/reference.json"), reference_qubit_problem(), {}, 0.0};
  g.problem = load_problem(g.cfg);
  const auto t0 = Clock::now();
  g.run = run_grid(g.problem, g.cfg, g.cfg.seeds, 1);
  g.seconds = seconds_since(t0);
  return g;
}

Verdict povm_validity(const GridFixture& g) {
  Verdict v;
  double worst_sum = 0.0;
  double worst_eig = std::numeric_limits<double>::infinity();
  for (const auto& c : g.run.cells) {
    if (!c.ok || !c.result.has_povm) {
      v.fail(where(c) + ": no POVM (" + c.error + ")");
      continue;
    }
    const auto& x = c.result.povm;
    const CMatrix sum = x.sum();
    const double gap = (sum - CMatrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
    worst_sum = std::max(worst_sum, gap);
    for (const auto& op : x.ops) worst_eig = std::min(worst_eig, eigenvalues_hermitian(op).minCoeff());
    if (gap > 1e-9) v.fail(where(c) + ": completeness gap " + fmt(gap));
  }
  if (worst_eig < -1e-10) v.fail("min eigenvalue " + fmt(worst_eig));
  if (g.seconds > 300.0) v.fail("grid took " + fmt(g.seconds) + " s");
  if (v.pass) {
    v.detail = std::to_string(g.run.cells.size()) + " cells, max |sum - I| " + fmt(worst_sum) + ", min eigenvalue " +
               fmt(worst_eig) + ", " + fmt(g.seconds) + " s";
  }
  return v;
}

Verdict marginal_identity(const GridFixture& g) {
  Verdict v;
  double worst = 0.0;
  const CanonicalEnsemble canon = canonical_ensemble(g.problem.rho, g.problem.povm);
  for (const auto& c : g.run.cells) {
    if (!c.ok) {
      v.fail(where(c) + ": " + c.error);
      continue;
    }
    worst = std::max(worst, c.result.product_marginal_gap);
    if (c.result.product_marginal_gap > 1e-10) v.fail(where(c) + ": gap " + fmt(c.result.product_marginal_gap));
  }
  // Independent recomputation on the smallest and largest block lengths.
  for (int l : {g.cfg.l.front(), g.cfg.l.back()}) {
    const WordIndexedSubPovm prod = product_povm(canon.povm, l);
    const MarginalTable t = marginal_povms(prod, canon.rho);
    for (const auto& row : t) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double gap = operator_norm(row[j] - canon.povm[j]);
        worst = std::max(worst, gap);
        if (gap > 1e-10) v.fail("recomputed l=" + std::to_string(l) + ": gap " + fmt(gap));
      }
    }
  }
  if (v.pass) v.detail = "max operator-norm gap " + fmt(worst);
  return v;
}

Verdict c3_budget(const GridFixture& g) {
  Verdict v;
  int successes = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : g.run.cells) {
    if (!c.ok || !c.result.success) continue;
    ++successes;
    const auto& r = c.result;
    const double m = r.m;
    const double d = static_cast<double>(r.d);
    const double d2 = r.delta * r.delta;
    const double cc = (m + 1) * (d + 1) / d2;
    const double ct = 2 * cc + m / d2 + (m * m * d + 4 * m * d) / d2 + m * d / d2;
    const double budget =
        (m + 1) * (r.eta + ct + r.delta * std::sqrt(static_cast<double>(r.l)) / std::sqrt(static_cast<double>(r.draws)));
    worst = std::max(worst, r.conditions.c3 - budget);
    if (r.conditions.c3 > budget + 1e-9) v.fail(where(c) + ": C3 " + fmt(r.conditions.c3) + " > " + fmt(budget));
  }
  if (successes == 0) v.fail("no successful run");
  if (v.pass) v.detail = std::to_string(successes) + " successful runs, max (C3 - budget) " + fmt(worst);
  return v;
}

Verdict stage_bounds(const GridFixture& g) {
  Verdict v;
  std::size_t checks = 0;
  for (const auto& c : g.run.cells) {
    if (!c.ok) {
      v.fail(where(c) + ": " + c.error);
      continue;
    }
    for (const auto& s : c.result.stage_checks) {
      ++checks;
      if (!s.pass) v.fail(where(c) + ": " + s.name + " value " + fmt(s.value) + " bound " + fmt(s.bound));
    }
  }
  if (checks == 0) v.fail("no stage checks recorded");
  if (v.pass) v.detail = std::to_string(checks) + " inequalities";
  return v;
}

Verdict typicality(const GridFixture& g) {
  Verdict v;
  std::size_t deletions = 0;
  for (const auto& c : g.run.cells) {
    if (!c.ok) {
      v.fail(where(c) + ": " + c.error);
      continue;
    }
    const auto& r = c.result;
    const double d2 = r.delta * r.delta;
    const auto& t = r.typicality;
    if (t.mass < 1.0 - static_cast<double>(r.d) / d2 - 1e-12) v.fail(where(c) + ": typical mass " + fmt(t.mass));
    if (t.min_conditional_mass < 1.0 - r.m * static_cast<double>(r.d) / d2 - 1e-12) {
      v.fail(where(c) + ": conditional typical mass " + fmt(t.min_conditional_mass));
    }
    const auto s = std::find_if(r.stage_checks.begin(), r.stage_checks.end(),
                                [](const StageCheck& p) { return p.name == "D: typical mass S"; });
    if (s == r.stage_checks.end()) {
      v.fail(where(c) + ": typical set mass not recorded");
    } else if (s->value < 1.0 - r.m / d2 - 1e-12) {
      v.fail(where(c) + ": S " + fmt(s->value));
    }
    for (const auto* list : {&r.deletion, &r.conditional_deletion}) {
      for (const auto& dc : *list) {
        if (!dc.applicable) continue;
        ++deletions;
        if (!dc.holds) v.fail(where(c) + ": deletion monotonicity, min eigenvalue " + fmt(dc.min_eigenvalue));
      }
    }
    if (!r.typicality_pass()) v.fail(where(c) + ": typicality report");
  }
  // The grid deltas sit below 2/r for this problem, so deletion is also
  // checked at delta = 2/r for every grid length and deleted position.
  std::size_t extra = 0;
  const CanonicalEnsemble canon = canonical_ensemble(g.problem.rho, g.problem.povm);
  std::vector<EigenLabeling> hats;
  double r_hat = 1.0;
  for (const auto& s : canon.states) {
    hats.emplace_back(s.op());
    r_hat = std::min(r_hat, eigenvalues_hermitian(s.op()).minCoeff());
  }
  const double r_rho = eigenvalues_hermitian(canon.rho).minCoeff();
  for (int l : g.cfg.l) {
    for (int k = 0; k < l; ++k) {
      const DeletionCheck plain = verify_deletion_monotonicity(DensityMatrix(canon.rho), l, 2.0 / r_rho, k);
      Word w(static_cast<std::size_t>(l));
      for (int i = 0; i < l; ++i) w[static_cast<std::size_t>(i)] = (i + k) % static_cast<int>(hats.size());
      const DeletionCheck cond = verify_deletion_monotonicity(hats, w, 2.0 / r_hat, k);
      for (const DeletionCheck* dc : {&plain, &cond}) {
        ++extra;
        if (!dc->applicable || !dc->holds) {
          v.fail("l=" + std::to_string(l) + " k=" + std::to_string(k) + " at delta=2/r: min eigenvalue " +
                 fmt(dc->min_eigenvalue));
        }
      }
    }
  }
  if (v.pass) {
    v.detail = std::to_string(g.run.cells.size()) + " cells, " + std::to_string(deletions) +
               " applicable deletion checks on the grid, " + std::to_string(extra) + " at delta = 2/r";
  }
  return v;
}

Verdict rate_lower_bound(const GridFixture& g) {
  Verdict v;
  int applicable = 0;
  for (const auto& c : g.run.cells) {
    if (!c.ok) continue;
    const auto& r = c.result;
    const double eps = r.conditions.c3;
    if (!(eps <= 0.25 * r.lambda0 * r.lambda0)) continue;
    ++applicable;
    const RateLowerBound b = thm3_lower_bound(r.entropy_defect, r.lambda0, eps, r.d, r.l);
    const double log_m = std::log2(static_cast<double>(r.outcomes));
    if (log_m < std::max(0.0, b.raw) - 1e-9) v.fail(where(c) + ": log2 M " + fmt(log_m) + " < " + fmt(b.raw));
  }
  if (v.pass) v.detail = std::to_string(applicable) + " runs inside the applicable range";
  return v;
}

Verdict holevo() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_dual = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(i)));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(3));
    Ensemble e = random_ensemble(d, 2 + rng.below(4), rng, false);
    Povm a = random_povm(d, 2 + rng.below(4), rng);
    const Triple t(std::move(e), std::move(a));
    const HolevoReport h = holevo_check(t);
    worst_slack = std::min({worst_slack, h.slack_ensemble, h.slack_measurement});
    const DualTripleReport dt = dual_triple(t);
    worst_dual = std::max(worst_dual, dt.i2_max_gap);
  }
  double worst_classical = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(2025, static_cast<std::uint64_t>(i)));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(3));
    const std::size_t n = 2 + rng.below(3);
    std::vector<DensityMatrix> states;
    for (std::size_t s = 0; s < n; ++s) {
      const auto p = random_probabilities(static_cast<std::size_t>(d), rng);
      CMatrix diag = CMatrix::Zero(d, d);
      for (Eigen::Index k = 0; k < d; ++k) diag(k, k) = p[static_cast<std::size_t>(k)];
      states.emplace_back(diag);
    }
    const HolevoReport h =
        holevo_check(Triple(Ensemble(std::move(states), random_probabilities(n, rng)), Povm::computational(d)));
    worst_classical = std::max(worst_classical, std::abs(h.slack_ensemble));
  }
  const double secs = seconds_since(t0);
  if (worst_slack < -1e-9) v.fail("min slack " + fmt(worst_slack));
  if (worst_dual > 1e-10) v.fail("duality gap " + fmt(worst_dual));
  if (worst_classical > 1e-8) v.fail("classical equality gap " + fmt(worst_classical));
  if (secs > 60.0) v.fail("took " + fmt(secs) + " s");
  if (v.pass) {
    v.detail = "min slack " + fmt(worst_slack) + ", duality gap " + fmt(worst_dual) + ", classical gap " +
               fmt(worst_classical) + ", " + fmt(secs) + " s";
  }
  return v;
}

Verdict conjugacy() {
  Verdict v;
  double worst_spec = 0.0;
  double worst_entropy = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(2026, static_cast<std::uint64_t>(i)));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(3));
    const DensityMatrix rho = random_density(d, rng);
    const Povm a = random_povm(d, 2 + rng.below(3), rng);
    for (std::size_t j = 0; j < a.size(); ++j) worst_spec = std::max(worst_spec, spectrum_conjugacy_check(rho, a[j]).max_gap);
    std::vector<CMatrix> unitaries;
    for (std::size_t j = 0; j < a.size(); ++j) unitaries.push_back(random_unitary(d, rng));
    const KrausInstrument ins = KrausInstrument::square_root(a, unitaries);
    const CanonicalEnsemble canon = canonical_ensemble(rho, a);
    for (std::size_t k = 0; k < canon.size(); ++k) {
      const PostMeasurement pm = post_measurement_state(ins, rho, static_cast<std::size_t>(canon.outcome_labels[k]));
      worst_entropy = std::max(worst_entropy, std::abs(von_neumann_entropy(pm.state) - von_neumann_entropy(canon.states[k])));
    }
  }
  if (worst_spec > 1e-9) v.fail("spectrum gap " + fmt(worst_spec));
  if (worst_entropy > 1e-8) v.fail("entropy gap " + fmt(worst_entropy));
  if (v.pass) v.detail = "100 pairs, spectrum gap " + fmt(worst_spec) + ", entropy gap " + fmt(worst_entropy);
  return v;
}

Verdict chernoff() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto grid = default_chernoff_grid();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : grid) {
    const ChernoffPoint r = operator_chernoff_mc(p.dim_k, p.s, p.eta, p.M, 10000, 7, Exec::parallel);
    worst = std::max(worst, r.empirical_tail - r.bound - 3 * r.std_error);
    if (r.empirical_tail > r.bound + 3 * r.std_error) {
      v.fail("dimK=" + std::to_string(p.dim_k) + " s=" + fmt(p.s) + " eta=" + fmt(p.eta) + " M=" + std::to_string(p.M) +
             ": tail " + fmt(r.empirical_tail) + " > bound " + fmt(r.bound));
    }
  }
  const double secs = seconds_since(t0);
  if (secs > 120.0) v.fail("took " + fmt(secs) + " s");
  if (v.pass) {
    v.detail = std::to_string(grid.size()) + " points x 10000 trials, max (tail - bound - 3se) " + fmt(worst) + ", " +
               fmt(secs) + " s";
  }
  return v;
}

Verdict rate_trend(const GridFixture& g) {
  Verdict v;
  const double h = von_neumann_entropy(g.problem.rho);
  // Mean rate over seeds per (delta, l).
  std::map<double, std::map<int, std::pair<double, int>>> mean;
  for (const auto& c : g.run.cells) {
    if (!c.ok || !c.result.has_povm) continue;
    auto& slot = mean[c.delta][c.l];
    slot.first += c.result.rate;
    slot.second += 1;
  }
  std::string summary;
  for (const auto& [delta, by_l] : mean) {
    double prev = std::numeric_limits<double>::infinity();
    summary += " delta=" + fmt(delta) + ":";
    for (const auto& [l, acc] : by_l) {
      const double rate = acc.first / acc.second;
      summary += " " + fmt(rate);
      const std::string at = "delta=" + fmt(delta) + " l=" + std::to_string(l);
      if (l >= 4 && !(rate < h)) v.fail(at + ": rate " + fmt(rate) + " not below H(rho) " + fmt(h));
      if (rate > prev + 1e-12) v.fail(at + ": rate " + fmt(rate) + " rises from " + fmt(prev));
      prev = rate;
    }
  }
  v.detail = (v.pass ? std::string("rates") : v.detail + "; rates") + summary;
  return v;
}

Verdict entropy_inequalities() {
  Verdict v;
  std::string summary;
  for (Lemma lemma : {Lemma::mixture_entropy, Lemma::product_superadditivity, Lemma::coarse_graining, Lemma::continuity}) {
    const LemmaReport r = entropy_lemma_checks(lemma, 200, 31 + static_cast<std::uint64_t>(lemma), 4, Exec::parallel);
    summary += std::string(summary.empty() ? "" : ", ") + lemma_name(lemma) + " " + fmt(r.min_slack);
    if (!r.pass || r.min_slack < -1e-9) v.fail(std::string(lemma_name(lemma)) + ": min slack " + fmt(r.min_slack));
    if (r.instances - r.discarded <= 0) v.fail(std::string(lemma_name(lemma)) + ": no admissible instance");
  }
  if (v.pass) v.detail = "200 instances each, min slack: " + summary;
  return v;
}

Verdict determinism(const GridFixture& g) {
  Verdict v;
  const std::string first = grid_csv(g.run);
  const std::string second = grid_csv(run_grid(g.problem, g.cfg, g.cfg.seeds, 1));
  const std::string threaded = grid_csv(run_grid(g.problem, g.cfg, g.cfg.seeds, 2));
  if (first != second) v.fail("repeat run differs");
  if (first != threaded) v.fail("run with two workers differs");
  if (v.pass) v.detail = std::to_string(first.size()) + " CSV bytes identical across three runs";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const GridFixture grid = reference_grid();
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"POVM validity", [&] { return povm_validity(grid); }},
      {"marginal identity", [&] { return marginal_identity(grid); }},
      {"C3 budget", [&] { return c3_budget(grid); }},
      {"stage operator inequalities", [&] { return stage_bounds(grid); }},
      {"typicality", [&] { return typicality(grid); }},
      {"rate lower bound consistency", [&] { return rate_lower_bound(grid); }},
      {"Holevo bounds", holevo},
      {"spectrum conjugacy", conjugacy},
      {"operator Chernoff Monte Carlo", chernoff},
      {"rate trend", [&] { return rate_trend(grid); }},
      {"entropy inequalities", entropy_inequalities},
      {"determinism", [&] { return determinism(grid); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << (i + 1 < 10 ? " " : "") << (i + 1) << ' ' << criteria[i].first
              << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << '/' << criteria.size() << " criteria pass"
            << std::endl;
  return strict && failed > 0 ? 1 : 0;
}
