#pragma once

// Invariant suites across all modules, reported as a named pass/fail matrix.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "squeeze/io.hpp"

namespace squeeze {

struct SuiteCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::vector<SuiteCheck> checks;
  bool pass() const;
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  int instances = 100;
  int chernoff_trials = 10000;
  std::uint64_t chernoff_seed = 7;
  std::vector<ChernoffGridPoint> chernoff_grid = default_chernoff_grid();
  std::vector<int> l = {2, 3, 4};
  std::vector<double> delta = {2.0, 3.0};
  Caps caps;
  Exec exec = Exec::serial;
};

SuiteOptions suite_options(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed_override);

// Pipeline invariants (POVM validity, marginal identity, stage bounds, typicality,
// C3 budget) for one problem over the (l, delta) grid of `opt`.
void pipeline_checks(const std::string& label, const Problem& problem, const SuiteOptions& opt,
                     std::vector<SuiteCheck>& out);

// Random-instance checks: Holevo slacks, dual-triple identity, classical
// equality, spectrum conjugacy, post-measurement entropy, entropy inequalities, the
// partial-trace projection lemma, the Chernoff Monte Carlo and the chain.
void random_checks(const SuiteOptions& opt, std::vector<SuiteCheck>& out);

// Everything above; the problem block of cfg (if any) is validated and run
// too, and a rejected problem shows up as a failing named check.
SuiteReport run_suite(const ExperimentConfig& cfg, const SuiteOptions& opt);

Json suite_json(const SuiteReport& r);

}  // namespace squeeze
