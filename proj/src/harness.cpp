#include "squeeze/harness.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "squeeze/suite.hpp"

namespace squeeze {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json optional_number(const std::optional<double>& x) { return x ? number_or_null(*x) : Json(nullptr); }

std::string path_in(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

ExperimentConfig config_or_default(const CliOptions& opt) {
  return opt.config ? load_config(*opt.config) : ExperimentConfig{};
}

std::string output_dir(const CliOptions& opt, const ExperimentConfig& cfg) { return opt.out.value_or(cfg.output_dir); }

// Shared exception mapping for all commands.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << '\n';
    return exit_code::validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::runtime;
  }
}

void require_grid(const ExperimentConfig& cfg) {
  if (cfg.l.empty()) throw ConfigError("grid.l must list at least one block length");
  if (cfg.delta.empty()) throw ConfigError("grid.delta must list at least one delta");
}

}  // namespace

Problem reference_qubit_problem() {
  const CMatrix id = CMatrix::Identity(2, 2);
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  CVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CVector minus(2);
  minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  Ensemble e({DensityMatrix::pure(plus), DensityMatrix::pure(minus)}, {0.5, 0.5});
  return Problem{DensityMatrix(id / 2.0), Povm({0.5 * (id + 0.5 * x), 0.5 * (id - 0.5 * x)}), std::move(e),
                 FidelityMatrix(Eigen::MatrixXd::Identity(2, 2))};
}

Json reference_qubit_problem_json() {
  const Problem p = reference_qubit_problem();
  Json povm = Json::array();
  for (const auto& a : p.povm.elements()) povm.push_back(matrix_to_json(a));
  Json states = Json::array();
  for (const auto& s : p.ensemble->states()) states.push_back(matrix_to_json(s.op()));
  return Json{{"rho", matrix_to_json(p.rho.op())},
              {"povm", povm},
              {"ensemble", {{"states", states}, {"probs", p.ensemble->probs()}}},
              {"fidelity", {{1.0, 0.0}, {0.0, 1.0}}}};
}

CompressionConfig cell_config(const ExperimentConfig& cfg, int l, double delta, std::uint64_t seed, Exec exec) {
  CompressionConfig c;
  c.l = l;
  c.delta = delta;
  c.eta = cfg.eta;
  c.m_override = cfg.m_override;
  c.seed = seed;
  c.nu = cfg.nu;
  c.max_attempts = cfg.max_attempts;
  c.caps = cfg.caps;
  c.tol = cfg.tol;
  c.exec = exec;
  return c;
}

GridRun run_grid(const Problem& problem, const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                 int workers) {
  GridRun run;
  for (int l : cfg.l) {
    for (double delta : cfg.delta) {
      for (std::uint64_t seed : seeds) {
        CellRecord cell;
        cell.l = l;
        cell.delta = delta;
        cell.seed = seed;
        run.cells.push_back(std::move(cell));
      }
    }
  }
  workers = std::max(1, workers);
  const Exec inner = workers > 1 ? Exec::serial : Exec::parallel;
  const Ensemble* ens = problem.ensemble ? &*problem.ensemble : nullptr;
  const FidelityMatrix* fid = problem.fidelity ? &*problem.fidelity : nullptr;
  const auto n = static_cast<std::int64_t>(run.cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::int64_t i = 0; i < n; ++i) {
    CellRecord& cell = run.cells[i];
    try {
      cell.result = compress(problem.rho, problem.povm, cell_config(cfg, cell.l, cell.delta, cell.seed, inner), ens, fid);
      cell.ok = true;
      const ConditionValues& v = cell.result.conditions;
      for (const auto& [name, target] : cfg.condition_targets) {
        std::optional<double> value;
        if (name == "C0") value = v.c0;
        if (name == "C1") value = v.c1;
        if (name == "C2") value = v.c2;
        if (name == "C2half") value = v.c2half;
        if (name == "C3") value = v.c3;
        if (name == "C4") value = v.c4;
        if (name == "C5") value = v.c5;
        cell.target_pass[name] = cell.result.has_povm && value && *value <= target;
      }
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  }
  return run;
}

std::string grid_csv(const GridRun& run) {
  std::string csv = std::string(kCsvHeader) + "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& cell : run.cells) {
    const CompressionResult& r = cell.result;
    const bool have = cell.ok && r.has_povm;
    const std::vector<double> cols{
        static_cast<double>(cell.l),
        cell.delta,
        cell.ok ? r.eta : nan,
        have ? static_cast<double>(r.outcomes) : nan,
        have ? r.rate : nan,
        cell.ok ? r.entropy_defect : nan,
        have ? r.conditions.c3 : nan,
        cell.ok ? r.c3_budget : nan,
        have ? r.rate_bound.bound : nan,
        static_cast<double>(cell.ok && r.success ? r.success_attempt : 0),
    };
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) csv += ',';
      csv += format_g12(cols[c]);
    }
    csv += '\n';
  }
  return csv;
}

Json result_json(const CompressionResult& r) {
  Json attempts = Json::array();
  for (const auto& a : r.attempts) {
    attempts.push_back({{"attempt", a.attempt},
                        {"seed", a.seed},
                        {"dominated", a.dominated},
                        {"marginals_close", a.marginals_close},
                        {"dominance_min_eigenvalue", number_or_null(a.dominance_min_eigenvalue)},
                        {"marginal_max", number_or_null(a.marginal_max)},
                        {"marginal_bound", number_or_null(a.marginal_bound)},
                        {"cause", a.cause}});
  }
  Json checks = Json::array();
  for (const auto& p : r.stage_checks) {
    checks.push_back({{"name", p.name},
                     {"value", number_or_null(p.value)},
                     {"bound", number_or_null(p.bound)},
                     {"direction", p.upper ? "<=" : ">="},
                     {"pass", p.pass}});
  }
  Json cond_masses = Json::array();
  for (const auto& c : r.typicality.conditional) cond_masses.push_back({{"word", c.word}, {"mass", c.mass}});
  auto deletion_json = [](const std::vector<DeletionCheck>& v) {
    Json out = Json::array();
    for (const auto& d : v) {
      out.push_back({{"applicable", d.applicable},
                     {"holds", d.holds},
                     {"r", d.r},
                     {"delta_prime", d.delta_prime},
                     {"min_eigenvalue", number_or_null(d.min_eigenvalue)}});
    }
    return out;
  };
  Json words = Json::array();
  for (std::size_t i = 0; i < r.povm.size(); ++i) words.push_back(word_string(decode_word(r.povm.words[i], r.m, r.l), r.m));
  Json elements = Json::array();
  const auto entries = static_cast<std::uint64_t>(r.povm.dim()) * r.povm.dim() * r.povm.size();
  if (r.has_povm && entries <= 4096) {
    for (const auto& op : r.povm.ops) elements.push_back(matrix_to_json(op));
  }
  Json deviation = Json::array();
  for (const auto& row : r.conditions.deviation) deviation.push_back(row);

  return Json{
      {"l", r.l},
      {"delta", r.delta},
      {"eta", r.eta},
      {"seed", r.seed},
      {"m", r.m},
      {"d", r.d},
      {"full_dim", r.full_dim},
      {"support_restricted", r.support_restricted},
      {"outcome_labels", r.outcome_labels},
      {"dropped_outcomes", r.dropped},
      {"entropy_rho_bits", r.entropy_rho},
      {"entropy_defect_bits", r.entropy_defect},
      {"lambda0", r.lambda0},
      {"r", r.r},
      {"S", r.S},
      {"c", r.c},
      {"c_tilde", r.c_tilde},
      {"alpha", r.alpha},
      {"beta", r.beta},
      {"cutoff_threshold", number_or_null(r.cutoff_threshold)},
      {"typical_rank", r.typical_rank},
      {"typical_set_size", r.typical_set_size},
      {"cutoff_rank", r.cutoff_rank},
      {"trace_omega_pi", r.trace_omega_pi},
      {"draws", r.draws},
      {"draws_formula", r.draws_formula},
      {"draws_overridden", r.draws_overridden},
      {"outcomes", r.outcomes},
      {"rate_bits", r.rate},
      {"excluded_words", r.excluded_words},
      {"success", r.success},
      {"success_attempt", r.success_attempt},
      {"attempts", attempts},
      {"has_povm", r.has_povm},
      {"selected_words", words},
      {"povm_elements", elements},
      {"completeness_error", number_or_null(r.completeness_error)},
      {"min_element_eigenvalue", number_or_null(r.min_element_eigenvalue)},
      {"conditions",
       {{"C0", optional_number(r.conditions.c0)},
        {"C1", optional_number(r.conditions.c1)},
        {"C2", optional_number(r.conditions.c2)},
        {"C2half", number_or_null(r.conditions.c2half)},
        {"C3", number_or_null(r.conditions.c3)},
        {"C4", number_or_null(r.conditions.c4)},
        {"C5", number_or_null(r.conditions.c5)},
        {"deviation", deviation}}},
      {"c3_budget", number_or_null(r.c3_budget)},
      {"c3_within_budget", r.c3_within_budget},
      {"rate_bound", {{"raw", number_or_null(r.rate_bound.raw)}, {"bound", number_or_null(r.rate_bound.bound)}, {"applicable", r.rate_bound.applicable}}},
      {"product_marginal_gap", r.product_marginal_gap},
      {"stage_checks", checks},
      {"stage_checks_pass", r.stage_checks_pass()},
      {"typicality",
       {{"trace_pi", r.typicality.trace_pi},
        {"mass", r.typicality.mass},
        {"mass_bound", r.typicality.mass_bound},
        {"entropy_ratio", number_or_null(r.typicality.entropy_ratio)},
        {"conditional_bound", r.typicality.conditional_bound},
        {"min_conditional_mass", r.typicality.min_conditional_mass},
        {"conditional_masses", cond_masses},
        {"deletion", deletion_json(r.deletion)},
        {"conditional_deletion", deletion_json(r.conditional_deletion)},
        {"pass", r.typicality_pass()}}},
  };
}

Json grid_json(const GridRun& run, const std::vector<std::uint64_t>& seeds) {
  Json cells = Json::array();
  for (const auto& cell : run.cells) {
    Json c{{"l", cell.l}, {"delta", cell.delta}, {"seed", cell.seed}, {"ok", cell.ok}};
    if (cell.ok) {
      c["result"] = result_json(cell.result);
      c["condition_targets"] = cell.target_pass;
    } else {
      c["error"] = cell.error;
    }
    cells.push_back(std::move(c));
  }
  return Json{{"environment", {{"version", kVersion}, {"seeds", seeds}, {"timestamp", utc_timestamp()}}},
              {"cells", cells}};
}

int cmd_validate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!opt.config) throw ConfigError("--config is required");
    const ExperimentConfig cfg = load_config(*opt.config);
    const Problem p = load_problem(cfg);
    out << "ok: state of dimension " << p.rho.dim() << ", POVM with " << p.povm.size() << " outcomes";
    if (p.ensemble) out << ", ensemble of " << p.ensemble->size() << " states";
    if (p.fidelity) out << ", fidelity matrix";
    out << '\n';
    return exit_code::ok;
  });
}

int cmd_compress(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!opt.config) throw ConfigError("--config is required");
    ExperimentConfig cfg = load_config(*opt.config);
    require_grid(cfg);
    if (opt.cap_dim) cfg.caps.dim = *opt.cap_dim;
    const Problem problem = load_problem(cfg);
    const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opt.seed);
    if (seeds.empty()) throw ConfigError("grid.seeds must list at least one seed");
    const GridRun run = run_grid(problem, cfg, seeds, opt.workers.value_or(cfg.workers));
    const std::string dir = output_dir(opt, cfg);
    const std::string csv = grid_csv(run);
    write_file(path_in(dir, "compress.csv"), csv);
    write_file(path_in(dir, "compress_report.json"), grid_json(run, seeds).dump(2) + "\n");
    std::size_t failed = 0;
    for (const auto& c : run.cells) {
      if (!c.ok) {
        ++failed;
        err << "cell l=" << c.l << " delta=" << format_g12(c.delta) << " seed=" << c.seed << " failed: " << c.error
            << '\n';
      }
    }
    out << csv;
    out << "wrote " << run.cells.size() << " rows (" << failed << " failed) to " << path_in(dir, "compress.csv")
        << '\n';
    return exit_code::ok;
  });
}

int cmd_suite(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig cfg = config_or_default(opt);
    if (opt.cap_dim) cfg.caps.dim = *opt.cap_dim;
    const SuiteOptions sopt = suite_options(cfg, opt.seed);
    const SuiteReport rep = run_suite(cfg, sopt);
    for (const auto& c : rep.checks) out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    write_file(path_in(output_dir(opt, cfg), "suite_report.json"), suite_json(rep).dump(2) + "\n");
    return rep.pass() ? exit_code::ok : exit_code::suite;
  });
}

int cmd_holevo(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!opt.config) throw ConfigError("--config is required");
    ExperimentConfig cfg = load_config(*opt.config);
    if (opt.cap_dim) cfg.caps.dim = *opt.cap_dim;
    Problem problem = load_problem(cfg);
    if (!problem.ensemble) throw ConfigError("holevo needs problem.ensemble");
    const Triple t(*problem.ensemble, problem.povm);
    const HolevoReport h = holevo_check(t);
    Json report{{"mutual_information_bits", h.mutual_information},
                {"chi_ensemble_bits", h.chi_ensemble},
                {"chi_measurement_bits", h.chi_measurement},
                {"slack_ensemble", h.slack_ensemble},
                {"slack_measurement", h.slack_measurement}};
    bool pass = h.slack_ensemble >= -1e-9 && h.slack_measurement >= -1e-9;
    try {
      const DualTripleReport d = dual_triple(t);
      report["dual_triple"] = {{"i2_max_gap", d.i2_max_gap},
                               {"average_gap", d.average_gap},
                               {"outcome_labels", d.outcome_labels},
                               {"pass", d.i2_max_gap <= 1e-10 && d.average_gap <= 1e-10}};
      pass = pass && d.i2_max_gap <= 1e-10 && d.average_gap <= 1e-10;
    } catch (const NumericError& e) {
      report["dual_triple"] = {{"error", std::string("rank deficiency: ") + e.what()}};
      err << "dual triple skipped: rank deficiency\n";
    }
    const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opt.seed);
    const int l = cfg.l.empty() ? 3 : cfg.l.front();
    const double delta = cfg.delta.empty() ? 3.0 : cfg.delta.front();
    const std::uint64_t seed = seeds.empty() ? 42 : seeds.front();
    try {
      const ChainReport c = holevo_via_compression_chain(t, cell_config(cfg, l, delta, seed, Exec::parallel));
      Json links = Json::array();
      for (const auto& k : c.links) {
        links.push_back({{"name", k.name}, {"left", k.left}, {"right", k.right}, {"slack", k.slack}});
      }
      report["chain"] = {{"l", c.l},
                         {"delta", delta},
                         {"seed", seed},
                         {"outcomes", c.outcomes},
                         {"epsilon", c.epsilon},
                         {"rate_excess", c.rate_excess},
                         {"fidelity_loss", c.fidelity_loss},
                         {"rate_bits", c.rate},
                         {"chi_bits", c.chi},
                         {"links", links},
                         {"pass", c.pass}};
      pass = pass && c.pass;
    } catch (const CapExceeded& e) {
      report["chain"] = {{"error", e.what()}};
      err << "chain skipped: " << e.what() << '\n';
    }
    report["pass"] = pass;
    write_file(path_in(output_dir(opt, cfg), "holevo_report.json"), report.dump(2) + "\n");
    out << "I(X;Y) = " << format_g12(h.mutual_information) << " bits, chi_ensemble = " << format_g12(h.chi_ensemble)
        << ", chi_measurement = " << format_g12(h.chi_measurement) << '\n';
    out << "slacks: " << format_g12(h.slack_ensemble) << ", " << format_g12(h.slack_measurement) << '\n';
    out << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? exit_code::ok : exit_code::suite;
  });
}

int cmd_chernoff_mc(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = config_or_default(opt);
    const std::uint64_t seed = opt.seed.value_or(cfg.chernoff.seed);
    const int workers = opt.workers.value_or(cfg.workers);
    std::vector<ChernoffPoint> points(cfg.chernoff.grid.size());
    const auto n = static_cast<std::int64_t>(points.size());
    const Exec inner = workers > 1 ? Exec::serial : Exec::parallel;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& g = cfg.chernoff.grid[i];
      points[i] = operator_chernoff_mc(g.dim_k, g.s, g.eta, g.M, cfg.chernoff.trials, seed, inner);
    }
    std::string csv = "dimK,s,eta,M,trials,empirical_tail,bound\n";
    bool pass = true;
    for (const auto& p : points) {
      csv += std::to_string(p.dim_k) + "," + format_g12(p.s) + "," + format_g12(p.eta) + "," + std::to_string(p.M) +
             "," + std::to_string(p.trials) + "," + format_g12(p.empirical_tail) + "," + format_g12(p.bound) + "\n";
      if (!p.pass) {
        pass = false;
        err << "tail above bound at dimK=" << p.dim_k << " s=" << format_g12(p.s) << " eta=" << format_g12(p.eta)
            << " M=" << p.M << '\n';
      }
    }
    write_file(path_in(output_dir(opt, cfg), "chernoff.csv"), csv);
    out << csv;
    return pass ? exit_code::ok : exit_code::suite;
  });
}

}  // namespace squeeze
