#pragma once

// JSON configuration, matrix interchange ({dim, entries: [[re, im], ...]}
// row-major) and fixed-precision number formatting.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "squeeze/compression.hpp"
#include "squeeze/info_bounds.hpp"

namespace squeeze {

using Json = nlohmann::json;

// Schema or syntax problem in a configuration file. line() is 1-based, 0
// when unknown.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& message, int line = 0);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

Json matrix_to_json(const CMatrix& m);
// `where` names the field in error messages.
CMatrix matrix_from_json(const Json& j, const std::string& where);

// %.12g; NaN prints as "nan".
std::string format_g12(double x);

struct Problem {
  DensityMatrix rho;
  Povm povm;
  std::optional<Ensemble> ensemble;
  std::optional<FidelityMatrix> fidelity;
};

struct ChernoffSettings {
  std::vector<ChernoffGridPoint> grid = default_chernoff_grid();
  int trials = 10000;
  std::uint64_t seed = 7;
};

struct SuiteSettings {
  std::uint64_t seed = 1;
  int instances = 100;
};

struct ExperimentConfig {
  std::optional<Json> problem;  // parsed lazily by load_problem
  std::vector<int> l;
  std::vector<double> delta;
  std::vector<std::uint64_t> seeds;
  std::optional<double> eta;
  std::optional<std::uint64_t> m_override;
  int nu = 2;
  int max_attempts = 32;
  std::map<std::string, double> condition_targets;  // e.g. {"C3": 0.5}
  std::string output_dir = "out";
  Tolerances tol;
  Caps caps;
  int workers = 1;
  ChernoffSettings chernoff;
  SuiteSettings suite;
  std::string source;  // raw text, for line lookups
};

// Throws ConfigError on syntax or schema errors. The grid lists may be
// empty here; commands that need them check.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Builds and validates the problem block; throws ValidationError with the
// offending kind ("completeness", "probability", ...).
Problem load_problem(const ExperimentConfig& cfg);

// Seed list after overrides: --seed beats POVM_SQUEEZE_SEED beats the config.
std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg, std::optional<std::uint64_t> cli_seed);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace squeeze
