#pragma once

// Grid orchestration, CSV/JSON reports and the command implementations
// behind the povm-squeeze CLI.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "squeeze/io.hpp"

namespace squeeze {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int runtime = 1;
inline constexpr int validation = 2;
inline constexpr int suite = 3;
}  // namespace exit_code

// rho = I/2 measured by a_{0,1} = (I +- sigma_x / 2) / 2, with the ensemble
// {|+><+|, |-><-|} at weights 1/2 and an identity fidelity matrix.
Problem reference_qubit_problem();
Json reference_qubit_problem_json();

struct CellRecord {
  int l = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  CompressionResult result;
  std::map<std::string, bool> target_pass;  // per configured condition target
};

struct GridRun {
  std::vector<CellRecord> cells;  // grid order: l, then delta, then seed
};

CompressionConfig cell_config(const ExperimentConfig& cfg, int l, double delta, std::uint64_t seed, Exec exec);

// Cells run concurrently on up to `workers` threads; rows keep grid order.
GridRun run_grid(const Problem& problem, const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                 int workers);

inline constexpr const char* kCsvHeader =
    "l,delta,eta,M,rate_bits,entropy_defect_bits,c3_deviation,c3_budget,thm3_lower_bits,success_attempts";

std::string grid_csv(const GridRun& run);
Json result_json(const CompressionResult& r);
Json grid_json(const GridRun& run, const std::vector<std::uint64_t>& seeds);

struct CliOptions {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cap_dim;
};

int cmd_validate(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_compress(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_suite(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_holevo(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_chernoff_mc(const CliOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace squeeze
