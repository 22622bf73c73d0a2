#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "squeeze/harness.hpp"
#include "squeeze/suite.hpp"

using namespace squeeze;

namespace {

std::string data(const std::string& name) { return std::string(SQUEEZE_TEST_DATA) + "/" + name; }

std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "squeeze_io_tests" / name;
  std::filesystem::remove_all(dir);
  return dir.string();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

const char* kMinimal = R"({
  "problem": {
    "rho": {"dim": 2, "entries": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]},
    "povm": [{"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], [1, 0]]}]
  },
  "grid": {"l": [2], "delta": [3], "seeds": [4, 5]}
})";

struct EnvSeed {
  explicit EnvSeed(const char* value) { setenv("POVM_SQUEEZE_SEED", value, 1); }
  ~EnvSeed() { unsetenv("POVM_SQUEEZE_SEED"); }
  EnvSeed(const EnvSeed&) = delete;
  EnvSeed& operator=(const EnvSeed&) = delete;
};

}  // namespace

TEST_CASE("format_g12") {
  CHECK(format_g12(0.0) == "0");
  CHECK(format_g12(1.0) == "1");
  CHECK(format_g12(0.25) == "0.25");
  CHECK(format_g12(1.0 / 3.0) == "0.333333333333");
  CHECK(format_g12(1e-20) == "1e-20");
  CHECK(format_g12(std::nan("")) == "nan");
}

TEST_CASE("matrix JSON round trip") {
  CMatrix m(2, 2);
  m << cplx(1, 0), cplx(0.5, -0.25), cplx(0.5, 0.25), cplx(-3, 0);
  const CMatrix back = matrix_from_json(matrix_to_json(m), "m");
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(matrix_from_json(Json::parse(R"({"dim": 2, "entries": [[1, 0]]})"), "m"), ConfigError);
  CHECK_THROWS_AS(matrix_from_json(Json::parse(R"({"dim": 0, "entries": []})"), "m"), ConfigError);
  CHECK_THROWS_AS(matrix_from_json(Json::parse(R"([1, 2])"), "m"), ConfigError);
}

TEST_CASE("parse_config") {
  SUBCASE("defaults and grid") {
    const ExperimentConfig cfg = parse_config(kMinimal);
    CHECK(cfg.l == std::vector<int>{2});
    CHECK(cfg.delta == std::vector<double>{3.0});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK(cfg.nu == 2);
    CHECK(cfg.max_attempts == 32);
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.chernoff.grid.size() == default_chernoff_grid().size());
    CHECK(cfg.problem.has_value());
  }
  SUBCASE("unknown key reports its line") {
    try {
      (void)load_config(data("unknown_key.json"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.kind() == "schema");
      CHECK(e.line() > 1);
      CHECK(std::string(e.what()).find("line " + std::to_string(e.line()) + ": ") != std::string::npos);
      CHECK(std::string(e.what()).find("lenght") != std::string::npos);
    }
  }
  SUBCASE("syntax error reports a line") {
    try {
      (void)parse_config("{\n  \"grid\": {\n    \"l\": [2,\n  }\n}");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.line() >= 3);
    }
  }
  SUBCASE("type errors") {
    CHECK_THROWS_AS(parse_config(R"({"grid": {"l": "two"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"delta": [-1]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  }
}

TEST_CASE("seed precedence") {
  const ExperimentConfig cfg = parse_config(kMinimal);
  unsetenv("POVM_SQUEEZE_SEED");
  CHECK(effective_seeds(cfg, std::nullopt) == std::vector<std::uint64_t>{4, 5});
  CHECK(effective_seeds(cfg, 9) == std::vector<std::uint64_t>{9});
  {
    const EnvSeed env("17");
    CHECK(effective_seeds(cfg, std::nullopt) == std::vector<std::uint64_t>{17});
    CHECK(effective_seeds(cfg, 9) == std::vector<std::uint64_t>{9});
  }
  {
    const EnvSeed env("x1");
    CHECK_THROWS_AS(effective_seeds(cfg, std::nullopt), ConfigError);
  }
}

TEST_CASE("load_problem error kinds") {
  auto kind_of = [](const std::string& file) {
    try {
      (void)load_problem(load_config(data(file)));
    } catch (const ValidationError& e) {
      return e.kind();
    }
    return std::string("none");
  };
  CHECK(kind_of("reference.json") == "none");
  CHECK(kind_of("incomplete_povm.json") == "completeness");
  CHECK(kind_of("negative_probability.json") == "probability");
  CHECK(kind_of("corrupted_povm.json") != "none");

  ExperimentConfig cfg = load_config(data("reference.json"));
  (*cfg.problem)["rho"] = matrix_to_json(CMatrix::Identity(2, 2) * cplx(0.5, 0));
  (*cfg.problem)["rho"]["entries"][0] = Json::array({0.7, 0.0});
  (*cfg.problem)["rho"]["entries"][3] = Json::array({0.3, 0.0});
  try {
    (void)load_problem(cfg);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.kind() == "consistency");
  }
  ExperimentConfig none = parse_config(R"({"grid": {"l": [2]}})");
  CHECK_THROWS_AS(load_problem(none), ConfigError);
}

TEST_CASE("reference qubit problem") {
  const Problem p = reference_qubit_problem();
  CHECK(p.rho.dim() == 2);
  CHECK(von_neumann_entropy(p.rho) == doctest::Approx(1.0));
  REQUIRE(p.ensemble.has_value());
  REQUIRE(p.fidelity.has_value());
  const double h75 = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
  const CanonicalEnsemble c = canonical_ensemble(p.rho, p.povm);
  CHECK(entropy_defect(c.ensemble()) == doctest::Approx(1.0 - h75).epsilon(1e-12));
  const Problem from_json = [] {
    ExperimentConfig cfg = parse_config("{}");
    cfg.problem = reference_qubit_problem_json();
    return load_problem(cfg);
  }();
  CHECK((from_json.rho.op() - p.rho.op()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(from_json.povm.size() == p.povm.size());
}

TEST_CASE("cell_config") {
  ExperimentConfig cfg = parse_config(kMinimal);
  cfg.eta = 0.05;
  cfg.m_override = 7;
  cfg.nu = 3;
  cfg.max_attempts = 5;
  const CompressionConfig c = cell_config(cfg, 4, 2.5, 11, Exec::serial);
  CHECK(c.l == 4);
  CHECK(c.delta == 2.5);
  CHECK(c.seed == 11);
  CHECK(c.eta == 0.05);
  CHECK(c.m_override == std::uint64_t{7});
  CHECK(c.nu == 3);
  CHECK(c.max_attempts == 5);
}

TEST_CASE("grid_csv") {
  const ExperimentConfig cfg = load_config(data("trivial.json"));
  const Problem p = load_problem(cfg);
  const GridRun run = run_grid(p, cfg, cfg.seeds, 1);
  CHECK(run.cells.size() == cfg.l.size() * cfg.delta.size() * cfg.seeds.size());
  const std::string csv = grid_csv(run);
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + static_cast<int>(run.cells.size()));
  for (const auto& cell : run.cells) {
    CHECK(cell.ok);
    CHECK(cell.result.outcomes == 1);
    CHECK(cell.result.rate == 0.0);
  }
  const GridRun again = run_grid(p, cfg, cfg.seeds, 2);
  CHECK(grid_csv(again) == csv);
}

TEST_CASE("commands") {
  std::ostringstream out;
  std::ostringstream err;
  CliOptions opt;
  SUBCASE("validate") {
    opt.config = data("reference.json");
    CHECK(cmd_validate(opt, out, err) == exit_code::ok);
    CHECK(out.str().find("ok:") == 0);
    opt.config = data("incomplete_povm.json");
    CHECK(cmd_validate(opt, out, err) == exit_code::validation);
    CHECK(err.str().find("completeness") != std::string::npos);
    opt.config = data("missing.json");
    CHECK(cmd_validate(opt, out, err) == exit_code::runtime);
  }
  SUBCASE("compress needs a config") {
    CHECK(cmd_compress(opt, out, err) == exit_code::validation);
  }
  SUBCASE("compress writes its outputs") {
    opt.config = data("trivial.json");
    opt.out = scratch("compress");
    CHECK(cmd_compress(opt, out, err) == exit_code::ok);
    const std::string csv = read_file(*opt.out + "/compress.csv");
    CHECK(out.str().find(csv) == 0);
    const Json report = Json::parse(read_file(*opt.out + "/compress_report.json"));
    CHECK(report.is_object());
  }
  SUBCASE("holevo needs an ensemble") {
    opt.config = data("trivial.json");
    CHECK(cmd_holevo(opt, out, err) != exit_code::ok);
    opt.config = data("reference.json");
    opt.out = scratch("holevo");
    CHECK(cmd_holevo(opt, out, err) == exit_code::ok);
  }
}
