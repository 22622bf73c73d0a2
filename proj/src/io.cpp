#include "squeeze/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace squeeze {

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

struct Reader {
  const std::string& text;

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(key + ": " + msg, line_of_key(text, key));
  }

  template <class T>
  T get(const Json& j, const std::string& key, const std::string& what) const {
    try {
      return j.get<T>();
    } catch (const Json::exception&) {
      fail(key, "expected " + what);
    }
  }

  double number(const Json& j, const std::string& key) const {
    if (!j.is_number()) fail(key, "expected a number");
    return j.get<double>();
  }

  std::uint64_t unsigned_int(const Json& j, const std::string& key) const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
      fail(key, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
  }

  int positive_int(const Json& j, const std::string& key) const {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 1 || j.get<std::int64_t>() > 1 << 30) {
      fail(key, "expected a positive integer");
    }
    return j.get<int>();
  }

  const Json& object(const Json& parent, const std::string& key) const {
    const Json& j = parent.at(key);
    if (!j.is_object()) fail(key, "expected an object");
    return j;
  }

  const Json& array(const Json& parent, const std::string& key) const {
    const Json& j = parent.at(key);
    if (!j.is_array()) fail(key, "expected an array");
    return j;
  }

  void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) const {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) throw ConfigError(where + ": unknown key \"" + it.key() + "\"", line_of_key(text, it.key()));
    }
  }
};

}  // namespace

ConfigError::ConfigError(const std::string& message, int line)
    : ValidationError("schema", line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

Json matrix_to_json(const CMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("matrix_to_json: square matrix expected");
  Json entries = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) entries.push_back({m(i, k).real(), m(i, k).imag()});
  }
  return Json{{"dim", m.rows()}, {"entries", entries}};
}

CMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) {
    throw ConfigError(where + ": matrix must be an object with \"dim\" and \"entries\"");
  }
  if (!j["dim"].is_number_integer() || j["dim"].get<std::int64_t>() < 1) {
    throw ConfigError(where + ": \"dim\" must be a positive integer");
  }
  const auto dim = j["dim"].get<Eigen::Index>();
  const Json& e = j["entries"];
  if (!e.is_array() || static_cast<Eigen::Index>(e.size()) != dim * dim) {
    throw ConfigError(where + ": \"entries\" must hold dim*dim [re, im] pairs");
  }
  CMatrix m(dim, dim);
  for (Eigen::Index idx = 0; idx < dim * dim; ++idx) {
    const Json& z = e[idx];
    if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
      throw ConfigError(where + ": entry " + std::to_string(idx) + " must be [re, im]");
    }
    m(idx / dim, idx % dim) = cplx(z[0].get<double>(), z[1].get<double>());
  }
  return m;
}

std::string format_g12(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

ExperimentConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  const Reader rd{text};
  if (!root.is_object()) throw ConfigError("top level must be an object", 1);
  rd.only_keys(root, "config",
               {"problem", "grid", "compression", "condition_targets", "output", "tolerances", "caps", "workers",
                "chernoff", "suite"});
  ExperimentConfig cfg;
  cfg.source = text;

  if (root.contains("problem")) {
    const Json& p = rd.object(root, "problem");
    rd.only_keys(p, "problem", {"rho", "ensemble", "povm", "fidelity"});
    cfg.problem = p;
  }
  if (root.contains("grid")) {
    const Json& g = rd.object(root, "grid");
    rd.only_keys(g, "grid", {"l", "delta", "seeds"});
    if (g.contains("l")) {
      for (const auto& v : rd.array(g, "l")) cfg.l.push_back(rd.positive_int(v, "l"));
    }
    if (g.contains("delta")) {
      for (const auto& v : rd.array(g, "delta")) {
        const double d = rd.number(v, "delta");
        if (!(d > 0.0)) rd.fail("delta", "values must be positive");
        cfg.delta.push_back(d);
      }
    }
    if (g.contains("seeds")) {
      for (const auto& v : rd.array(g, "seeds")) cfg.seeds.push_back(rd.unsigned_int(v, "seeds"));
      if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
        rd.fail("seeds", "seeds must be distinct");
      }
    }
  }
  if (root.contains("compression")) {
    const Json& c = rd.object(root, "compression");
    rd.only_keys(c, "compression", {"eta", "m_override", "nu", "max_attempts"});
    if (c.contains("eta") && !c["eta"].is_null()) {
      const double eta = rd.number(c["eta"], "eta");
      if (!(eta > 0.0) || eta > 1.0) rd.fail("eta", "must lie in (0, 1]");
      cfg.eta = eta;
    }
    if (c.contains("m_override") && !c["m_override"].is_null()) {
      cfg.m_override = rd.positive_int(c["m_override"], "m_override");
    }
    if (c.contains("nu")) cfg.nu = rd.positive_int(c["nu"], "nu");
    if (c.contains("max_attempts")) cfg.max_attempts = rd.positive_int(c["max_attempts"], "max_attempts");
  }
  if (root.contains("condition_targets")) {
    const Json& t = rd.object(root, "condition_targets");
    for (auto it = t.begin(); it != t.end(); ++it) {
      static const std::set<std::string> names{"C0", "C1", "C2", "C2half", "C3", "C4", "C5"};
      if (!names.count(it.key())) rd.fail(it.key(), "unknown condition");
      cfg.condition_targets[it.key()] = rd.number(it.value(), it.key());
    }
  }
  if (root.contains("output")) {
    const Json& o = rd.object(root, "output");
    rd.only_keys(o, "output", {"dir"});
    if (o.contains("dir")) cfg.output_dir = rd.get<std::string>(o["dir"], "dir", "a string");
  }
  if (root.contains("tolerances")) {
    const Json& t = rd.object(root, "tolerances");
    rd.only_keys(t, "tolerances", {"loewner", "completeness", "norm"});
    if (t.contains("loewner")) cfg.tol.loewner = rd.number(t["loewner"], "loewner");
    if (t.contains("completeness")) cfg.tol.completeness = rd.number(t["completeness"], "completeness");
    if (t.contains("norm")) cfg.tol.norm = rd.number(t["norm"], "norm");
  }
  if (root.contains("caps")) {
    const Json& c = rd.object(root, "caps");
    rd.only_keys(c, "caps", {"dim", "words", "entries"});
    if (c.contains("dim")) cfg.caps.dim = rd.unsigned_int(c["dim"], "dim");
    if (c.contains("words")) cfg.caps.words = rd.unsigned_int(c["words"], "words");
    if (c.contains("entries")) cfg.caps.entries = rd.unsigned_int(c["entries"], "entries");
  }
  if (root.contains("workers")) cfg.workers = rd.positive_int(root["workers"], "workers");
  if (root.contains("chernoff")) {
    const Json& c = rd.object(root, "chernoff");
    rd.only_keys(c, "chernoff", {"grid", "trials", "seed"});
    if (c.contains("trials")) cfg.chernoff.trials = rd.positive_int(c["trials"], "trials");
    if (c.contains("seed")) cfg.chernoff.seed = rd.unsigned_int(c["seed"], "seed");
    if (c.contains("grid")) {
      cfg.chernoff.grid.clear();
      for (const auto& pt : rd.array(c, "grid")) {
        if (!pt.is_object() || !pt.contains("dimK") || !pt.contains("s") || !pt.contains("eta") || !pt.contains("M")) {
          rd.fail("grid", "chernoff grid points need dimK, s, eta and M");
        }
        const ChernoffGridPoint g{rd.positive_int(pt["dimK"], "dimK"), rd.number(pt["s"], "s"),
                                  rd.number(pt["eta"], "eta"), rd.positive_int(pt["M"], "M")};
        if (!(g.s > 0.0) || g.s > 1.0) rd.fail("s", "must lie in (0, 1]");
        if (!(g.eta > 0.0)) rd.fail("eta", "must be positive");
        cfg.chernoff.grid.push_back(g);
      }
    }
  }
  if (root.contains("suite")) {
    const Json& s = rd.object(root, "suite");
    rd.only_keys(s, "suite", {"seed", "instances"});
    if (s.contains("seed")) cfg.suite.seed = rd.unsigned_int(s["seed"], "seed");
    if (s.contains("instances")) cfg.suite.instances = rd.positive_int(s["instances"], "instances");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

Problem load_problem(const ExperimentConfig& cfg) {
  if (!cfg.problem) throw ConfigError("config has no \"problem\" block");
  const Json& p = *cfg.problem;
  const Reader rd{cfg.source};
  if (!p.contains("povm")) rd.fail("problem", "\"povm\" is required");
  std::vector<CMatrix> elements;
  const Json& pj = rd.array(p, "povm");
  if (pj.empty()) rd.fail("povm", "at least one element is required");
  for (std::size_t j = 0; j < pj.size(); ++j) elements.push_back(matrix_from_json(pj[j], "povm[" + std::to_string(j) + "]"));
  for (const auto& e : elements) {
    if (e.rows() != elements.front().rows()) throw ValidationError("shape", "POVM elements differ in dimension");
  }
  Povm povm(std::move(elements));

  std::optional<Ensemble> ensemble;
  if (p.contains("ensemble")) {
    const Json& e = rd.object(p, "ensemble");
    if (!e.contains("states") || !e.contains("probs")) rd.fail("ensemble", "needs \"states\" and \"probs\"");
    std::vector<DensityMatrix> states;
    const Json& sj = rd.array(e, "states");
    for (std::size_t i = 0; i < sj.size(); ++i) {
      states.emplace_back(matrix_from_json(sj[i], "ensemble.states[" + std::to_string(i) + "]"));
    }
    std::vector<double> probs;
    for (const auto& v : rd.array(e, "probs")) probs.push_back(rd.number(v, "probs"));
    ensemble.emplace(std::move(states), std::move(probs));
    if (ensemble->dim() != povm.dim()) throw ValidationError("shape", "ensemble and POVM dimensions differ");
  }
  std::optional<DensityMatrix> rho;
  if (p.contains("rho")) {
    rho.emplace(matrix_from_json(p["rho"], "rho"));
    if (rho->dim() != povm.dim()) throw ValidationError("shape", "rho and POVM dimensions differ");
  }
  if (!rho && !ensemble) rd.fail("problem", "either \"rho\" or \"ensemble\" is required");
  if (rho && ensemble) {
    const double gap = (rho->op() - ensemble_average(*ensemble).op()).cwiseAbs().maxCoeff();
    if (gap > 1e-9) throw ValidationError("consistency", "ensemble average differs from rho");
  }
  std::optional<FidelityMatrix> fidelity;
  if (p.contains("fidelity")) {
    if (!ensemble) rd.fail("fidelity", "a fidelity matrix needs an ensemble");
    const Json& fj = rd.array(p, "fidelity");
    Eigen::MatrixXd f(fj.size(), povm.size());
    if (fj.size() != ensemble->size()) throw ValidationError("shape", "fidelity needs one row per state");
    for (std::size_t i = 0; i < fj.size(); ++i) {
      if (!fj[i].is_array() || fj[i].size() != povm.size()) {
        throw ValidationError("shape", "fidelity needs one column per POVM outcome");
      }
      for (std::size_t j = 0; j < povm.size(); ++j) f(i, j) = rd.number(fj[i][j], "fidelity");
    }
    fidelity.emplace(f);
  }
  DensityMatrix state = rho ? *rho : ensemble_average(*ensemble);
  return Problem{std::move(state), std::move(povm), std::move(ensemble), std::move(fidelity)};
}

std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg, std::optional<std::uint64_t> cli_seed) {
  if (cli_seed) return {*cli_seed};
  if (const char* env = std::getenv("POVM_SQUEEZE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const std::uint64_t s = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return {s};
    } catch (const std::exception&) {
      throw ConfigError(std::string("POVM_SQUEEZE_SEED is not an unsigned integer: ") + env);
    }
  }
  return cfg.seeds;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace squeeze
