// povm-squeeze: validate, compress, suite, holevo and chernoff-mc.

#include <iostream>

#include <CLI11.hpp>

#include "squeeze/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Collective POVM compression experiments"};
  app.require_subcommand(1);

  squeeze::CliOptions opt;
  std::string config;
  std::string out;
  int workers = 0;
  std::uint64_t seed = 0;
  std::uint64_t cap_dim = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config, "JSON configuration file");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--workers", workers, "Concurrent grid cells")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Seed overriding the config and POVM_SQUEEZE_SEED");
    sub->add_option("--cap-dim", cap_dim, "Cap on the block dimension d^l")->check(CLI::PositiveNumber);
  };

  using Cmd = int (*)(const squeeze::CliOptions&, std::ostream&, std::ostream&);
  struct Entry {
    CLI::App* app;
    Cmd run;
  };
  const Entry entries[] = {
      {app.add_subcommand("validate", "Check the problem block of a config"), squeeze::cmd_validate},
      {app.add_subcommand("compress", "Run the compression grid and write CSV/JSON"), squeeze::cmd_compress},
      {app.add_subcommand("suite", "Run every invariant suite"), squeeze::cmd_suite},
      {app.add_subcommand("holevo", "Holevo bounds, dual triple and compression chain"), squeeze::cmd_holevo},
      {app.add_subcommand("chernoff-mc", "Operator Chernoff Monte Carlo"), squeeze::cmd_chernoff_mc},
  };
  for (const auto& e : entries) {
    const std::string name = e.app->get_name();
    add_common(e.app, name == "validate" || name == "compress" || name == "holevo");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : squeeze::exit_code::validation;
  }

  for (const auto& e : entries) {
    if (!e.app->parsed()) continue;
    if (!config.empty()) opt.config = config;
    if (!out.empty()) opt.out = out;
    if (e.app->count("--workers")) opt.workers = workers;
    if (e.app->count("--seed")) opt.seed = seed;
    if (e.app->count("--cap-dim")) opt.cap_dim = cap_dim;
    return e.run(opt, std::cout, std::cerr);
  }
  return squeeze::exit_code::runtime;
}
