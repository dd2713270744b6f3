// Command-line front end: solve / oracle / compare / sweep, all driven by a
// JSON configuration file. Exit codes: 0 ok, 1 bad configuration, 2 numerical
// failure, 3 anything else.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "msgw/runner.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::string scheme;  // optional override of solver.scheme
};

Args add_common(CLI::App* cmd) {
  Args args;
  cmd->add_option("--config", args.config, "JSON configuration file")->required();
  cmd->add_option("--out", args.out, "output directory")->required();
  cmd->add_option("--scheme", args.scheme,
                  "override solver scheme (hartree_only|gw0|scgw|gw_gamma1)");
  return args;
}

msgw::RunConfig load(const Args& args) {
  msgw::RunConfig cfg = msgw::load_config_file(args.config);
  if (!args.scheme.empty()) cfg.solver.scheme = msgw::scheme_from_string(args.scheme);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-temperature multispecies GW solver"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "run the self-consistent solver");
  CLI::App* oracle = app.add_subcommand("oracle", "run the exact-diagonalization reference");
  CLI::App* compare = app.add_subcommand("compare", "solver vs reference with deviation metrics");
  CLI::App* sweep = app.add_subcommand("sweep", "re-solve across coupling scales");
  Args solve_args = add_common(solve);
  Args oracle_args = add_common(oracle);
  Args compare_args = add_common(compare);
  Args sweep_args = add_common(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) msgw::run_solve(load(solve_args), solve_args.out);
    if (oracle->parsed()) msgw::run_oracle(load(oracle_args), oracle_args.out);
    if (compare->parsed()) msgw::run_compare(load(compare_args), compare_args.out);
    if (sweep->parsed()) msgw::run_sweep(load(sweep_args), sweep_args.out);
  } catch (const msgw::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const msgw::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
