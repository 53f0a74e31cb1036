#include <CLI11.hpp>

#include "qcdir/commands.hpp"

int main(int argc, char** argv) {
  using namespace qcdir::commands;
  CLI::App app{"Beltrami and divergence-form Dirichlet solvers with singularity criteria"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  int grid_n = 0;
  app.add_option("--out-dir", o.out_dir, "directory for fields, traces and manifest.json")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* n_opt = app.add_option("--grid-n", grid_n, "override the grid size (power of two >= 8)");
  app.add_flag("--quiet", o.quiet, "print errors only");
  app.fallthrough();

  std::string config;
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const std::string&, const Options&);
  };
  const Sub subs[] = {
      {"solve-beltrami", "Dirichlet problem for the Beltrami equation with a source", solve_beltrami},
      {"solve-poisson", "Dirichlet problem for div(A grad u) = g", solve_poisson_command},
      {"audit-criteria", "singularity criteria at boundary points", audit_criteria},
      {"qc-map", "mu-conformal map of the plane", qc_map},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help)->add_option("config", config)->required();

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) o.seed = seed;
  if (*n_opt) o.grid_n = grid_n;
  for (const auto& s : subs)
    if (app.got_subcommand(s.name)) return s.run(config, o);
  return 1;
}
