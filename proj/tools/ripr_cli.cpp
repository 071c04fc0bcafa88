#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ripr/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Universal reverse information projections, e-statistics and rate experiments"};
  std::string command, config_path, family, alt, query, experiment, out, grid;
  int kmax = 0;
  long support = 0;
  std::uint64_t seed = 0;
  app.add_option("command", command, "project | gain | estat | strength | sequential | subprob | rate | epower");
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--family", family, "family name, KIND:a,b,c or KIND:lo:hi:n");
  app.add_option("--alt", alt, "alternative P, same naming as --family");
  app.add_option("--query", query, "Q for the gain command (default: uniform mixture)");
  app.add_option("--experiment", experiment, "rate: bernoulli | geometric | moment; epower: bernoulli | gaussian");
  app.add_option("--kmax", kmax, "greedy iterations");
  app.add_option("--seed", seed, "64-bit seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--grid", grid, "quadrature window LO:HI:NPTS");
  app.add_option("--support", support, "counting-grid size");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return ripr::kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ripr::kExitUsage;
  }

  ripr::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = ripr::read_config_file(config_path);
    if (!command.empty()) cfg.command = command;
    if (!family.empty()) cfg.family = family;
    if (!alt.empty()) cfg.alt = alt;
    if (!query.empty()) cfg.query = query;
    if (!experiment.empty()) cfg.experiment = experiment;
    if (app.count("--kmax")) cfg.k_max = kmax;
    if (app.count("--seed")) cfg.seed = seed;
    if (!out.empty()) cfg.out = out;
    if (!grid.empty()) ripr::parse_grid_flag(grid, cfg.grid);
    if (app.count("--support")) cfg.grid.support = support;
  } catch (const ripr::usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return ripr::kExitUsage;
  }
  return ripr::run(cfg, std::cerr);
}
