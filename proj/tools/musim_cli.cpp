#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "musim/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"musim: coupled electron-muon spin dynamics simulator and analysis toolkit"};
  app.require_subcommand(1);

  musim::RunOptions opt;
  if (const char* root = std::getenv("MUSIM_OUT_ROOT")) opt.out_dir = root;

  app.add_option("--config", opt.config_path, "experiment config (.ini-style or .json)");
  app.add_option("--out-dir", opt.out_dir, "output directory (default: MUSIM_OUT_ROOT or .)");
  app.add_option("--seed", opt.seed, "RNG seed, overrides the config seed")
      ->each([&](const std::string&) { opt.seed_set = true; });
  app.add_option("--workers", opt.workers, "worker threads for sweeps (0 = all cores)");
  app.add_option("--format", opt.format, "artifact format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--verbose", opt.verbose, "progress to stderr");

  const char* subs[] = {"levels", "transitions", "simulate", "demur", "rabi-map",
                        "shift-curve", "narrowing", "fit", "synth"};
  for (const char* s : subs) app.add_subcommand(s);
  CLI::App* rep = app.add_subcommand("reproduce", "run a canned figure recipe");
  std::string figure_id;
  rep->add_option("figure-id", figure_id, "one of the canned figure ids")->required();

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  return musim::run_subcommand(sub, figure_id, opt);
}
