#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace musim {

struct RunOptions {
  std::string config_path;     // empty for reproduce subcommands with canned configs
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool seed_set = false;       // CLI --seed overrides the config seed
  int workers = 0;
  std::string format = "csv";  // csv | json
  bool verbose = false;
};

// Exit codes: 0 success, 2 config error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

// Executes one subcommand (levels, transitions, simulate, demur, rabi-map,
// shift-curve, narrowing, fit, synth, reproduce) and writes artifacts plus a
// manifest JSON into out_dir. `arg` carries the reproduce figure id.
int run_subcommand(const std::string& subcommand, const std::string& arg, const RunOptions& opt);

// Canned configs backing `reproduce <figure-id>`; throws on unknown id.
nlohmann::json canned_config(const std::string& figure_id);
std::vector<std::string> canned_config_ids();

}  // namespace musim
