#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "musim/config.hpp"
#include "musim/runner.hpp"

using namespace musim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("musim_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::path p = dir / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

const char* kLevelsIni =
    "[system]\n"
    "coupling = isotropic\n"
    "a_iso_MHz = 4500\n"
    "[field]\n"
    "b0_start_mT = 0\n"
    "b0_stop_mT = 10\n"
    "b0_points = 11\n";

}  // namespace

TEST_CASE("INI parser handles sections, scalars and arrays") {
  json cfg = parse_ini(
      "# comment\n"
      "[drive]\n"
      "b1_mT = 0.677\n"
      "nu_uw_MHz = 3900\n"
      "b1_list_mT = [0.4, 0.8, 1.2]\n"
      "geometry = TF\n",
      "test");
  CHECK(cfg["drive"]["b1_mT"].get<double>() == doctest::Approx(0.677));
  CHECK(cfg["drive"]["nu_uw_MHz"].get<long long>() == 3900);
  CHECK(cfg["drive"]["b1_list_mT"].size() == 3);
  CHECK(cfg["drive"]["geometry"].get<std::string>() == "TF");
}

TEST_CASE("INI parser reports malformed input with line numbers") {
  CHECK_THROWS_AS(parse_ini("key = 1\n", "t"), ConfigError);       // outside any section
  CHECK_THROWS_AS(parse_ini("[drive\nb1_mT = 1\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[drive]\nnot a pair\n", "t"), ConfigError);
  try {
    parse_ini("[drive]\n\nbroken line\n", "origin");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("origin:3") != std::string::npos);
  }
}

TEST_CASE("schema validation rejects unknown sections and keys") {
  json good = parse_ini(kLevelsIni, "t");
  CHECK_NOTHROW(validate_config(good));
  json bad_section = good;
  bad_section["wibble"] = json::object();
  CHECK_THROWS_AS(validate_config(bad_section), ConfigError);
  json bad_key = good;
  bad_key["system"]["a_iso_mhz"] = 1.0;  // wrong case
  CHECK_THROWS_AS(validate_config(bad_key), ConfigError);
}

TEST_CASE("config hash is canonical and value-sensitive") {
  json a = parse_ini(kLevelsIni, "t");
  json b;  // same content, different insertion order
  b["field"]["b0_points"] = 11;
  b["field"]["b0_stop_mT"] = 10;
  b["field"]["b0_start_mT"] = 0;
  b["system"]["a_iso_MHz"] = 4500;
  b["system"]["coupling"] = "isotropic";
  CHECK(config_hash(a) == config_hash(b));
  b["field"]["b0_points"] = 12;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("level sweep run writes artifacts and reruns byte-identically") {
  fs::path dir = make_temp_dir("levels");
  fs::path cfg = write_file(dir, "levels.ini", kLevelsIni);
  RunOptions opt;
  opt.config_path = cfg.string();
  opt.out_dir = (dir / "out1").string();
  CHECK(run_subcommand("levels", "", opt) == kExitOk);
  REQUIRE(fs::exists(dir / "out1" / "levels.csv"));
  REQUIRE(fs::exists(dir / "out1" / "manifest.json"));
  json manifest = json::parse(slurp(dir / "out1" / "manifest.json"));
  CHECK(manifest["subcommand"] == "levels");
  CHECK(manifest["config_hash"].get<std::string>().size() > 4);

  opt.out_dir = (dir / "out2").string();
  CHECK(run_subcommand("levels", "", opt) == kExitOk);
  CHECK(slurp(dir / "out1" / "levels.csv") == slurp(dir / "out2" / "levels.csv"));
  fs::remove_all(dir);
}

TEST_CASE("config problems exit with the config error code") {
  fs::path dir = make_temp_dir("cfgerr");
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  CHECK(run_subcommand("levels", "", opt) == kExitConfigError);  // no config at all
  opt.config_path = (dir / "missing.ini").string();
  CHECK(run_subcommand("levels", "", opt) == kExitConfigError);
  fs::path bad = write_file(dir, "bad.ini", "[nosuch]\nkey = 1\n");
  opt.config_path = bad.string();
  CHECK(run_subcommand("levels", "", opt) == kExitConfigError);
  fs::path good = write_file(dir, "good.ini", kLevelsIni);
  opt.config_path = good.string();
  CHECK(run_subcommand("frobnicate", "", opt) == kExitConfigError);
  fs::remove_all(dir);
}

TEST_CASE("invalid physics input exits with the numerical failure code") {
  fs::path dir = make_temp_dir("numerr");
  // Negative window length survives parsing but fails sequence validation.
  fs::path cfg = write_file(dir, "sim.ini",
                            "[system]\n"
                            "coupling = isotropic\n"
                            "a_iso_MHz = 4500\n"
                            "[field]\n"
                            "b0_mT = 82.525\n"
                            "[drive]\n"
                            "b1_mT = 0.9\n"
                            "[sequence]\n"
                            "template = rabi\n"
                            "pulse_ns = 2000\n"
                            "t_end_ns = -5\n");
  RunOptions opt;
  opt.config_path = cfg.string();
  opt.out_dir = (dir / "out").string();
  CHECK(run_subcommand("simulate", "", opt) == kExitNumericalFailure);
  CHECK(fs::exists(dir / "out" / "simulate.failed"));
  fs::remove_all(dir);
}

TEST_CASE("canned reproduction configs are known and valid") {
  auto ids = canned_config_ids();
  CHECK(ids.size() >= 8);
  for (const auto& id : ids) {
    json c = canned_config(id);  // validates internally, throws on breakage
    CHECK(c.contains("subcommand"));
    CHECK(c.contains("config"));
  }
  CHECK_THROWS_AS(canned_config("no-such-figure"), ConfigError);
}
