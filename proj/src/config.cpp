#include "musim/config.hpp"

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace musim {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"system",
       {"coupling", "a_iso_MHz", "a_par_MHz", "a_perp_MHz", "g_e", "gamma_mu_MHz_per_mT",
        "mu_b_over_h_MHz_per_mT"}},
      {"field", {"b0_mT", "b0_start_mT", "b0_stop_mT", "b0_points"}},
      {"drive",
       {"nu_uw_MHz", "b1_mT", "geometry", "b1_start_mT", "b1_stop_mT", "b1_points",
        "b1_list_mT", "line_fwhm_MHz", "gh_points", "b1_distribution", "b1_rel_fwhm",
        "detuning_MHz"}},
      {"sequence",
       {"template", "t_p_ns", "pulse_ns", "tau_ns", "phase2_deg", "recovery_ns", "t_end_ns",
        "dt_ns", "frame", "lab_dt_ns", "edge_ramp_ns", "max_segments", "tau_start_ns",
        "tau_stop_ns", "tau_points", "phase_cycle"}},
      {"relaxation",
       {"rate_12_per_us", "rate_13_per_us", "rate_14_per_us", "rate_23_per_us",
        "rate_24_per_us", "rate_34_per_us", "rate_T1_per_us"}},
      {"analysis",
       {"model", "init_A", "init_nu_MHz", "init_lambda_per_us", "init_phi_rad", "init_c",
        "window_lo_ns", "window_hi_ns", "multistart", "data_csv", "f_max_MHz"}},
      {"demur", {"exclusion_window_mT", "pad_factor"}},
      {"narrowing",
       {"nu1_start_MHz", "nu1_stop_MHz", "nu1_points", "omega_start_MHz", "omega_stop_MHz",
        "omega_points", "omega_fwhm_MHz", "nu1_fwhm_MHz"}},
      {"synth", {"n_muons", "alpha", "a0_max", "f_dia", "phi_dia_deg", "min_counts"}},
      {"run", {"seed", "workers"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

nlohmann::json parse_scalar(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (end && *end == '\0' && end != v.c_str()) {
    if (d == (long long)d && v.find_first_of(".eE") == std::string::npos)
      return (long long)d;
    return d;
  }
  return v;
}

}  // namespace

nlohmann::json parse_ini(const std::string& text, const std::string& origin) {
  nlohmann::json cfg = nlohmann::json::object();
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      if (!cfg.contains(section)) cfg[section] = nlohmann::json::object();
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated array");
      nlohmann::json arr = nlohmann::json::array();
      std::string body = val.substr(1, val.size() - 2);
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) arr.push_back(parse_scalar(item));
      }
      cfg[section][key] = arr;
    } else {
      cfg[section][key] = parse_scalar(val);
    }
  }
  return cfg;
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  nlohmann::json cfg;
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    try {
      cfg = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  } else {
    cfg = parse_ini(buf.str(), path);
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const nlohmann::json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config root must be an object");
  const auto& known = schema();
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    auto sit = known.find(it.key());
    if (sit == known.end()) throw ConfigError("unknown config section: [" + it.key() + "]");
    if (!it.value().is_object())
      throw ConfigError("config section [" + it.key() + "] must hold key = value entries");
    for (auto kt = it.value().begin(); kt != it.value().end(); ++kt)
      if (!sit->second.count(kt.key()))
        throw ConfigError("unknown key '" + kt.key() + "' in section [" + it.key() + "]");
  }
}

std::string config_hash(const nlohmann::json& cfg) {
  // nlohmann::json orders object keys, so dump() is already canonical.
  std::string s = cfg.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

}  // namespace musim
