#include "musim/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <sstream>

#include "musim/analytic.hpp"
#include "musim/config.hpp"
#include "musim/csv.hpp"
#include "musim/fit.hpp"
#include "musim/levels.hpp"
#include "musim/maps.hpp"
#include "musim/parallel.hpp"
#include "musim/propagate.hpp"
#include "musim/spectrum.hpp"
#include "musim/synth.hpp"

namespace musim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---- config accessors ------------------------------------------------------

double num(const json& cfg, const std::string& sec, const std::string& key, double dflt) {
  if (!cfg.contains(sec) || !cfg[sec].contains(key)) return dflt;
  if (!cfg[sec][key].is_number())
    throw ConfigError("[" + sec + "] " + key + " must be a number");
  return cfg[sec][key].get<double>();
}

double num_req(const json& cfg, const std::string& sec, const std::string& key) {
  if (!cfg.contains(sec) || !cfg[sec].contains(key))
    throw ConfigError("missing required key '" + key + "' in section [" + sec + "]");
  return num(cfg, sec, key, 0.0);
}

std::string str(const json& cfg, const std::string& sec, const std::string& key,
                const std::string& dflt) {
  if (!cfg.contains(sec) || !cfg[sec].contains(key)) return dflt;
  if (!cfg[sec][key].is_string())
    throw ConfigError("[" + sec + "] " + key + " must be a string");
  return cfg[sec][key].get<std::string>();
}

SpinSystem sys_from(const json& cfg) {
  std::string coupling = str(cfg, "system", "coupling", "isotropic");
  SpinSystem sys;
  double g_e = num(cfg, "system", "g_e", 2.002319);
  if (coupling == "isotropic") {
    sys = SpinSystem::isotropic(num_req(cfg, "system", "a_iso_MHz"), g_e);
  } else if (coupling == "axial") {
    sys = SpinSystem::axial(num_req(cfg, "system", "a_par_MHz"),
                            num_req(cfg, "system", "a_perp_MHz"), g_e);
  } else {
    throw ConfigError("[system] coupling must be isotropic or axial");
  }
  sys.gamma_mu = num(cfg, "system", "gamma_mu_MHz_per_mT", sys.gamma_mu);
  sys.mu_b_over_h = num(cfg, "system", "mu_b_over_h_MHz_per_mT", sys.mu_b_over_h);
  sys.validate();
  return sys;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("grid needs at least 1 point");
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return v;
}

std::vector<double> b0_list_from(const json& cfg) {
  if (cfg.contains("field") && cfg["field"].contains("b0_mT"))
    return {num_req(cfg, "field", "b0_mT")};
  double lo = num_req(cfg, "field", "b0_start_mT");
  double hi = num_req(cfg, "field", "b0_stop_mT");
  int n = int(num(cfg, "field", "b0_points", 21));
  return linspace(lo, hi, n);
}

std::vector<double> b1_list_from(const json& cfg) {
  if (cfg.contains("drive") && cfg["drive"].contains("b1_list_mT")) {
    std::vector<double> v;
    for (const auto& x : cfg["drive"]["b1_list_mT"]) v.push_back(x.get<double>());
    return v;
  }
  if (cfg.contains("drive") && cfg["drive"].contains("b1_start_mT"))
    return linspace(num_req(cfg, "drive", "b1_start_mT"),
                    num_req(cfg, "drive", "b1_stop_mT"),
                    int(num(cfg, "drive", "b1_points", 11)));
  return {num_req(cfg, "drive", "b1_mT")};
}

Geometry geom_from(const json& cfg) {
  std::string g = str(cfg, "drive", "geometry", "LF");
  if (g == "LF") return Geometry::LF;
  if (g == "TF") return Geometry::TF;
  throw ConfigError("[drive] geometry must be LF or TF");
}

RelaxationModel relax_from(const json& cfg) {
  RelaxationModel r;
  const int pairs[6][2] = {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
  for (const auto& p : pairs) {
    std::string key = "rate_" + std::to_string(p[0]) + std::to_string(p[1]) + "_per_us";
    double v = num(cfg, "relaxation", key, 0.0);
    if (v != 0.0) r.set_pair(p[0], p[1], v);
  }
  r.rate_T1_us = num(cfg, "relaxation", "rate_T1_per_us", 0.0);
  r.validate();
  return r;
}

PropagateOptions popt_from(const json& cfg) {
  PropagateOptions p;
  std::string frame = str(cfg, "sequence", "frame", "rotating");
  if (frame == "rotating") p.frame = Frame::Rotating;
  else if (frame == "lab") p.frame = Frame::Lab;
  else throw ConfigError("[sequence] frame must be rotating or lab");
  p.dt_ns = num(cfg, "sequence", "dt_ns", 1.0);
  p.lab_dt_ns = num(cfg, "sequence", "lab_dt_ns", 0.01);
  p.edge_ramp_ns = num(cfg, "sequence", "edge_ramp_ns", 0.0);
  return p;
}

// Drive frequency: explicit, or resonant with transition (i,j) at b0_ref.
double nu_uw_from(const json& cfg, const SpinSystem& sys, double b0_ref, int i = 3,
                  int j = 4) {
  double v = num(cfg, "drive", "nu_uw_MHz", 0.0);
  if (v > 0.0) return v;
  return transition_table(sys, b0_ref).get(i, j).nu_MHz;
}

PulseSequence seq_from(const json& cfg, double b1, double nu_uw, Geometry geom) {
  std::string tpl = str(cfg, "sequence", "template", "free");
  double t_p = num(cfg, "sequence", "t_p_ns", 0.0);
  double pulse = num(cfg, "sequence", "pulse_ns", 100.0);
  double t_end = num(cfg, "sequence", "t_end_ns", 2000.0);
  if (tpl == "free") {
    PulseSequence s;
    s.t_end_ns = t_end;
    s.geometry = geom;
    return s;
  }
  if (tpl == "rabi") return rabi_sequence(t_p, pulse, b1, nu_uw, t_end, geom);
  if (tpl == "ramsey")
    return ramsey_sequence(t_p, pulse, num(cfg, "sequence", "tau_ns", 0.0), b1, nu_uw,
                           num(cfg, "sequence", "phase2_deg", 0.0) * kPi / 180.0, t_end,
                           geom);
  if (tpl == "transient_nutation")
    return transient_nutation_sequence(t_p, pulse, b1, nu_uw, t_end, geom);
  if (tpl == "inversion_recovery")
    return inversion_recovery_sequence(t_p, pulse, b1, nu_uw,
                                       num(cfg, "sequence", "recovery_ns", 500.0), geom);
  if (tpl == "demur_cw") return demur_cw_sequence(b1, nu_uw, t_end, geom);
  throw ConfigError("[sequence] unknown template: " + tpl);
}

// ---- artifact writing ------------------------------------------------------

struct Run {
  fs::path out;
  std::string format;
  json manifest;
  std::vector<std::string> artifacts;

  void table(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
    if (format == "json") {
      json j;
      j["columns"] = header;
      j["rows"] = json::array();
      for (const auto& r : rows) {
        json row = json::array();
        for (double v : r)
          row.push_back(std::isnan(v) ? json() : json(v));
        j["rows"].push_back(row);
      }
      write_json(name + ".json", j);
    } else {
      CsvWriter w(header);
      for (const auto& r : rows) w.add_row(r);
      w.write((out / (name + ".csv")).string());
      artifacts.push_back(name + ".csv");
    }
  }

  void write_json(const std::string& file, const json& j) {
    std::ofstream f(out / file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / file).string());
    f << j.dump(2) << '\n';
    artifacts.push_back(file);
  }
};

// ---- subcommand drivers ----------------------------------------------------

void run_levels(const json& cfg, Run& run) {
  SpinSystem sys = sys_from(cfg);
  std::vector<double> b0 = b0_list_from(cfg);
  BreitRabiSweep sweep = breit_rabi_sweep(sys, b0);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < b0.size(); ++k) {
    const auto& e = sweep.diagrams[k].energies_MHz;
    rows.push_back({b0[k], e(0), e(1), e(2), e(3)});
  }
  run.table("levels", {"b0_mT", "e1_MHz", "e2_MHz", "e3_MHz", "e4_MHz"}, rows);
}

void run_transitions(const json& cfg, Run& run) {
  SpinSystem sys = sys_from(cfg);
  std::vector<std::vector<double>> rows;
  for (double b0 : b0_list_from(cfg)) {
    TransitionTable t = transition_table(sys, b0);
    for (const auto& tr : t.pairs)
      rows.push_back({b0, double(tr.i), double(tr.j), tr.nu_MHz, tr.gamma_MHz_per_mT});
  }
  run.table("transitions", {"b0_mT", "i", "j", "nu_MHz", "gamma_MHz_per_mT"}, rows);
}

void run_simulate(const json& cfg, Run& run, bool with_spectrum) {
  SpinSystem sys = sys_from(cfg);
  double b0 = b0_list_from(cfg).at(0);
  Geometry geom = geom_from(cfg);
  double b1 = b1_list_from(cfg).at(0);
  double nu_uw = nu_uw_from(cfg, sys, b0);
  PulseSequence seq = seq_from(cfg, b1, nu_uw, geom);
  auto res = propagate(sys, b0, seq, relax_from(cfg), popt_from(cfg));
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < res.trace.size(); ++k)
    rows.push_back({res.trace.times_ns[k], res.trace.values[k]});
  run.table("trace", {"t_ns", "value"}, rows);
  if (with_spectrum) {
    double t_p = num(cfg, "sequence", "t_p_ns", 0.0);
    AsymmetryTrace tail;
    for (std::size_t k = 0; k < res.trace.size(); ++k)
      if (res.trace.times_ns[k] >= t_p) {
        tail.times_ns.push_back(res.trace.times_ns[k] - t_p);
        tail.values.push_back(res.trace.values[k]);
      }
    Spectrum s = fft_spectrum(tail, Window::Hann, int(num(cfg, "demur", "pad_factor", 8)));
    std::vector<std::vector<double>> srows;
    for (std::size_t k = 0; k < s.freqs_MHz.size(); ++k)
      srows.push_back({s.freqs_MHz[k], s.magnitude[k]});
    run.table("spectrum", {"freq_MHz", "magnitude"}, srows);
  }
}

void run_demur(const json& cfg, Run& run, bool closed_form, int workers) {
  SpinSystem sys = sys_from(cfg);
  std::vector<double> b0 = b0_list_from(cfg);
  double b1 = b1_list_from(cfg).at(0);
  double nu_uw = num_req(cfg, "drive", "nu_uw_MHz");
  double nu1 = sys.gamma_e() * b1 / 2.0;
  DemurOptions dopt;
  dopt.exclusion_window_mT = num(cfg, "demur", "exclusion_window_mT", 0.05);
  std::vector<DemurPoint> ana = demur_sweep(sys, b0, nu_uw, nu1, dopt);

  double t_end = num(cfg, "sequence", "t_end_ns", 2000.0);
  double dt = num(cfg, "sequence", "dt_ns", 1.0);
  int pad = int(num(cfg, "demur", "pad_factor", 8));
  std::vector<double> f12(b0.size()), f34(b0.size());
  RelaxationModel relax = relax_from(cfg);
  par::parallel_for(b0.size(), [&](std::size_t k) {
    AsymmetryTrace tr;
    if (closed_form) {
      std::vector<double> grid;
      for (double t = 0.0; t <= t_end; t += dt) grid.push_back(t);
      tr = analytic_tf_trace(sys, b0[k], nu_uw, nu1, grid).trace;
    } else {
      PulseSequence seq = demur_cw_sequence(b1, nu_uw, t_end, Geometry::TF);
      PropagateOptions popt;
      popt.dt_ns = dt;
      tr = propagate(sys, b0[k], seq, relax, popt).trace;
    }
    Spectrum s = fft_spectrum(tr, Window::Hann, pad);
    double half = std::max(1.5, 3.0 * s.bin_MHz());
    Peak p12 = find_peak(s, ana[k].nu12_tr_MHz - half, ana[k].nu12_tr_MHz + half);
    Peak p34 = find_peak(s, ana[k].nu34_tr_MHz - half, ana[k].nu34_tr_MHz + half);
    f12[k] = p12.found ? p12.freq_MHz : std::numeric_limits<double>::quiet_NaN();
    f34[k] = p34.found ? p34.freq_MHz : std::numeric_limits<double>::quiet_NaN();
  }, workers);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < b0.size(); ++k)
    rows.push_back({b0[k], ana[k].nu12_tr_MHz, ana[k].nu34_tr_MHz,
                    double(ana[k].flagged), f12[k], f34[k]});
  run.table("demur",
            {"b0_mT", "nu12_MHz", "nu34_MHz", "flagged", "nu12_fft_MHz", "nu34_fft_MHz"},
            rows);
}

void run_rabi_map(const json& cfg, Run& run, const RunOptions& opt) {
  SpinSystem sys = sys_from(cfg);
  std::vector<double> b0 = b0_list_from(cfg);
  std::vector<double> b1 = b1_list_from(cfg);
  RabiMapOptions mopt;
  mopt.t_p_ns = num(cfg, "sequence", "t_p_ns", 0.0);
  mopt.pulse_ns = num(cfg, "sequence", "pulse_ns", 2000.0);
  mopt.t_end_ns = num(cfg, "sequence", "t_end_ns", mopt.t_p_ns + mopt.pulse_ns);
  mopt.dt_ns = num(cfg, "sequence", "dt_ns", 1.0);
  mopt.workers = opt.workers;
  // fixed drive frequency: explicit, or resonant at the center of the B0 grid
  double b0_ref = b0[b0.size() / 2];
  mopt.nu_uw_MHz = nu_uw_from(cfg, sys, b0_ref);
  // Default Rabi-band cap: expected nu_eff range plus headroom, so aliased
  // fast coherences do not win the peak search.
  double gam = transition_table(sys, b0_ref)
                   .get(mopt.transition_i, mopt.transition_j).gamma_MHz_per_mT;
  double nu1_max = gam * *std::max_element(b1.begin(), b1.end());
  double db = std::max(std::abs(b0.front() - b0_ref), std::abs(b0.back() - b0_ref));
  double slope = gam + sys.gamma_mu;  // upper bound on |d nu_ij / d B0|
  double cap = 3.0 * std::hypot(nu1_max, slope * db) + 5.0;
  mopt.f_search_max_MHz = num(cfg, "analysis", "f_max_MHz", cap);
  RabiMap map = rabi_map(sys, b0, b1, mopt);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < b0.size(); ++i)
    for (std::size_t j = 0; j < b1.size(); ++j)
      rows.push_back({b0[i], b1[j], map.nu_at(i, j), map.amp_at(i, j)});
  run.table("rabi_map", {"b0_mT", "b1_mT", "nu_eff_MHz", "amplitude"}, rows);
  run.manifest["failed_cells"] = map.failed_cells;
}

void run_shift_curve(const json& cfg, Run& run) {
  SpinSystem sys = sys_from(cfg);
  double nu_uw = num_req(cfg, "drive", "nu_uw_MHz");
  DqShiftOptions sopt;
  sopt.trace_ns = num(cfg, "sequence", "t_end_ns", 3000.0);
  sopt.dt_ns = num(cfg, "sequence", "dt_ns", 1.0);
  auto pts = dq_shift_curve(sys, nu_uw, b1_list_from(cfg), sopt);
  std::vector<std::vector<double>> rows;
  for (const auto& p : pts)
    rows.push_back({p.b1_mT, p.nu_rabi_MHz, p.shift_MHz, p.shift_analytic_MHz, p.b0_min_mT});
  run.table("shift_curve",
            {"b1_mT", "nu_rabi_MHz", "shift_MHz", "shift_analytic_MHz", "b0_min_mT"}, rows);
}

void run_narrowing(const json& cfg, Run& run) {
  auto nu1 = linspace(num_req(cfg, "narrowing", "nu1_start_MHz"),
                      num_req(cfg, "narrowing", "nu1_stop_MHz"),
                      int(num(cfg, "narrowing", "nu1_points", 11)));
  auto om = linspace(num_req(cfg, "narrowing", "omega_start_MHz"),
                     num_req(cfg, "narrowing", "omega_stop_MHz"),
                     int(num(cfg, "narrowing", "omega_points", 11)));
  FwhmSurface s = narrowing_fwhm_map(nu1, om, num_req(cfg, "narrowing", "omega_fwhm_MHz"),
                                     num(cfg, "narrowing", "nu1_fwhm_MHz", 0.0));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < nu1.size(); ++i)
    for (std::size_t j = 0; j < om.size(); ++j)
      rows.push_back({nu1[i], om[j], s.at(i, j)});
  run.table("narrowing", {"nu1_MHz", "omega_MHz", "fwhm_MHz"}, rows);
}

void run_synth(const json& cfg, Run& run, std::uint64_t seed) {
  SpinSystem sys = sys_from(cfg);
  double b0 = b0_list_from(cfg).at(0);
  Geometry geom = geom_from(cfg);
  double b1 = num(cfg, "drive", "b1_mT", 0.0);
  double nu_uw = b1 > 0.0 ? nu_uw_from(cfg, sys, b0) : 0.0;
  PulseSequence seq = seq_from(cfg, b1, nu_uw, geom);
  auto res = propagate(sys, b0, seq, relax_from(cfg), popt_from(cfg));
  SynthOptions sopt;
  sopt.n_muons = std::uint64_t(num(cfg, "synth", "n_muons", 1e6));
  sopt.alpha = num(cfg, "synth", "alpha", 1.0);
  sopt.a0_max = num(cfg, "synth", "a0_max", 0.27);
  sopt.f_dia = num(cfg, "synth", "f_dia", 0.0);
  sopt.b0_mT = b0;
  sopt.phi_dia_rad = num(cfg, "synth", "phi_dia_deg", 0.0) * kPi / 180.0;
  sopt.seed = seed;
  DecayHistograms h = synth_decay_histograms(res.trace, sopt);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < h.t_ns.size(); ++k)
    rows.push_back({h.t_ns[k], h.n_f[k], h.n_b[k]});
  run.table("histograms", {"t_ns", "n_f", "n_b"}, rows);
  run.manifest["clipped_bins"] = h.clipped;
}

AsymmetryTrace load_trace_csv(const std::string& path, double alpha, double min_counts) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read data_csv: " + path);
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("empty data_csv: " + path);
  bool histogram = line.find("n_f") != std::string::npos;
  DecayHistograms h;
  AsymmetryTrace tr;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    if (histogram) {
      if (cells.size() != 3) throw ConfigError("data_csv: expected 3 columns");
      h.t_ns.push_back(cells[0]);
      h.n_f.push_back(cells[1]);
      h.n_b.push_back(cells[2]);
    } else {
      if (cells.size() < 2) throw ConfigError("data_csv: expected >= 2 columns");
      tr.times_ns.push_back(cells[0]);
      tr.values.push_back(cells[1]);
      if (cells.size() > 2) tr.sigma.push_back(cells[2]);
    }
  }
  if (histogram) return asymmetry_from_histograms(h, alpha, min_counts);
  tr.validate();
  return tr;
}

void run_fit(const json& cfg, Run& run) {
  std::string path = str(cfg, "analysis", "data_csv", "");
  if (path.empty()) throw ConfigError("[analysis] data_csv is required for fit");
  AsymmetryTrace tr = load_trace_csv(path, num(cfg, "synth", "alpha", 1.0),
                                     num(cfg, "synth", "min_counts", 10.0));
  double lo = num(cfg, "analysis", "window_lo_ns", tr.times_ns.front());
  double hi = num(cfg, "analysis", "window_hi_ns", tr.times_ns.back());
  AsymmetryTrace win;
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.times_ns[k] >= lo && tr.times_ns[k] <= hi) {
      win.times_ns.push_back(tr.times_ns[k]);
      win.values.push_back(tr.values[k]);
      if (tr.has_sigma()) win.sigma.push_back(tr.sigma[k]);
    }
  std::string model_id = str(cfg, "analysis", "model", "damped_cosine+constant");
  ModelSpec model;
  std::map<std::string, double> init;
  if (model_id == "damped_cosine+constant") {
    model.components = {damped_cosine("A", "nu", "lam", "phi"), constant("c")};
    init = {{"A", num(cfg, "analysis", "init_A", 0.1)},
            {"nu", num_req(cfg, "analysis", "init_nu_MHz")},
            {"lam", num(cfg, "analysis", "init_lambda_per_us", 1.0)},
            {"phi", num(cfg, "analysis", "init_phi_rad", 0.0)},
            {"c", num(cfg, "analysis", "init_c", 0.0)}};
  } else if (model_id == "damped_cosine") {
    model.components = {damped_cosine("A", "nu", "lam", "phi")};
    init = {{"A", num(cfg, "analysis", "init_A", 0.1)},
            {"nu", num_req(cfg, "analysis", "init_nu_MHz")},
            {"lam", num(cfg, "analysis", "init_lambda_per_us", 1.0)},
            {"phi", num(cfg, "analysis", "init_phi_rad", 0.0)}};
  } else {
    throw ConfigError("[analysis] unknown model: " + model_id);
  }
  FitOptions fopt;
  fopt.multistart = int(num(cfg, "analysis", "multistart", 3));
  FitReport rep = fit_model(win, model, init, {}, fopt);
  json j;
  j["parameters"] = json::object();
  for (std::size_t i = 0; i < rep.names.size(); ++i) {
    j["parameters"][rep.names[i]] = {{"value", rep.values(long(i))},
                                     {"error", rep.errors(long(i))}};
  }
  j["chi2"] = rep.chi2;
  j["dof"] = rep.dof;
  j["converged"] = rep.converged;
  j["errors_ok"] = rep.errors_ok;
  j["flags"] = rep.flags;
  run.write_json("fit_report.json", j);
}

// Ramsey fringe sweep used by `reproduce fig3`.
void run_ramsey_sweep(const json& cfg, Run& run, int workers) {
  SpinSystem sys = sys_from(cfg);
  double b0 = b0_list_from(cfg).at(0);
  Geometry geom = geom_from(cfg);
  double b1 = b1_list_from(cfg).at(0);
  double detuning = num(cfg, "drive", "detuning_MHz", 0.0);
  double nu_res = nu_uw_from(cfg, sys, b0);
  double nu_uw = num(cfg, "drive", "nu_uw_MHz", 0.0) > 0.0
                     ? num_req(cfg, "drive", "nu_uw_MHz")
                     : nu_res + detuning;
  double t_p = num(cfg, "sequence", "t_p_ns", 50.0);
  double pulse = num(cfg, "sequence", "pulse_ns", 36.0);
  auto taus = linspace(num(cfg, "sequence", "tau_start_ns", 0.0),
                       num(cfg, "sequence", "tau_stop_ns", 500.0),
                       int(num(cfg, "sequence", "tau_points", 51)));
  PropagateOptions popt = popt_from(cfg);
  int n_phase = int(num(cfg, "sequence", "phase_cycle", 2));
  std::vector<PhaseTaggedTrace> traces(taus.size() * n_phase);
  par::parallel_for(traces.size(), [&](std::size_t idx) {
    std::size_t it = idx / n_phase;
    int ip = int(idx % n_phase);
    double phase_deg = 360.0 * ip / n_phase;
    double t_end = t_p + 2.0 * pulse + taus[it] + 1000.0;
    PulseSequence seq = ramsey_sequence(t_p, pulse, taus[it], b1, nu_uw,
                                        phase_deg * kPi / 180.0, t_end, geom);
    PhaseTaggedTrace& tt = traces[idx];
    tt.tau_ns = taus[it];
    tt.phase_deg = phase_deg;
    tt.seq_end_ns = t_p + 2.0 * pulse + taus[it];
    tt.trace = propagate(sys, b0, seq, RelaxationModel{}, popt).trace;
  }, workers);
  RamseyWindows win;
  win.before_lo_ns = 0.0;
  win.before_hi_ns = std::max(1.0, t_p - 1.0);
  RamseyExtraction ext = ramsey_extract(traces, win);
  std::vector<std::vector<double>> rows;
  for (const auto& p : ext.points)
    rows.push_back({p.tau_ns, p.re, p.has_im ? p.im : std::numeric_limits<double>::quiet_NaN(),
                    p.a0});
  run.table("ramsey_fringes", {"tau_ns", "re", "im", "a0"}, rows);
}

// Apparent Rabi frequency vs drive amplitude (`reproduce fig16`).
void run_rabi_vs_b1(const json& cfg, Run& run, const RunOptions& opt) {
  SpinSystem sys = sys_from(cfg);
  double nu_uw = num_req(cfg, "drive", "nu_uw_MHz");
  double b0 = resonance_field(sys, 1, 4, nu_uw, 1.0, 1000.0);
  std::vector<double> b1 = b1_list_from(cfg);
  RabiMapOptions mopt;
  mopt.pulse_ns = num(cfg, "sequence", "pulse_ns", 3000.0);
  mopt.t_end_ns = mopt.pulse_ns;
  mopt.nu_uw_MHz = nu_uw;
  mopt.workers = opt.workers;
  RabiMap map = rabi_map(sys, {b0}, b1, mopt);
  TiltedFrameAngles ang = tilted_angles(sys, b0, nu_uw, 0.0);
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < b1.size(); ++j) {
    double nu1 = sys.gamma_e() * b1[j] / 2.0;
    rows.push_back({b1[j], map.nu_at(0, j), std::abs(nu1 * std::sin(ang.eta)) * 2.0});
  }
  run.table("rabi_vs_b1", {"b1_mT", "nu_rabi_MHz", "nu_linear_MHz"}, rows);
}

// TF traces with relaxation at several fields (`reproduce fig15`).
void run_tf_traces(const json& cfg, Run& run, int workers) {
  SpinSystem sys = sys_from(cfg);
  std::vector<double> b0 = b0_list_from(cfg);
  double b1 = b1_list_from(cfg).at(0);
  double nu_uw = num_req(cfg, "drive", "nu_uw_MHz");
  double t_end = num(cfg, "sequence", "t_end_ns", 1500.0);
  double t_p = num(cfg, "sequence", "t_p_ns", 300.0);
  RelaxationModel relax = relax_from(cfg);
  PropagateOptions popt = popt_from(cfg);
  std::vector<AsymmetryTrace> traces(b0.size());
  par::parallel_for(b0.size(), [&](std::size_t k) {
    PulseSequence seq = rabi_sequence(t_p, t_end - t_p, b1, nu_uw, t_end, Geometry::TF);
    traces[k] = propagate(sys, b0[k], seq, relax, popt).trace;
  }, workers);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < b0.size(); ++k)
    for (std::size_t i = 0; i < traces[k].size(); ++i)
      rows.push_back({b0[k], traces[k].times_ns[i], traces[k].values[i]});
  run.table("tf_traces", {"b0_mT", "t_ns", "value"}, rows);
}

void dispatch(const std::string& sub, const json& cfg, Run& run, const RunOptions& opt,
              std::uint64_t seed) {
  if (sub == "levels") run_levels(cfg, run);
  else if (sub == "transitions") run_transitions(cfg, run);
  else if (sub == "simulate") run_simulate(cfg, run, false);
  else if (sub == "simulate+spectrum") run_simulate(cfg, run, true);
  else if (sub == "demur") run_demur(cfg, run, false, opt.workers);
  else if (sub == "demur-closed-form") run_demur(cfg, run, true, opt.workers);
  else if (sub == "rabi-map") run_rabi_map(cfg, run, opt);
  else if (sub == "shift-curve") run_shift_curve(cfg, run);
  else if (sub == "narrowing") run_narrowing(cfg, run);
  else if (sub == "fit") run_fit(cfg, run);
  else if (sub == "synth") run_synth(cfg, run, seed);
  else if (sub == "ramsey-sweep") run_ramsey_sweep(cfg, run, opt.workers);
  else if (sub == "rabi-vs-b1") run_rabi_vs_b1(cfg, run, opt);
  else if (sub == "tf-traces") run_tf_traces(cfg, run, opt.workers);
  else throw ConfigError("unknown subcommand: " + sub);
}

}  // namespace

json canned_config(const std::string& id) {
  json c;
  auto si = [] {
    return json{{"coupling", "axial"}, {"a_par_MHz", 67.6}, {"a_perp_MHz", 35.6},
                {"g_e", 1.9999}};
  };
  auto iso = [] { return json{{"coupling", "isotropic"}, {"a_iso_MHz", 4500.0}}; };
  if (id == "fig2") {
    // on-resonance Rabi law around the 3-4 resonance at 82.525 mT
    c["subcommand"] = "rabi-map";
    c["config"] = {{"system", iso()},
                   {"field", {{"b0_start_mT", 81.925}, {"b0_stop_mT", 83.125}, {"b0_points", 13}}},
                   {"drive", {{"b1_mT", 0.946}}},
                   {"sequence", {{"pulse_ns", 2000.0}, {"t_end_ns", 2000.0}}}};
  } else if (id == "fig3") {
    c["subcommand"] = "ramsey-sweep";
    c["config"] = {{"system", iso()},
                   {"field", {{"b0_mT", 82.2}}},
                   {"drive", {{"b1_mT", 0.946}, {"detuning_MHz", 9.1}, {"geometry", "LF"}}},
                   {"sequence",
                    {{"t_p_ns", 50.0}, {"pulse_ns", 18.0}, {"tau_start_ns", 0.0},
                     {"tau_stop_ns", 440.0}, {"tau_points", 45}, {"phase_cycle", 2}}}};
  } else if (id == "fig4") {
    c["subcommand"] = "demur";
    c["config"] = {{"system", si()},
                   {"field", {{"b0_start_mT", 138.0}, {"b0_stop_mT", 141.0}, {"b0_points", 61}}},
                   {"drive", {{"b1_mT", 0.677}, {"nu_uw_MHz", 3900.0}, {"geometry", "TF"}}},
                   {"sequence", {{"t_end_ns", 3000.0}}}};
  } else if (id == "fig5c") {
    c["subcommand"] = "shift-curve";
    c["config"] = {{"system", si()},
                   {"drive", {{"b1_list_mT", {0.4, 0.8, 1.2, 1.6, 2.0, 2.735}},
                              {"nu_uw_MHz", 3900.0}}},
                   {"sequence", {{"t_end_ns", 3000.0}}}};
  } else if (id == "fig11") {
    c["subcommand"] = "rabi-map";
    c["config"] = {{"system", iso()},
                   {"field", {{"b0_start_mT", 81.0}, {"b0_stop_mT", 83.4}, {"b0_points", 25}}},
                   {"drive", {{"b1_mT", 0.946}}},
                   {"sequence", {{"pulse_ns", 2000.0}, {"t_end_ns", 2000.0}}}};
  } else if (id == "fig12") {
    c["subcommand"] = "simulate+spectrum";
    c["config"] = {{"system", iso()},
                   {"field", {{"b0_mT", 0.0}}},
                   {"drive", {{"b1_mT", 0.95}, {"geometry", "LF"}}},
                   {"sequence",
                    {{"template", "rabi"}, {"pulse_ns", 2000.0}, {"t_end_ns", 2000.0},
                     {"frame", "lab"}, {"lab_dt_ns", 0.01}}}};
  } else if (id == "fig13") {
    c["subcommand"] = "demur-closed-form";
    c["config"] = {{"system", si()},
                   {"field", {{"b0_start_mT", 138.0}, {"b0_stop_mT", 141.0}, {"b0_points", 61}}},
                   {"drive", {{"b1_mT", 0.677}, {"nu_uw_MHz", 3900.0}, {"geometry", "TF"}}},
                   {"sequence", {{"t_end_ns", 3000.0}}}};
  } else if (id == "fig15") {
    c["subcommand"] = "tf-traces";
    c["config"] = {{"system", si()},
                   {"field", {{"b0_start_mT", 138.4}, {"b0_stop_mT", 140.4}, {"b0_points", 9}}},
                   {"drive", {{"b1_mT", 0.677}, {"nu_uw_MHz", 3900.0}, {"geometry", "TF"}}},
                   {"sequence", {{"t_p_ns", 300.0}, {"t_end_ns", 1500.0}}},
                   {"relaxation",
                    {{"rate_12_per_us", 0.95}, {"rate_34_per_us", 5.0},
                     {"rate_13_per_us", 13.2}, {"rate_24_per_us", 13.2},
                     {"rate_14_per_us", 13.2}, {"rate_23_per_us", 13.2}}}};
  } else if (id == "fig16") {
    c["subcommand"] = "rabi-vs-b1";
    c["config"] = {{"system", si()},
                   {"drive", {{"b1_start_mT", 0.3}, {"b1_stop_mT", 3.0}, {"b1_points", 10},
                              {"nu_uw_MHz", 3900.0}}},
                   {"sequence", {{"pulse_ns", 3000.0}}}};
  } else if (id == "fig17") {
    c["subcommand"] = "narrowing";
    c["config"] = {{"narrowing",
                    {{"nu1_start_MHz", 0.0}, {"nu1_stop_MHz", 25.0}, {"nu1_points", 26},
                     {"omega_start_MHz", 0.0}, {"omega_stop_MHz", 25.0},
                     {"omega_points", 26}, {"omega_fwhm_MHz", 4.2}}}};
  } else {
    std::string known;
    for (const auto& k : canned_config_ids()) known += (known.empty() ? "" : " ") + k;
    throw ConfigError("unknown figure id: " + id + " (known: " + known + ")");
  }
  validate_config(c["config"]);
  return c;
}

std::vector<std::string> canned_config_ids() {
  return {"fig2", "fig3", "fig4", "fig5c", "fig11", "fig12", "fig13",
          "fig15", "fig16", "fig17"};
}

int run_subcommand(const std::string& subcommand, const std::string& arg,
                   const RunOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  json cfg;
  std::string sub = subcommand;
  try {
    if (subcommand == "reproduce") {
      json canned = canned_config(arg);
      sub = canned["subcommand"].get<std::string>();
      cfg = canned["config"];
    } else {
      if (opt.config_path.empty()) throw ConfigError("--config is required");
      cfg = load_config(opt.config_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  Run run;
  run.out = opt.out_dir;
  run.format = opt.format;
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec) {
    std::cerr << "config error: cannot create output dir " << opt.out_dir << '\n';
    return kExitConfigError;
  }

  std::uint64_t seed = opt.seed_set ? opt.seed
                                    : std::uint64_t(num(cfg, "run", "seed", double(opt.seed)));
  RunOptions eff = opt;
  if (eff.workers == 0) eff.workers = int(num(cfg, "run", "workers", 0));

  try {
    dispatch(sub, cfg, run, eff, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    std::ofstream marker(run.out / (sub + ".failed"));
    marker << e.what() << '\n';
    return kExitNumericalFailure;
  }

  auto t1 = std::chrono::steady_clock::now();
  run.manifest["subcommand"] = sub;
  if (!arg.empty()) run.manifest["figure_id"] = arg;
  run.manifest["config_hash"] = config_hash(cfg);
  run.manifest["seed"] = seed;
  run.manifest["workers"] = eff.workers;
  run.manifest["version"] = kVersion;
  run.manifest["wall_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  run.manifest["artifacts"] = run.artifacts;
  std::ofstream mf(run.out / "manifest.json", std::ios::binary);
  mf << run.manifest.dump(2) << '\n';
  if (opt.verbose) {
    std::cerr << sub << ": wrote " << run.artifacts.size() << " artifact(s) to "
              << run.out.string() << '\n';
  }
  return kExitOk;
}

}  // namespace musim
