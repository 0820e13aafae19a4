#include "musim/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "musim/constants.hpp"

namespace musim {

// ---- model specification ---------------------------------------------------

namespace {
std::size_t kind_arity(ComponentKind k) {
  switch (k) {
    case ComponentKind::DampedCosine: return 4;
    case ComponentKind::Constant: return 1;
    case ComponentKind::ExpDecay: return 2;
  }
  return 0;
}
}  // namespace

Component damped_cosine(const std::string& a, const std::string& nu, const std::string& lambda,
                        const std::string& phi, int zone) {
  return Component{ComponentKind::DampedCosine, {a, nu, lambda, phi}, zone};
}
Component constant(const std::string& a, int zone) {
  return Component{ComponentKind::Constant, {a}, zone};
}
Component exp_decay(const std::string& a, const std::string& lambda, int zone) {
  return Component{ComponentKind::ExpDecay, {a, lambda}, zone};
}

std::vector<std::string> ModelSpec::param_names() const {
  std::vector<std::string> names;
  for (const auto& c : components)
    for (const auto& p : c.params)
      if (std::find(names.begin(), names.end(), p) == names.end()) names.push_back(p);
  return names;
}

void ModelSpec::validate() const {
  if (components.empty()) throw std::invalid_argument("model: no components");
  for (const auto& c : components) {
    if (c.params.size() != kind_arity(c.kind))
      throw std::invalid_argument("model: wrong parameter count for component");
    for (const auto& p : c.params)
      if (p.empty()) throw std::invalid_argument("model: empty parameter name");
    if (c.zone >= 0 && std::size_t(c.zone) >= zones.size())
      throw std::invalid_argument("model: zone index out of range");
  }
  for (const auto& z : zones)
    if (!(z.t_hi_ns > z.t_lo_ns)) throw std::invalid_argument("model: empty zone");
}

double ModelSpec::eval(double t_ns, const std::map<std::string, double>& p) const {
  double y = 0.0;
  for (const auto& c : components) {
    if (c.zone >= 0) {
      const Zone& z = zones[c.zone];
      if (t_ns < z.t_lo_ns || t_ns > z.t_hi_ns) continue;
    }
    auto get = [&](int k) {
      auto it = p.find(c.params[k]);
      if (it == p.end()) throw std::invalid_argument("model: missing parameter " + c.params[k]);
      return it->second;
    };
    switch (c.kind) {
      case ComponentKind::DampedCosine:
        y += get(0) * std::exp(-get(2) * 1e-3 * t_ns) *
             std::cos(kTwoPiMHzns * get(1) * t_ns + get(3));
        break;
      case ComponentKind::Constant:
        y += get(0);
        break;
      case ComponentKind::ExpDecay:
        y += get(0) * std::exp(-get(1) * 1e-3 * t_ns);
        break;
    }
  }
  return y;
}

// ---- low-level optimizer ---------------------------------------------------

LevMarResult levmar(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                    Eigen::VectorXd p0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                    int max_iter) {
  const int np = int(p0.size());
  auto clamp = [&](Eigen::VectorXd p) {
    for (int i = 0; i < np; ++i) p(i) = std::min(hi(i), std::max(lo(i), p(i)));
    return p;
  };
  LevMarResult res;
  res.p = clamp(std::move(p0));
  Eigen::VectorXd r = residuals(res.p);
  double chi2 = r.squaredNorm();
  double lambda = 1e-3;
  Eigen::MatrixXd jt_j;

  for (int it = 0; it < max_iter; ++it) {
    res.iters = it + 1;
    // central-difference Jacobian
    Eigen::MatrixXd jac(r.size(), np);
    for (int i = 0; i < np; ++i) {
      double h = 1e-6 * std::max(1.0, std::abs(res.p(i)));
      Eigen::VectorXd pp = res.p, pm = res.p;
      pp(i) = std::min(hi(i), res.p(i) + h);
      pm(i) = std::max(lo(i), res.p(i) - h);
      double dh = pp(i) - pm(i);
      if (dh <= 0.0) { jac.col(i).setZero(); continue; }
      jac.col(i) = (residuals(pp) - residuals(pm)) / dh;
    }
    jt_j = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) { res.converged = true; break; }

    bool accepted = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd a = jt_j;
      for (int i = 0; i < np; ++i) a(i, i) += lambda * std::max(jt_j(i, i), 1e-12);
      Eigen::VectorXd step = a.ldlt().solve(-g);
      Eigen::VectorXd p_new = clamp(res.p + step);
      Eigen::VectorXd r_new = residuals(p_new);
      double chi2_new = r_new.squaredNorm();
      if (chi2_new < chi2) {
        double rel = (chi2 - chi2_new) / std::max(chi2, 1e-300);
        res.p = p_new;
        r = r_new;
        chi2 = chi2_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel < 1e-12 || step.lpNorm<Eigen::Infinity>() < 1e-12) res.converged = true;
        break;
      }
      lambda *= 5.0;
    }
    if (!accepted || res.converged) {
      if (!accepted) res.converged = true;  // no further descent possible
      break;
    }
  }
  res.chi2 = chi2;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jt_j);
  if (lu.isInvertible()) {
    res.cov = lu.inverse();
    res.cov_ok = true;
    for (int i = 0; i < np; ++i)
      if (!(res.cov(i, i) > 0.0)) res.cov_ok = false;
  } else {
    res.cov = Eigen::MatrixXd::Zero(np, np);
  }
  return res;
}

// ---- fit_model -------------------------------------------------------------

FitReport fit_model(const AsymmetryTrace& trace, const ModelSpec& model,
                    const std::map<std::string, double>& init,
                    const std::map<std::string, std::pair<double, double>>& bounds,
                    const FitOptions& opt) {
  trace.validate();
  model.validate();
  if (!trace.has_sigma()) throw std::invalid_argument("fit_model: trace has no sigma");
  for (double s : trace.sigma)
    if (!(s > 0.0)) throw std::invalid_argument("fit_model: non-positive sigma");

  std::vector<std::string> names = model.param_names();
  const int np = int(names.size());
  Eigen::VectorXd p0(np), lo(np), hi(np);
  for (int i = 0; i < np; ++i) {
    auto it = init.find(names[i]);
    if (it == init.end())
      throw std::invalid_argument("fit_model: missing initial value for " + names[i]);
    p0(i) = it->second;
    auto bit = bounds.find(names[i]);
    lo(i) = bit != bounds.end() ? bit->second.first : -std::numeric_limits<double>::infinity();
    hi(i) = bit != bounds.end() ? bit->second.second : std::numeric_limits<double>::infinity();
    if (!(lo(i) <= p0(i) && p0(i) <= hi(i)))
      throw std::invalid_argument("fit_model: initial value outside bounds for " + names[i]);
  }

  auto residuals = [&](const Eigen::VectorXd& p) {
    std::map<std::string, double> pm;
    for (int i = 0; i < np; ++i) pm[names[i]] = p(i);
    Eigen::VectorXd r(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k)
      r(k) = (model.eval(trace.times_ns[k], pm) - trace.values[k]) / trace.sigma[k];
    return r;
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  LevMarResult best;
  bool have = false;
  for (int s = 0; s < std::max(1, opt.multistart); ++s) {
    Eigen::VectorXd start = p0;
    if (s > 0)
      for (int i = 0; i < np; ++i) {
        double scale = std::abs(p0(i)) > 1e-12 ? std::abs(p0(i)) : 1.0;
        start(i) = p0(i) + opt.jitter_rel * scale * gauss(rng);
        start(i) = std::min(hi(i), std::max(lo(i), start(i)));
      }
    LevMarResult r = levmar(residuals, start, lo, hi, opt.max_iter);
    if (!have || r.chi2 < best.chi2) { best = r; have = true; }
  }

  FitReport rep;
  rep.names = names;
  rep.values = best.p;
  rep.chi2 = best.chi2;
  rep.dof = int(trace.size()) - np;
  rep.covariance = best.cov;
  rep.converged = best.converged;
  rep.errors_ok = best.cov_ok;
  rep.errors = Eigen::VectorXd::Constant(np, -1.0);
  if (best.cov_ok)
    for (int i = 0; i < np; ++i) rep.errors(i) = std::sqrt(best.cov(i, i));
  if (!best.converged) rep.flags.push_back("not_converged");
  for (int i = 0; i < np; ++i) {
    double span = std::max(1.0, std::abs(best.p(i)));
    if (std::isfinite(lo(i)) && best.p(i) - lo(i) < 1e-9 * span)
      rep.flags.push_back("at_lower_bound:" + names[i]);
    if (std::isfinite(hi(i)) && hi(i) - best.p(i) < 1e-9 * span)
      rep.flags.push_back("at_upper_bound:" + names[i]);
  }
  return rep;
}

double FitReport::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values(long(i));
  throw std::invalid_argument("FitReport: unknown parameter " + name);
}

double FitReport::error(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return errors(long(i));
  throw std::invalid_argument("FitReport: unknown parameter " + name);
}

// ---- two-zone Rabi fit -----------------------------------------------------

namespace {
AsymmetryTrace window(const AsymmetryTrace& t, double lo, double hi) {
  AsymmetryTrace out;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t.times_ns[k] < lo || t.times_ns[k] > hi) continue;
    out.times_ns.push_back(t.times_ns[k]);
    out.values.push_back(t.values[k]);
    if (t.has_sigma()) out.sigma.push_back(t.sigma[k]);
  }
  return out;
}

std::map<std::string, double> as_map(const FitReport& r) {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < r.names.size(); ++i) m[r.names[i]] = r.values(long(i));
  return m;
}
}  // namespace

TwoZoneResult two_zone_rabi_fit(const AsymmetryTrace& trace, double t_p_guess_ns,
                                const ModelSpec& model_before,
                                const std::map<std::string, double>& init_before,
                                const ModelSpec& model_during,
                                const std::map<std::string, double>& init_during,
                                const FitOptions& opt) {
  trace.validate();
  double t0 = trace.times_ns.front(), t1 = trace.times_ns.back();
  auto fit_at = [&](double tp, TwoZoneResult& r) {
    r.before = fit_model(window(trace, t0, tp - 1e-9), model_before, init_before, {}, opt);
    r.during = fit_model(window(trace, tp, t1), model_during, init_during, {}, opt);
    r.t_p_refined_ns = tp;
    auto pb = as_map(r.before);
    auto pd = as_map(r.during);
    r.discontinuity = std::abs(model_before.eval(tp, pb) - model_during.eval(tp, pd));
    return r.discontinuity;
  };

  // Coarse scan of the boundary around the guess, then keep the best.
  double span = std::min(25.0, 0.2 * (t1 - t0));
  TwoZoneResult best;
  double best_d = std::numeric_limits<double>::infinity();
  double dmin = best_d, dmax = 0.0;
  const int n = 11;
  for (int k = 0; k < n; ++k) {
    double tp = t_p_guess_ns - span + 2.0 * span * k / (n - 1);
    if (tp <= t0 + 2.0 || tp >= t1 - 2.0) continue;
    TwoZoneResult r;
    double d;
    try {
      d = fit_at(tp, r);
    } catch (const std::exception&) {
      continue;
    }
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    if (d < best_d) { best_d = d; best = r; }
  }
  if (!std::isfinite(best_d)) throw std::runtime_error("two_zone_rabi_fit: no valid boundary");
  // A flat discontinuity curve means the boundary cannot be located.
  best.identifiable = (dmax - dmin) > 1e-6 * std::max(1.0, dmax);
  return best;
}

// ---- Ramsey fringe extraction ----------------------------------------------

RamseyExtraction ramsey_extract(const std::vector<PhaseTaggedTrace>& traces,
                                const RamseyWindows& windows) {
  if (!(windows.before_hi_ns > windows.before_lo_ns))
    throw std::invalid_argument("ramsey_extract: empty reference window");
  struct Group {
    double tau = 0.0;
    double seq_end = 0.0;
    std::map<int, double> after;   // phase (rounded deg) -> mean in after-window
    std::map<int, double> before;  // phase -> reference level
  };
  std::vector<Group> groups;
  for (const auto& pt : traces) {
    Group* g = nullptr;
    for (auto& gg : groups)
      if (std::abs(gg.tau - pt.tau_ns) < 1e-6) { g = &gg; break; }
    if (!g) {
      groups.push_back(Group{pt.tau_ns, pt.seq_end_ns, {}, {}});
      g = &groups.back();
    }
    int ph = int(std::lround(pt.phase_deg)) % 360;
    if (ph < 0) ph += 360;
    double lo = pt.seq_end_ns + windows.after_gap_ns;
    g->after[ph] = pt.trace.mean_in_window(lo, lo + windows.after_len_ns);
    g->before[ph] = pt.trace.mean_in_window(windows.before_lo_ns, windows.before_hi_ns);
  }

  RamseyExtraction out;
  for (const auto& g : groups) {
    if (!g.after.count(0) || !g.after.count(180)) { ++out.dropped; continue; }
    FringePoint p;
    p.tau_ns = g.tau;
    p.re = (g.after.at(0) - g.after.at(180)) / 2.0;
    if (g.after.count(90) && g.after.count(270)) {
      p.im = (g.after.at(90) - g.after.at(270)) / 2.0;
      p.has_im = true;
    }
    double a0 = 0.0;
    for (const auto& [ph, v] : g.before) a0 += v;
    p.a0 = a0 / double(g.before.size());
    out.points.push_back(p);
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const FringePoint& a, const FringePoint& b) { return a.tau_ns < b.tau_ns; });
  return out;
}

}  // namespace musim
