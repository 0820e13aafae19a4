#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "musim/trace.hpp"

namespace musim {

// ---- model specification ---------------------------------------------------

enum class ComponentKind { DampedCosine, Constant, ExpDecay };

// Parameters are referenced by name; components sharing a name share the
// parameter. DampedCosine params: {A, nu_MHz, lambda_per_us, phi_rad};
// Constant: {A}; ExpDecay: {A, lambda_per_us}.
struct Component {
  ComponentKind kind = ComponentKind::Constant;
  std::vector<std::string> params;
  int zone = -1;  // -1: active everywhere; otherwise index into ModelSpec::zones
};

struct Zone {
  double t_lo_ns = 0.0, t_hi_ns = 0.0;
};

struct ModelSpec {
  std::vector<Component> components;
  std::vector<Zone> zones;

  std::vector<std::string> param_names() const;  // unique, first-appearance order
  double eval(double t_ns, const std::map<std::string, double>& p) const;
  void validate() const;
};

Component damped_cosine(const std::string& a, const std::string& nu, const std::string& lambda,
                        const std::string& phi, int zone = -1);
Component constant(const std::string& a, int zone = -1);
Component exp_decay(const std::string& a, const std::string& lambda, int zone = -1);

// ---- fit results -----------------------------------------------------------

struct FitReport {
  std::vector<std::string> names;
  Eigen::VectorXd values;
  Eigen::VectorXd errors;   // 1-sigma from inverse curvature; <0 when unavailable
  double chi2 = 0.0;
  int dof = 0;
  Eigen::MatrixXd covariance;
  bool converged = false;
  bool errors_ok = false;
  std::vector<std::string> flags;

  double value(const std::string& name) const;
  double error(const std::string& name) const;
};

struct FitOptions {
  int max_iter = 300;
  int multistart = 1;        // jittered restarts, best kept
  double jitter_rel = 0.15;
  std::uint64_t seed = 12345;
};

// Weighted least squares, Levenberg-Marquardt style damped Gauss-Newton.
// Requires sigma present and positive on every point.
FitReport fit_model(const AsymmetryTrace& trace, const ModelSpec& model,
                    const std::map<std::string, double>& init,
                    const std::map<std::string, std::pair<double, double>>& bounds = {},
                    const FitOptions& opt = {});

// ---- low-level optimizer (shared by internal extractions) ------------------

struct LevMarResult {
  Eigen::VectorXd p;
  double chi2 = 0.0;
  Eigen::MatrixXd cov;
  bool converged = false;
  bool cov_ok = false;
  int iters = 0;
};

LevMarResult levmar(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                    Eigen::VectorXd p0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                    int max_iter = 300);

// ---- two-zone Rabi fit -----------------------------------------------------

struct TwoZoneResult {
  FitReport before;
  FitReport during;
  double t_p_refined_ns = 0.0;
  double discontinuity = 0.0;  // |before - during| at the refined boundary
  bool identifiable = true;    // false when the boundary is non-identifiable
};

// Fits the pre-pulse zone [t0, t_p) and during-pulse zone [t_p, end] and
// refines t_p by minimizing the model discontinuity at the boundary.
TwoZoneResult two_zone_rabi_fit(const AsymmetryTrace& trace, double t_p_guess_ns,
                                const ModelSpec& model_before,
                                const std::map<std::string, double>& init_before,
                                const ModelSpec& model_during,
                                const std::map<std::string, double>& init_during,
                                const FitOptions& opt = {});

// ---- Ramsey fringe extraction ----------------------------------------------

struct PhaseTaggedTrace {
  double tau_ns = 0.0;
  double phase_deg = 0.0;   // second-pulse phase: {0,180} or {0,90,180,270}
  double seq_end_ns = 0.0;  // end of the second pulse
  AsymmetryTrace trace;
};

struct FringePoint {
  double tau_ns = 0.0;
  double re = 0.0;          // in-phase fringe amplitude
  double im = 0.0;          // quadrature (four-step cycles only)
  bool has_im = false;
  double a0 = 0.0;          // pre-sequence reference for normalization
};

struct RamseyWindows {
  double before_lo_ns = 0.0, before_hi_ns = 0.0;
  double after_gap_ns = 20.0;   // dead time after the second pulse
  double after_len_ns = 960.0;  // integration window duration
};

struct RamseyExtraction {
  std::vector<FringePoint> points;
  int dropped = 0;  // taus with missing phase partners
};

RamseyExtraction ramsey_extract(const std::vector<PhaseTaggedTrace>& traces,
                                const RamseyWindows& windows);

// ---- chi^2 grid search -----------------------------------------------------

struct AxisSpec {
  std::string name;
  double lo = 0.0, hi = 1.0;
  int n = 21;
};

struct Chi2Map {
  std::vector<double> xs, ys;  // full requested range (level-0 grid)
  Eigen::MatrixXd chi2;        // (xs.size(), ys.size())
  double best_x = 0.0, best_y = 0.0, chi2_min = 0.0;
  std::vector<double> level_minima;  // per refinement level, non-increasing
  bool converged = true;       // false when the best cell sits on the grid edge
  AxisSpec x_axis, y_axis;     // final (most refined) axes
};

struct Chi2GridOptions {
  int refine_levels = 3;
  double zoom = 5.0;
  int workers = 0;
  bool serial = false;
};

Chi2Map chi2_grid(const std::function<double(double, double)>& objective, const AxisSpec& x,
                  const AxisSpec& y, const Chi2GridOptions& opt = {});

// Joint 68% region membership (two free parameters, delta chi^2 = 2.30).
bool inside_confidence_region(const Chi2Map& map, double x, double y, double delta = 2.30);

// 1-parameter interval from the delta chi^2 = 1 profile along axis 0 (x) or 1.
std::pair<double, double> profile_interval(const Chi2Map& map, int axis, double delta = 1.0);

}  // namespace musim
