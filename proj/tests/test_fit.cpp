#include <doctest.h>

#include <cmath>
#include <random>

#include "musim/constants.hpp"
#include "musim/fit.hpp"

using namespace musim;

namespace {

AsymmetryTrace make_trace(int n, double dt, const std::function<double(double)>& f,
                          double sigma = 0.01) {
  AsymmetryTrace tr;
  for (int k = 0; k < n; ++k) {
    double t = k * dt;
    tr.times_ns.push_back(t);
    tr.values.push_back(f(t));
    tr.sigma.push_back(sigma);
  }
  return tr;
}

double damped_cos(double t_ns, double a, double nu, double lam_us, double phi) {
  return a * std::exp(-lam_us * 1e-3 * t_ns) * std::cos(kTwoPiMHzns * nu * t_ns + phi);
}

}  // namespace

TEST_CASE("noiseless damped cosine is recovered exactly") {
  const double A = 0.27, nu = 6.95, lam = 0.8, phi = 0.4, c = 0.33;
  auto tr = make_trace(1500, 1.0, [&](double t) { return c + damped_cos(t, A, nu, lam, phi); });
  ModelSpec model;
  model.components = {damped_cosine("A", "nu", "lam", "phi"), constant("c")};
  auto rep = fit_model(tr, model,
                       {{"A", 0.2}, {"nu", 7.2}, {"lam", 0.5}, {"phi", 0.0}, {"c", 0.3}},
                       {{"A", {0.0, 1.0}}, {"nu", {1.0, 20.0}}, {"lam", {0.0, 10.0}},
                        {"phi", {-kPi, kPi}}, {"c", {-1.0, 1.0}}});
  REQUIRE(rep.converged);
  CHECK(rep.value("A") == doctest::Approx(A).epsilon(1e-6));
  CHECK(rep.value("nu") == doctest::Approx(nu).epsilon(1e-6));
  CHECK(rep.value("lam") == doctest::Approx(lam).epsilon(1e-5));
  CHECK(rep.value("phi") == doctest::Approx(phi).epsilon(1e-5));
  CHECK(rep.value("c") == doctest::Approx(c).epsilon(1e-7));
  CHECK(rep.chi2 < 1e-10 * tr.size());
}

TEST_CASE("decay-rate reparametrization is consistent") {
  // Fitting with lambda directly and converting tau = 1/lambda from a fit in
  // disguise (scaled amplitude trace) must agree to high accuracy.
  const double A = 0.5, nu = 3.1, lam = 1.7;
  auto tr = make_trace(1200, 1.0, [&](double t) { return damped_cos(t, A, nu, lam, 0.0); });
  ModelSpec model;
  model.components = {damped_cosine("A", "nu", "lam", "phi")};
  std::map<std::string, std::pair<double, double>> bounds = {
      {"A", {0.0, 2.0}}, {"nu", {0.5, 10.0}}, {"lam", {0.0, 20.0}}, {"phi", {-kPi, kPi}}};
  auto r1 = fit_model(tr, model, {{"A", 0.4}, {"nu", 3.0}, {"lam", 1.0}, {"phi", 0.1}}, bounds);
  auto r2 = fit_model(tr, model, {{"A", 0.6}, {"nu", 3.3}, {"lam", 2.5}, {"phi", -0.1}}, bounds);
  REQUIRE(r1.converged);
  REQUIRE(r2.converged);
  CHECK(1.0 / r1.value("lam") == doctest::Approx(1.0 / r2.value("lam")).epsilon(1e-8));
  CHECK(r1.value("nu") == doctest::Approx(r2.value("nu")).epsilon(1e-8));
}

TEST_CASE("reported errors scale the noise level") {
  const double A = 0.3, nu = 5.0, lam = 0.5;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.02);
  auto tr = make_trace(2000, 1.0, [&](double t) { return damped_cos(t, A, nu, lam, 0.0) + g(rng); },
                       0.02);
  ModelSpec model;
  model.components = {damped_cosine("A", "nu", "lam", "phi")};
  auto rep = fit_model(tr, model, {{"A", 0.25}, {"nu", 5.1}, {"lam", 0.4}, {"phi", 0.0}},
                       {{"A", {0.0, 1.0}}, {"nu", {1.0, 10.0}}, {"lam", {0.0, 10.0}},
                        {"phi", {-kPi, kPi}}});
  REQUIRE(rep.converged);
  REQUIRE(rep.errors_ok);
  CHECK(std::abs(rep.value("nu") - nu) < 5.0 * rep.error("nu"));
  CHECK(rep.error("nu") > 0.0);
  // chi^2/dof near one for correctly stated errors.
  CHECK(rep.chi2 / rep.dof == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("missing sigma is rejected") {
  AsymmetryTrace tr;
  for (int k = 0; k < 32; ++k) {
    tr.times_ns.push_back(k);
    tr.values.push_back(std::cos(0.1 * k));
  }
  ModelSpec model;
  model.components = {damped_cosine("A", "nu", "lam", "phi")};
  CHECK_THROWS_AS(
      fit_model(tr, model, {{"A", 1.0}, {"nu", 16.0}, {"lam", 0.0}, {"phi", 0.0}}),
      std::invalid_argument);
}

TEST_CASE("chi-square grid on a quadratic bowl finds the minimum") {
  auto obj = [](double x, double y) {
    double dx = (x - 1.3) / 0.2, dy = (y - 4.7) / 0.5;
    return dx * dx + dy * dy + 3.0;
  };
  Chi2Map map = chi2_grid(obj, {"x", 0.0, 3.0, 21}, {"y", 2.0, 8.0, 21});
  CHECK(map.converged);
  CHECK(map.best_x == doctest::Approx(1.3).epsilon(1e-3));
  CHECK(map.best_y == doctest::Approx(4.7).epsilon(1e-3));
  CHECK(map.chi2_min == doctest::Approx(3.0).epsilon(1e-4));  // final grid resolution
  REQUIRE(!map.level_minima.empty());
  for (std::size_t k = 1; k < map.level_minima.size(); ++k)
    CHECK(map.level_minima[k] <= map.level_minima[k - 1] + 1e-12);
  // Joint 68% region: delta chi^2 = 2.30 ellipse semi-axes 0.2*sqrt(2.3).
  CHECK(inside_confidence_region(map, 1.3, 4.7));
  CHECK(inside_confidence_region(map, 1.3 + 0.2, 4.7));
  CHECK_FALSE(inside_confidence_region(map, 1.3 + 0.5, 4.7));
  auto [xlo, xhi] = profile_interval(map, 0);
  CHECK(xlo == doctest::Approx(1.3 - 0.2).epsilon(0.03));
  CHECK(xhi == doctest::Approx(1.3 + 0.2).epsilon(0.03));
}

TEST_CASE("chi-square grid flags an edge minimum as non-converged") {
  auto obj = [](double x, double y) { return x + 0.0 * y; };
  Chi2Map map = chi2_grid(obj, {"x", 0.0, 1.0, 11}, {"y", 0.0, 1.0, 11});
  CHECK_FALSE(map.converged);
}

TEST_CASE("serial and parallel grid evaluation agree exactly") {
  auto obj = [](double x, double y) { return std::sin(3 * x) + (y - 0.3) * (y - 0.3); };
  Chi2GridOptions ser;
  ser.serial = true;
  Chi2Map a = chi2_grid(obj, {"x", 0.0, 2.0, 17}, {"y", -1.0, 1.0, 17}, ser);
  Chi2Map b = chi2_grid(obj, {"x", 0.0, 2.0, 17}, {"y", -1.0, 1.0, 17});
  REQUIRE(a.chi2.rows() == b.chi2.rows());
  CHECK((a.chi2 - b.chi2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.best_x == b.best_x);
  CHECK(a.best_y == b.best_y);
}

TEST_CASE("two-zone fit refines the pulse start time") {
  const double t_p = 700.0;
  auto tr = make_trace(2000, 1.0, [&](double t) {
    if (t < t_p) return 0.6;
    return 0.33 + damped_cos(t - t_p, 0.27, 6.95, 0.0, 0.0);
  });
  ModelSpec before;
  before.components = {constant("b0")};
  ModelSpec during;
  during.components = {damped_cosine("A", "nu", "lam", "phi"), constant("c")};
  auto res = two_zone_rabi_fit(tr, 692.0, before, {{"b0", 0.5}}, during,
                               {{"A", 0.2}, {"nu", 7.0}, {"lam", 0.0}, {"phi", 0.0}, {"c", 0.3}});
  CHECK(res.identifiable);
  // Boundary scan resolves the start time to its 5 ns grid.
  CHECK(std::abs(res.t_p_refined_ns - t_p) <= 5.0);
  CHECK(res.during.value("nu") == doctest::Approx(6.95).epsilon(1e-3));
}

TEST_CASE("two-zone fit reports a flat drive as non-identifiable") {
  auto tr = make_trace(1500, 1.0, [&](double) { return 0.42; });
  ModelSpec before;
  before.components = {constant("b0")};
  ModelSpec during;
  during.components = {damped_cosine("A", "nu", "lam", "phi"), constant("c")};
  auto res = two_zone_rabi_fit(tr, 600.0, before, {{"b0", 0.4}}, during,
                               {{"A", 0.1}, {"nu", 7.0}, {"lam", 0.0}, {"phi", 0.0}, {"c", 0.4}});
  CHECK_FALSE(res.identifiable);
}

TEST_CASE("fringe extraction pairs phases and drops incomplete taus") {
  auto flat = [](double level) {
    AsymmetryTrace tr;
    for (int k = 0; k < 1300; ++k) {
      tr.times_ns.push_back(k);
      tr.values.push_back(level);
    }
    return tr;
  };
  RamseyWindows win;
  win.before_lo_ns = 0.0;
  win.before_hi_ns = 95.0;
  std::vector<PhaseTaggedTrace> traces;
  traces.push_back({100.0, 0.0, 150.0, flat(0.8)});
  traces.push_back({100.0, 180.0, 150.0, flat(0.2)});
  traces.push_back({200.0, 0.0, 150.0, flat(0.5)});  // partner missing, dropped
  auto ex = ramsey_extract(traces, win);
  CHECK(ex.dropped == 1);
  REQUIRE(ex.points.size() == 1);
  CHECK(ex.points[0].tau_ns == doctest::Approx(100.0));
  CHECK(ex.points[0].re == doctest::Approx((0.8 - 0.2) / 2.0).epsilon(1e-9));
  CHECK(ex.points[0].a0 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_FALSE(ex.points[0].has_im);
}
