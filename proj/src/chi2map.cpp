#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "musim/fit.hpp"
#include "musim/parallel.hpp"

namespace musim {

Chi2Map chi2_grid(const std::function<double(double, double)>& objective, const AxisSpec& x,
                  const AxisSpec& y, const Chi2GridOptions& opt) {
  if (x.n < 3 || y.n < 3) throw std::invalid_argument("chi2_grid: need at least 3x3 cells");
  if (!(x.hi > x.lo) || !(y.hi > y.lo)) throw std::invalid_argument("chi2_grid: bad axis range");

  AxisSpec ax = x, ay = y;
  Chi2Map map;
  std::vector<double> xs, ys;
  Eigen::MatrixXd chi2;
  for (int level = 0; level < std::max(1, opt.refine_levels); ++level) {
    xs.resize(ax.n);
    ys.resize(ay.n);
    for (int i = 0; i < ax.n; ++i) xs[i] = ax.lo + (ax.hi - ax.lo) * i / (ax.n - 1);
    for (int j = 0; j < ay.n; ++j) ys[j] = ay.lo + (ay.hi - ay.lo) * j / (ay.n - 1);
    chi2.resize(ax.n, ay.n);
    auto cell = [&](std::size_t idx) {
      int i = int(idx) / ay.n, j = int(idx) % ay.n;
      chi2(i, j) = objective(xs[i], ys[j]);
    };
    if (opt.serial)
      par::serial_for(std::size_t(ax.n) * ay.n, cell);
    else
      par::parallel_for(std::size_t(ax.n) * ay.n, cell, opt.workers);

    int bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ax.n; ++i)
      for (int j = 0; j < ay.n; ++j)
        if (chi2(i, j) < best) { best = chi2(i, j); bi = i; bj = j; }
    if (!std::isfinite(best)) throw std::runtime_error("chi2_grid: objective never finite");
    if (level == 0) {
      // The stored surface always spans the requested range so confidence
      // regions and profiles are not clipped by later zooms.
      map.xs = xs;
      map.ys = ys;
      map.chi2 = chi2;
    }
    map.best_x = xs[bi];
    map.best_y = ys[bj];
    map.chi2_min = best;
    map.level_minima.push_back(best);
    map.converged = !(bi == 0 || bi == ax.n - 1 || bj == 0 || bj == ay.n - 1);
    map.x_axis = ax;
    map.y_axis = ay;

    if (level + 1 == std::max(1, opt.refine_levels)) break;
    // Zoom around the best cell, clipped to the original bounds.
    double half_x = (ax.hi - ax.lo) / (2.0 * opt.zoom);
    double half_y = (ay.hi - ay.lo) / (2.0 * opt.zoom);
    ax.lo = std::max(x.lo, map.best_x - half_x);
    ax.hi = std::min(x.hi, map.best_x + half_x);
    ay.lo = std::max(y.lo, map.best_y - half_y);
    ay.hi = std::min(y.hi, map.best_y + half_y);
    if (!(ax.hi > ax.lo) || !(ay.hi > ay.lo)) break;
  }
  return map;
}

namespace {
double interp1(const std::vector<double>& xs, double x, int* k_out) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  int k = int(it - xs.begin()) - 1;
  k = std::max(0, std::min(int(xs.size()) - 2, k));
  *k_out = k;
  return (x - xs[k]) / (xs[k + 1] - xs[k]);
}
}  // namespace

bool inside_confidence_region(const Chi2Map& map, double x, double y, double delta) {
  if (map.xs.size() < 2 || map.ys.size() < 2) return false;
  if (x < map.xs.front() || x > map.xs.back() || y < map.ys.front() || y > map.ys.back())
    return false;
  int i, j;
  double fx = interp1(map.xs, x, &i);
  double fy = interp1(map.ys, y, &j);
  double c = (1 - fx) * (1 - fy) * map.chi2(i, j) + fx * (1 - fy) * map.chi2(i + 1, j) +
             (1 - fx) * fy * map.chi2(i, j + 1) + fx * fy * map.chi2(i + 1, j + 1);
  return c <= map.chi2_min + delta;
}

std::pair<double, double> profile_interval(const Chi2Map& map, int axis, double delta) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("profile_interval: axis must be 0 or 1");
  const std::vector<double>& xs = axis == 0 ? map.xs : map.ys;
  std::size_t n = xs.size();
  std::vector<double> prof(n, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < (axis == 0 ? map.ys.size() : map.xs.size()); ++b) {
      double v = axis == 0 ? map.chi2(long(a), long(b)) : map.chi2(long(b), long(a));
      prof[a] = std::min(prof[a], v);
    }
  }
  std::size_t kbest = std::min_element(prof.begin(), prof.end()) - prof.begin();
  double target = prof[kbest] + delta;

  double lo = xs.front(), hi = xs.back();
  for (std::size_t k = kbest; k-- > 0;) {
    if (prof[k] >= target) {
      double f = (target - prof[k + 1]) / (prof[k] - prof[k + 1]);
      lo = xs[k + 1] + f * (xs[k] - xs[k + 1]);
      break;
    }
  }
  for (std::size_t k = kbest; k + 1 < n; ++k) {
    if (prof[k + 1] >= target) {
      double f = (target - prof[k]) / (prof[k + 1] - prof[k]);
      hi = xs[k] + f * (xs[k + 1] - xs[k]);
      break;
    }
  }
  return {lo, hi};
}

}  // namespace musim
