#pragma once

// One-dimensional search helpers: log-spaced grids, golden-section
// maximisation and bisection for the edge of a positive region.

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "pfqkd/mathkit.hpp"

namespace pfqkd {

/// `count` points spaced evenly in log between lo and hi, both included.
inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw DomainError("log_grid: need 0 < lo <= hi and count >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 1) return {lo};
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(i == count - 1 ? hi : std::exp(a + step * i));
  return out;
}

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a maximum of a unimodal f on [a, b], stopping
/// once the bracket is narrower than `tol`.
template <typename F>
ScalarOptimum golden_section_maximize(F&& f, double a, double b, double tol) {
  constexpr double inv_phi = std::numbers::phi - 1.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? ScalarOptimum{c, fc} : ScalarOptimum{d, fd};
}

/// Coarse log-grid scan followed by golden-section refinement in log space
/// around the best grid point. Returns the best point found by either stage.
template <typename F>
ScalarOptimum scan_and_refine_log(F&& f, double lo, double hi, int grid_points, double rel_tol) {
  const auto grid = log_grid(lo, hi, grid_points);
  std::vector<double> values;
  values.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.push_back(f(grid[i]));
    if (values[i] > values[best]) best = i;
  }
  ScalarOptimum out{grid[best], values[best]};
  if (grid.size() < 3) return out;
  const double a = std::log(grid[best == 0 ? 0 : best - 1]);
  const double b = std::log(grid[best + 1 == grid.size() ? best : best + 1]);
  const auto refined = golden_section_maximize([&](double u) { return f(std::exp(u)); }, a, b, rel_tol);
  if (refined.value > out.value) out = {std::exp(refined.x), refined.value};
  return out;
}

/// Largest x in [0, limit] with positive(x) true, assuming positive() is
/// true on an initial interval and false beyond. Brackets in `step`
/// increments, then bisects to `resolution`. Returns 0 when positive(0) fails.
template <typename P>
double last_positive(P&& positive, double step, double resolution, double limit) {
  if (!positive(0.0)) return 0.0;
  double lo = 0.0;
  double hi = step;
  while (positive(hi)) {
    lo = hi;
    hi += step;
    if (hi > limit) return limit;
  }
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (positive(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

}  // namespace pfqkd
