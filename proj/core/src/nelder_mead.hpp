#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace cyclesim::detail {

struct SimplexResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

// Nelder-Mead downhill simplex (standard coefficients 1, 2, 1/2, 1/2).
// Non-finite objective values are treated as +inf so the simplex backs away
// from invalid regions. After each convergence the search restarts from the
// best vertex with a fresh simplex; it stops once a restart no longer
// improves the objective by more than `tol`.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                                 std::vector<double> start, const std::vector<double>& step,
                                 double tol, std::size_t max_iter) {
  const std::size_t n = start.size();
  auto eval = [&](const std::vector<double>& x) {
    double v = fn(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  SimplexResult best;
  best.x = start;
  best.f = eval(start);
  std::size_t iter = 0;

  while (iter < max_iter) {
    std::vector<std::vector<double>> pts(n + 1, best.x);
    std::vector<double> fv(n + 1, best.f);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i + 1][i] += step[i];
      fv[i + 1] = eval(pts[i + 1]);
    }

    bool local_converged = false;
    std::vector<std::size_t> order(n + 1);
    while (iter < max_iter) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
      const auto lo = order.front();
      const auto hi = order.back();
      const auto second_hi = order[n - 1];
      if (std::isfinite(fv[hi]) && std::abs(fv[hi] - fv[lo]) <= tol) {
        local_converged = true;
        break;
      }
      ++iter;

      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == hi) continue;
        for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
      }
      auto along = [&](double coef) {
        std::vector<double> p(n);
        for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + coef * (pts[hi][d] - centroid[d]);
        return p;
      };

      auto xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < fv[lo]) {
        auto xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[hi] = std::move(xe);
          fv[hi] = fe;
        } else {
          pts[hi] = std::move(xr);
          fv[hi] = fr;
        }
        continue;
      }
      if (fr < fv[second_hi]) {
        pts[hi] = std::move(xr);
        fv[hi] = fr;
        continue;
      }
      const bool outside = fr < fv[hi];
      auto xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[hi])) {
        pts[hi] = std::move(xc);
        fv[hi] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == lo) continue;
        for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[lo][d] + 0.5 * (pts[i][d] - pts[lo][d]);
        fv[i] = eval(pts[i]);
      }
    }

    const auto lo = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    const double improvement = best.f - fv[lo];
    if (fv[lo] <= best.f) {
      best.x = pts[lo];
      best.f = fv[lo];
    }
    if (!local_converged) break;
    if (!(improvement > tol)) {
      best.converged = std::isfinite(best.f);
      break;
    }
  }
  best.iterations = iter;
  return best;
}

}  // namespace cyclesim::detail
