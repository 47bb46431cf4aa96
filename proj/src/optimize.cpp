#include "pgmix/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pgmix/rng.hpp"

namespace pgmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe(double v) { return std::isnan(v) ? kNegInf : v; }

}  // namespace

OptimizeResult nelder_mead_maximize(const Objective& f, std::vector<double> start,
                                    const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  OptimizeResult result;
  if (n == 0) {
    result.x = start;
    result.value = safe(f(start));
    result.evaluations = 1;
    result.converged = true;
    return result;
  }
  // Dimension-adaptive coefficients (Gao & Han 2012).
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 1.0 / (2.0 * dn);
  const double delta = 1.0 - 1.0 / dn;

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> values(n + 1);
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return safe(f(x));
  };
  for (std::size_t k = 0; k < n; ++k) simplex[k + 1][k] += options.initial_step;
  for (std::size_t k = 0; k <= n; ++k) values[k] = eval(simplex[k]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  int it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    // descending by value, ties by index for determinism
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    double diameter = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      for (std::size_t d = 0; d < n; ++d)
        diameter = std::max(diameter, std::abs(simplex[k][d] - simplex[best][d]));
    if (diameter < options.tolerance) {
      converged = true;
      break;
    }
    if (values[best] == kNegInf && it > 0) break;  // nowhere to go

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[k][d];
    }
    for (double& c : centroid) c /= dn;

    for (std::size_t d = 0; d < n; ++d)
      xr[d] = centroid[d] + alpha * (centroid[d] - simplex[worst][d]);
    const double fr = eval(xr);
    if (fr > values[best]) {
      for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + beta * (xr[d] - centroid[d]);
      const double fe = eval(xe);
      if (fe > fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr > values[second_worst]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr > values[worst];
    for (std::size_t d = 0; d < n; ++d) {
      const double target = outside ? xr[d] : simplex[worst][d];
      xc[d] = centroid[d] + gamma * (target - centroid[d]);
    }
    const double fc = eval(xc);
    if ((outside && fc >= fr) || (!outside && fc > values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      for (std::size_t d = 0; d < n; ++d)
        simplex[k][d] = simplex[best][d] + delta * (simplex[k][d] - simplex[best][d]);
      values[k] = eval(simplex[k]);
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k <= n; ++k)
    if (values[k] > values[best]) best = k;
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = it;
  result.converged = converged;
  return result;
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n_points, std::span<const double> lo,
                                                 std::span<const double> hi, std::uint64_t seed) {
  const std::size_t d = lo.size();
  Rng rng(seed);
  std::vector<std::vector<double>> pts(n_points, std::vector<double>(d));
  std::vector<std::size_t> perm(n_points);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n_points; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < n_points; ++i) {
      const double frac = (static_cast<double>(perm[i]) + rng.uniform()) / n_points;
      pts[i][k] = lo[k] + (hi[k] - lo[k]) * frac;
    }
  }
  return pts;
}

}  // namespace pgmix
