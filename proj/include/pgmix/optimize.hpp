#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pgmix {

struct NelderMeadOptions {
  int max_iterations = 500;
  double tolerance = 1e-6;    // simplex diameter (max-norm) in the search space
  double initial_step = 0.5;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free simplex search maximising `f`. -inf is a legal objective
/// value (treated as worse than any finite value); NaN is treated as -inf.
OptimizeResult nelder_mead_maximize(const Objective& f, std::vector<double> start,
                                    const NelderMeadOptions& options = {});

/// Latin-hypercube points in [lo_k, hi_k]: one stratum per point per dimension.
std::vector<std::vector<double>> latin_hypercube(std::size_t n_points, std::span<const double> lo,
                                                 std::span<const double> hi, std::uint64_t seed);

}  // namespace pgmix
