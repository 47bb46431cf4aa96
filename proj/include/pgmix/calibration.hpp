#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace pgmix {

/// One labelled test. log10_lr is -inf for an exclusion.
struct LabelledLr {
  double log10_lr = 0.0;
  bool hp_true = false;
  std::string system;  // optional tag for side-by-side audits
};

enum class ExclusionPolicy { kDrop, kLowestBin };

struct CalibrationOptions {
  double bin_width = 1.0;
  double bin_origin = 0.0;  // bin edges at origin + k * width
  double level = 0.95;
  ExclusionPolicy exclusions = ExclusionPolicy::kDrop;
  /// Totals that set the prior odds; default is the record counts per label
  /// (exclusions included).
  std::optional<std::size_t> total_hp;
  std::optional<std::size_t> total_ha;
};

struct CalibrationBin {
  double lo = 0.0;  // [lo, hi) in log10 LR
  double hi = 0.0;
  std::size_t count_hp = 0;
  std::size_t count_ha = 0;
  double p_lo = 0.0;
  double p_hi = 0.0;
  std::optional<double> observed;
  std::optional<std::pair<double, double>> interval;
  bool miss = false;
};

struct CalibrationTable {
  std::string system;
  std::vector<CalibrationBin> bins;  // ascending
  std::size_t total_hp = 0;
  std::size_t total_ha = 0;
  std::size_t excluded_hp = 0;  // EXCLUSION records dropped by policy
  std::size_t excluded_ha = 0;
  std::size_t misses = 0;
  std::string interval_method = "clopper-pearson";
  double level = 0.95;
};

/// Posterior probability bounds of a bin under prior odds n_hp / n_ha:
/// p(x) = 10^x pi / (10^x pi + 1).
std::pair<double, double> expected_posterior_bounds(double a, double b, double n_hp_total,
                                                    double n_ha_total);
std::optional<double> observed_frequency(std::size_t count_hp, std::size_t count_ha);
/// Exact binomial interval for k successes out of n.
std::pair<double, double> frequency_interval(std::size_t k, std::size_t n, double level = 0.95);

double logit(double p);
double inverse_logit(double x);

/// One table per system tag, in order of first appearance.
std::vector<CalibrationTable> calibrate(const std::vector<LabelledLr>& records,
                                        const CalibrationOptions& options = {});

std::string calibration_csv(const std::vector<CalibrationTable>& tables);
/// Logit-scale columns for plotting; non-finite values written as NA.
std::string calibration_plot_csv(const std::vector<CalibrationTable>& tables);
nlohmann::json calibration_verdicts(const std::vector<CalibrationTable>& tables);

}  // namespace pgmix
