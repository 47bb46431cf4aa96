#include "pgmix/calibration.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "pgmix/error.hpp"

namespace pgmix {

namespace {

double posterior(double x, double log10_pi) {
  // 10^x pi / (10^x pi + 1) = 1 / (1 + 10^-(x + log10 pi))
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  return 1.0 / (1.0 + std::pow(10.0, -(x + log10_pi)));
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::pair<double, double> expected_posterior_bounds(double a, double b, double n_hp_total,
                                                    double n_ha_total) {
  if (!(n_hp_total > 0.0 && n_ha_total > 0.0))
    throw ValidationError("calibration needs positive totals of both labels");
  const double lp = std::log10(n_hp_total) - std::log10(n_ha_total);
  return {posterior(a, lp), posterior(b, lp)};
}

std::optional<double> observed_frequency(std::size_t count_hp, std::size_t count_ha) {
  if (count_hp + count_ha == 0) return std::nullopt;
  return static_cast<double>(count_hp) / static_cast<double>(count_hp + count_ha);
}

std::pair<double, double> frequency_interval(std::size_t k, std::size_t n, double level) {
  if (n == 0) throw ValidationError("interval needs at least one trial");
  if (k > n) throw ValidationError("more successes than trials");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must be in (0,1)");
  const double alpha = 1.0 - level;
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, alpha / 2.0);
  const double hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - alpha / 2.0);
  return {lo, hi};
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double inverse_logit(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

std::vector<CalibrationTable> calibrate(const std::vector<LabelledLr>& records,
                                        const CalibrationOptions& options) {
  if (!(options.bin_width > 0.0) || !std::isfinite(options.bin_width))
    throw ValidationError("bin width must be positive");
  if (records.empty()) throw ValidationError("no calibration records");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const LabelledLr*>> by_system;
  for (const auto& r : records) {
    if (std::isnan(r.log10_lr) || r.log10_lr == std::numeric_limits<double>::infinity())
      throw ValidationError("calibration records need finite log10 LRs or EXCLUSION");
    if (!by_system.count(r.system)) order.push_back(r.system);
    by_system[r.system].push_back(&r);
  }
  std::vector<CalibrationTable> out;
  for (const auto& name : order) {
    const auto& recs = by_system[name];
    CalibrationTable t;
    t.system = name;
    t.level = options.level;
    std::size_t n_hp = 0, n_ha = 0;
    for (const auto* r : recs) (r->hp_true ? n_hp : n_ha)++;
    t.total_hp = options.total_hp.value_or(n_hp);
    t.total_ha = options.total_ha.value_or(n_ha);
    if (t.total_hp == 0 || t.total_ha == 0)
      throw ValidationError("calibration needs records of both labels" +
                            (name.empty() ? std::string() : " for system " + name));
    std::map<long long, std::pair<std::size_t, std::size_t>> counts;
    std::size_t ex_hp = 0, ex_ha = 0;
    for (const auto* r : recs) {
      if (r->log10_lr == -std::numeric_limits<double>::infinity()) {
        (r->hp_true ? ex_hp : ex_ha)++;
        continue;
      }
      const auto k = static_cast<long long>(std::floor((r->log10_lr - options.bin_origin) / options.bin_width));
      auto& c = counts[k];
      (r->hp_true ? c.first : c.second)++;
    }
    if (options.exclusions == ExclusionPolicy::kLowestBin && (ex_hp + ex_ha) > 0) {
      const long long k = counts.empty() ? 0 : counts.begin()->first;
      counts[k].first += ex_hp;
      counts[k].second += ex_ha;
    } else {
      t.excluded_hp = ex_hp;
      t.excluded_ha = ex_ha;
    }
    if (!counts.empty()) {
      if (counts.rbegin()->first - counts.begin()->first > 100000)
        throw ValidationError("log10 LR range too wide for the bin width");
      for (long long k = counts.begin()->first; k <= counts.rbegin()->first; ++k) {
        CalibrationBin b;
        b.lo = options.bin_origin + static_cast<double>(k) * options.bin_width;
        b.hi = b.lo + options.bin_width;
        auto it = counts.find(k);
        if (it != counts.end()) {
          b.count_hp = it->second.first;
          b.count_ha = it->second.second;
        }
        std::tie(b.p_lo, b.p_hi) = expected_posterior_bounds(
            b.lo, b.hi, static_cast<double>(t.total_hp), static_cast<double>(t.total_ha));
        b.observed = observed_frequency(b.count_hp, b.count_ha);
        if (b.observed) {
          b.interval = frequency_interval(b.count_hp, b.count_hp + b.count_ha, options.level);
          b.miss = b.interval->second < b.p_lo || b.interval->first > b.p_hi;
          t.misses += b.miss ? 1 : 0;
        }
        t.bins.push_back(b);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string calibration_csv(const std::vector<CalibrationTable>& tables) {
  std::ostringstream os;
  os << "system,bin_lo,bin_hi,count_hp,count_ha,expected_lo,expected_hi,observed,ci_lo,ci_hi,verdict\n";
  for (const auto& t : tables)
    for (const auto& b : t.bins) {
      os << t.system << ',' << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count_hp << ','
         << b.count_ha << ',' << fmt(b.p_lo) << ',' << fmt(b.p_hi) << ','
         << (b.observed ? fmt(*b.observed) : "NA") << ','
         << (b.interval ? fmt(b.interval->first) : "NA") << ','
         << (b.interval ? fmt(b.interval->second) : "NA") << ','
         << (!b.observed ? "EMPTY" : b.miss ? "MISS" : "OK") << '\n';
    }
  return os.str();
}

std::string calibration_plot_csv(const std::vector<CalibrationTable>& tables) {
  std::ostringstream os;
  os << "system,bin_mid,logit_expected_lo,logit_expected_hi,logit_observed,logit_ci_lo,logit_ci_hi,n\n";
  for (const auto& t : tables)
    for (const auto& b : t.bins) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      os << t.system << ',' << fmt(0.5 * (b.lo + b.hi)) << ',' << fmt(logit(b.p_lo)) << ','
         << fmt(logit(b.p_hi)) << ',' << fmt(b.observed ? logit(*b.observed) : nan) << ','
         << fmt(b.interval ? logit(b.interval->first) : nan) << ','
         << fmt(b.interval ? logit(b.interval->second) : nan) << ',' << (b.count_hp + b.count_ha)
         << '\n';
    }
  return os.str();
}

nlohmann::json calibration_verdicts(const std::vector<CalibrationTable>& tables) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tables) {
    nlohmann::json missed = nlohmann::json::array();
    for (const auto& b : t.bins)
      if (b.miss) missed.push_back({{"bin_lo", b.lo}, {"bin_hi", b.hi}});
    arr.push_back({{"system", t.system},
                   {"total_hp", t.total_hp},
                   {"total_ha", t.total_ha},
                   {"prior_odds", static_cast<double>(t.total_hp) / static_cast<double>(t.total_ha)},
                   {"excluded_hp", t.excluded_hp},
                   {"excluded_ha", t.excluded_ha},
                   {"bins", t.bins.size()},
                   {"misses", t.misses},
                   {"missed_bins", missed},
                   {"interval_method", t.interval_method},
                   {"level", t.level}});
  }
  return arr;
}

}  // namespace pgmix
