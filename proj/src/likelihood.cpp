#include "pgmix/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pgmix/error.hpp"

namespace pgmix {

double log10_peak_density(double observed, double expected, double c2) {
  if (!(expected > 0.0)) return kExclusion;
  const double d = std::log10(observed / expected);
  return -0.5 * std::log10(2.0 * std::numbers::pi * c2 / expected) -
         d * d * expected / (2.0 * c2 * std::numbers::ln10);
}

double peak_density(double observed, double expected, double c2) {
  if (!(expected > 0.0)) return 0.0;
  return std::pow(10.0, log10_peak_density(observed, expected, c2));
}

double log10_normal_cdf(double z) {
  if (z > -20.0) return std::log10(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic series of the Mills ratio.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  const double ln = -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) +
                    std::log(series);
  return ln / std::numbers::ln10;
}

double log10_dropout_mass(double expected, double threshold, double c2) {
  if (!(expected > 0.0)) return 0.0;
  const double z = std::log10(threshold / expected) / std::sqrt(c2 / expected);
  return log10_normal_cdf(z);
}

double dropout_mass(double expected, double threshold, double c2) {
  if (!(expected > 0.0)) return 1.0;
  return std::pow(10.0, log10_dropout_mass(expected, threshold, c2));
}

namespace {

std::vector<AlleleLabel> alleles_of(const LocusGenotypes& contributors) {
  std::vector<AlleleLabel> out;
  for (const auto& g : contributors)
    for (const auto& a : {g.first(), g.second()})
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  return out;
}

}  // namespace

double set_log_likelihood(const Profile& profile, const GenotypeSet& set, const MassParams& params,
                          const ModelConfig& config) {
  params.validate();
  double total = 0.0;
  for (const auto& locus : profile.loci()) {
    const auto contributors = set.at_locus(locus.name);
    const auto ctx = make_locus_context(locus, alleles_of(contributors), config);
    const auto e = expected_heights(contributors, params, ctx, config);
    for (std::size_t a = 0; a < ctx.positions.size(); ++a) {
      const auto& pos = ctx.positions[a];
      double allelic = 0.0;
      for (std::size_t i = 0; i < contributors.size(); ++i)
        allelic += params.templates[i] * contributors[i].copies(pos.allele);
      const double c2 = (config.split_stutter_variance && allelic == 0.0)
                            ? params.stutter_variance()
                            : params.variance_c2;
      if (pos.observed_height) {
        if (!(e[a] > 0.0)) return kExclusion;
        total += log10_peak_density(*pos.observed_height, e[a], c2);
      } else if (e[a] > 0.0) {
        total += log10_dropout_mass(e[a], profile.analytical_threshold(), c2);
      }
    }
  }
  return total;
}

double full_log_likelihood(const Profile& profile, std::span<const WeightedGenotypeSet> sets,
                           const MassParams& params, const ModelConfig& config) {
  if (sets.empty()) throw ValidationError("full likelihood needs at least one genotype set");
  Log10SumAccumulator acc;
  for (const auto& w : sets) {
    const double ll = set_log_likelihood(profile, w.set, params, config);
    if (is_exclusion(ll) || !(w.prior > 0.0)) continue;
    acc.add(std::log10(w.prior) + ll);
  }
  return acc.value();
}

void Log10SumAccumulator::add_scaled(double linear) {
  const double t = sum_ + linear;
  if (std::abs(sum_) >= std::abs(linear))
    comp_ += (sum_ - t) + linear;
  else
    comp_ += (linear - t) + sum_;
  sum_ = t;
}

void Log10SumAccumulator::add(double log10_term) {
  ++count_;
  if (is_exclusion(log10_term)) return;
  if (log10_term > max_) {
    if (max_ != kExclusion) {
      const double scale = std::pow(10.0, max_ - log10_term);
      sum_ *= scale;
      comp_ *= scale;
    }
    max_ = log10_term;
  }
  add_scaled(std::pow(10.0, log10_term - max_));
}

void Log10SumAccumulator::merge(const Log10SumAccumulator& other) {
  if (other.max_ == kExclusion) {
    count_ += other.count_;
    return;
  }
  if (other.max_ > max_) {
    if (max_ != kExclusion) {
      const double scale = std::pow(10.0, max_ - other.max_);
      sum_ *= scale;
      comp_ *= scale;
    }
    max_ = other.max_;
  }
  const double scale = std::pow(10.0, other.max_ - max_);
  add_scaled(other.sum_ * scale);
  add_scaled(other.comp_ * scale);
  count_ += other.count_;
}

double Log10SumAccumulator::value() const {
  if (max_ == kExclusion) return kExclusion;
  const double s = sum_ + comp_;
  if (!(s > 0.0)) return kExclusion;
  return max_ + std::log10(s);
}

}  // namespace pgmix
