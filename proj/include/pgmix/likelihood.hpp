#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pgmix/genotype_space.hpp"
#include "pgmix/profile_model.hpp"

namespace pgmix {

inline constexpr double kExclusion = -std::numeric_limits<double>::infinity();

/// log10 likelihoods use -inf for structural exclusion (an observed peak nothing
/// can explain). Finite values never underflow to -inf: every term is kept in
/// log space.
inline bool is_exclusion(double log10_value) { return log10_value == kExclusion; }

/// Normal density of log10(O/E) with mean 0 and variance c2/E, at the observation.
/// Zero when expected == 0.
double peak_density(double observed, double expected, double c2);
double log10_peak_density(double observed, double expected, double c2);

/// Model mass below the analytical threshold: Phi(log10(AT/E) / sqrt(c2/E)).
double dropout_mass(double expected, double threshold, double c2);
/// log10 of the above, accurate deep into the lower tail.
double log10_dropout_mass(double expected, double threshold, double c2);

/// log10 Phi(z) without underflow for very negative z.
double log10_normal_cdf(double z);

/// log10 Pr(O | S, M) for one joint genotype set (reference path).
double set_log_likelihood(const Profile& profile, const GenotypeSet& set, const MassParams& params,
                          const ModelConfig& config = {});

/// log10 sum_j Pr(S_j) Pr(O | S_j, M), log-sum stabilised (reference path).
/// Throws ValidationError for an empty list.
double full_log_likelihood(const Profile& profile, std::span<const WeightedGenotypeSet> sets,
                           const MassParams& params, const ModelConfig& config = {});

/// Accumulates log10 sum 10^x_i in a streaming fashion with Neumaier-compensated
/// partial sums; the result does not depend on how terms are grouped beyond
/// rounding of the compensated sum.
class Log10SumAccumulator {
 public:
  void add(double log10_term);
  void merge(const Log10SumAccumulator& other);
  double value() const;
  std::size_t count() const noexcept { return count_; }

 private:
  void add_scaled(double linear);
  double max_ = kExclusion;
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t count_ = 0;
};

/// Fast evaluator of log10 Pr(O | H, M) for one proposition.
///
/// Relies on the factorisation of the genotype-set sum across loci (genotype
/// priors are independent between loci and heights are independent given M):
///   Pr(O | M) = prod_l sum_{S_l} Pr(S_l) Pr(O_l | S_l, M).
/// Sets that cannot explain an observed peak for any M are dropped up front.
/// For each position the distinct per-contributor copy patterns are tabulated,
/// so one evaluation costs one density/dropout per (position, pattern) plus a
/// gather-add and a log-sum-exp over the surviving sets.
class HypothesisLikelihood {
 public:
  HypothesisLikelihood(const Profile& profile, const Proposition& proposition,
                       const FrequencyTable& table, const RareAllelePolicy& policy,
                       const ModelConfig& config);

  double log10_likelihood(const MassParams& params) const;

  /// log10 Pr(O | S, M) for every surviving set at one locus, in enumeration order
  /// restricted to survivors, with log10 prior added when `with_prior`.
  std::vector<double> locus_set_terms(std::size_t locus_index, const MassParams& params,
                                      bool with_prior) const;

  const Proposition& proposition() const noexcept { return proposition_; }
  const Profile& profile() const noexcept { return profile_; }
  const ModelConfig& config() const noexcept { return config_; }
  int noc() const noexcept { return proposition_.noc; }
  std::size_t n_loci() const noexcept { return loci_.size(); }
  std::size_t locus_set_count(std::size_t locus_index) const { return loci_[locus_index].n_sets; }
  std::size_t locus_enumerated_count(std::size_t locus_index) const {
    return loci_[locus_index].n_enumerated;
  }
  const std::vector<LocusGenotypes>& locus_sets(std::size_t locus_index) const {
    return loci_[locus_index].sets;
  }
  /// Structurally impossible for every M (some locus has no surviving set).
  bool structurally_excluded() const noexcept { return excluded_; }

 private:
  struct Pattern {
    // per contributor: copies at the position, at the back-stutter parent (one
    // repeat above), at the forward-stutter parent (one repeat below)
    std::vector<std::int8_t> own, up, down;
  };
  struct Position {
    bool observed = false;
    double log10_observed = 0.0;
    double size_bp = 100.0;
    std::vector<Pattern> patterns;
    std::vector<std::uint32_t> set_pattern;  // per surviving set
  };
  struct Locus {
    std::string name;
    std::vector<Position> positions;
    std::vector<double> log10_prior;  // per surviving set
    std::vector<LocusGenotypes> sets;
    std::size_t n_sets = 0;
    std::size_t n_enumerated = 0;
  };

  void evaluate_locus(const Locus& locus, const MassParams& params, std::vector<double>& acc,
                      std::vector<double>& scratch_e, std::vector<double>& scratch_t) const;

  Profile profile_;
  Proposition proposition_;
  ModelConfig config_;
  std::vector<Locus> loci_;
  double threshold_ = 1.0;
  bool excluded_ = false;
};

}  // namespace pgmix
