#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pgmix/allele.hpp"
#include "pgmix/profile_model.hpp"

namespace pgmix {

/// Allele frequencies per locus plus the database size N and the number of
/// allelic classes k per locus (used by the rare-allele policies).
class FrequencyTable {
 public:
  FrequencyTable() = default;
  FrequencyTable(std::map<std::string, std::map<AlleleLabel, double>> frequencies,
                 int n_individuals, std::map<std::string, int> n_allele_classes = {});

  int n_individuals() const noexcept { return n_individuals_; }
  /// k for the locus; defaults to the number of listed alleles.
  int n_allele_classes(const std::string& locus) const;
  std::optional<double> frequency(const std::string& locus, const AlleleLabel& allele) const;
  const std::map<AlleleLabel, double>& locus(const std::string& locus) const;
  bool has_locus(const std::string& locus) const { return freqs_.count(locus) > 0; }
  const std::map<std::string, std::map<AlleleLabel, double>>& all() const noexcept {
    return freqs_;
  }

 private:
  std::map<std::string, std::map<AlleleLabel, double>> freqs_;
  int n_individuals_ = 1;
  std::map<std::string, int> k_;
};

struct RareAllelePolicy {
  enum class Kind { kFiveOver2N, kBetaMean, kFixed };
  Kind kind = Kind::kFiveOver2N;
  double fixed_value = 0.0;

  static RareAllelePolicy five_over_2n() { return {Kind::kFiveOver2N, 0.0}; }
  static RareAllelePolicy beta_mean() { return {Kind::kBetaMean, 0.0}; }
  static RareAllelePolicy fixed(double v) { return {Kind::kFixed, v}; }
  /// "5over2n", "betamean" or "fixed:<value>".
  static RareAllelePolicy parse(const std::string& text);
  std::string str() const;
};

/// 5/(2N), 1/(k(2N+1)) or the fixed value. Throws when the result is not in (0,1).
double rare_allele_probability(const RareAllelePolicy& policy, const FrequencyTable& table,
                               const std::string& locus);

/// Hardy-Weinberg genotype probability. Alleles missing from the table (and
/// "Q", unless `aggregate_frequency` overrides it) take the policy value.
double genotype_prior(const Genotype& g, const FrequencyTable& table,
                      const RareAllelePolicy& policy, const std::string& locus,
                      std::optional<double> aggregate_frequency = std::nullopt);

struct WeightedLocusSet {
  LocusGenotypes contributors;
  double prior = 1.0;
};

struct WeightedGenotypeSet {
  GenotypeSet set;
  double prior = 1.0;
};

/// Alleles an unknown contributor may carry at the locus: observed alleles,
/// their back-stutter parents when stutter is enabled, and "Q".
std::vector<AlleleLabel> candidate_alleles(const LocusPeaks& observed, const ModelConfig& config);

/// Frequency carried by "Q" during enumeration: the database mass not taken by
/// explicit candidates, floored at the rare-allele value.
double aggregate_frequency(const std::vector<AlleleLabel>& candidates, const FrequencyTable& table,
                           const RareAllelePolicy& policy, const std::string& locus);

/// All genotype assignments at one locus compatible with the proposition.
/// Unknowns range over unordered genotypes of the candidate alleles; fixed
/// contributors are copied verbatim with prior factor 1.
std::vector<WeightedLocusSet> enumerate_locus_sets(const LocusPeaks& observed,
                                                   const Proposition& proposition,
                                                   const FrequencyTable& table,
                                                   const RareAllelePolicy& policy,
                                                   const ModelConfig& config = {});

/// Joint multi-locus enumeration (product of the per-locus sets). Throws
/// ValidationError when the product exceeds `max_sets`.
std::vector<WeightedGenotypeSet> enumerate_sets(const Profile& profile, const Proposition& proposition,
                                                const FrequencyTable& table,
                                                const RareAllelePolicy& policy,
                                                const ModelConfig& config = {},
                                                std::size_t max_sets = 1'000'000);

}  // namespace pgmix
