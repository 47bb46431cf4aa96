#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgmix/allele.hpp"

namespace pgmix {

struct Peak {
  AlleleLabel allele;
  double height = 0.0;          // rfu
  std::optional<double> size;   // bp; only used by degradation
};

struct LocusPeaks {
  std::string name;
  std::vector<Peak> peaks;

  const Peak* find(const AlleleLabel& allele) const;
};

/// Observed evidence: ordered loci, each with its recorded peaks.
class Profile {
 public:
  Profile() = default;
  Profile(std::vector<LocusPeaks> loci, double analytical_threshold);

  const std::vector<LocusPeaks>& loci() const noexcept { return loci_; }
  double analytical_threshold() const noexcept { return threshold_; }
  const LocusPeaks& locus(const std::string& name) const;
  const LocusPeaks* find_locus(const std::string& name) const;
  std::vector<std::string> locus_names() const;

 private:
  std::vector<LocusPeaks> loci_;
  double threshold_ = 1.0;
};

/// Unordered allele pair, stored with first <= second.
class Genotype {
 public:
  Genotype() = default;
  Genotype(AlleleLabel a, AlleleLabel b);

  const AlleleLabel& first() const noexcept { return first_; }
  const AlleleLabel& second() const noexcept { return second_; }
  bool homozygous() const noexcept { return first_ == second_; }
  int copies(const AlleleLabel& allele) const noexcept {
    return (first_ == allele ? 1 : 0) + (second_ == allele ? 1 : 0);
  }
  std::string str() const { return first_.str() + "/" + second_.str(); }

  friend bool operator==(const Genotype&, const Genotype&) = default;
  friend auto operator<=>(const Genotype&, const Genotype&) = default;

 private:
  AlleleLabel first_;
  AlleleLabel second_;
};

/// locus name -> genotype, for one individual.
using MultiLocusGenotype = std::map<std::string, Genotype>;

/// One genotype per contributor at a single locus.
using LocusGenotypes = std::vector<Genotype>;

/// Joint assignment of multi-locus genotypes to every contributor.
struct GenotypeSet {
  std::vector<MultiLocusGenotype> contributors;

  LocusGenotypes at_locus(const std::string& locus) const;
};

enum class HypothesisLabel { kHp, kHd };

const char* to_string(HypothesisLabel label);

struct Proposition {
  int noc = 1;
  std::map<int, MultiLocusGenotype> fixed_contributors;
  HypothesisLabel label = HypothesisLabel::kHd;

  void validate() const;
  bool same_dimension(const Proposition& other) const { return noc == other.noc; }
};

/// Continuous nuisance parameters shared by every genotype set.
struct MassParams {
  std::vector<double> templates;            // per contributor, rfu
  double variance_c2 = 12.0;
  std::optional<double> variance_c2_stutter;  // split-variance configs only
  double degradation_slope = 1.0;
  double bw_stutter_prop = 0.0;
  double fw_stutter_prop = 0.0;
  std::map<std::string, double> locus_multipliers;

  MassParams() = default;
  MassParams(std::vector<double> templates, double variance_c2);

  /// Throws ValidationError unless every field is inside its domain.
  void validate() const;

  double total_template() const;
  /// Templates divided by their total; all zeros when the total is zero.
  std::vector<double> mixture_proportions() const;
  static MassParams from_proportions(std::span<const double> proportions, double total,
                                     double variance_c2);

  double multiplier(const std::string& locus) const;
  double stutter_variance() const { return variance_c2_stutter.value_or(variance_c2); }
};

struct ModelConfig {
  bool back_stutter = false;
  bool forward_stutter = false;
  bool degradation = false;
  bool locus_multipliers = false;
  bool split_stutter_variance = false;
  double repeat_bp = 4.0;                        // bp per repeat unit for size extrapolation
  std::map<std::string, double> nominal_sizes;   // locus -> size used when nothing is observed

  bool any_stutter() const { return back_stutter || forward_stutter; }
  /// Pins the fields of disabled features to their neutral values.
  MassParams neutralize(MassParams params) const;
};

/// Per-position data needed to evaluate one locus.
struct AllelePosition {
  AlleleLabel allele;
  std::optional<double> observed_height;
  double size_bp = 100.0;
};

struct LocusContext {
  std::string name;
  std::vector<AllelePosition> positions;

  std::optional<std::size_t> index_of(const AlleleLabel& allele) const;
};

/// Builds the allele universe for a locus: observed alleles, `candidates`, and
/// (when stutter is enabled) the stutter positions of every candidate.
LocusContext make_locus_context(const LocusPeaks& observed, std::span<const AlleleLabel> candidates,
                                const ModelConfig& config);

/// slope^((size - 100)/100); 1 when degradation is disabled.
double degradation_factor(double slope, double size_bp, const ModelConfig& config);

/// Expected height at every position of `context` for the given contributors.
std::vector<double> expected_heights(const LocusGenotypes& contributors, const MassParams& params,
                                     const LocusContext& context, const ModelConfig& config);

/// Map form of the above for a plain allele universe.
std::map<AlleleLabel, double> expected_heights(const LocusGenotypes& contributors,
                                               const MassParams& params, const std::string& locus,
                                               std::span<const AlleleLabel> allele_universe,
                                               const ModelConfig& config = {});

}  // namespace pgmix
