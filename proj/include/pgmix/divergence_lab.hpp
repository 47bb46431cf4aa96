#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgmix/genotype_space.hpp"
#include "pgmix/integration_engine.hpp"
#include "pgmix/mle_engine.hpp"
#include "pgmix/profile_model.hpp"
#include "pgmix/rng.hpp"

namespace pgmix {

struct TrueScenario {
  std::vector<std::string> loci;                 // profile locus order
  std::vector<MultiLocusGenotype> genotypes;     // one per true contributor
  MassParams params;                             // ground truth M0
  ModelConfig config;
  double analytical_threshold = 50.0;
  /// bp of repeat 0 per locus; peaks sit at base + repeat_bp * repeat.
  std::map<std::string, double> base_bp;
  std::uint64_t seed = 1;

  int noc() const { return static_cast<int>(genotypes.size()); }
  double size_bp(const std::string& locus, const AlleleLabel& allele) const;
};

/// Heights O = E 10^z with z ~ N(0, c2/E) at every allele and stutter
/// position; peaks below the threshold are dropped.
Profile simulate_profile(const TrueScenario& scenario);

enum class DonorLabel { kTrueDonor, kNondonorRandom, kNondonorResampled };
const char* to_string(DonorLabel label);
enum class EngineKind { kMle, kInt };
const char* to_string(EngineKind engine);

enum class NondonorMode { kRandom, kResampled };

/// RANDOM: two alleles per locus from the table. RESAMPLED: two alleles drawn
/// with replacement from the pooled alleles of the true donors at the locus.
MultiLocusGenotype gen_nondonor(NondonorMode mode, const FrequencyTable& table,
                                const std::vector<MultiLocusGenotype>& true_donors,
                                const std::vector<std::string>& loci, std::uint64_t seed);

/// HWE draw from the table (frequencies renormalised over listed alleles).
MultiLocusGenotype random_person(const FrequencyTable& table, const std::vector<std::string>& loci,
                                 Rng& rng);

struct StudyConfig {
  int n_cases = 4;
  std::vector<int> noc = {2};        // cases cycle through these
  int n_loci = 4;
  int alleles_per_locus = 6;
  int first_repeat = 8;
  int n_individuals = 500;           // database size for the rare-allele policy
  int true_donors_per_case = 1;      // POIs taken from the true contributors
  int nondonors_per_case = 10;
  std::vector<NondonorMode> nondonor_modes = {NondonorMode::kResampled};
  bool run_mle = true;
  bool run_int = true;
  RareAllelePolicy policy;
  double template_lo = 300.0;        // true templates log-uniform in this range
  double template_hi = 3000.0;
  double c2 = 12.0;
  double analytical_threshold = 50.0;
  ModelConfig model;
  SearchSpec search;                 // Hd search; Hp uses hp_starts random starts
  int hp_starts = 4;
  PriorSpec prior;
  ImportanceSpec importance;
  std::uint64_t seed = 1;
  std::optional<FrequencyTable> table;  // generated from the seed when absent
  std::string frequencies_path;         // where `table` was read from, if anywhere

  static StudyConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct LrRecord {
  int case_id = 0;
  int noc = 0;
  int poi = 0;  // index of the tested person within the case
  DonorLabel donor = DonorLabel::kTrueDonor;
  EngineKind engine = EngineKind::kMle;
  double log10_lr = 0.0;  // -inf for exclusion, NaN when the engine failed
  std::optional<double> c2_hp;
  std::optional<double> c2_hd;
  std::optional<double> mixprop_divergence;
  std::vector<double> mixprop_hp;  // sorted descending
  std::vector<double> mixprop_hd;
  std::optional<double> bound_low;
  std::optional<double> bound_high;
  bool converged = true;
  std::string error;

  bool excluded() const { return log10_lr == kExclusion; }
};

/// Frequency table used by a study (the configured one, or one generated from the seed).
FrequencyTable study_table(const StudyConfig& config);

/// Runs every case; cases may run on several threads, results are identical
/// for any thread count.
std::vector<LrRecord> run_study(const StudyConfig& config, int threads = 1);

std::string records_csv(const std::vector<LrRecord>& records);

struct GroupSummary {
  EngineKind engine;
  DonorLabel donor;
  std::size_t n = 0;
  std::size_t failed = 0;
  double fraction_lr_gt_1 = 0.0;
  double fraction_excluded = 0.0;
  std::vector<double> quantiles;  // at kQuantileLevels, -inf for exclusions
};

inline constexpr double kQuantileLevels[] = {0.05, 0.25, 0.5, 0.75, 0.95};

struct DivergenceSummary {
  std::vector<GroupSummary> groups;
  /// (c2_Hp, c2_Hd) per MLE record.
  std::vector<std::pair<double, double>> variance_pairs;
  std::optional<double> median_c2_diff_nondonor;   // median over non-donor MLE records
  std::optional<double> max_c2_ratio_nondonor;     // max c2_Hp / c2_Hd
  std::optional<double> median_mixprop_divergence;
  /// median over non-donors of log10 LR_ML - log10 LR_int (paired per test)
  std::optional<double> median_mle_minus_int_nondonor;
  std::size_t paired_nondonors = 0;

  const GroupSummary* find(EngineKind e, DonorLabel d) const;
  /// Fraction of LR > 1 over all non-donor labels for one engine.
  double nondonor_fraction_lr_gt_1(EngineKind e) const;
};

DivergenceSummary divergence_summary(const std::vector<LrRecord>& records);
nlohmann::json to_json(const DivergenceSummary& s);

/// One row per record; exclusions keep the EXCLUSION value and get a
/// seeded plotting position uniform in [jitter_lo, jitter_hi].
std::string scatter_csv(const std::vector<LrRecord>& records, std::uint64_t jitter_seed,
                        double jitter_lo = -50.0, double jitter_hi = -40.0);
/// LR_ML against LR_int for paired tests, as SVG.
std::string scatter_svg(const std::vector<LrRecord>& records, std::uint64_t jitter_seed,
                        double jitter_lo = -50.0, double jitter_hi = -40.0);

}  // namespace pgmix
