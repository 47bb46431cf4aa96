#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pgmix/genotype_space.hpp"
#include "pgmix/likelihood.hpp"
#include "pgmix/optimize.hpp"
#include "pgmix/params.hpp"

namespace pgmix {

struct SearchSpec {
  enum class Mode { kContinuous, kGrid };
  Mode mode = Mode::kContinuous;
  int n_starts = 8;
  std::uint64_t seed = 1;
  NelderMeadOptions simplex;
  /// Pins c2 when set; otherwise c2 is a free parameter inside `bounds`.
  std::optional<double> fixed_c2;
  ParamBounds bounds{0.0, std::numeric_limits<double>::infinity()};
  /// GRID mode: lattice of template values per contributor. All other
  /// parameters stay at their pinned or neutral values.
  std::vector<std::vector<double>> template_grid;
  /// Extra starting points tried after the random starts.
  std::vector<MassParams> warm_starts;
};

struct MleResult {
  HypothesisLabel label = HypothesisLabel::kHd;
  MassParams params;
  double log10_max = kExclusion;
  int restarts = 0;
  int iterations = 0;
  int evaluations = 0;
  int best_start = -1;
  bool converged = false;
  /// No start found a finite likelihood: the proposition cannot explain the profile.
  bool excluded = false;
  std::uint64_t context = 0;  // fingerprint of profile + model config
  /// Distinct end points of the individual starts, best first (at most 8).
  std::vector<MassParams> local_optima;
};

struct MlLrReport {
  MleResult numerator;
  MleResult denominator;
  double log10_lr_ml = 0.0;
  /// log10 LR with both hypotheses at the denominator's / numerator's fit.
  /// Absent when the propositions have different parameter spaces.
  std::optional<double> log10_lr_bound_low;
  std::optional<double> log10_lr_bound_high;
};

std::uint64_t context_fingerprint(const Profile& profile, const ModelConfig& config);

/// Parameter layout used by the MLE search for a hypothesis.
ParamLayout mle_layout(const HypothesisLikelihood& h, const SearchSpec& search);

MleResult maximize(const HypothesisLikelihood& h, const SearchSpec& search);
MleResult maximize(const Profile& profile, const Proposition& proposition,
                   const FrequencyTable& table, const RareAllelePolicy& policy,
                   const ModelConfig& config, const SearchSpec& search);

/// log10 of LR_ML = max L(H1) / max L(H2); +-inf when one side is excluded.
/// Throws ContractError for results from different profiles/configs.
double log10_lr_ml(const MleResult& numerator, const MleResult& denominator);
double lr_ml(const MleResult& numerator, const MleResult& denominator);

struct BoundedLrs {
  double log10_lr_at_m2 = 0.0;  // both hypotheses at the H2 fit
  double log10_lr_at_m1 = 0.0;  // both hypotheses at the H1 fit
};

/// Throws ContractError when H1 and H2 have different numbers of contributors.
BoundedLrs bounded_lrs(const HypothesisLikelihood& h1, const HypothesisLikelihood& h2,
                       const MassParams& m_hat_1, const MassParams& m_hat_2);

/// Fits both hypotheses. With equal parameter spaces each hypothesis is also
/// restarted from the other's optimum, so each fit is at least as good as the
/// other's estimate under its own likelihood, and the bounds are reported.
MlLrReport fit_pair(const HypothesisLikelihood& h1, const HypothesisLikelihood& h2,
                    const SearchSpec& search);

}  // namespace pgmix
