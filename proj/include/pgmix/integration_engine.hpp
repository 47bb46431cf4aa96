#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pgmix/genotype_space.hpp"
#include "pgmix/likelihood.hpp"
#include "pgmix/params.hpp"

namespace pgmix {

/// Independent priors on the mass parameters. Templates and stutter are
/// uniform, c2 and locus multipliers log-uniform, slope uniform.
struct PriorSpec {
  double template_lo = 0.0;
  double template_hi = 30000.0;
  std::optional<double> fixed_c2;
  double c2_lo = 2.0;
  double c2_hi = 50.0;
  double stutter_lo = 0.0;
  double stutter_hi = 0.3;
  double slope_lo = 0.5;
  double slope_hi = 1.0;
  double multiplier_lo = 0.5;
  double multiplier_hi = 2.0;

  void validate() const;
  ParamBounds bounds() const;
  std::uint64_t fingerprint() const;
};

/// Layout whose unit-cube coordinates are the prior CDFs of the free parameters.
ParamLayout prior_layout(const HypothesisLikelihood& h, const PriorSpec& prior);

enum class Estimator { kQuadrature, kLattice, kMonteCarlo, kImportance };
const char* to_string(Estimator e);

struct IntegralResult {
  HypothesisLabel label = HypothesisLabel::kHd;
  double log10_marginal = kExclusion;
  Estimator estimator = Estimator::kQuadrature;
  std::size_t resolution = 0;   // points per axis (quadrature) or samples
  std::size_t evaluations = 0;
  int levels = 0;
  std::vector<double> level_values;  // log10 marginal per refinement level
  double relative_se = 0.0;          // sampling estimators only
  bool converged = false;
  std::uint64_t context = 0;

  double marginal() const;
};

/// log10 of a non-negative integrand on the unit cube.
using Log10Integrand = std::function<double(std::span<const double>)>;

struct QuadratureOptions {
  std::size_t initial_points = 16;   // per axis
  double tolerance = 1e-3;           // relative change between levels
  std::size_t max_evaluations = std::size_t{1} << 23;  // per level
  int min_levels = 3;
};

/// Tensor midpoint rule on [0,1]^d, doubling points per axis until two
/// successive levels agree. Cells are summed in a fixed order.
IntegralResult integrate_quadrature(const Log10Integrand& f, std::size_t dim,
                                    const QuadratureOptions& options = {});
/// Plain Monte Carlo over uniform draws on [0,1]^d.
IntegralResult integrate_monte_carlo(const Log10Integrand& f, std::size_t dim,
                                     std::size_t n_samples, std::uint64_t seed);

/// Throws ContractError when the free dimension exceeds this.
inline constexpr std::size_t kMaxQuadratureDim = 5;

IntegralResult marginal_quadrature(const HypothesisLikelihood& h, const PriorSpec& prior,
                                   const QuadratureOptions& options = {});
IntegralResult marginal_quadrature(const Profile& profile, const Proposition& proposition,
                                   const FrequencyTable& table, const RareAllelePolicy& policy,
                                   const ModelConfig& config, const PriorSpec& prior,
                                   const QuadratureOptions& options = {});

/// Riemann sum over a user lattice of template values (one axis per
/// contributor, each with uniform spacing); all other parameters must be
/// pinned. Each cell carries its spacing times the prior density.
IntegralResult marginal_lattice(const HypothesisLikelihood& h, const PriorSpec& prior,
                                const std::vector<std::vector<double>>& template_axes);

/// Prior-sampling Monte Carlo; n_samples >= 1000.
IntegralResult marginal_monte_carlo(const HypothesisLikelihood& h, const PriorSpec& prior,
                                    std::size_t n_samples, std::uint64_t seed);

struct ImportanceSpec {
  std::size_t n_samples = 4000;
  std::uint64_t seed = 1;
  double dof = 5.0;             // multivariate t proposals
  double scale_inflation = 1.3;
  double defensive_fraction = 0.1;
  int max_components = 48;
  /// Include images of each mode under permutation of exchangeable unknowns.
  bool permutation_images = true;
};

/// Importance sampling with a mixture of t proposals centred on posterior modes
/// (found by refining `seeds`, typically MLE optima) plus a prior component.
/// Unbiased for the marginal whatever the seeds are; seeds only affect variance.
IntegralResult marginal_importance(const HypothesisLikelihood& h, const PriorSpec& prior,
                                   std::span<const MassParams> seeds, const ImportanceSpec& spec);

/// log10 LR_int; -inf when the numerator is 0, +inf when only the denominator is.
/// Throws ContractError for results from different profiles or models.
double log10_lr_int(const IntegralResult& numerator, const IntegralResult& denominator);
double lr_int(const IntegralResult& numerator, const IntegralResult& denominator);

struct DeconvolutionEntry {
  GenotypeSet set;
  double log10_prior = 0.0;
  double log10_integral = kExclusion;  // log10 of int p(O|S,M) p(M) dM
  double weight = 0.0;                 // normalised posterior weight
};

struct Deconvolution {
  int noc = 0;
  std::vector<DeconvolutionEntry> entries;
  double log10_total = kExclusion;  // log10 sum_j Pr(S_j) I_j
};

struct DeconvolutionOptions {
  QuadratureOptions quadrature;
  std::size_t mc_samples = 20000;   // used above the quadrature dimension cap
  std::uint64_t seed = 1;
  std::size_t max_sets = 20000;
};

/// Posterior genotype-set weights for an unconditioned proposition at `noc`.
/// Throws ValidationError when every weight is zero.
Deconvolution deconvolution_weights(const Profile& profile, int noc, const FrequencyTable& table,
                                    const RareAllelePolicy& policy, const ModelConfig& config,
                                    const PriorSpec& prior, const DeconvolutionOptions& options = {});

/// log10 LR for "POI is contributor `slot`" versus "all unknown", formed from
/// the deconvolution by keeping only the sets with the POI in that slot.
double log10_conditioned_lr(const Deconvolution& deconvolution, int slot,
                            const MultiLocusGenotype& poi, const Profile& profile,
                            const FrequencyTable& table, const RareAllelePolicy& policy,
                            const ModelConfig& config);

}  // namespace pgmix
