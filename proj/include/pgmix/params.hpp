#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgmix/profile_model.hpp"

namespace pgmix {

/// Box for every continuous parameter. Templates use an unbounded log
/// transform when `template_hi` is infinite.
struct ParamBounds {
  double template_lo = 0.0;
  double template_hi = 30000.0;
  double c2_lo = 0.05;
  double c2_hi = 1000.0;
  double stutter_lo = 0.0;
  double stutter_hi = 0.3;
  double slope_lo = 0.05;
  double slope_hi = 1.0;
  double multiplier_lo = 0.25;
  double multiplier_hi = 4.0;
};

enum class ParamKind {
  kTemplate,
  kVariance,
  kStutterVariance,
  kBackStutter,
  kForwardStutter,
  kSlope,
  kMultiplier
};

enum class Transform {
  kLog,         // x = exp(u), x > 0
  kLogBounded,  // log x linear in sigmoid(u) between log lo and log hi
  kLogit        // x = lo + (hi - lo) sigmoid(u)
};

/// How prior mass is spread over a slot's box.
enum class PriorShape { kUniform, kLogUniform };

struct ParamSlot {
  ParamKind kind;
  int index = 0;       // contributor for templates
  std::string locus;   // for multipliers
  double lo = 0.0;
  double hi = 0.0;
  Transform transform = Transform::kLog;
  PriorShape prior = PriorShape::kUniform;
};

/// Maps between MassParams and an unconstrained vector of the free parameters.
/// Parameters that are not free keep the values of `base`.
class ParamLayout {
 public:
  /// `fixed_c2` pins the variance; disabled model features are never free.
  /// The first locus carries multiplier 1 so templates stay identifiable.
  ParamLayout(int noc, const ModelConfig& config, const std::vector<std::string>& loci,
              const ParamBounds& bounds, bool c2_free, MassParams base);

  std::size_t dim() const noexcept { return slots_.size(); }
  const std::vector<ParamSlot>& slots() const noexcept { return slots_; }
  const MassParams& base() const noexcept { return base_; }
  int noc() const noexcept { return noc_; }

  MassParams to_params(std::span<const double> u) const;
  std::vector<double> to_unconstrained(const MassParams& params) const;
  /// ln |dM/du|
  double log_jacobian(std::span<const double> u) const;

  /// Prior-CDF coordinates: v in [0,1]^d -> parameters, using each slot's
  /// box and prior shape.
  MassParams from_unit(std::span<const double> v) const;
  /// ln prior density of `params` in parameter space; -inf outside the box.
  double log_prior_density(const MassParams& params) const;

  static double slot_value(const ParamSlot& slot, const MassParams& params);
  /// Unconstrained coordinate of a single value for the slot's transform.
  static double value_to_u(const ParamSlot& slot, double value);

 private:
  static void assign(const ParamSlot& slot, MassParams& params, double value);
  int noc_;
  std::vector<ParamSlot> slots_;
  MassParams base_;
};

}  // namespace pgmix
