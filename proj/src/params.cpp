#include "pgmix/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgmix/error.hpp"

namespace pgmix {

namespace {

constexpr double kUClamp = 36.0;  // sigmoid(36) == 1 - 2e-16

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double log_sigmoid(double u) { return u >= 0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u)); }
double logit(double p) {
  p = std::clamp(p, 1e-300, 1.0);
  const double u = std::log(p) - std::log1p(-p);
  return std::clamp(u, -kUClamp, kUClamp);
}

}  // namespace

ParamLayout::ParamLayout(int noc, const ModelConfig& config, const std::vector<std::string>& loci,
                         const ParamBounds& b, bool c2_free, MassParams base)
    : noc_(noc), base_(config.neutralize(std::move(base))) {
  if (noc < 1) throw ValidationError("number of contributors must be >= 1");
  if (static_cast<int>(base_.templates.size()) != noc) base_.templates.assign(noc, 1000.0);
  for (int i = 0; i < noc; ++i)
    slots_.push_back({ParamKind::kTemplate, i, {}, b.template_lo, b.template_hi, Transform::kLog,
                      PriorShape::kUniform});
  if (c2_free)
    slots_.push_back({ParamKind::kVariance, 0, {}, b.c2_lo, b.c2_hi, Transform::kLogBounded,
                      PriorShape::kLogUniform});
  if (c2_free && config.split_stutter_variance)
    slots_.push_back({ParamKind::kStutterVariance, 0, {}, b.c2_lo, b.c2_hi,
                      Transform::kLogBounded, PriorShape::kLogUniform});
  if (config.back_stutter)
    slots_.push_back({ParamKind::kBackStutter, 0, {}, b.stutter_lo, b.stutter_hi, Transform::kLogit,
                      PriorShape::kUniform});
  if (config.forward_stutter)
    slots_.push_back({ParamKind::kForwardStutter, 0, {}, b.stutter_lo, b.stutter_hi,
                      Transform::kLogit, PriorShape::kUniform});
  if (config.degradation)
    slots_.push_back({ParamKind::kSlope, 0, {}, b.slope_lo, b.slope_hi, Transform::kLogit,
                      PriorShape::kUniform});
  if (config.locus_multipliers)
    for (std::size_t l = 1; l < loci.size(); ++l)
      slots_.push_back({ParamKind::kMultiplier, 0, loci[l], b.multiplier_lo, b.multiplier_hi,
                        Transform::kLogBounded, PriorShape::kLogUniform});
  for (const auto& s : slots_)
    if (!(s.hi > s.lo)) throw ValidationError("parameter bounds must be ordered");
  if (config.split_stutter_variance && !base_.variance_c2_stutter)
    base_.variance_c2_stutter = base_.variance_c2;
}

double ParamLayout::slot_value(const ParamSlot& slot, const MassParams& p) {
  switch (slot.kind) {
    case ParamKind::kTemplate: return p.templates.at(slot.index);
    case ParamKind::kVariance: return p.variance_c2;
    case ParamKind::kStutterVariance: return p.stutter_variance();
    case ParamKind::kBackStutter: return p.bw_stutter_prop;
    case ParamKind::kForwardStutter: return p.fw_stutter_prop;
    case ParamKind::kSlope: return p.degradation_slope;
    case ParamKind::kMultiplier: return p.multiplier(slot.locus);
  }
  return 0.0;
}

void ParamLayout::assign(const ParamSlot& slot, MassParams& p, double v) {
  switch (slot.kind) {
    case ParamKind::kTemplate: p.templates.at(slot.index) = v; break;
    case ParamKind::kVariance: p.variance_c2 = v; break;
    case ParamKind::kStutterVariance: p.variance_c2_stutter = v; break;
    case ParamKind::kBackStutter: p.bw_stutter_prop = v; break;
    case ParamKind::kForwardStutter: p.fw_stutter_prop = v; break;
    case ParamKind::kSlope: p.degradation_slope = v; break;
    case ParamKind::kMultiplier: p.locus_multipliers[slot.locus] = v; break;
  }
}

MassParams ParamLayout::to_params(std::span<const double> u) const {
  if (u.size() != slots_.size()) throw ValidationError("parameter vector has wrong dimension");
  MassParams p = base_;
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto& s = slots_[k];
    double v = 0.0;
    switch (s.transform) {
      case Transform::kLog: v = std::exp(std::clamp(u[k], -700.0, 700.0)); break;
      case Transform::kLogBounded: {
        const double a = std::log(s.lo), b = std::log(s.hi);
        v = std::exp(a + (b - a) * sigmoid(u[k]));
        v = std::clamp(v, s.lo, s.hi);
        break;
      }
      case Transform::kLogit: v = std::clamp(s.lo + (s.hi - s.lo) * sigmoid(u[k]), s.lo, s.hi); break;
    }
    assign(s, p, v);
  }
  return p;
}

double ParamLayout::value_to_u(const ParamSlot& s, double v) {
  switch (s.transform) {
    case Transform::kLog: return v > 0.0 ? std::max(std::log(v), -40.0) : -40.0;
    case Transform::kLogBounded: {
      const double a = std::log(s.lo), b = std::log(s.hi);
      return logit((std::log(std::clamp(v, s.lo, s.hi)) - a) / (b - a));
    }
    case Transform::kLogit: return logit((std::clamp(v, s.lo, s.hi) - s.lo) / (s.hi - s.lo));
  }
  return 0.0;
}

std::vector<double> ParamLayout::to_unconstrained(const MassParams& params) const {
  std::vector<double> u(slots_.size());
  for (std::size_t k = 0; k < slots_.size(); ++k) u[k] = value_to_u(slots_[k], slot_value(slots_[k], params));
  return u;
}

double ParamLayout::log_jacobian(std::span<const double> u) const {
  double j = 0.0;
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto& s = slots_[k];
    switch (s.transform) {
      case Transform::kLog: j += std::clamp(u[k], -700.0, 700.0); break;
      case Transform::kLogBounded: {
        const double a = std::log(s.lo), b = std::log(s.hi);
        const double x = a + (b - a) * sigmoid(u[k]);
        j += x + std::log(b - a) + log_sigmoid(u[k]) + log_sigmoid(-u[k]);
        break;
      }
      case Transform::kLogit:
        j += std::log(s.hi - s.lo) + log_sigmoid(u[k]) + log_sigmoid(-u[k]);
        break;
    }
  }
  return j;
}

MassParams ParamLayout::from_unit(std::span<const double> v) const {
  if (v.size() != slots_.size()) throw ValidationError("unit vector has wrong dimension");
  MassParams p = base_;
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto& s = slots_[k];
    double x = 0.0;
    if (s.prior == PriorShape::kLogUniform)
      x = std::exp(std::log(s.lo) + v[k] * (std::log(s.hi) - std::log(s.lo)));
    else
      x = s.lo + v[k] * (s.hi - s.lo);
    assign(s, p, x);
  }
  return p;
}

double ParamLayout::log_prior_density(const MassParams& params) const {
  double lp = 0.0;
  for (const auto& s : slots_) {
    const double x = slot_value(s, params);
    if (!(x >= s.lo && x <= s.hi)) return -std::numeric_limits<double>::infinity();
    if (s.prior == PriorShape::kLogUniform)
      lp -= std::log(x) + std::log(std::log(s.hi) - std::log(s.lo));
    else
      lp -= std::log(s.hi - s.lo);
  }
  return lp;
}

}  // namespace pgmix
