#include <algorithm>
#include <cmath>
#include <map>

#include "pgmix/error.hpp"
#include "pgmix/likelihood.hpp"
#include "pgmix/simd/kernels.hpp"

namespace pgmix {

namespace {

bool explains(const LocusGenotypes& set, const AlleleLabel& observed, const ModelConfig& config) {
  const auto up = observed.shifted(+1);
  const auto down = observed.shifted(-1);
  for (const auto& g : set) {
    for (const auto& a : {g.first(), g.second()}) {
      if (a == observed) return true;
      if (config.back_stutter && up && a == *up) return true;
      if (config.forward_stutter && down && a == *down) return true;
    }
  }
  return false;
}

}  // namespace

HypothesisLikelihood::HypothesisLikelihood(const Profile& profile, const Proposition& proposition,
                                           const FrequencyTable& table,
                                           const RareAllelePolicy& policy,
                                           const ModelConfig& config)
    : profile_(profile),
      proposition_(proposition),
      config_(config),
      threshold_(profile.analytical_threshold()) {
  proposition_.validate();
  for (const auto& observed : profile.loci()) {
    auto enumerated = enumerate_locus_sets(observed, proposition, table, policy, config);
    Locus locus;
    locus.name = observed.name;
    locus.n_enumerated = enumerated.size();

    std::vector<AlleleLabel> alleles = candidate_alleles(observed, config);
    for (const auto& [index, mlg] : proposition.fixed_contributors) {
      const auto& g = mlg.at(observed.name);
      for (const auto& a : {g.first(), g.second()})
        if (std::find(alleles.begin(), alleles.end(), a) == alleles.end()) alleles.push_back(a);
    }
    const LocusContext ctx = make_locus_context(observed, alleles, config);

    for (auto& w : enumerated) {
      bool ok = w.prior > 0.0;
      for (const auto& peak : observed.peaks)
        if (ok && !explains(w.contributors, peak.allele, config)) ok = false;
      if (!ok) continue;
      locus.log10_prior.push_back(std::log10(w.prior));
      locus.sets.push_back(std::move(w.contributors));
    }
    locus.n_sets = locus.sets.size();
    if (locus.n_sets == 0) excluded_ = true;

    const int n = proposition.noc;
    for (const auto& ap : ctx.positions) {
      Position pos;
      pos.observed = ap.observed_height.has_value();
      pos.log10_observed = pos.observed ? std::log10(*ap.observed_height) : 0.0;
      pos.size_bp = ap.size_bp;
      const auto up = ap.allele.shifted(+1);
      const auto down = ap.allele.shifted(-1);
      std::map<std::vector<std::int8_t>, std::uint32_t> index;
      bool any_nonzero = false;
      pos.set_pattern.reserve(locus.n_sets);
      for (const auto& set : locus.sets) {
        std::vector<std::int8_t> key(3 * n, 0);
        for (int i = 0; i < n; ++i) {
          key[i] = static_cast<std::int8_t>(set[i].copies(ap.allele));
          if (config.back_stutter && up) key[n + i] = static_cast<std::int8_t>(set[i].copies(*up));
          if (config.forward_stutter && down)
            key[2 * n + i] = static_cast<std::int8_t>(set[i].copies(*down));
        }
        for (auto k : key) any_nonzero |= (k != 0);
        auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(pos.patterns.size()));
        if (inserted) {
          Pattern p;
          p.own.assign(key.begin(), key.begin() + n);
          p.up.assign(key.begin() + n, key.begin() + 2 * n);
          p.down.assign(key.begin() + 2 * n, key.end());
          pos.patterns.push_back(std::move(p));
        }
        pos.set_pattern.push_back(it->second);
      }
      // Unobserved positions that no set can reach contribute exactly 0.
      if (!pos.observed && !any_nonzero) continue;
      locus.positions.push_back(std::move(pos));
    }
    loci_.push_back(std::move(locus));
  }
}

void HypothesisLikelihood::evaluate_locus(const Locus& locus, const MassParams& params,
                                          std::vector<double>& acc, std::vector<double>& scratch_e,
                                          std::vector<double>& scratch_t) const {
  const auto& k = simd::active_kernels();
  const int n = proposition_.noc;
  const double mult = config_.locus_multipliers ? params.multiplier(locus.name) : 1.0;
  const double bw = config_.back_stutter ? params.bw_stutter_prop : 0.0;
  const double fw = config_.forward_stutter ? params.fw_stutter_prop : 0.0;
  const double c2 = params.variance_c2;
  const double c2s = params.stutter_variance();

  acc.assign(locus.log10_prior.begin(), locus.log10_prior.end());
  for (const auto& pos : locus.positions) {
    const std::size_t np = pos.patterns.size();
    scratch_e.resize(np);
    scratch_t.resize(np);
    const double scale =
        mult * degradation_factor(params.degradation_slope, pos.size_bp, config_);
    bool any_stutter_only = false;
    for (std::size_t p = 0; p < np; ++p) {
      const auto& pat = pos.patterns[p];
      double allelic = 0.0, stutter = 0.0;
      for (int i = 0; i < n; ++i) {
        const double t = params.templates[i];
        allelic += t * pat.own[i];
        stutter += t * (bw * pat.up[i] + fw * pat.down[i]);
      }
      scratch_e[p] = scale * (allelic + stutter);
      if (allelic == 0.0 && stutter > 0.0) any_stutter_only = true;
    }
    if (pos.observed) {
      k.log10_peak_density(scratch_e.data(), np, pos.log10_observed, c2, scratch_t.data());
      if (config_.split_stutter_variance && any_stutter_only) {
        for (std::size_t p = 0; p < np; ++p) {
          const auto& pat = pos.patterns[p];
          double allelic = 0.0;
          for (int i = 0; i < n; ++i) allelic += params.templates[i] * pat.own[i];
          if (allelic == 0.0 && scratch_e[p] > 0.0) {
            const double e = scratch_e[p];
            const double d = pos.log10_observed - std::log10(e);
            scratch_t[p] = -0.5 * std::log10(2.0 * std::numbers::pi * c2s / e) -
                           d * d * e / (2.0 * c2s * std::numbers::ln10);
          }
        }
      }
    } else {
      for (std::size_t p = 0; p < np; ++p) {
        const auto& pat = pos.patterns[p];
        double var = c2;
        if (config_.split_stutter_variance) {
          double allelic = 0.0;
          for (int i = 0; i < n; ++i) allelic += params.templates[i] * pat.own[i];
          if (allelic == 0.0) var = c2s;
        }
        scratch_t[p] = log10_dropout_mass(scratch_e[p], threshold_, var);
      }
    }
    k.gather_add(pos.set_pattern.data(), scratch_t.data(), pos.set_pattern.size(), acc.data());
  }
}

double HypothesisLikelihood::log10_likelihood(const MassParams& params) const {
  if (static_cast<int>(params.templates.size()) != proposition_.noc)
    throw ValidationError("parameter vector has the wrong number of templates");
  if (excluded_) return kExclusion;
  thread_local std::vector<double> acc, scratch_e, scratch_t;
  const auto& k = simd::active_kernels();
  double total = 0.0;
  for (const auto& locus : loci_) {
    evaluate_locus(locus, params, acc, scratch_e, scratch_t);
    const double l = k.log10_sum_exp10(acc.data(), acc.size());
    if (is_exclusion(l)) return kExclusion;
    total += l;
  }
  return total;
}

std::vector<double> HypothesisLikelihood::locus_set_terms(std::size_t locus_index,
                                                          const MassParams& params,
                                                          bool with_prior) const {
  std::vector<double> acc, scratch_e, scratch_t;
  const auto& locus = loci_.at(locus_index);
  evaluate_locus(locus, params, acc, scratch_e, scratch_t);
  if (!with_prior)
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] -= locus.log10_prior[j];
  return acc;
}

}  // namespace pgmix
