#include "pgmix/profile_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pgmix/error.hpp"

namespace pgmix {

const Peak* LocusPeaks::find(const AlleleLabel& allele) const {
  for (const auto& p : peaks)
    if (p.allele == allele) return &p;
  return nullptr;
}

Profile::Profile(std::vector<LocusPeaks> loci, double analytical_threshold)
    : loci_(std::move(loci)), threshold_(analytical_threshold) {
  if (!(threshold_ > 0.0)) throw ValidationError("analytical threshold must be > 0");
  std::set<std::string> names;
  for (const auto& locus : loci_) {
    if (!names.insert(locus.name).second)
      throw ValidationError("duplicate locus '" + locus.name + "'");
    std::set<AlleleLabel> seen;
    for (const auto& peak : locus.peaks) {
      if (peak.allele.is_aggregate())
        throw ValidationError("reserved allele 'Q' in observed profile at " + locus.name);
      if (!seen.insert(peak.allele).second)
        throw ValidationError("duplicate allele " + peak.allele.str() + " at " + locus.name);
      if (!(peak.height > 0.0)) throw ValidationError("peak heights must be > 0");
      if (peak.height < threshold_)
        throw ValidationError("peak " + locus.name + ":" + peak.allele.str() +
                              " below analytical threshold");
      if (peak.size && !(*peak.size > 0.0)) throw ValidationError("peak size must be > 0");
    }
  }
}

const LocusPeaks* Profile::find_locus(const std::string& name) const {
  for (const auto& locus : loci_)
    if (locus.name == name) return &locus;
  return nullptr;
}

const LocusPeaks& Profile::locus(const std::string& name) const {
  const auto* l = find_locus(name);
  if (!l) throw ValidationError("unknown locus '" + name + "'");
  return *l;
}

std::vector<std::string> Profile::locus_names() const {
  std::vector<std::string> names;
  names.reserve(loci_.size());
  for (const auto& l : loci_) names.push_back(l.name);
  return names;
}

Genotype::Genotype(AlleleLabel a, AlleleLabel b) : first_(std::move(a)), second_(std::move(b)) {
  if (second_ < first_) std::swap(first_, second_);
}

LocusGenotypes GenotypeSet::at_locus(const std::string& locus) const {
  LocusGenotypes out;
  out.reserve(contributors.size());
  for (const auto& c : contributors) {
    auto it = c.find(locus);
    if (it == c.end()) throw ValidationError("unknown locus '" + locus + "' in genotype set");
    out.push_back(it->second);
  }
  return out;
}

const char* to_string(HypothesisLabel label) {
  return label == HypothesisLabel::kHp ? "Hp" : "Hd";
}

void Proposition::validate() const {
  if (noc < 1) throw ValidationError("number of contributors must be >= 1");
  if (static_cast<int>(fixed_contributors.size()) > noc)
    throw ValidationError("more fixed contributors than contributors");
  for (const auto& [index, genotype] : fixed_contributors) {
    if (index < 0 || index >= noc)
      throw ValidationError("fixed contributor index " + std::to_string(index) + " out of range");
  }
}

MassParams::MassParams(std::vector<double> t, double c2) : templates(std::move(t)), variance_c2(c2) {
  validate();
}

void MassParams::validate() const {
  for (double t : templates)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("templates must be finite and >= 0");
  if (!(variance_c2 > 0.0) || !std::isfinite(variance_c2))
    throw ValidationError("variance c2 must be > 0");
  if (variance_c2_stutter && !(*variance_c2_stutter > 0.0))
    throw ValidationError("stutter variance must be > 0");
  if (!(degradation_slope > 0.0 && degradation_slope <= 1.0))
    throw ValidationError("degradation slope must lie in (0, 1]");
  if (!(bw_stutter_prop >= 0.0 && bw_stutter_prop <= 0.3))
    throw ValidationError("back stutter proportion must lie in [0, 0.3]");
  if (!(fw_stutter_prop >= 0.0 && fw_stutter_prop <= 0.3))
    throw ValidationError("forward stutter proportion must lie in [0, 0.3]");
  for (const auto& [locus, m] : locus_multipliers)
    if (!(m > 0.0)) throw ValidationError("locus multiplier for " + locus + " must be > 0");
}

double MassParams::total_template() const {
  return std::accumulate(templates.begin(), templates.end(), 0.0);
}

std::vector<double> MassParams::mixture_proportions() const {
  const double total = total_template();
  std::vector<double> out(templates.size(), 0.0);
  if (total > 0.0)
    for (std::size_t i = 0; i < templates.size(); ++i) out[i] = templates[i] / total;
  return out;
}

MassParams MassParams::from_proportions(std::span<const double> proportions, double total,
                                        double variance_c2) {
  std::vector<double> t(proportions.begin(), proportions.end());
  for (double& v : t) v *= total;
  return MassParams(std::move(t), variance_c2);
}

double MassParams::multiplier(const std::string& locus) const {
  auto it = locus_multipliers.find(locus);
  return it == locus_multipliers.end() ? 1.0 : it->second;
}

MassParams ModelConfig::neutralize(MassParams params) const {
  if (!back_stutter) params.bw_stutter_prop = 0.0;
  if (!forward_stutter) params.fw_stutter_prop = 0.0;
  if (!degradation) params.degradation_slope = 1.0;
  if (!locus_multipliers) params.locus_multipliers.clear();
  if (!split_stutter_variance) params.variance_c2_stutter.reset();
  return params;
}

std::optional<std::size_t> LocusContext::index_of(const AlleleLabel& allele) const {
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (positions[i].allele == allele) return i;
  return std::nullopt;
}

namespace {

double position_size(const AlleleLabel& allele, const LocusPeaks& observed,
                     const ModelConfig& config) {
  if (const auto* p = observed.find(allele); p && p->size) return *p->size;
  const auto rv = allele.repeat_value();
  const Peak* nearest = nullptr;
  double best = 0.0;
  double mean = 0.0;
  int n_sized = 0;
  for (const auto& p : observed.peaks) {
    if (!p.size) continue;
    mean += *p.size;
    ++n_sized;
    const auto prv = p.allele.repeat_value();
    if (!rv || !prv) continue;
    const double d = std::abs(*prv - *rv);
    if (!nearest || d < best) {
      nearest = &p;
      best = d;
    }
  }
  if (nearest) return *nearest->size + config.repeat_bp * (*rv - *nearest->allele.repeat_value());
  if (auto it = config.nominal_sizes.find(observed.name); it != config.nominal_sizes.end())
    return it->second;
  if (n_sized > 0) return mean / n_sized;
  return 100.0;
}

}  // namespace

LocusContext make_locus_context(const LocusPeaks& observed, std::span<const AlleleLabel> candidates,
                                const ModelConfig& config) {
  std::vector<AlleleLabel> universe;
  auto add = [&](const AlleleLabel& a) {
    if (std::find(universe.begin(), universe.end(), a) == universe.end()) universe.push_back(a);
  };
  for (const auto& p : observed.peaks) add(p.allele);
  for (const auto& a : candidates) add(a);
  if (config.any_stutter()) {
    const std::vector<AlleleLabel> parents = universe;
    for (const auto& a : parents) {
      if (config.back_stutter)
        if (auto s = a.shifted(-1)) add(*s);
      if (config.forward_stutter)
        if (auto s = a.shifted(+1)) add(*s);
    }
  }
  LocusContext ctx;
  ctx.name = observed.name;
  for (const auto& a : universe) {
    AllelePosition pos;
    pos.allele = a;
    if (const auto* p = observed.find(a)) pos.observed_height = p->height;
    pos.size_bp = position_size(a, observed, config);
    ctx.positions.push_back(std::move(pos));
  }
  return ctx;
}

double degradation_factor(double slope, double size_bp, const ModelConfig& config) {
  if (!config.degradation || slope == 1.0) return 1.0;
  return std::pow(slope, (size_bp - 100.0) / 100.0);
}

std::vector<double> expected_heights(const LocusGenotypes& contributors, const MassParams& params,
                                     const LocusContext& context, const ModelConfig& config) {
  if (contributors.size() != params.templates.size())
    throw ValidationError("genotype set and templates disagree on the number of contributors");
  const std::size_t n = context.positions.size();
  std::vector<double> allelic(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& label = context.positions[a].allele;
    for (std::size_t i = 0; i < contributors.size(); ++i)
      allelic[a] += params.templates[i] * contributors[i].copies(label);
  }
  auto allelic_of = [&](const std::optional<AlleleLabel>& label) {
    if (!label) return 0.0;
    const auto idx = context.index_of(*label);
    return idx ? allelic[*idx] : 0.0;
  };
  const double mult = config.locus_multipliers ? params.multiplier(context.name) : 1.0;
  std::vector<double> out(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& label = context.positions[a].allele;
    double e = allelic[a];
    if (config.back_stutter) e += params.bw_stutter_prop * allelic_of(label.shifted(+1));
    if (config.forward_stutter) e += params.fw_stutter_prop * allelic_of(label.shifted(-1));
    out[a] = mult * degradation_factor(params.degradation_slope, context.positions[a].size_bp,
                                       config) * e;
  }
  return out;
}

std::map<AlleleLabel, double> expected_heights(const LocusGenotypes& contributors,
                                               const MassParams& params, const std::string& locus,
                                               std::span<const AlleleLabel> allele_universe,
                                               const ModelConfig& config) {
  for (const auto& g : contributors) {
    auto covered = [&](const AlleleLabel& a) {
      return std::find(allele_universe.begin(), allele_universe.end(), a) != allele_universe.end();
    };
    if (!covered(g.first()) || !covered(g.second()))
      throw ValidationError("allele universe does not cover genotype " + g.str() + " at " + locus);
  }
  LocusPeaks empty{locus, {}};
  LocusContext ctx;
  ctx.name = locus;
  for (const auto& a : allele_universe) {
    AllelePosition pos;
    pos.allele = a;
    pos.size_bp = position_size(a, empty, config);
    ctx.positions.push_back(std::move(pos));
  }
  const auto e = expected_heights(contributors, params, ctx, config);
  std::map<AlleleLabel, double> out;
  for (std::size_t i = 0; i < e.size(); ++i) out[ctx.positions[i].allele] = e[i];
  return out;
}

}  // namespace pgmix
