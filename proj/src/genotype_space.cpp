#include "pgmix/genotype_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pgmix/error.hpp"

namespace pgmix {

FrequencyTable::FrequencyTable(std::map<std::string, std::map<AlleleLabel, double>> frequencies,
                               int n_individuals, std::map<std::string, int> n_allele_classes)
    : freqs_(std::move(frequencies)), n_individuals_(n_individuals), k_(std::move(n_allele_classes)) {
  if (n_individuals_ < 1) throw ValidationError("database size N must be >= 1");
  for (const auto& [locus, alleles] : freqs_) {
    double sum = 0.0;
    for (const auto& [allele, p] : alleles) {
      if (allele.is_aggregate()) throw ValidationError("reserved allele 'Q' in frequency table");
      if (!(p > 0.0 && p <= 1.0))
        throw ValidationError("frequency of " + locus + ":" + allele.str() + " must lie in (0,1]");
      sum += p;
    }
    if (sum > 1.0 + 1e-9)
      throw ValidationError("frequencies at " + locus + " sum to more than 1");
  }
  for (const auto& [locus, k] : k_)
    if (k < 1) throw ValidationError("allele class count k must be >= 1 at " + locus);
}

int FrequencyTable::n_allele_classes(const std::string& locus) const {
  if (auto it = k_.find(locus); it != k_.end()) return it->second;
  if (auto it = freqs_.find(locus); it != freqs_.end() && !it->second.empty())
    return static_cast<int>(it->second.size());
  return 1;
}

std::optional<double> FrequencyTable::frequency(const std::string& locus,
                                                const AlleleLabel& allele) const {
  auto it = freqs_.find(locus);
  if (it == freqs_.end()) return std::nullopt;
  auto jt = it->second.find(allele);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

const std::map<AlleleLabel, double>& FrequencyTable::locus(const std::string& locus) const {
  auto it = freqs_.find(locus);
  if (it == freqs_.end()) throw ValidationError("frequency table has no locus '" + locus + "'");
  return it->second;
}

RareAllelePolicy RareAllelePolicy::parse(const std::string& text) {
  if (text == "5over2n") return five_over_2n();
  if (text == "betamean") return beta_mean();
  if (text.rfind("fixed:", 0) == 0) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text.substr(6), &used);
      if (used != text.size() - 6) throw std::invalid_argument("trailing");
      return fixed(v);
    } catch (const std::exception&) {
      throw ValidationError("bad fixed rare-allele value in '" + text + "'");
    }
  }
  throw ValidationError("unknown rare-allele policy '" + text + "'");
}

std::string RareAllelePolicy::str() const {
  switch (kind) {
    case Kind::kFiveOver2N: return "5over2n";
    case Kind::kBetaMean: return "betamean";
    case Kind::kFixed: {
      std::ostringstream os;
      os.precision(17);
      os << "fixed:" << fixed_value;
      return os.str();
    }
  }
  return "?";
}

double rare_allele_probability(const RareAllelePolicy& policy, const FrequencyTable& table,
                               const std::string& locus) {
  const double n = table.n_individuals();
  double p = 0.0;
  switch (policy.kind) {
    case RareAllelePolicy::Kind::kFiveOver2N: p = 5.0 / (2.0 * n); break;
    case RareAllelePolicy::Kind::kBetaMean:
      p = 1.0 / (table.n_allele_classes(locus) * (2.0 * n + 1.0));
      break;
    case RareAllelePolicy::Kind::kFixed: p = policy.fixed_value; break;
  }
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("rare-allele probability " + std::to_string(p) + " outside (0,1)");
  return p;
}

namespace {

double allele_probability(const AlleleLabel& a, const FrequencyTable& table, double rare,
                          const std::string& locus, std::optional<double> aggregate) {
  if (a.is_aggregate()) return aggregate.value_or(rare);
  return table.frequency(locus, a).value_or(rare);
}

}  // namespace

double genotype_prior(const Genotype& g, const FrequencyTable& table, const RareAllelePolicy& policy,
                      const std::string& locus, std::optional<double> aggregate) {
  const double rare = rare_allele_probability(policy, table, locus);
  const double pa = allele_probability(g.first(), table, rare, locus, aggregate);
  if (g.homozygous()) return pa * pa;
  const double pb = allele_probability(g.second(), table, rare, locus, aggregate);
  return 2.0 * pa * pb;
}

std::vector<AlleleLabel> candidate_alleles(const LocusPeaks& observed, const ModelConfig& config) {
  std::vector<AlleleLabel> out;
  auto add = [&](const AlleleLabel& a) {
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  };
  for (const auto& p : observed.peaks) add(p.allele);
  if (config.back_stutter)
    for (const auto& p : observed.peaks)
      if (auto parent = p.allele.shifted(+1)) add(*parent);
  if (config.forward_stutter)
    for (const auto& p : observed.peaks)
      if (auto parent = p.allele.shifted(-1)) add(*parent);
  add(AlleleLabel::aggregate());
  return out;
}

double aggregate_frequency(const std::vector<AlleleLabel>& candidates, const FrequencyTable& table,
                           const RareAllelePolicy& policy, const std::string& locus) {
  const double rare = rare_allele_probability(policy, table, locus);
  double taken = 0.0;
  for (const auto& a : candidates)
    if (!a.is_aggregate()) taken += table.frequency(locus, a).value_or(0.0);
  return std::max(1.0 - taken, rare);
}

std::vector<WeightedLocusSet> enumerate_locus_sets(const LocusPeaks& observed,
                                                   const Proposition& proposition,
                                                   const FrequencyTable& table,
                                                   const RareAllelePolicy& policy,
                                                   const ModelConfig& config) {
  proposition.validate();
  const std::string& locus = observed.name;
  const auto candidates = candidate_alleles(observed, config);
  const double q = aggregate_frequency(candidates, table, policy, locus);

  std::vector<std::pair<Genotype, double>> unknown_genotypes;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t j = i; j < candidates.size(); ++j) {
      Genotype g(candidates[i], candidates[j]);
      unknown_genotypes.emplace_back(g, genotype_prior(g, table, policy, locus, q));
    }

  std::vector<std::optional<Genotype>> fixed(proposition.noc);
  for (const auto& [index, mlg] : proposition.fixed_contributors) {
    auto it = mlg.find(locus);
    if (it == mlg.end())
      throw ValidationError("fixed contributor " + std::to_string(index) + " has no genotype at " +
                            locus);
    fixed[index] = it->second;
  }

  std::vector<WeightedLocusSet> out{WeightedLocusSet{{}, 1.0}};
  for (int slot = 0; slot < proposition.noc; ++slot) {
    std::vector<WeightedLocusSet> next;
    if (fixed[slot]) {
      for (auto& s : out) {
        s.contributors.push_back(*fixed[slot]);
        next.push_back(std::move(s));
      }
    } else {
      next.reserve(out.size() * unknown_genotypes.size());
      for (const auto& s : out)
        for (const auto& [g, p] : unknown_genotypes) {
          WeightedLocusSet w = s;
          w.contributors.push_back(g);
          w.prior *= p;
          next.push_back(std::move(w));
        }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<WeightedGenotypeSet> enumerate_sets(const Profile& profile, const Proposition& proposition,
                                                const FrequencyTable& table,
                                                const RareAllelePolicy& policy,
                                                const ModelConfig& config, std::size_t max_sets) {
  proposition.validate();
  std::vector<WeightedGenotypeSet> out{
      WeightedGenotypeSet{GenotypeSet{std::vector<MultiLocusGenotype>(proposition.noc)}, 1.0}};
  for (const auto& locus : profile.loci()) {
    const auto per_locus = enumerate_locus_sets(locus, proposition, table, policy, config);
    if (out.size() * per_locus.size() > max_sets)
      throw ValidationError("joint genotype enumeration exceeds " + std::to_string(max_sets) +
                            " sets");
    std::vector<WeightedGenotypeSet> next;
    next.reserve(out.size() * per_locus.size());
    for (const auto& joint : out)
      for (const auto& ls : per_locus) {
        WeightedGenotypeSet w = joint;
        for (int c = 0; c < proposition.noc; ++c)
          w.set.contributors[c][locus.name] = ls.contributors[c];
        w.prior *= ls.prior;
        next.push_back(std::move(w));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace pgmix
