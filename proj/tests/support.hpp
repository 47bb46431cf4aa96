#pragma once

#include <string>
#include <vector>

#include "pgmix/divergence_lab.hpp"

namespace pgmix::testing {

struct SyntheticCase {
  FrequencyTable table;
  std::vector<std::string> loci;
  TrueScenario scenario;
  Profile profile;
};

// Small multi-locus case: noc true donors, log-uniform templates in [lo, hi].
inline SyntheticCase synthetic_case(std::uint64_t seed, int noc, int n_loci = 3, int alleles = 6,
                                    double lo = 300.0, double hi = 3000.0,
                                    const ModelConfig& model = {}) {
  StudyConfig c;
  c.n_loci = n_loci;
  c.alleles_per_locus = alleles;
  c.seed = derive_seed(seed, 17);
  SyntheticCase out;
  out.table = study_table(c);
  for (const auto& [name, f] : out.table.all()) out.loci.push_back(name);
  Rng rng(seed);
  auto& sc = out.scenario;
  sc.loci = out.loci;
  sc.config = model;
  for (std::size_t l = 0; l < out.loci.size(); ++l) sc.base_bp[out.loci[l]] = 60.0 + 70.0 * l;
  std::vector<double> t;
  for (int i = 0; i < noc; ++i) {
    sc.genotypes.push_back(random_person(out.table, out.loci, rng));
    t.push_back(std::exp(rng.uniform(std::log(lo), std::log(hi))));
  }
  sc.params = MassParams(t, 12.0);
  if (model.back_stutter) sc.params.bw_stutter_prop = 0.06;
  if (model.forward_stutter) sc.params.fw_stutter_prop = 0.01;
  if (model.degradation) sc.params.degradation_slope = 0.85;
  sc.seed = derive_seed(seed, 3);
  out.profile = simulate_profile(sc);
  return out;
}

inline Proposition with_poi(int noc, const MultiLocusGenotype& poi) {
  Proposition p;
  p.noc = noc;
  p.label = HypothesisLabel::kHp;
  p.fixed_contributors[0] = poi;
  return p;
}

inline Proposition unknowns(int noc) {
  Proposition p;
  p.noc = noc;
  p.label = HypothesisLabel::kHd;
  return p;
}

}  // namespace pgmix::testing
