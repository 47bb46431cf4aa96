#include <doctest.h>

#include <cmath>
#include <set>

#include "pgmix/error.hpp"
#include "pgmix/genotype_space.hpp"

using namespace pgmix;

namespace {

AlleleLabel L(const std::string& s) { return AlleleLabel(s); }

FrequencyTable toy_table() {
  return FrequencyTable({{"L", {{L("A"), 0.1}, {L("B"), 0.1}}}}, 500);
}

Profile toy_profile() {
  return Profile({{"L", {{L("A"), 1000.0, {}}, {L("B"), 1100.0, {}}}}}, 50.0);
}

}  // namespace

TEST_CASE("rare allele arithmetic") {
  FrequencyTable t({{"L", {{L("A"), 0.5}}}}, 500, {{"L", 20}});
  CHECK(rare_allele_probability(RareAllelePolicy::five_over_2n(), t, "L") == doctest::Approx(0.005));
  CHECK(rare_allele_probability(RareAllelePolicy::beta_mean(), t, "L") == doctest::Approx(1.0 / 20020.0));
  CHECK(rare_allele_probability(RareAllelePolicy::fixed(0.001), t, "L") == 0.001);
  FrequencyTable tiny({{"L", {{L("A"), 0.5}}}}, 2);
  CHECK_THROWS_AS(rare_allele_probability(RareAllelePolicy::five_over_2n(), tiny, "L"), ValidationError);
  CHECK_THROWS_AS(RareAllelePolicy::parse("sometimes"), ValidationError);
  CHECK(RareAllelePolicy::parse("fixed:0.002").fixed_value == 0.002);
  CHECK(RareAllelePolicy::parse("betamean").kind == RareAllelePolicy::Kind::kBetaMean);
}

TEST_CASE("beta mean is below five over 2N") {
  for (int n : {1, 3, 10, 500, 100000})
    for (int k : {1, 2, 7, 40}) {
      FrequencyTable t({{"L", {{L("A"), 0.1}}}}, n, {{"L", k}});
      if (5.0 / (2.0 * n) >= 1.0) continue;
      CHECK(rare_allele_probability(RareAllelePolicy::beta_mean(), t, "L") <
            rare_allele_probability(RareAllelePolicy::five_over_2n(), t, "L"));
    }
}

TEST_CASE("genotype priors under Hardy-Weinberg") {
  FrequencyTable t({{"L", {{L("a"), 0.2}, {L("b"), 0.1}}}}, 500);
  const auto pol = RareAllelePolicy::five_over_2n();
  CHECK(genotype_prior(Genotype(L("a"), L("a")), t, pol, "L") == doctest::Approx(0.04));
  CHECK(genotype_prior(Genotype(L("a"), L("b")), t, pol, "L") == doctest::Approx(0.04));
  CHECK(genotype_prior(Genotype(L("a"), AlleleLabel::aggregate()), t, pol, "L") == doctest::Approx(0.002));
}

TEST_CASE("toy enumeration") {
  const auto pol = RareAllelePolicy::five_over_2n();
  Proposition hd;
  hd.noc = 1;
  auto sets = enumerate_sets(toy_profile(), hd, toy_table(), pol);
  CHECK(sets.size() == 6);
  double total = 0.0;
  std::set<std::string> names;
  for (const auto& s : sets) {
    total += s.prior;
    names.insert(s.set.contributors[0].at("L").str());
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(names == std::set<std::string>{"A/A", "A/B", "A/Q", "B/B", "B/Q", "Q/Q"});

  Proposition hp;
  hp.noc = 2;
  hp.label = HypothesisLabel::kHp;
  hp.fixed_contributors[1] = {{"L", Genotype(L("B"), L("B"))}};
  sets = enumerate_sets(toy_profile(), hp, toy_table(), pol);
  CHECK(sets.size() == 6);
  for (const auto& s : sets) CHECK(s.set.contributors[1].at("L").str() == "B/B");

  Proposition fixed;
  fixed.noc = 1;
  fixed.fixed_contributors[0] = {{"L", Genotype(L("A"), L("B"))}};
  sets = enumerate_sets(toy_profile(), fixed, toy_table(), pol);
  REQUIRE(sets.size() == 1);
  CHECK(sets[0].prior == 1.0);
}

TEST_CASE("enumeration size matches brute force") {
  const auto pol = RareAllelePolicy::five_over_2n();
  for (int g_obs = 1; g_obs <= 3; ++g_obs) {
    std::vector<Peak> peaks;
    std::map<AlleleLabel, double> f;
    for (int i = 0; i < g_obs; ++i) {
      peaks.push_back({L(std::to_string(10 + i)), 500.0, {}});
      f[L(std::to_string(10 + i))] = 0.1;
    }
    const Profile prof({{"L", peaks}}, 50.0);
    const FrequencyTable table({{"L", f}}, 500);
    const int g = g_obs + 1;  // plus Q
    for (int u = 1; u <= 3; ++u) {
      Proposition p;
      p.noc = u;
      const auto sets = enumerate_locus_sets(prof.loci()[0], p, table, pol);
      // brute force: ordered tuples of unordered genotypes
      std::size_t brute = 1;
      for (int i = 0; i < u; ++i) brute *= static_cast<std::size_t>(g * (g + 1) / 2);
      CHECK(sets.size() == brute);
      double total = 0.0;
      for (const auto& s : sets) total += s.prior;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("policy change only moves priors that involve unseen alleles") {
  const Profile prof({{"L", {{L("11"), 500.0, {}}, {L("12"), 450.0, {}}, {L("19"), 300.0, {}}}}}, 50.0);
  const FrequencyTable table({{"L", {{L("11"), 0.3}, {L("12"), 0.2}}}}, 500);
  Proposition p;
  p.noc = 1;
  const auto a = enumerate_sets(prof, p, table, RareAllelePolicy::five_over_2n());
  const auto b = enumerate_sets(prof, p, table, RareAllelePolicy::beta_mean());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& g = a[i].set.contributors[0].at("L");
    CHECK(g == b[i].set.contributors[0].at("L"));
    const bool unseen = g.copies(L("19")) > 0 || g.copies(AlleleLabel::aggregate()) > 0;
    if (!unseen) CHECK(a[i].prior == b[i].prior);
  }
}

TEST_CASE("enumeration errors") {
  Proposition p;
  p.noc = 0;
  CHECK_THROWS_AS(enumerate_sets(toy_profile(), p, toy_table(), RareAllelePolicy::five_over_2n()),
                  ValidationError);
  p.noc = 1;
  p.fixed_contributors[3] = {{"L", Genotype(L("A"), L("B"))}};
  CHECK_THROWS_AS(enumerate_sets(toy_profile(), p, toy_table(), RareAllelePolicy::five_over_2n()),
                  ValidationError);
  Proposition big;
  big.noc = 3;
  CHECK_THROWS_AS(enumerate_sets(toy_profile(), big, toy_table(), RareAllelePolicy::five_over_2n(), {}, 10),
                  ValidationError);
}

TEST_CASE("frequency table validation") {
  CHECK_THROWS_AS(FrequencyTable({{"L", {{L("A"), 0.7}, {L("B"), 0.5}}}}, 500), ValidationError);
  CHECK_THROWS_AS(FrequencyTable({{"L", {{L("A"), 0.0}}}}, 500), ValidationError);
  CHECK_THROWS_AS(FrequencyTable({{"L", {{L("A"), 0.5}}}}, 0), ValidationError);
}
