#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "pgmix/divergence_lab.hpp"
#include "pgmix/error.hpp"
#include "support.hpp"

using namespace pgmix;

namespace {

AlleleLabel L(const char* s) { return AlleleLabel(s); }

TrueScenario single_locus(const char* a, const char* b, double t, double c2, std::uint64_t seed) {
  TrueScenario s;
  s.loci = {"L01"};
  s.base_bp["L01"] = 100.0;
  s.genotypes = {{{"L01", Genotype(L(a), L(b))}}};
  s.params = MassParams({t}, c2);
  s.seed = seed;
  return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

StudyConfig tiny_study() {
  StudyConfig c;
  c.n_cases = 3;
  c.noc = {1, 2};
  c.n_loci = 2;
  c.alleles_per_locus = 4;
  c.nondonors_per_case = 2;
  c.nondonor_modes = {NondonorMode::kRandom, NondonorMode::kResampled};
  c.importance.n_samples = 1000;
  c.seed = 11;
  return c;
}

LrRecord rec(int case_id, int poi, EngineKind e, double v) {
  LrRecord r;
  r.case_id = case_id;
  r.poi = poi;
  r.engine = e;
  r.donor = DonorLabel::kNondonorRandom;
  r.log10_lr = v;
  return r;
}

}  // namespace

TEST_CASE("vanishing variance gives heights equal to expectation") {
  const auto prof = simulate_profile(single_locus("10", "12", 1500.0, 1e-12, 4));
  REQUIRE(prof.loci().size() == 1);
  const auto& peaks = prof.loci()[0].peaks;
  REQUIRE(peaks.size() == 2);
  for (const auto& p : peaks) CHECK(p.height == doctest::Approx(1500.0).epsilon(1e-5));
}

TEST_CASE("simulation is deterministic in the seed") {
  const auto a = simulate_profile(single_locus("10", "12", 900.0, 12.0, 4));
  const auto b = simulate_profile(single_locus("10", "12", 900.0, 12.0, 4));
  const auto c = simulate_profile(single_locus("10", "12", 900.0, 12.0, 5));
  CHECK(a.loci()[0].peaks[0].height == b.loci()[0].peaks[0].height);
  CHECK(a.loci()[0].peaks[0].height != c.loci()[0].peaks[0].height);
}

TEST_CASE("simulated log ratios are normal with the model variance") {
  const double t = 2000.0, c2 = 12.0;
  const double sd = std::sqrt(c2 / t);
  std::vector<double> z;
  for (std::uint64_t seed = 1; seed <= 1500; ++seed) {
    const auto prof = simulate_profile(single_locus("10", "12", t, c2, seed));
    for (const auto& p : prof.loci()[0].peaks) z.push_back(std::log10(p.height / t) / sd);
    // homozygote peaks are centred on twice the template
    const auto homo = simulate_profile(single_locus("11", "11", t, c2, seed + 100000));
    const double h = homo.loci()[0].peaks.at(0).height;
    z.push_back(std::log10(h / (2 * t)) / std::sqrt(c2 / (2 * t)));
  }
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  // Kolmogorov critical value at alpha = 0.01
  CHECK(d < 1.628 / std::sqrt(n));
}

TEST_CASE("low expectations drop out below the threshold") {
  const auto prof = simulate_profile(single_locus("10", "12", 5.0, 12.0, 2));
  CHECK((prof.loci().empty() || prof.loci()[0].peaks.empty()));
}

TEST_CASE("resampled non-donors draw from the pooled donor alleles") {
  const FrequencyTable table({{"L01", {{L("10"), 0.2}, {L("11"), 0.2}, {L("12"), 0.2}, {L("13"), 0.2}}}}, 500);
  const std::vector<std::string> loci{"L01"};
  const std::vector<MultiLocusGenotype> donors{{{"L01", Genotype(L("10"), L("11"))}},
                                               {{"L01", Genotype(L("11"), L("12"))}}};
  std::map<std::string, double> count;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto g = gen_nondonor(NondonorMode::kResampled, table, donors, loci, 1000 + i).at("L01");
    count[g.first().str()] += 1;
    count[g.second().str()] += 1;
  }
  CHECK(count.count("13") == 0);
  const std::map<std::string, double> p{{"10", 0.25}, {"11", 0.5}, {"12", 0.25}};
  double chi2 = 0.0;
  for (const auto& [a, q] : p) {
    const double e = 2.0 * n * q;
    chi2 += (count[a] - e) * (count[a] - e) / e;
  }
  CHECK(chi2 < 9.21);  // two degrees of freedom, alpha = 0.01

  // a single homozygous donor forces the pool
  const std::vector<MultiLocusGenotype> homo{{{"L01", Genotype(L("13"), L("13"))}}};
  for (int i = 0; i < 20; ++i)
    CHECK(gen_nondonor(NondonorMode::kResampled, table, homo, loci, i).at("L01").str() == "13/13");
}

TEST_CASE("random non-donors follow the table") {
  const FrequencyTable one({{"L01", {{L("10"), 0.4}}}}, 500);
  for (int i = 0; i < 10; ++i) CHECK(gen_nondonor(NondonorMode::kRandom, one, {}, {"L01"}, i).at("L01").str() == "10/10");
  const FrequencyTable two({{"L01", {{L("10"), 0.3}, {L("11"), 0.1}}}}, 500);
  int tens = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto g = gen_nondonor(NondonorMode::kRandom, two, {}, {"L01"}, 77 + i).at("L01");
    tens += g.copies(L("10"));
  }
  // renormalised frequency of 10 is 0.75; binomial sd over 8000 draws is about 0.0048
  CHECK(std::abs(tens / (2.0 * n) - 0.75) < 0.02);
}

TEST_CASE("study config parsing") {
  const auto c = StudyConfig::from_json(nlohmann::json::parse(
      R"({"n_cases": 2, "noc": [2, 3], "nondonor_modes": ["random"], "engines": ["mle"], "seed": 9})"));
  CHECK(c.n_cases == 2);
  CHECK(c.noc == std::vector<int>{2, 3});
  CHECK(c.run_mle);
  CHECK_FALSE(c.run_int);
  CHECK(c.seed == 9);
  CHECK_THROWS_AS(StudyConfig::from_json(nlohmann::json::parse(R"({"n_case": 2})")), ValidationError);
  CHECK_THROWS_AS(StudyConfig::from_json(nlohmann::json::parse(R"({"noc": [7]})")), ValidationError);
  const auto back = StudyConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("an empty study yields no records") {
  auto c = tiny_study();
  c.n_cases = 0;
  CHECK(run_study(c).empty());
}

TEST_CASE("study records") {
  const auto c = tiny_study();
  const auto r = run_study(c);
  // non-donors are drawn per mode
  const std::size_t per_case =
      static_cast<std::size_t>(c.true_donors_per_case) + c.nondonor_modes.size() * c.nondonors_per_case;
  CHECK(r.size() == 2 * per_case * static_cast<std::size_t>(c.n_cases));
  for (const auto& x : r) {
    CHECK(x.error.empty());
    if (x.donor == DonorLabel::kTrueDonor) CHECK(x.log10_lr > 0.0);
    if (x.engine == EngineKind::kMle) {
      REQUIRE(x.c2_hp);
      REQUIRE(x.c2_hd);
      CHECK(std::is_sorted(x.mixprop_hp.rbegin(), x.mixprop_hp.rend()));
      if (!x.excluded() && x.bound_low) {
        CHECK(*x.bound_low <= x.log10_lr + 1e-6);
        CHECK(x.log10_lr <= *x.bound_high + 1e-6);
      }
    }
  }
  CHECK(records_csv(run_study(c, 3)) == records_csv(r));
}

TEST_CASE("one case with only the true donor") {
  auto c = tiny_study();
  c.n_cases = 1;
  c.noc = {1};
  c.nondonors_per_case = 0;
  const auto r = run_study(c);
  REQUIRE(r.size() == 2);
  for (const auto& x : r) CHECK(x.log10_lr > 0.0);
}

TEST_CASE("summary fixtures") {
  std::vector<LrRecord> all_ex;
  for (int i = 0; i < 4; ++i) {
    all_ex.push_back(rec(0, i, EngineKind::kMle, kExclusion));
    all_ex.push_back(rec(0, i, EngineKind::kInt, kExclusion));
  }
  auto s = divergence_summary(all_ex);
  CHECK(s.nondonor_fraction_lr_gt_1(EngineKind::kMle) == 0.0);
  REQUIRE(s.median_mle_minus_int_nondonor);
  CHECK(*s.median_mle_minus_int_nondonor == 0.0);
  REQUIRE(s.find(EngineKind::kMle, DonorLabel::kNondonorRandom));
  CHECK(s.find(EngineKind::kMle, DonorLabel::kNondonorRandom)->fraction_excluded == 1.0);

  std::vector<LrRecord> half;
  const double v[] = {1.0, -2.0, 0.5, -0.1};
  for (int i = 0; i < 4; ++i) {
    half.push_back(rec(0, i, EngineKind::kMle, v[i]));
    half.push_back(rec(0, i, EngineKind::kInt, v[i] - 0.25));
  }
  s = divergence_summary(half);
  CHECK(s.nondonor_fraction_lr_gt_1(EngineKind::kMle) == 0.5);
  CHECK(*s.median_mle_minus_int_nondonor == doctest::Approx(0.25));
  const auto* g = s.find(EngineKind::kMle, DonorLabel::kNondonorRandom);
  REQUIRE(g);
  CHECK(g->quantiles[2] == doctest::Approx(0.2));  // median of -2, -0.1, 0.5, 1
}

TEST_CASE("scatter export writes each record once and keeps exclusions") {
  std::vector<LrRecord> r{rec(0, 0, EngineKind::kMle, 1.5), rec(0, 0, EngineKind::kInt, kExclusion),
                          rec(1, 0, EngineKind::kMle, -0.5)};
  const auto csv = scatter_csv(r, 3);
  std::size_t lines = 0, ex = 0;
  for (std::size_t p = 0; (p = csv.find('\n', p)) != std::string::npos; ++p) ++lines;
  for (std::size_t p = 0; (p = csv.find("EXCLUSION", p)) != std::string::npos; ++p) ++ex;
  CHECK(lines == r.size() + 1);
  CHECK(ex == 1);
  CHECK(scatter_csv(r, 3) == csv);
  CHECK(scatter_svg(r, 3).find("<svg") != std::string::npos);
}
