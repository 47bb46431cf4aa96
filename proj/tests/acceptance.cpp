// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "pgmix/calibration.hpp"
#include "pgmix/divergence_lab.hpp"
#include "pgmix/genotype_space.hpp"
#include "pgmix/integration_engine.hpp"
#include "pgmix/io.hpp"
#include "pgmix/likelihood.hpp"
#include "pgmix/mle_engine.hpp"
#include "pgmix/toy_bench.hpp"
#include "support.hpp"

using namespace pgmix;
using pgmix::testing::synthetic_case;
using pgmix::testing::unknowns;
using pgmix::testing::with_poi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string f(const char* fmt, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, v...);
  return buf;
}

double round_to(double v, int d) {
  const double s = std::pow(10.0, d);
  return std::round(v * s) / s;
}

PriorSpec toy_prior() {
  PriorSpec p;
  p.template_lo = 0.0;
  p.template_hi = 30000.0;
  p.fixed_c2 = toy::kC2;
  return p;
}

// ---- 1: toy grid

Outcome toy_grid() {
  const auto c = toy::check_grid(toy::grid());
  const auto g = toy::grid();
  auto at = [&](double t1, double t2) {
    for (std::size_t i = 0; i < g.t1.size(); ++i)
      for (std::size_t j = 0; j < g.t2.size(); ++j)
        if (g.t1[i] == t1 && g.t2[j] == t2) return g.value[i][j];
    return -1.0;
  };
  Outcome o;
  const double a = at(1075, 0), b = at(1025, 50), d = at(675, 200);
  const bool anchors = std::abs(a - 13.59) <= 0.005 && std::abs(b - 14.12) <= 0.005 && std::abs(d - 4.95) <= 0.005;
  o.pass = c.misses == 0 && anchors;
  o.detail = f("%zu/%zu cells within 0.005, max |err| %.4f; anchors %.4f %.4f %.4f", c.cells - c.misses, c.cells,
               c.max_abs_error, a, b, d);
  return o;
}

// ---- 2: toy report

Outcome toy_report() {
  const auto lat = toy::lattice_report();
  const auto ref = toy::refined_report();
  Outcome o;
  const bool mle = round_to(lat.mle_one, 2) == 13.59 && round_to(lat.mle_two, 2) == 14.12;
  const bool lr = round_to(lat.lr_ml, 2) == 1.04;
  const bool i1 = std::abs(lat.int_one.marginal() - 0.2051) <= 1e-4;
  const bool li = std::abs(ref.lr_int - 0.0088) <= 1e-3;
  o.pass = mle && lr && i1 && li;
  o.detail = f("MLE %.4f/%.4f [%s], LR_ML %.4f [%s], lattice integral %.6f [%s], refined LR_int %.5f [%s]",
               lat.mle_one, lat.mle_two, mle ? "ok" : "miss", lat.lr_ml, lr ? "ok" : "miss",
               lat.int_one.marginal(), i1 ? "ok" : "miss", ref.lr_int, li ? "ok" : "miss");
  return o;
}

// ---- 3: bounds on the ML ratio

Outcome bounds() {
  const auto pol = RareAllelePolicy::five_over_2n();
  int cases = 0, converged = 0, held = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 120; ++seed) {
    const int noc = seed % 3 == 0 ? 3 : 2;
    ModelConfig cfg;
    cfg.back_stutter = seed % 4 == 1;
    const auto sc = synthetic_case(derive_seed(31, seed), noc, 3, 6, 200.0, 3000.0, cfg);
    // alternate true donors and random non-donors as the POI
    Rng rng(seed);
    const auto poi = seed % 2 ? sc.scenario.genotypes[0] : random_person(sc.table, sc.loci, rng);
    const HypothesisLikelihood hp(sc.profile, with_poi(noc, poi), sc.table, pol, cfg);
    const HypothesisLikelihood hd(sc.profile, unknowns(noc), sc.table, pol, cfg);
    SearchSpec s;
    s.seed = seed;
    const auto r = fit_pair(hp, hd, s);
    ++cases;
    if (!r.numerator.converged || !r.denominator.converged || !r.log10_lr_bound_low) continue;
    ++converged;
    if (r.numerator.excluded) {
      ++held;  // all three are -inf
      continue;
    }
    const double lo = *r.log10_lr_bound_low - r.log10_lr_ml, hi = r.log10_lr_ml - *r.log10_lr_bound_high;
    worst = std::max({worst, lo, hi});
    held += lo <= 1e-6 && hi <= 1e-6 ? 1 : 0;
  }
  Outcome o;
  o.pass = converged >= 100 && held == converged;
  o.detail = f("%d cases, %d converged, bounds hold in %d, worst violation %.2e", cases, converged, held, worst);
  return o;
}

// ---- 4: nesting

Outcome nesting() {
  const auto pol = RareAllelePolicy::five_over_2n();
  int cases = 0, held = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const int true_noc = 1 + static_cast<int>(seed % 2);
    const int n = 1 + static_cast<int>((seed / 2) % 2);
    const auto sc = synthetic_case(derive_seed(47, seed), true_noc, 3);
    const bool with = seed % 3 != 0;
    const auto& poi = sc.scenario.genotypes[0];
    const HypothesisLikelihood small(sc.profile, with ? with_poi(n, poi) : unknowns(n), sc.table, pol, {});
    const HypothesisLikelihood big(sc.profile, with ? with_poi(n + 1, poi) : unknowns(n + 1), sc.table, pol, {});
    SearchSpec s;
    s.seed = seed;
    const auto a = maximize(small, s);
    auto w = a.params;
    w.templates.push_back(0.0);
    s.warm_starts = {w};
    const auto b = maximize(big, s);
    ++cases;
    const double gap = a.log10_max - b.log10_max;
    worst = std::max(worst, gap);
    held += gap <= 1e-6 ? 1 : 0;
  }
  Outcome o;
  o.pass = cases >= 100 && held == cases;
  o.detail = f("%d cases, nesting holds in %d, worst shortfall %.2e", cases, held, worst);
  return o;
}

// ---- 5 and 6: study

std::vector<LrRecord> g_records;

StudyConfig study_config() {
  return StudyConfig::from_json(nlohmann::json::parse(
      R"({"n_cases": 40, "noc": [2, 3], "nondonors_per_case": 50, "n_loci": 5, "alleles_per_locus": 6, "seed": 1})"));
}

Outcome divergence_direction() {
  const auto c = study_config();
  const int threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  g_records = run_study(c, threads);
  const auto s = divergence_summary(g_records);
  Outcome o;
  std::size_t failed = 0;
  for (const auto& r : g_records) failed += std::isnan(r.log10_lr) ? 1 : 0;
  bool enough = true;
  for (int noc : {2, 3}) {
    std::vector<LrRecord> sub;
    for (const auto& r : g_records)
      if (r.noc == noc) sub.push_back(r);
    const auto t = divergence_summary(sub);
    enough = enough && t.paired_nondonors >= 200;
    o.notes.push_back(f("%d-person: %zu non-donors, LR>1 MLE %.4f INT %.4f, median diff %.4f", noc, t.paired_nondonors,
                        t.nondonor_fraction_lr_gt_1(EngineKind::kMle), t.nondonor_fraction_lr_gt_1(EngineKind::kInt),
                        t.median_mle_minus_int_nondonor.value_or(NAN)));
  }
  const double fm = s.nondonor_fraction_lr_gt_1(EngineKind::kMle), fi = s.nondonor_fraction_lr_gt_1(EngineKind::kInt);
  const double md = s.median_mle_minus_int_nondonor.value_or(NAN);
  o.pass = enough && fm > fi && md > 0.0;
  o.detail = f("%zu records (%zu failed); non-donor LR>1: MLE %.4f vs INT %.4f; median log10 LR_ML - LR_int %.4f",
               g_records.size(), failed, fm, fi, md);
  return o;
}

Outcome variance_inflation() {
  const auto s = divergence_summary(g_records);
  Outcome o;
  const double md = s.median_c2_diff_nondonor.value_or(NAN), mr = s.max_c2_ratio_nondonor.value_or(NAN);
  o.pass = md >= 0.0 && mr > 1.5;
  o.detail = f("median c2_Hp - c2_Hd %.3f over %zu non-donor fits; max ratio %.2f", md, s.paired_nondonors, mr);
  return o;
}

// ---- 7: calibration table

Outcome calibration_table() {
  const auto records = io::read_lr_records_csv(PGMIX_TEST_DATA "/calibration_records.csv");
  CalibrationOptions opt;
  opt.total_hp = 338;
  opt.total_ha = 31912;
  const auto tables = calibrate(records, opt);
  const auto expected = io::read_csv(PGMIX_TEST_DATA "/calibration_expected.csv");
  auto matches = [](double v, const std::string& s) {
    const auto dot = s.find('.');
    const int d = dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1);
    return std::abs(v - std::stod(s)) <= 0.5 * std::pow(10.0, -d) + 1e-12;
  };
  int checked = 0, ok = 0;
  for (const auto& row : expected.rows) {
    const double lo = std::stod(row[expected.column("bin_lo")]);
    for (std::size_t sys = 0; sys < tables.size() && sys < 2; ++sys) {
      const CalibrationBin* bin = nullptr;
      for (const auto& b : tables[sys].bins)
        if (std::abs(b.lo - lo) < 1e-9) bin = &b;
      const std::string obs = row[expected.column(sys == 0 ? "observed_strmix" : "observed_efm")];
      checked += 3;
      if (!bin || !bin->observed) continue;
      ok += matches(bin->p_lo, row[expected.column("expected_lo")]);
      ok += matches(bin->p_hi, row[expected.column("expected_hi")]);
      ok += matches(*bin->observed, obs);
    }
  }
  Outcome o;
  o.pass = tables.size() == 2 && checked == 78 && ok == checked;
  o.detail = f("%d/%d printed values reproduced; MISS bins STRmix %zu, EFM %zu", ok, checked,
               tables.size() > 0 ? tables[0].misses : 0, tables.size() > 1 ? tables[1].misses : 0);
  return o;
}

// ---- 8: rare-allele policy

Outcome rare_allele() {
  const FrequencyTable t({{"L", {{AlleleLabel("10"), 0.5}}}}, 500, {{"L", 20}});
  const double a = rare_allele_probability(RareAllelePolicy::five_over_2n(), t, "L");
  const double b = rare_allele_probability(RareAllelePolicy::beta_mean(), t, "L");
  const bool arith = std::abs(a - 0.005) < 1e-15 && std::abs(b - 1.0 / 20020.0) < 1e-18 &&
                     std::abs(b - 4.995e-5) < 5e-9;
  int cases = 0, held = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const int noc = 1 + static_cast<int>(seed % 2);
    const auto sc = synthetic_case(derive_seed(59, seed), noc, 3);
    const auto& poi = sc.scenario.genotypes[0];
    // drop one of the POI's alleles from the database
    auto freqs = sc.table.all();
    const auto& locus = sc.loci[seed % sc.loci.size()];
    freqs[locus].erase(poi.at(locus).first());
    const FrequencyTable table(freqs, sc.table.n_individuals());
    double lr[2];
    int k = 0;
    for (const auto& pol : {RareAllelePolicy::five_over_2n(), RareAllelePolicy::beta_mean()}) {
      const HypothesisLikelihood hp(sc.profile, with_poi(noc, poi), table, pol, {});
      const HypothesisLikelihood hd(sc.profile, unknowns(noc), table, pol, {});
      SearchSpec s;
      s.seed = seed;
      lr[k++] = fit_pair(hp, hd, s).log10_lr_ml;
    }
    ++cases;
    held += lr[1] >= lr[0] - 1e-9 ? 1 : 0;
  }
  Outcome o;
  o.pass = arith && held == cases;
  o.detail = f("5/2N = %.6g, 1/(k(2N+1)) = %.6g; LR(beta mean) >= LR(5/2N) in %d/%d unseen-allele POIs", a, b, held,
               cases);
  return o;
}

// ---- 9: numeric kernels

Outcome kernels() {
  using boost::math::quadrature::gauss_kronrod;
  double worst_norm = 0.0, worst_drop = 0.0;
  for (double e : {30.0, 60.0, 300.0, 1075.0, 5000.0, 20000.0})
    for (double c2 : {2.0, 12.0, 40.0}) {
      const double s = std::sqrt(c2 / e);
      auto dens = [&](double x) { return peak_density(e * std::pow(10.0, x), e, c2); };
      const double total = gauss_kronrod<double, 61>::integrate(dens, -14 * s, 14 * s, 12, 1e-13);
      worst_norm = std::max(worst_norm, std::abs(total - 1.0));
      const double at = 50.0;
      const double above = gauss_kronrod<double, 61>::integrate(dens, std::log10(at / e), 14 * s + std::abs(std::log10(at / e)), 12, 1e-13);
      worst_drop = std::max(worst_drop, std::abs(dropout_mass(e, at, c2) + above - 1.0));
    }

  // KS on standardised simulated log ratios
  std::vector<double> z;
  const double t = 2000.0, c2 = 12.0;
  for (std::uint64_t seed = 1; seed <= 2500; ++seed) {
    TrueScenario sc;
    sc.loci = {"L01"};
    sc.base_bp["L01"] = 100.0;
    sc.genotypes = {{{"L01", Genotype(AlleleLabel("10"), AlleleLabel("12"))}}};
    sc.params = MassParams({t}, c2);
    sc.seed = seed;
    for (const auto& p : simulate_profile(sc).loci()[0].peaks) z.push_back(std::log10(p.height / t) / std::sqrt(c2 / t));
  }
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    d = std::max({d, std::abs(cdf - i / n), std::abs((i + 1) / n - cdf)});
  }
  const double crit = 1.628 / std::sqrt(n);

  // quadrature vs Monte Carlo on the toy hypotheses
  std::string qmc;
  bool agree = true;
  for (const auto& p : {toy::two_person(), toy::one_person()}) {
    const HypothesisLikelihood h(toy::profile(), p, toy::frequencies(), RareAllelePolicy::five_over_2n(), {});
    const auto q = marginal_quadrature(h, toy_prior());
    const auto mc = marginal_monte_carlo(h, toy_prior(), 1000000, 7);
    const double zscore = std::abs(mc.marginal() - q.marginal()) / (mc.relative_se * mc.marginal());
    agree = agree && zscore <= 3.0;
    qmc += f(" noc%d %.3f SE", p.noc, zscore);
  }
  Outcome o;
  o.pass = worst_norm <= 1e-6 && worst_drop <= 1e-6 && d < crit && agree;
  o.detail = f("normalisation err %.1e, dropout err %.1e, KS D %.4f (crit %.4f), quadrature vs MC:%s", worst_norm,
               worst_drop, d, crit, qmc.c_str());
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "toy grid fidelity", 1.0, toy_grid},
      {2, "toy report", 10.0, toy_report},
      {3, "ML ratio bounds", 120.0, bounds},
      {4, "nested MLE monotonicity", 600.0, nesting},
      {5, "divergence direction", 600.0, divergence_direction},
      {6, "variance inflation direction", 600.0, variance_inflation},
      {7, "calibration table", 1.0, calibration_table},
      {8, "rare-allele policy", 600.0, rare_allele},
      {9, "numeric kernel properties", 600.0, kernels},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over the time limit");
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
