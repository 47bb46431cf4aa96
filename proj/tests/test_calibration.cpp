#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "pgmix/calibration.hpp"
#include "pgmix/error.hpp"
#include "pgmix/io.hpp"
#include "pgmix/rng.hpp"

using namespace pgmix;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// binomial tail by direct summation, for checking the interval endpoints
double binom_cdf(std::size_t k, std::size_t n, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i <= k; ++i)
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * std::log(p) +
                  (n - i) * std::log1p(-p));
  return s;
}

double bisect(double lo, double hi, auto f) {
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (f(m) > 0 ? hi : lo) = m;
  }
  return 0.5 * (lo + hi);
}

int decimals(const std::string& s) {
  const auto dot = s.find('.');
  return dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1);
}

// agrees with the printed string at its own precision
bool matches_printed(double v, const std::string& printed) {
  return std::abs(v - std::stod(printed)) <= 0.5 * std::pow(10.0, -decimals(printed)) + 1e-12;
}

const CalibrationBin* find_bin(const CalibrationTable& t, double lo) {
  for (const auto& b : t.bins)
    if (std::abs(b.lo - lo) < 1e-9) return &b;
  return nullptr;
}

}  // namespace

TEST_CASE("expected posterior bounds") {
  auto [lo, hi] = expected_posterior_bounds(0.0, 1.0, 1, 1);
  CHECK(lo == doctest::Approx(0.5));
  CHECK(hi == doctest::Approx(10.0 / 11.0));
  std::tie(lo, hi) = expected_posterior_bounds(1.0, 2.0, 338, 31912);
  CHECK(lo == doctest::Approx(0.0957).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.5144).epsilon(1e-3));
  CHECK_THROWS_AS(expected_posterior_bounds(0, 1, 0, 5), ValidationError);
}

TEST_CASE("observed frequency") {
  CHECK(*observed_frequency(2, 18) == doctest::Approx(0.1));
  CHECK_FALSE(observed_frequency(0, 0));
}

TEST_CASE("clopper pearson interval") {
  // 0 of 20: upper end 1 - (alpha/2)^(1/n)
  auto [lo, hi] = frequency_interval(0, 20);
  CHECK(lo == 0.0);
  CHECK(hi == doctest::Approx(1.0 - std::pow(0.025, 1.0 / 20.0)).epsilon(1e-10));
  auto [lo2, hi2] = frequency_interval(20, 20);
  CHECK(hi2 == 1.0);
  CHECK(lo2 == doctest::Approx(1.0 - hi).epsilon(1e-10));
  // 2 of 20 against a root-found binomial tail
  const auto [a, b] = frequency_interval(2, 20);
  const double oa = bisect(1e-9, 0.999, [](double p) { return (1.0 - binom_cdf(1, 20, p)) - 0.025; });
  const double ob = bisect(1e-9, 0.999, [](double p) { return 0.025 - binom_cdf(2, 20, p); });
  CHECK(a == doctest::Approx(oa).epsilon(1e-8));
  CHECK(b == doctest::Approx(ob).epsilon(1e-8));
  CHECK_THROWS_AS(frequency_interval(1, 0), ValidationError);
  CHECK_THROWS_AS(frequency_interval(3, 2), ValidationError);
}

TEST_CASE("logit round trip") {
  for (double p : {1e-9, 0.01, 0.3, 0.5, 0.97, 1.0 - 1e-9}) CHECK(inverse_logit(logit(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK(inverse_logit(-800.0) >= 0.0);
  CHECK(inverse_logit(800.0) == 1.0);
}

TEST_CASE("published calibration table") {
  const auto records = io::read_lr_records_csv(PGMIX_TEST_DATA "/calibration_records.csv");
  CalibrationOptions o;
  o.total_hp = 338;
  o.total_ha = 31912;
  const auto tables = calibrate(records, o);
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].system == "STRmix");
  CHECK(tables[1].system == "EFM");

  const auto expected = io::read_csv(PGMIX_TEST_DATA "/calibration_expected.csv");
  const auto c_lo = expected.column("bin_lo"), c_elo = expected.column("expected_lo"),
             c_ehi = expected.column("expected_hi"), c_s = expected.column("observed_strmix"),
             c_e = expected.column("observed_efm");
  CHECK(expected.rows.size() == 13);
  for (const auto& row : expected.rows) {
    const double lo = std::stod(row[c_lo]);
    CAPTURE(lo);
    for (int sys = 0; sys < 2; ++sys) {
      const auto* bin = find_bin(tables[sys], lo);
      REQUIRE(bin);
      CHECK(matches_printed(bin->p_lo, row[c_elo]));
      CHECK(matches_printed(bin->p_hi, row[c_ehi]));
      REQUIRE(bin->observed);
      CHECK(matches_printed(*bin->observed, row[sys == 0 ? c_s : c_e]));
    }
  }
  // counts sum to the records of each system
  for (const auto& t : tables) {
    std::size_t n = 0;
    for (const auto& b : t.bins) n += b.count_hp + b.count_ha;
    std::size_t expect = 0;
    for (const auto& r : records) expect += r.system == t.system ? 1 : 0;
    CHECK(n == expect);
  }
}

TEST_CASE("a perfectly calibrated generator produces no misses") {
  const int replicates = 200;
  int clean = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    Rng rng(derive_seed(2024, rep));
    std::vector<LabelledLr> recs;
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.uniform(-2.0, 2.0);
      const bool hp = rng.uniform() < 1.0 / (1.0 + std::pow(10.0, -x));
      recs.push_back({x, hp, ""});
    }
    CalibrationOptions o;
    o.total_hp = 1;  // the generator's prior odds are one
    o.total_ha = 1;
    clean += calibrate(recs, o)[0].misses == 0 ? 1 : 0;
  }
  CHECK(clean >= 0.95 * replicates);
}

TEST_CASE("a single wide bin recovers the global prior") {
  std::vector<LabelledLr> recs;
  for (int i = 0; i < 30; ++i) recs.push_back({0.3, i < 10, ""});
  CalibrationOptions o;
  o.bin_width = 100.0;
  o.bin_origin = -50.0;
  const auto t = calibrate(recs, o)[0];
  REQUIRE(t.bins.size() == 1);
  CHECK(*t.bins[0].observed == doctest::Approx(10.0 / 30.0));
  CHECK(t.bins[0].p_lo < 1e-40);
  CHECK(t.bins[0].p_hi == 1.0);
}

TEST_CASE("expected bounds rise with the bin") {
  for (double x = -6.0; x < 6.0; x += 0.5) {
    const auto a = expected_posterior_bounds(x, x + 1, 3, 7);
    const auto b = expected_posterior_bounds(x + 0.5, x + 1.5, 3, 7);
    CHECK(a.first < a.second);
    CHECK(a.first < b.first);
  }
}

TEST_CASE("exclusion handling") {
  std::vector<LabelledLr> recs{{-kInf, false, ""}, {-kInf, true, ""}, {0.5, true, ""}, {-1.5, false, ""}};
  auto t = calibrate(recs)[0];
  CHECK(t.excluded_hp == 1);
  CHECK(t.excluded_ha == 1);
  CHECK(t.total_hp == 2);
  CalibrationOptions o;
  o.exclusions = ExclusionPolicy::kLowestBin;
  t = calibrate(recs, o)[0];
  CHECK(t.bins.front().count_hp == 1);
  CHECK(t.bins.front().count_ha == 2);
  CHECK(t.excluded_ha == 0);
}

TEST_CASE("calibration errors") {
  CHECK_THROWS_AS(calibrate({}), ValidationError);
  CHECK_THROWS_AS(calibrate({{1.0, true, ""}}), ValidationError);
  CHECK_THROWS_AS(calibrate({{kInf, true, ""}, {0.0, false, ""}}), ValidationError);
  CalibrationOptions o;
  o.bin_width = 0.0;
  CHECK_THROWS_AS(calibrate({{1.0, true, ""}, {0.0, false, ""}}, o), ValidationError);
}

TEST_CASE("verdict export") {
  const std::vector<LabelledLr> recs{{0.5, true, "x"}, {0.2, false, "x"}, {-3.0, false, "x"}};
  const auto tables = calibrate(recs);
  const auto v = calibration_verdicts(tables);
  REQUIRE(v.size() == 1);
  CHECK(v[0]["system"] == "x");
  CHECK(calibration_csv(tables).find("EMPTY") != std::string::npos);
  CHECK(calibration_plot_csv(tables).find("NA") != std::string::npos);
}
