#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pgmix/toy_bench.hpp"

using namespace pgmix;

namespace {

double dens(double o, double e) {
  const double v = toy::kC2 / e;
  const double x = std::log10(o / e);
  return std::exp(-x * x / (2 * v)) / std::sqrt(2 * std::numbers::pi * v);
}

std::pair<std::size_t, std::size_t> argmax(const toy::Grid& g) {
  std::pair<std::size_t, std::size_t> best{0, 0};
  for (std::size_t i = 0; i < g.t1.size(); ++i)
    for (std::size_t j = 0; j < g.t2.size(); ++j)
      if (g.value[i][j] > g.value[best.first][best.second]) best = {i, j};
  return best;
}

}  // namespace

TEST_CASE("toy grid equals the closed-form density product") {
  const auto g = toy::grid();
  REQUIRE(g.t1.size() == 30);
  REQUIRE(g.t2.size() == 7);
  for (std::size_t i = 0; i < g.t1.size(); ++i)
    for (std::size_t j = 0; j < g.t2.size(); ++j) {
      const double t1 = g.t1[i], t2 = g.t2[j];
      CHECK(g.value[i][j] == doctest::Approx(dens(1000, t1) * dens(1100, t1 + 2 * t2)).epsilon(1e-10));
    }
  // far corner rounds to zero
  CHECK(std::round(g.value[0][0] * 100) / 100 == 0.0);
}

TEST_CASE("computed and printed grids peak at the same cell") {
  const auto g = toy::grid();
  const auto& p = toy::published_grid();
  REQUIRE(p.t1 == g.t1);
  REQUIRE(p.t2 == g.t2);
  CHECK(argmax(g) == argmax(p));
  CHECK(g.t1[argmax(g).first] == 1025.0);
  CHECK(g.t2[argmax(g).second] == 50.0);
  const auto c = toy::check_grid(g);
  CHECK(c.cells == 210);
  CHECK(c.misses == c.missed.size());
  CHECK(toy::check_grid(p).misses == 0);
}

TEST_CASE("lattice report is consistent with the grid") {
  const auto g = toy::grid();
  const auto r = toy::lattice_report();
  const auto [i, j] = argmax(g);
  CHECK(r.mle_two == doctest::Approx(g.value[i][j]).epsilon(1e-12));
  double col = 0.0, all = 0.0, best0 = 0.0;
  for (std::size_t a = 0; a < g.t1.size(); ++a) {
    col += g.value[a][0];
    best0 = std::max(best0, g.value[a][0]);
    for (std::size_t b = 0; b < g.t2.size(); ++b) all += g.value[a][b];
  }
  CHECK(r.mle_one == doctest::Approx(best0).epsilon(1e-12));
  CHECK(r.int_one.marginal() == doctest::Approx(col * 50 / 30000).epsilon(1e-12));
  CHECK(r.int_two.marginal() == doctest::Approx(all * 50 * 50 / (30000.0 * 30000.0)).epsilon(1e-12));
  CHECK(r.lr_ml == doctest::Approx(r.mle_two / r.mle_one));
  CHECK(r.lr_int * r.int_one.marginal() == doctest::Approx(r.int_two.marginal()));
  CHECK(r.lr_ml > 1.0);
  CHECK(r.lr_int < 1.0);
}

TEST_CASE("refined report") {
  const auto lat = toy::lattice_report();
  const auto ref = toy::refined_report();
  CHECK(ref.mle_two >= lat.mle_two);
  CHECK(ref.mle_one >= lat.mle_one);
  CHECK(ref.int_one.converged);
  CHECK(ref.int_two.converged);
  CHECK(ref.lr_int * ref.int_one.marginal() == doctest::Approx(ref.int_two.marginal()));
  // the lattice sums approximate the refined integrals
  CHECK(lat.int_one.marginal() == doctest::Approx(ref.int_one.marginal()).epsilon(0.01));
  CHECK(lat.int_two.marginal() == doctest::Approx(ref.int_two.marginal()).epsilon(0.05));
  const auto j = toy::to_json(ref);
  CHECK(j["H1"]["noc"] == 2);
  CHECK(j["mode"] == "REFINED");
}

TEST_CASE("golden check bookkeeping") {
  const auto c = toy::check_refined(toy::refined_report());
  CHECK(c.items.size() == 2);
  const auto j = toy::to_json(c);
  CHECK(j["pass"] == c.pass());
  CHECK(toy::grid().csv(2).find("1025") != std::string::npos);
}
