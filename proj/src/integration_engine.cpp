#include "pgmix/integration_engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "pgmix/error.hpp"
#include "pgmix/fingerprint.hpp"
#include "pgmix/mle_engine.hpp"
#include "pgmix/optimize.hpp"
#include "pgmix/rng.hpp"

namespace pgmix {

namespace {

constexpr double kLn10 = std::numbers::ln10;

bool ordered(double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && hi > lo; }

/// log10 of the mean of 10^x and the relative standard error of that mean.
/// Two passes: for a constant input the mean is exact and the error is 0.
std::pair<double, double> log10_mean_and_rse(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  if (m == kExclusion) return {kExclusion, 0.0};
  double s1 = 0.0, c1 = 0.0, s2 = 0.0, c2 = 0.0;
  auto add = [](double& s, double& c, double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  };
  for (double v : x) {
    const double r = std::pow(10.0, v - m);
    add(s1, c1, r);
    add(s2, c2, r * r);
  }
  s1 += c1;
  s2 += c2;
  const double n = static_cast<double>(x.size());
  const double mean = s1 / n;
  const double rel_var = n > 1 ? std::max(0.0, (s2 / n) / (mean * mean) - 1.0) * n / (n - 1) : 0.0;
  return {m + std::log10(mean), std::sqrt(rel_var / n)};
}

std::uint64_t result_context(const HypothesisLikelihood& h, const PriorSpec& prior) {
  std::uint64_t c = context_fingerprint(h.profile(), h.config());
  return fnv1a(std::to_string(prior.fingerprint()), c);
}

Log10Integrand prior_integrand(const HypothesisLikelihood& h, const ParamLayout& layout) {
  return [&h, &layout](std::span<const double> v) {
    return h.log10_likelihood(layout.from_unit(v));
  };
}

}  // namespace

void PriorSpec::validate() const {
  if (!ordered(template_lo, template_hi) || template_lo < 0.0)
    throw ValidationError("template prior bounds must be finite, ordered and non-negative");
  if (fixed_c2 && !(*fixed_c2 > 0.0)) throw ValidationError("fixed c2 must be positive");
  if (!fixed_c2 && (!ordered(c2_lo, c2_hi) || c2_lo <= 0.0))
    throw ValidationError("c2 prior bounds must be positive and ordered");
  if (!ordered(stutter_lo, stutter_hi) || stutter_lo < 0.0 || stutter_hi > 0.3)
    throw ValidationError("stutter prior bounds must lie in [0, 0.3]");
  if (!ordered(slope_lo, slope_hi) || slope_lo <= 0.0 || slope_hi > 1.0)
    throw ValidationError("slope prior bounds must lie in (0, 1]");
  if (!ordered(multiplier_lo, multiplier_hi) || multiplier_lo <= 0.0)
    throw ValidationError("multiplier prior bounds must be positive and ordered");
}

ParamBounds PriorSpec::bounds() const {
  ParamBounds b;
  b.template_lo = template_lo;
  b.template_hi = template_hi;
  b.c2_lo = c2_lo;
  b.c2_hi = c2_hi;
  b.stutter_lo = stutter_lo;
  b.stutter_hi = stutter_hi;
  b.slope_lo = slope_lo;
  b.slope_hi = slope_hi;
  b.multiplier_lo = multiplier_lo;
  b.multiplier_hi = multiplier_hi;
  return b;
}

std::uint64_t PriorSpec::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << template_lo << ',' << template_hi << ',' << (fixed_c2 ? *fixed_c2 : -1.0) << ',' << c2_lo
     << ',' << c2_hi << ',' << stutter_lo << ',' << stutter_hi << ',' << slope_lo << ','
     << slope_hi << ',' << multiplier_lo << ',' << multiplier_hi;
  return fnv1a(os.str());
}

ParamLayout prior_layout(const HypothesisLikelihood& h, const PriorSpec& prior) {
  prior.validate();
  MassParams base;
  base.templates.assign(h.noc(), 0.5 * (prior.template_lo + prior.template_hi));
  base.variance_c2 = prior.fixed_c2.value_or(std::sqrt(prior.c2_lo * prior.c2_hi));
  base.bw_stutter_prop = 0.5 * (prior.stutter_lo + prior.stutter_hi);
  base.fw_stutter_prop = base.bw_stutter_prop;
  base.degradation_slope = 0.5 * (prior.slope_lo + prior.slope_hi);
  return ParamLayout(h.noc(), h.config(), h.profile().locus_names(), prior.bounds(),
                     !prior.fixed_c2.has_value(), base);
}

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::kQuadrature: return "QUADRATURE";
    case Estimator::kLattice: return "LATTICE";
    case Estimator::kMonteCarlo: return "MONTE_CARLO";
    case Estimator::kImportance: return "IMPORTANCE";
  }
  return "?";
}

double IntegralResult::marginal() const { return std::pow(10.0, log10_marginal); }

IntegralResult integrate_quadrature(const Log10Integrand& f, std::size_t dim,
                                    const QuadratureOptions& options) {
  IntegralResult out;
  out.estimator = Estimator::kQuadrature;
  if (dim == 0) {
    out.log10_marginal = f({});
    out.evaluations = 1;
    out.levels = 1;
    out.level_values = {out.log10_marginal};
    out.converged = true;
    return out;
  }
  std::size_t n = std::max<std::size_t>(options.initial_points, 1);
  std::vector<double> v(dim);
  std::vector<std::size_t> idx(dim);
  for (;;) {
    double cells = 1.0;
    for (std::size_t k = 0; k < dim; ++k) cells *= static_cast<double>(n);
    if (cells > static_cast<double>(options.max_evaluations)) break;
    Log10SumAccumulator acc;
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      for (std::size_t k = 0; k < dim; ++k) v[k] = (static_cast<double>(idx[k]) + 0.5) / n;
      acc.add(f(v));
      std::size_t k = dim;
      while (k > 0 && ++idx[k - 1] == n) idx[--k] = 0;
      if (k == 0) break;
    }
    out.evaluations += acc.count();
    const double value = acc.value() - static_cast<double>(dim) * std::log10(static_cast<double>(n));
    out.level_values.push_back(value);
    out.log10_marginal = value;
    out.resolution = n;
    ++out.levels;
    if (out.levels >= options.min_levels) {
      const double prev = out.level_values[out.levels - 2];
      if (value == kExclusion && prev == kExclusion) {
        out.converged = true;
        break;
      }
      if (value != kExclusion && prev != kExclusion &&
          std::abs(std::expm1(kLn10 * (prev - value))) < options.tolerance) {
        out.converged = true;
        break;
      }
    }
    n *= 2;
  }
  if (out.levels == 0) throw ContractError("quadrature budget too small for a single level");
  return out;
}

IntegralResult integrate_monte_carlo(const Log10Integrand& f, std::size_t dim,
                                     std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ValidationError("Monte Carlo needs at least one sample");
  IntegralResult out;
  out.estimator = Estimator::kMonteCarlo;
  Rng rng(seed);
  std::vector<double> v(dim), values(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (auto& x : v) x = rng.uniform();
    values[i] = f(v);
  }
  const auto [m, rse] = log10_mean_and_rse(values);
  out.log10_marginal = m;
  out.relative_se = rse;
  out.resolution = n_samples;
  out.evaluations = n_samples;
  out.levels = 1;
  out.level_values = {m};
  out.converged = true;
  return out;
}

IntegralResult marginal_quadrature(const HypothesisLikelihood& h, const PriorSpec& prior,
                                   const QuadratureOptions& options) {
  const ParamLayout layout = prior_layout(h, prior);
  if (layout.dim() > kMaxQuadratureDim)
    throw ContractError("quadrature supports at most 5 free parameters; use Monte Carlo");
  IntegralResult out;
  if (h.structurally_excluded()) {
    out.converged = true;
  } else {
    out = integrate_quadrature(prior_integrand(h, layout), layout.dim(), options);
  }
  out.estimator = Estimator::kQuadrature;
  out.label = h.proposition().label;
  out.context = result_context(h, prior);
  return out;
}

IntegralResult marginal_quadrature(const Profile& profile, const Proposition& proposition,
                                   const FrequencyTable& table, const RareAllelePolicy& policy,
                                   const ModelConfig& config, const PriorSpec& prior,
                                   const QuadratureOptions& options) {
  const HypothesisLikelihood h(profile, proposition, table, policy, config);
  return marginal_quadrature(h, prior, options);
}

IntegralResult marginal_lattice(const HypothesisLikelihood& h, const PriorSpec& prior,
                                const std::vector<std::vector<double>>& axes) {
  const ParamLayout layout = prior_layout(h, prior);
  if (layout.dim() != static_cast<std::size_t>(h.noc()))
    throw ValidationError("lattice integration needs every non-template parameter pinned");
  if (axes.size() != static_cast<std::size_t>(h.noc()))
    throw ValidationError("lattice needs one axis per contributor");
  double log10_cell = 0.0;
  for (const auto& a : axes) {
    if (a.size() < 2) throw ValidationError("lattice axes need at least two points");
    const double step = a[1] - a[0];
    for (std::size_t i = 1; i < a.size(); ++i)
      if (std::abs((a[i] - a[i - 1]) - step) > 1e-9 * std::abs(step) || !(step > 0.0))
        throw ValidationError("lattice axes must be increasing with uniform spacing");
    log10_cell += std::log10(step / (prior.template_hi - prior.template_lo));
  }
  MassParams p = layout.base();
  Log10SumAccumulator acc;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    bool inside = true;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      p.templates[i] = axes[i][idx[i]];
      inside = inside && p.templates[i] >= prior.template_lo && p.templates[i] <= prior.template_hi;
    }
    if (inside) acc.add(h.log10_likelihood(p));
    std::size_t k = axes.size();
    while (k > 0 && ++idx[k - 1] == axes[k - 1].size()) idx[--k] = 0;
    if (k == 0) break;
  }
  IntegralResult out;
  out.estimator = Estimator::kLattice;
  out.label = h.proposition().label;
  out.log10_marginal = acc.value() == kExclusion ? kExclusion : acc.value() + log10_cell;
  out.resolution = axes.front().size();
  out.evaluations = acc.count();
  out.levels = 1;
  out.level_values = {out.log10_marginal};
  out.converged = true;
  out.context = result_context(h, prior);
  return out;
}

IntegralResult marginal_monte_carlo(const HypothesisLikelihood& h, const PriorSpec& prior,
                                    std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1000) throw ValidationError("prior Monte Carlo needs at least 1000 samples");
  const ParamLayout layout = prior_layout(h, prior);
  IntegralResult out;
  if (h.structurally_excluded()) {
    out.resolution = n_samples;
    out.converged = true;
  } else {
    out = integrate_monte_carlo(prior_integrand(h, layout), layout.dim(), n_samples, seed);
  }
  out.estimator = Estimator::kMonteCarlo;
  out.label = h.proposition().label;
  out.context = result_context(h, prior);
  return out;
}

namespace {

struct Component {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;       // lower factor of the scale matrix
  Eigen::MatrixXd precision;  // inverse scale matrix
  double log_norm = 0.0;      // ln normalising constant of the t density
};

Component make_component(Eigen::VectorXd mean, const Eigen::MatrixXd& neg_hessian,
                         double inflation, double dof) {
  const auto d = mean.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_hessian);
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!std::isfinite(lam[i])) lam[i] = 1.0;
    lam[i] = std::clamp(lam[i], 0.04, 1e8);  // sd in u between 1e-4 and 5
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  const double s2 = inflation * inflation;
  Component c;
  c.mean = std::move(mean);
  c.precision = v * (lam / s2).asDiagonal() * v.transpose();
  const Eigen::MatrixXd scale = v * (s2 * lam.cwiseInverse()).asDiagonal() * v.transpose();
  c.chol = Eigen::LLT<Eigen::MatrixXd>(0.5 * (scale + scale.transpose())).matrixL();
  double log_det = 0.0;  // ln |scale|^(1/2)
  for (Eigen::Index i = 0; i < d; ++i) log_det += std::log(c.chol(i, i));
  const double dd = static_cast<double>(d);
  c.log_norm = std::lgamma(0.5 * (dof + dd)) - std::lgamma(0.5 * dof) -
               0.5 * dd * std::log(dof * std::numbers::pi) - log_det;
  return c;
}

double log_t_density(const Component& c, const Eigen::VectorXd& x, double dof) {
  const Eigen::VectorXd r = x - c.mean;
  const double q = r.dot(c.precision * r);
  return c.log_norm - 0.5 * (dof + static_cast<double>(x.size())) * std::log1p(q / dof);
}

Eigen::MatrixXd neg_hessian(const std::function<double(const Eigen::VectorXd&)>& g,
                            const Eigen::VectorXd& x0, double f0) {
  const auto d = x0.size();
  const double h = 5e-3;
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd x = x0;
  for (Eigen::Index i = 0; i < d; ++i) {
    x[i] = x0[i] + h;
    const double fp = g(x);
    x[i] = x0[i] - h;
    const double fm = g(x);
    x[i] = x0[i];
    H(i, i) = -(fp - 2.0 * f0 + fm) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (int a : {1, -1})
        for (int b : {1, -1}) {
          x[i] = x0[i] + a * h;
          x[j] = x0[j] + b * h;
          s += a * b * g(x);
        }
      x[i] = x0[i];
      x[j] = x0[j];
      H(i, j) = H(j, i) = -s / (4.0 * h * h);
    }
  }
  for (Eigen::Index i = 0; i < H.size(); ++i)
    if (!std::isfinite(H.data()[i])) H.data()[i] = 0.0;
  return H;
}

}  // namespace

IntegralResult marginal_importance(const HypothesisLikelihood& h, const PriorSpec& prior,
                                   std::span<const MassParams> seeds, const ImportanceSpec& spec) {
  if (spec.n_samples < 100) throw ValidationError("importance sampling needs at least 100 samples");
  if (!(spec.defensive_fraction > 0.0 && spec.defensive_fraction <= 1.0))
    throw ValidationError("defensive fraction must be in (0, 1]");
  const ParamLayout layout = prior_layout(h, prior);
  IntegralResult out;
  out.estimator = Estimator::kImportance;
  out.label = h.proposition().label;
  out.context = result_context(h, prior);
  out.resolution = spec.n_samples;
  if (h.structurally_excluded()) {
    out.converged = true;
    return out;
  }
  const auto d = static_cast<Eigen::Index>(layout.dim());
  std::vector<double> ubuf(layout.dim());
  // ln of the integrand in unconstrained coordinates
  auto log_target = [&](const Eigen::VectorXd& u) {
    for (Eigen::Index i = 0; i < d; ++i) ubuf[i] = u[i];
    const MassParams p = layout.to_params(ubuf);
    const double lp = layout.log_prior_density(p);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    ++out.evaluations;
    const double ll = h.log10_likelihood(p);
    if (is_exclusion(ll)) return -std::numeric_limits<double>::infinity();
    return kLn10 * ll + lp + layout.log_jacobian(ubuf);
  };

  // Refine every seed to a mode of the integrand in u space.
  struct Mode {
    Eigen::VectorXd u;
    double value;
  };
  std::vector<Mode> modes;
  NelderMeadOptions nm;
  nm.max_iterations = 400;
  nm.tolerance = 1e-5;
  nm.initial_step = 0.2;
  const Objective objective = [&](std::span<const double> u) {
    return log_target(Eigen::Map<const Eigen::VectorXd>(u.data(), d));
  };
  for (const auto& s : seeds) {
    MassParams p = h.config().neutralize(s);
    if (prior.fixed_c2) p.variance_c2 = *prior.fixed_c2;
    if (static_cast<int>(p.templates.size()) != h.noc()) continue;
    for (auto& t : p.templates) t = std::clamp(t, prior.template_lo + 1e-6, prior.template_hi * (1 - 1e-9));
    auto u0 = layout.to_unconstrained(p);
    const auto r = nelder_mead_maximize(objective, u0, nm);
    if (!std::isfinite(r.value)) continue;
    modes.push_back({Eigen::Map<const Eigen::VectorXd>(r.x.data(), d), r.value});
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.value > b.value; });
  if (!modes.empty()) {
    const double cut = modes.front().value - kLn10 * 10.0;
    modes.erase(std::remove_if(modes.begin(), modes.end(), [&](const Mode& m) { return m.value < cut; }),
                modes.end());
  }

  // Exchangeable unknowns: template slots that are not fixed contributors.
  std::vector<int> unknown;
  for (int i = 0; i < h.noc(); ++i)
    if (!h.proposition().fixed_contributors.count(i)) unknown.push_back(i);

  std::vector<Component> comps;
  auto near = [&](const Eigen::VectorXd& a) {
    for (const auto& c : comps)
      if ((c.mean - a).cwiseAbs().maxCoeff() < 0.05) return true;
    return false;
  };
  for (const auto& m : modes) {
    if (static_cast<int>(comps.size()) >= spec.max_components) break;
    if (near(m.u)) continue;
    const Eigen::MatrixXd nh = neg_hessian(log_target, m.u, m.value);
    std::vector<int> perm = unknown;
    do {
      // template slot unknown[k] takes the value of slot perm[k]
      Eigen::PermutationMatrix<Eigen::Dynamic> P(d);
      P.setIdentity();
      for (std::size_t k = 0; k < unknown.size(); ++k) P.indices()[unknown[k]] = perm[k];
      Eigen::VectorXd mu(d);
      for (Eigen::Index i = 0; i < d; ++i) mu[i] = m.u[P.indices()[i]];
      Eigen::MatrixXd nhp(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) nhp(i, j) = nh(P.indices()[i], P.indices()[j]);
      if (!near(mu) && static_cast<int>(comps.size()) < spec.max_components)
        comps.push_back(make_component(std::move(mu), nhp, spec.scale_inflation, spec.dof));
      if (!spec.permutation_images) break;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  // Deterministic allocation: the defensive prior component first, then
  // equal shares per component.
  const std::size_t n = spec.n_samples;
  const std::size_t n_def =
      comps.empty() ? n : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.defensive_fraction * n)));
  const std::size_t n_rest = n - n_def;
  std::vector<std::size_t> n_comp(comps.size(), comps.empty() ? 0 : n_rest / comps.size());
  for (std::size_t k = 0; k < n_rest % std::max<std::size_t>(comps.size(), 1); ++k) ++n_comp[k];
  const double ln_alpha_def = std::log(static_cast<double>(n_def) / n);
  std::vector<double> ln_alpha(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k)
    ln_alpha[k] = n_comp[k] > 0 ? std::log(static_cast<double>(n_comp[k]) / n)
                                : -std::numeric_limits<double>::infinity();

  auto log_proposal = [&](const Eigen::VectorXd& u) {
    for (Eigen::Index i = 0; i < d; ++i) ubuf[i] = u[i];
    const MassParams p = layout.to_params(ubuf);
    double terms_max = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(comps.size() + 1);
    const double lp = layout.log_prior_density(p);
    terms.push_back(lp == -std::numeric_limits<double>::infinity()
                        ? lp
                        : ln_alpha_def + lp + layout.log_jacobian(ubuf));
    for (std::size_t k = 0; k < comps.size(); ++k)
      terms.push_back(ln_alpha[k] + log_t_density(comps[k], u, spec.dof));
    for (double t : terms) terms_max = std::max(terms_max, t);
    double s = 0.0;
    for (double t : terms) s += std::exp(t - terms_max);
    return terms_max + std::log(s);
  };

  Rng rng(spec.seed);
  std::vector<double> log10_w;
  log10_w.reserve(n);
  std::vector<double> v(layout.dim());
  Eigen::VectorXd u(d), z(d);
  for (std::size_t i = 0; i < n_def; ++i) {
    for (auto& x : v) x = rng.uniform();
    const auto uu = layout.to_unconstrained(layout.from_unit(v));
    for (Eigen::Index k = 0; k < d; ++k) u[k] = uu[k];
    const double lt = log_target(u);
    log10_w.push_back(lt == -std::numeric_limits<double>::infinity() ? kExclusion
                                                                    : (lt - log_proposal(u)) / kLn10);
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (std::size_t i = 0; i < n_comp[c]; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal();
      const double w = std::sqrt(rng.chi_square(spec.dof) / spec.dof);
      u = comps[c].mean + comps[c].chol * z / w;
      const double lt = log_target(u);
      log10_w.push_back(lt == -std::numeric_limits<double>::infinity()
                            ? kExclusion
                            : (lt - log_proposal(u)) / kLn10);
    }
  }
  const auto [m, rse] = log10_mean_and_rse(log10_w);
  out.log10_marginal = m;
  out.relative_se = rse;
  out.levels = static_cast<int>(comps.size());
  out.level_values = {m};
  out.converged = m == kExclusion || rse < 0.1;
  return out;
}

double log10_lr_int(const IntegralResult& numerator, const IntegralResult& denominator) {
  if (numerator.context != denominator.context)
    throw ContractError("integral results come from different profiles, models or priors");
  if (numerator.log10_marginal == kExclusion) return kExclusion;
  if (denominator.log10_marginal == kExclusion) return std::numeric_limits<double>::infinity();
  return numerator.log10_marginal - denominator.log10_marginal;
}

double lr_int(const IntegralResult& numerator, const IntegralResult& denominator) {
  return std::pow(10.0, log10_lr_int(numerator, denominator));
}

Deconvolution deconvolution_weights(const Profile& profile, int noc, const FrequencyTable& table,
                                    const RareAllelePolicy& policy, const ModelConfig& config,
                                    const PriorSpec& prior, const DeconvolutionOptions& options) {
  Proposition open;
  open.noc = noc;
  open.validate();
  const auto sets = enumerate_sets(profile, open, table, policy, config, options.max_sets);
  Deconvolution out;
  out.noc = noc;
  Log10SumAccumulator total;
  for (const auto& ws : sets) {
    Proposition fixed;
    fixed.noc = noc;
    for (int i = 0; i < noc; ++i) fixed.fixed_contributors[i] = ws.set.contributors[i];
    const HypothesisLikelihood h(profile, fixed, table, policy, config);
    DeconvolutionEntry e;
    e.set = ws.set;
    e.log10_prior = std::log10(ws.prior);
    if (!h.structurally_excluded()) {
      const ParamLayout layout = prior_layout(h, prior);
      const IntegralResult r = layout.dim() <= kMaxQuadratureDim
                                   ? marginal_quadrature(h, prior, options.quadrature)
                                   : marginal_monte_carlo(h, prior, options.mc_samples, options.seed);
      e.log10_integral = r.log10_marginal;
    }
    if (e.log10_integral != kExclusion) total.add(e.log10_prior + e.log10_integral);
    out.entries.push_back(std::move(e));
  }
  out.log10_total = total.value();
  if (out.log10_total == kExclusion)
    throw ValidationError("no genotype set explains the profile at this number of contributors");
  for (auto& e : out.entries)
    e.weight = e.log10_integral == kExclusion
                   ? 0.0
                   : std::pow(10.0, e.log10_prior + e.log10_integral - out.log10_total);
  return out;
}

double log10_conditioned_lr(const Deconvolution& deconvolution, int slot,
                            const MultiLocusGenotype& poi, const Profile& profile,
                            const FrequencyTable& table, const RareAllelePolicy& policy,
                            const ModelConfig& config) {
  if (slot < 0 || slot >= deconvolution.noc) throw ValidationError("POI slot out of range");
  double log10_poi_prior = 0.0;
  for (const auto& l : profile.loci()) {
    auto it = poi.find(l.name);
    if (it == poi.end()) throw ValidationError("POI genotype lacks locus " + l.name);
    const auto cand = candidate_alleles(l, config);
    for (const auto& a : {it->second.first(), it->second.second()})
      if (std::find(cand.begin(), cand.end(), a) == cand.end())
        throw ValidationError("POI allele " + a.str() + " at " + l.name +
                              " is outside the enumerated alleles; map it to Q first");
    log10_poi_prior += std::log10(genotype_prior(it->second, table, policy, l.name,
                                                 aggregate_frequency(cand, table, policy, l.name)));
  }
  Log10SumAccumulator num;
  for (const auto& e : deconvolution.entries) {
    if (e.log10_integral == kExclusion) continue;
    bool match = true;
    for (const auto& l : profile.loci())
      match = match && e.set.contributors[slot].at(l.name) == poi.at(l.name);
    if (match) num.add(e.log10_prior + e.log10_integral);
  }
  if (num.value() == kExclusion) return kExclusion;
  return num.value() - log10_poi_prior - deconvolution.log10_total;
}

}  // namespace pgmix
