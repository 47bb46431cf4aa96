#include "pgmix/mle_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pgmix/error.hpp"
#include "pgmix/fingerprint.hpp"

namespace pgmix {

std::uint64_t context_fingerprint(const Profile& profile, const ModelConfig& config) {
  std::ostringstream os;
  os.precision(17);
  os << "at=" << profile.analytical_threshold() << ';';
  for (const auto& l : profile.loci()) {
    os << l.name << ':';
    for (const auto& p : l.peaks) os << p.allele.str() << '=' << p.height << '@' << p.size.value_or(-1) << ',';
    os << ';';
  }
  os << config.back_stutter << config.forward_stutter << config.degradation
     << config.locus_multipliers << config.split_stutter_variance << ';' << config.repeat_bp;
  for (const auto& [l, s] : config.nominal_sizes) os << l << '=' << s << ',';
  return fnv1a(os.str());
}

namespace {

/// Typical per-contributor template scale: half the mean summed height per locus.
double template_scale(const Profile& profile) {
  double total = 0.0;
  int n = 0;
  for (const auto& l : profile.loci()) {
    double s = 0.0;
    for (const auto& p : l.peaks) s += p.height;
    if (s > 0.0) {
      total += s;
      ++n;
    }
  }
  const double scale = n > 0 ? 0.5 * total / n : 0.0;
  return std::max(scale, 2.0 * profile.analytical_threshold());
}

MassParams base_params(const HypothesisLikelihood& h, const SearchSpec& search) {
  MassParams base;
  base.templates.assign(h.noc(), template_scale(h.profile()) / h.noc());
  base.variance_c2 = search.fixed_c2.value_or(12.0);
  base.bw_stutter_prop = 0.05;
  base.fw_stutter_prop = 0.01;
  base.degradation_slope = 0.9;
  return base;
}

void start_box(const ParamLayout& layout, double tscale, std::vector<double>& lo,
               std::vector<double>& hi) {
  lo.clear();
  hi.clear();
  for (const auto& s : layout.slots()) {
    double a = 0.0, b = 0.0;
    switch (s.kind) {
      case ParamKind::kTemplate: a = 0.1 * tscale; b = 1.0 * tscale; break;
      case ParamKind::kVariance:
      case ParamKind::kStutterVariance: a = 2.0; b = 50.0; break;
      case ParamKind::kBackStutter: a = 0.01; b = 0.15; break;
      case ParamKind::kForwardStutter: a = 0.001; b = 0.05; break;
      case ParamKind::kSlope: a = 0.6; b = 0.99; break;
      case ParamKind::kMultiplier: a = 0.7; b = 1.4; break;
    }
    a = std::clamp(a, s.lo, s.hi);
    b = std::clamp(b, s.lo, s.hi);
    lo.push_back(ParamLayout::value_to_u(s, a));
    hi.push_back(ParamLayout::value_to_u(s, b));
  }
}

/// A contributor with template exactly 0 is absent, a point the log
/// transform cannot reach. Warm starts with absent contributors are searched
/// on that face of the box, with the other parameters free.
struct Face {
  std::vector<std::size_t> free;  // searched slots
  std::vector<int> absent;        // contributors pinned at 0
};

Face full_face(const ParamLayout& layout) {
  Face f;
  for (std::size_t k = 0; k < layout.dim(); ++k) f.free.push_back(k);
  return f;
}

Face face_of(const ParamLayout& layout, const MassParams& p) {
  Face f;
  for (std::size_t k = 0; k < layout.dim(); ++k) {
    const auto& s = layout.slots()[k];
    if (s.kind == ParamKind::kTemplate && p.templates.at(s.index) == 0.0) f.absent.push_back(s.index);
    else f.free.push_back(k);
  }
  return f;
}

MassParams face_params(const ParamLayout& layout, const Face& f, const std::vector<double>& anchor,
                       std::span<const double> x) {
  std::vector<double> u = anchor;
  for (std::size_t k = 0; k < f.free.size(); ++k) u[f.free[k]] = x[k];
  MassParams m = layout.to_params(u);
  for (int i : f.absent) m.templates[i] = 0.0;
  return m;
}

MleResult grid_search(const HypothesisLikelihood& h, const SearchSpec& search) {
  if (static_cast<int>(search.template_grid.size()) != h.noc())
    throw ValidationError("grid search needs one template lattice per contributor");
  for (const auto& axis : search.template_grid)
    if (axis.empty()) throw ValidationError("empty template lattice");
  MassParams p = h.config().neutralize(base_params(h, search));
  MleResult best;
  std::vector<std::size_t> idx(h.noc(), 0);
  int counter = 0;
  for (;;) {
    for (int i = 0; i < h.noc(); ++i) p.templates[i] = search.template_grid[i][idx[i]];
    const double v = h.log10_likelihood(p);
    ++best.evaluations;
    if (v > best.log10_max) {
      best.log10_max = v;
      best.params = p;
      best.best_start = counter;
    }
    ++counter;
    int d = h.noc() - 1;
    while (d >= 0 && ++idx[d] == search.template_grid[d].size()) idx[d--] = 0;
    if (d < 0) break;
  }
  best.excluded = is_exclusion(best.log10_max);
  best.converged = !best.excluded;
  if (best.excluded) best.params = p;
  return best;
}

}  // namespace

ParamLayout mle_layout(const HypothesisLikelihood& h, const SearchSpec& search) {
  return ParamLayout(h.noc(), h.config(), h.profile().locus_names(), search.bounds,
                     !search.fixed_c2.has_value(), base_params(h, search));
}

MleResult maximize(const HypothesisLikelihood& h, const SearchSpec& search) {
  MleResult result;
  if (search.mode == SearchSpec::Mode::kGrid) {
    result = grid_search(h, search);
  } else {
    if (search.n_starts < 1 && search.warm_starts.empty())
      throw ValidationError("search needs at least one start");
    const ParamLayout layout = mle_layout(h, search);
    std::vector<double> lo, hi;
    start_box(layout, template_scale(h.profile()), lo, hi);
    std::vector<std::pair<std::vector<double>, Face>> starts;
    for (auto& u : latin_hypercube(static_cast<std::size_t>(std::max(search.n_starts, 0)), lo, hi, search.seed))
      starts.emplace_back(std::move(u), full_face(layout));
    for (const auto& w : search.warm_starts) {
      MassParams p = w;
      if (search.fixed_c2) p.variance_c2 = *search.fixed_c2;
      p = h.config().neutralize(p);
      starts.emplace_back(layout.to_unconstrained(p), face_of(layout, p));
    }
    NelderMeadOptions polish = search.simplex;
    polish.initial_step = 0.1 * search.simplex.initial_step;
    double best_value = kExclusion;
    bool best_converged = false;
    struct End {
      double value;
      std::vector<double> u;
      MassParams params;
    };
    std::vector<End> ends;
    for (std::size_t s = 0; s < starts.size(); ++s) {
      const auto& [anchor, face] = starts[s];
      const Objective objective = [&](std::span<const double> x) {
        return h.log10_likelihood(face_params(layout, face, anchor, x));
      };
      std::vector<double> x0;
      for (std::size_t k : face.free) x0.push_back(anchor[k]);
      OptimizeResult r2;
      if (x0.empty()) {
        r2.value = objective(x0);
        r2.converged = true;
        r2.evaluations = 1;
      } else {
        OptimizeResult r = nelder_mead_maximize(objective, x0, search.simplex);
        r2 = nelder_mead_maximize(objective, r.x, polish);
        r2.iterations += r.iterations;
        r2.evaluations += r.evaluations;
        if (r.value > r2.value) {  // keep the better end point of the two runs
          r2.x = r.x;
          r2.value = r.value;
        }
      }
      const MassParams end = face_params(layout, face, anchor, r2.x);
      if (std::isfinite(r2.value)) ends.push_back({r2.value, layout.to_unconstrained(end), end});
      result.iterations += r2.iterations;
      result.evaluations += r2.evaluations;
      ++result.restarts;
      if (s == 0 || r2.value > best_value) {
        best_value = r2.value;
        best_converged = r2.converged;
        result.params = end;
        result.best_start = static_cast<int>(s);
      }
    }
    result.log10_max = best_value;
    std::stable_sort(ends.begin(), ends.end(), [](const End& a, const End& b) { return a.value > b.value; });
    std::vector<std::vector<double>> kept;
    for (const auto& e : ends) {
      bool dup = false;
      for (const auto& k : kept) {
        double d = 0.0;
        for (std::size_t i = 0; i < e.u.size(); ++i) d = std::max(d, std::abs(e.u[i] - k[i]));
        dup = dup || d < 1e-3;
      }
      if (dup) continue;
      kept.push_back(e.u);
      result.local_optima.push_back(e.params);
      if (kept.size() == 8) break;
    }
    result.converged = best_converged;
    result.excluded = is_exclusion(best_value);
  }
  result.label = h.proposition().label;
  result.context = context_fingerprint(h.profile(), h.config());
  return result;
}

MleResult maximize(const Profile& profile, const Proposition& proposition,
                   const FrequencyTable& table, const RareAllelePolicy& policy,
                   const ModelConfig& config, const SearchSpec& search) {
  const HypothesisLikelihood h(profile, proposition, table, policy, config);
  return maximize(h, search);
}

double log10_lr_ml(const MleResult& numerator, const MleResult& denominator) {
  if (numerator.context != denominator.context)
    throw ContractError("MLE results come from different profiles or model configs");
  if (numerator.excluded) return kExclusion;
  if (denominator.excluded) return std::numeric_limits<double>::infinity();
  return numerator.log10_max - denominator.log10_max;
}

double lr_ml(const MleResult& numerator, const MleResult& denominator) {
  return std::pow(10.0, log10_lr_ml(numerator, denominator));
}

namespace {

double ratio(double num, double den) {
  if (is_exclusion(num)) return kExclusion;
  if (is_exclusion(den)) return std::numeric_limits<double>::infinity();
  return num - den;
}

}  // namespace

BoundedLrs bounded_lrs(const HypothesisLikelihood& h1, const HypothesisLikelihood& h2,
                       const MassParams& m_hat_1, const MassParams& m_hat_2) {
  if (h1.noc() != h2.noc())
    throw ContractError(
        "bounded LRs are undefined when the propositions have different numbers of contributors");
  BoundedLrs out;
  out.log10_lr_at_m2 = ratio(h1.log10_likelihood(m_hat_2), h2.log10_likelihood(m_hat_2));
  out.log10_lr_at_m1 = ratio(h1.log10_likelihood(m_hat_1), h2.log10_likelihood(m_hat_1));
  return out;
}

MlLrReport fit_pair(const HypothesisLikelihood& h1, const HypothesisLikelihood& h2,
                    const SearchSpec& search) {
  MlLrReport report;
  SearchSpec s1 = search, s2 = search;
  s2.seed = search.seed ^ 0x5bd1e995ULL;
  report.numerator = maximize(h1, s1);
  report.denominator = maximize(h2, s2);
  if (h1.noc() == h2.noc() && search.mode == SearchSpec::Mode::kContinuous) {
    SearchSpec c1 = s1, c2 = s2;
    c1.n_starts = 0;
    c2.n_starts = 0;
    c1.warm_starts = {report.denominator.params};
    c2.warm_starts = {report.numerator.params};
    const MleResult x1 = maximize(h1, c1);
    const MleResult x2 = maximize(h2, c2);
    auto merge = [](MleResult& into, const MleResult& extra) {
      const int it = into.iterations + extra.iterations;
      const int ev = into.evaluations + extra.evaluations;
      const int rs = into.restarts + extra.restarts;
      if (extra.log10_max > into.log10_max) {
        const int best_start = into.restarts + extra.best_start;
        auto optima = std::move(into.local_optima);
        into = extra;
        into.best_start = best_start;
        optima.insert(optima.begin(), extra.params);
        into.local_optima = std::move(optima);
      }
      into.iterations = it;
      into.evaluations = ev;
      into.restarts = rs;
    };
    merge(report.numerator, x1);
    merge(report.denominator, x2);
  }
  report.log10_lr_ml = log10_lr_ml(report.numerator, report.denominator);
  if (h1.noc() == h2.noc()) {
    const auto b = bounded_lrs(h1, h2, report.numerator.params, report.denominator.params);
    report.log10_lr_bound_low = b.log10_lr_at_m2;
    report.log10_lr_bound_high = b.log10_lr_at_m1;
  }
  return report;
}

}  // namespace pgmix
