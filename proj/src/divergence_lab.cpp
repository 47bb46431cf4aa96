#include "pgmix/divergence_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pgmix/error.hpp"
#include "pgmix/io.hpp"

namespace pgmix {

double TrueScenario::size_bp(const std::string& locus, const AlleleLabel& allele) const {
  auto it = base_bp.find(locus);
  const double base = it != base_bp.end() ? it->second : 100.0;
  return base + config.repeat_bp * allele.repeat_value().value_or(0.0);
}

Profile simulate_profile(const TrueScenario& s) {
  if (s.genotypes.empty()) throw ValidationError("scenario needs at least one contributor");
  if (static_cast<int>(s.params.templates.size()) != s.noc())
    throw ValidationError("scenario templates and genotypes disagree");
  if (!(s.params.total_template() > 0.0)) throw ValidationError("scenario templates are all zero");
  s.params.validate();
  Rng rng(s.seed);
  std::vector<LocusPeaks> loci;
  for (const auto& name : s.loci) {
    LocusGenotypes g;
    std::set<AlleleLabel> universe;
    for (const auto& person : s.genotypes) {
      auto it = person.find(name);
      if (it == person.end()) throw ValidationError("scenario genotype lacks locus " + name);
      g.push_back(it->second);
    }
    for (const auto& x : g)
      for (const auto& a : {x.first(), x.second()}) {
        universe.insert(a);
        if (s.config.back_stutter)
          if (auto b = a.shifted(-1)) universe.insert(*b);
        if (s.config.forward_stutter)
          if (auto f = a.shifted(+1)) universe.insert(*f);
      }
    LocusContext ctx;
    ctx.name = name;
    for (const auto& a : universe) ctx.positions.push_back({a, std::nullopt, s.size_bp(name, a)});
    const auto e = expected_heights(g, s.params, ctx, s.config);
    LocusPeaks peaks{name, {}};
    for (std::size_t i = 0; i < ctx.positions.size(); ++i) {
      if (!(e[i] > 0.0)) continue;
      const auto& a = ctx.positions[i].allele;
      bool carried = false;
      for (const auto& x : g) carried = carried || x.copies(a) > 0;
      const double c2 = carried || !s.config.split_stutter_variance ? s.params.variance_c2
                                                                   : s.params.stutter_variance();
      const double z = rng.normal() * std::sqrt(c2 / e[i]);
      const double o = e[i] * std::pow(10.0, z);
      if (o >= s.analytical_threshold) peaks.peaks.push_back({a, o, ctx.positions[i].size_bp});
    }
    loci.push_back(std::move(peaks));
  }
  return Profile(std::move(loci), s.analytical_threshold);
}

const char* to_string(DonorLabel label) {
  switch (label) {
    case DonorLabel::kTrueDonor: return "TRUE_DONOR";
    case DonorLabel::kNondonorRandom: return "NONDONOR_RANDOM";
    case DonorLabel::kNondonorResampled: return "NONDONOR_RESAMPLED";
  }
  return "?";
}

const char* to_string(EngineKind engine) { return engine == EngineKind::kMle ? "MLE" : "INT"; }

namespace {

AlleleLabel draw_allele(const std::map<AlleleLabel, double>& freqs, Rng& rng) {
  double total = 0.0;
  for (const auto& [a, p] : freqs) total += p;
  double u = rng.uniform() * total;
  for (const auto& [a, p] : freqs) {
    if (u < p) return a;
    u -= p;
  }
  return freqs.rbegin()->first;
}

}  // namespace

MultiLocusGenotype random_person(const FrequencyTable& table, const std::vector<std::string>& loci,
                                 Rng& rng) {
  MultiLocusGenotype g;
  for (const auto& l : loci) {
    const auto& f = table.locus(l);
    if (f.empty()) throw ValidationError("no frequencies for locus " + l);
    const AlleleLabel a = draw_allele(f, rng);
    const AlleleLabel b = draw_allele(f, rng);
    g[l] = Genotype(a, b);
  }
  return g;
}

MultiLocusGenotype gen_nondonor(NondonorMode mode, const FrequencyTable& table,
                                const std::vector<MultiLocusGenotype>& true_donors,
                                const std::vector<std::string>& loci, std::uint64_t seed) {
  Rng rng(seed);
  if (mode == NondonorMode::kRandom) return random_person(table, loci, rng);
  if (true_donors.empty()) throw ValidationError("resampled non-donors need true donors");
  MultiLocusGenotype g;
  for (const auto& l : loci) {
    std::vector<AlleleLabel> pool;
    for (const auto& d : true_donors) {
      auto it = d.find(l);
      if (it == d.end()) continue;
      pool.push_back(it->second.first());
      pool.push_back(it->second.second());
    }
    if (pool.empty()) throw ValidationError("empty allele pool at locus " + l);
    const auto& a = pool[rng.below(pool.size())];
    const auto& b = pool[rng.below(pool.size())];
    g[l] = Genotype(a, b);
  }
  return g;
}

void StudyConfig::validate() const {
  if (n_cases < 0) throw ValidationError("n_cases must be >= 0");
  if (noc.empty()) throw ValidationError("study needs at least one NoC");
  for (int n : noc)
    if (n < 1 || n > 4) throw ValidationError("study NoC must be in 1..4");
  if (n_loci < 1 || alleles_per_locus < 2) throw ValidationError("study needs loci with >= 2 alleles");
  if (first_repeat < 2) throw ValidationError("first_repeat must be >= 2");
  if (n_individuals < 1) throw ValidationError("n_individuals must be >= 1");
  for (int n : noc)
    if (true_donors_per_case > n) throw ValidationError("more true-donor POIs than contributors");
  if (true_donors_per_case < 0 || nondonors_per_case < 0) throw ValidationError("negative POI counts");
  if (!run_mle && !run_int) throw ValidationError("study needs at least one engine");
  if (!(template_lo > 0.0 && template_hi >= template_lo)) throw ValidationError("bad template range");
  if (!(c2 > 0.0)) throw ValidationError("c2 must be positive");
  if (!(analytical_threshold > 0.0)) throw ValidationError("analytical threshold must be positive");
  if (hp_starts < 0) throw ValidationError("hp_starts must be >= 0");
  prior.validate();
}

StudyConfig StudyConfig::from_json(const nlohmann::json& j) {
  StudyConfig c;
  if (!j.is_object()) throw ValidationError("study config must be a JSON object");
  static const std::set<std::string> known = {
      "n_cases", "noc", "n_loci", "alleles_per_locus", "first_repeat", "n_individuals",
      "true_donors_per_case", "nondonors_per_case", "nondonor_modes", "engines", "policy",
      "template_range", "c2", "analytical_threshold", "model", "search", "hp_starts", "prior",
      "importance", "seed", "frequencies", "format"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ValidationError("unknown study field '" + k + "'");
  try {
    if (j.contains("n_cases")) c.n_cases = j["n_cases"].get<int>();
    if (j.contains("noc")) {
      c.noc = j["noc"].is_array() ? j["noc"].get<std::vector<int>>()
                                  : std::vector<int>{j["noc"].get<int>()};
    }
    if (j.contains("n_loci")) c.n_loci = j["n_loci"].get<int>();
    if (j.contains("alleles_per_locus")) c.alleles_per_locus = j["alleles_per_locus"].get<int>();
    if (j.contains("first_repeat")) c.first_repeat = j["first_repeat"].get<int>();
    if (j.contains("n_individuals")) c.n_individuals = j["n_individuals"].get<int>();
    if (j.contains("true_donors_per_case")) c.true_donors_per_case = j["true_donors_per_case"].get<int>();
    if (j.contains("nondonors_per_case")) c.nondonors_per_case = j["nondonors_per_case"].get<int>();
    if (j.contains("nondonor_modes")) {
      c.nondonor_modes.clear();
      for (const auto& m : j["nondonor_modes"]) {
        const auto s = m.get<std::string>();
        if (s == "random") c.nondonor_modes.push_back(NondonorMode::kRandom);
        else if (s == "resampled") c.nondonor_modes.push_back(NondonorMode::kResampled);
        else throw ValidationError("non-donor mode must be random or resampled");
      }
    }
    if (j.contains("engines")) {
      c.run_mle = c.run_int = false;
      for (const auto& e : j["engines"]) {
        const auto s = e.get<std::string>();
        if (s == "mle") c.run_mle = true;
        else if (s == "int") c.run_int = true;
        else throw ValidationError("engine must be mle or int");
      }
    }
    if (j.contains("policy")) c.policy = RareAllelePolicy::parse(j["policy"].get<std::string>());
    if (j.contains("template_range")) {
      const auto r = j["template_range"].get<std::vector<double>>();
      if (r.size() != 2) throw ValidationError("template_range needs [lo, hi]");
      c.template_lo = r[0];
      c.template_hi = r[1];
    }
    if (j.contains("c2")) c.c2 = j["c2"].get<double>();
    if (j.contains("analytical_threshold")) c.analytical_threshold = j["analytical_threshold"].get<double>();
    if (j.contains("model")) c.model = io::model_config_from_json(j["model"]);
    if (j.contains("search")) c.search = io::search_from_json(j["search"]);
    if (j.contains("hp_starts")) c.hp_starts = j["hp_starts"].get<int>();
    if (j.contains("prior")) c.prior = io::prior_from_json(j["prior"]);
    if (j.contains("importance")) {
      const auto& is = j["importance"];
      if (is.contains("n_samples")) c.importance.n_samples = is["n_samples"].get<std::size_t>();
      if (is.contains("dof")) c.importance.dof = is["dof"].get<double>();
      if (is.contains("scale_inflation")) c.importance.scale_inflation = is["scale_inflation"].get<double>();
      if (is.contains("defensive_fraction"))
        c.importance.defensive_fraction = is["defensive_fraction"].get<double>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("frequencies")) {
      c.frequencies_path = j["frequencies"].get<std::string>();
      c.table = io::read_frequency_csv(c.frequencies_path);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("study config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json StudyConfig::to_json() const {
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : nondonor_modes) modes.push_back(m == NondonorMode::kRandom ? "random" : "resampled");
  nlohmann::json engines = nlohmann::json::array();
  if (run_mle) engines.push_back("mle");
  if (run_int) engines.push_back("int");
  nlohmann::json j = {{"n_cases", n_cases},
          {"noc", noc},
          {"n_loci", n_loci},
          {"alleles_per_locus", alleles_per_locus},
          {"first_repeat", first_repeat},
          {"n_individuals", n_individuals},
          {"true_donors_per_case", true_donors_per_case},
          {"nondonors_per_case", nondonors_per_case},
          {"nondonor_modes", modes},
          {"engines", engines},
          {"policy", policy.str()},
          {"template_range", {template_lo, template_hi}},
          {"c2", c2},
          {"analytical_threshold", analytical_threshold},
          {"model", io::to_json(model)},
          {"search",
           {{"mode", search.mode == SearchSpec::Mode::kGrid ? "grid" : "continuous"},
            {"n_starts", search.n_starts},
            {"max_iterations", search.simplex.max_iterations},
            {"tolerance", search.simplex.tolerance},
            {"initial_step", search.simplex.initial_step}}},
          {"hp_starts", hp_starts},
          {"prior", io::to_json(prior)},
          {"importance",
           {{"n_samples", importance.n_samples},
            {"dof", importance.dof},
            {"scale_inflation", importance.scale_inflation},
            {"defensive_fraction", importance.defensive_fraction}}},
          {"seed", seed}};
  if (search.fixed_c2) j["search"]["fixed_c2"] = *search.fixed_c2;
  if (!frequencies_path.empty()) j["frequencies"] = frequencies_path;
  return j;
}

FrequencyTable study_table(const StudyConfig& c) {
  if (c.table) return *c.table;
  Rng rng(derive_seed(c.seed, 0xF4E9));
  std::map<std::string, std::map<AlleleLabel, double>> freqs;
  std::map<std::string, int> k;
  for (int l = 0; l < c.n_loci; ++l) {
    char name[16];
    std::snprintf(name, sizeof name, "L%02d", l + 1);
    std::vector<double> w(c.alleles_per_locus);
    double total = 0.0;
    for (auto& x : w) total += (x = rng.gamma(2.0));
    auto& m = freqs[name];
    for (int a = 0; a < c.alleles_per_locus; ++a)
      m[AlleleLabel(std::to_string(c.first_repeat + a))] = w[a] / total;
    k[name] = c.alleles_per_locus;
  }
  return FrequencyTable(std::move(freqs), c.n_individuals, std::move(k));
}

namespace {

std::vector<double> sorted_props(const MassParams& p) {
  auto v = p.mixture_proportions();
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

struct Poi {
  MultiLocusGenotype genotype;
  DonorLabel label;
  int index;
};

std::vector<LrRecord> run_case(const StudyConfig& c, const FrequencyTable& table, int case_id) {
  const std::uint64_t cs = derive_seed(c.seed, static_cast<std::uint64_t>(case_id));
  Rng rng(cs);
  const int noc = c.noc[static_cast<std::size_t>(case_id) % c.noc.size()];
  std::vector<std::string> loci;
  for (const auto& [name, f] : table.all()) loci.push_back(name);

  TrueScenario sc;
  sc.loci = loci;
  sc.config = c.model;
  sc.analytical_threshold = c.analytical_threshold;
  for (std::size_t l = 0; l < loci.size(); ++l) sc.base_bp[loci[l]] = 60.0 + 70.0 * static_cast<double>(l);
  for (int i = 0; i < noc; ++i) sc.genotypes.push_back(random_person(table, loci, rng));
  std::vector<double> t(noc);
  for (auto& x : t) x = std::exp(rng.uniform(std::log(c.template_lo), std::log(c.template_hi)));
  sc.params = MassParams(t, c.c2);
  if (c.model.back_stutter) sc.params.bw_stutter_prop = 0.06;
  if (c.model.forward_stutter) sc.params.fw_stutter_prop = 0.01;
  if (c.model.degradation) sc.params.degradation_slope = rng.uniform(0.7, 0.95);
  if (c.model.locus_multipliers)
    for (std::size_t l = 1; l < loci.size(); ++l)
      sc.params.locus_multipliers[loci[l]] = std::exp(rng.uniform(std::log(0.8), std::log(1.25)));
  sc.seed = derive_seed(cs, 1);
  const Profile profile = simulate_profile(sc);

  std::vector<Poi> pois;
  for (int i = 0; i < c.true_donors_per_case; ++i) pois.push_back({sc.genotypes[i], DonorLabel::kTrueDonor, i});
  int idx = c.true_donors_per_case;
  for (auto mode : c.nondonor_modes)
    for (int k = 0; k < c.nondonors_per_case; ++k, ++idx)
      pois.push_back({gen_nondonor(mode, table, sc.genotypes, loci, derive_seed(cs, 1000 + idx)),
                      mode == NondonorMode::kRandom ? DonorLabel::kNondonorRandom
                                                    : DonorLabel::kNondonorResampled,
                      idx});

  Proposition hd_prop;
  hd_prop.noc = noc;
  hd_prop.label = HypothesisLabel::kHd;
  const HypothesisLikelihood hd(profile, hd_prop, table, c.policy, c.model);

  SearchSpec hd_search = c.search;
  hd_search.seed = derive_seed(cs, 2);
  const MleResult mhd = maximize(hd, hd_search);
  std::optional<IntegralResult> ihd;
  std::string hd_int_error;
  if (c.run_int) {
    try {
      ImportanceSpec is = c.importance;
      is.seed = derive_seed(cs, 3);
      ihd = marginal_importance(hd, c.prior, mhd.local_optima, is);
    } catch (const std::exception& e) {
      hd_int_error = e.what();
    }
  }

  std::vector<LrRecord> out;
  for (const auto& poi : pois) {
    LrRecord base;
    base.case_id = case_id;
    base.noc = noc;
    base.poi = poi.index;
    base.donor = poi.label;
    try {
      Proposition hp_prop;
      hp_prop.noc = noc;
      hp_prop.label = HypothesisLabel::kHp;
      hp_prop.fixed_contributors[0] = poi.genotype;
      const HypothesisLikelihood hp(profile, hp_prop, table, c.policy, c.model);

      SearchSpec s = c.search;
      s.n_starts = c.hp_starts;
      s.seed = derive_seed(cs, 5000 + poi.index);
      // each Hd contributor in turn as the POI slot
      for (int i = 0; i < noc; ++i) {
        MassParams w = mhd.params;
        std::swap(w.templates[0], w.templates[i]);
        s.warm_starts.push_back(w);
      }
      const MleResult mhp = maximize(hp, s);
      MleResult den = mhd;
      if (hd.log10_likelihood(mhp.params) > mhd.log10_max) {
        SearchSpec p = c.search;
        p.n_starts = 0;
        p.warm_starts = {mhp.params};
        const MleResult polished = maximize(hd, p);
        if (polished.log10_max > den.log10_max) den = polished;
      }

      if (c.run_mle) {
        LrRecord r = base;
        r.engine = EngineKind::kMle;
        r.log10_lr = log10_lr_ml(mhp, den);
        r.c2_hp = mhp.params.variance_c2;
        r.c2_hd = den.params.variance_c2;
        r.mixprop_hp = sorted_props(mhp.params);
        r.mixprop_hd = sorted_props(den.params);
        r.mixprop_divergence = max_abs_diff(r.mixprop_hp, r.mixprop_hd);
        const auto b = bounded_lrs(hp, hd, mhp.params, den.params);
        r.bound_low = b.log10_lr_at_m2;
        r.bound_high = b.log10_lr_at_m1;
        r.converged = mhp.converged && den.converged;
        out.push_back(std::move(r));
      }
      if (c.run_int) {
        LrRecord r = base;
        r.engine = EngineKind::kInt;
        if (!ihd) {
          r.log10_lr = std::numeric_limits<double>::quiet_NaN();
          r.error = hd_int_error;
          r.converged = false;
        } else {
          std::vector<MassParams> seeds = mhp.local_optima;
          seeds.insert(seeds.end(), s.warm_starts.begin(), s.warm_starts.end());
          ImportanceSpec is = c.importance;
          is.seed = derive_seed(cs, 9000 + poi.index);
          const IntegralResult ihp = marginal_importance(hp, c.prior, seeds, is);
          r.log10_lr = log10_lr_int(ihp, *ihd);
          r.converged = ihp.converged && ihd->converged;
        }
        out.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      for (EngineKind k : {EngineKind::kMle, EngineKind::kInt}) {
        if ((k == EngineKind::kMle && !c.run_mle) || (k == EngineKind::kInt && !c.run_int)) continue;
        LrRecord r = base;
        r.engine = k;
        r.log10_lr = std::numeric_limits<double>::quiet_NaN();
        r.converged = false;
        r.error = e.what();
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace

std::vector<LrRecord> run_study(const StudyConfig& config, int threads) {
  config.validate();
  const FrequencyTable table = study_table(config);
  std::vector<std::vector<LrRecord>> per_case(static_cast<std::size_t>(config.n_cases));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < config.n_cases; i = next++) {
      try {
        per_case[static_cast<std::size_t>(i)] = run_case(config, table, i);
      } catch (const std::exception& e) {
        LrRecord r;
        r.case_id = i;
        r.log10_lr = std::numeric_limits<double>::quiet_NaN();
        r.converged = false;
        r.error = e.what();
        per_case[static_cast<std::size_t>(i)] = {r};
      }
    }
  };
  const int n = std::max(1, std::min(threads, config.n_cases));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  std::vector<LrRecord> out;
  for (auto& v : per_case)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

namespace {

std::string num(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", *v);
  return buf;
}

std::string lr_text(double v) {
  if (std::isnan(v)) return "NA";
  return io::format_log10(v, 6);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1], b = v[n / 2];
  if (a == kExclusion || b == kExclusion) return a == b ? a : (a == kExclusion ? a : b);
  return 0.5 * (a + b);
}

/// Type-7 quantile; -inf entries sort first.
double quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  if (sorted[lo] == kExclusion || sorted[hi] == kExclusion) return sorted[lo];
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

bool is_nondonor(DonorLabel d) { return d != DonorLabel::kTrueDonor; }

}  // namespace

std::string records_csv(const std::vector<LrRecord>& records) {
  std::ostringstream os;
  os << "case_id,donor_label,engine,log10_lr,c2_hp,c2_hd,mixprop_divergence,noc,poi,"
        "log10_lr_bound_low,log10_lr_bound_high,converged,error\n";
  for (const auto& r : records)
    os << r.case_id << ',' << to_string(r.donor) << ',' << to_string(r.engine) << ','
       << lr_text(r.log10_lr) << ',' << num(r.c2_hp) << ',' << num(r.c2_hd) << ','
       << num(r.mixprop_divergence) << ',' << r.noc << ',' << r.poi << ','
       << (r.bound_low ? lr_text(*r.bound_low) : "NA") << ','
       << (r.bound_high ? lr_text(*r.bound_high) : "NA") << ',' << (r.converged ? 1 : 0) << ','
       << csv_escape(r.error) << '\n';
  return os.str();
}

const GroupSummary* DivergenceSummary::find(EngineKind e, DonorLabel d) const {
  for (const auto& g : groups)
    if (g.engine == e && g.donor == d) return &g;
  return nullptr;
}

double DivergenceSummary::nondonor_fraction_lr_gt_1(EngineKind e) const {
  std::size_t n = 0;
  double hits = 0.0;
  for (const auto& g : groups)
    if (g.engine == e && is_nondonor(g.donor)) {
      n += g.n - g.failed;
      hits += g.fraction_lr_gt_1 * static_cast<double>(g.n - g.failed);
    }
  return n ? hits / static_cast<double>(n) : 0.0;
}

DivergenceSummary divergence_summary(const std::vector<LrRecord>& records) {
  DivergenceSummary s;
  for (EngineKind e : {EngineKind::kMle, EngineKind::kInt})
    for (DonorLabel d : {DonorLabel::kTrueDonor, DonorLabel::kNondonorRandom, DonorLabel::kNondonorResampled}) {
      GroupSummary g;
      g.engine = e;
      g.donor = d;
      std::vector<double> v;
      std::size_t above = 0, excl = 0;
      for (const auto& r : records) {
        if (r.engine != e || r.donor != d) continue;
        ++g.n;
        if (std::isnan(r.log10_lr)) {
          ++g.failed;
          continue;
        }
        v.push_back(r.log10_lr);
        above += r.log10_lr > 0.0 ? 1 : 0;
        excl += r.excluded() ? 1 : 0;
      }
      if (g.n == 0) continue;
      if (!v.empty()) {
        g.fraction_lr_gt_1 = static_cast<double>(above) / static_cast<double>(v.size());
        g.fraction_excluded = static_cast<double>(excl) / static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        for (double q : kQuantileLevels) g.quantiles.push_back(quantile(v, q));
      }
      s.groups.push_back(std::move(g));
    }
  std::vector<double> c2diff, mixdiv;
  for (const auto& r : records) {
    if (r.engine != EngineKind::kMle || !r.c2_hp || !r.c2_hd) continue;
    s.variance_pairs.emplace_back(*r.c2_hp, *r.c2_hd);
    if (r.mixprop_divergence) mixdiv.push_back(*r.mixprop_divergence);
    if (is_nondonor(r.donor)) {
      c2diff.push_back(*r.c2_hp - *r.c2_hd);
      const double ratio = *r.c2_hp / *r.c2_hd;
      s.max_c2_ratio_nondonor = std::max(s.max_c2_ratio_nondonor.value_or(0.0), ratio);
    }
  }
  if (!c2diff.empty()) s.median_c2_diff_nondonor = median(c2diff);
  if (!mixdiv.empty()) s.median_mixprop_divergence = median(mixdiv);

  // pair MLE and INT records of the same test
  std::map<std::pair<int, int>, std::pair<std::optional<double>, std::optional<double>>> pairs;
  for (const auto& r : records) {
    if (!is_nondonor(r.donor) || std::isnan(r.log10_lr)) continue;
    auto& p = pairs[{r.case_id, r.poi}];
    (r.engine == EngineKind::kMle ? p.first : p.second) = r.log10_lr;
  }
  std::vector<double> diff;
  for (const auto& [k, p] : pairs) {
    if (!p.first || !p.second) continue;
    const double a = *p.first, b = *p.second;
    if (a == kExclusion && b == kExclusion) diff.push_back(0.0);
    else if (a == kExclusion) diff.push_back(-std::numeric_limits<double>::infinity());
    else if (b == kExclusion) diff.push_back(std::numeric_limits<double>::infinity());
    else diff.push_back(a - b);
  }
  s.paired_nondonors = diff.size();
  if (!diff.empty()) s.median_mle_minus_int_nondonor = median(diff);
  return s;
}

nlohmann::json to_json(const DivergenceSummary& s) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    if (!v) return nullptr;
    if (!std::isfinite(*v)) return *v > 0 ? "INF" : "EXCLUSION";
    return *v;
  };
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : s.groups) {
    nlohmann::json q = nlohmann::json::object();
    for (std::size_t i = 0; i < g.quantiles.size(); ++i) {
      char key[16];
      std::snprintf(key, sizeof key, "q%02d", static_cast<int>(std::lround(kQuantileLevels[i] * 100)));
      q[key] = opt(g.quantiles[i]);
    }
    groups.push_back({{"engine", to_string(g.engine)},
                      {"donor_label", to_string(g.donor)},
                      {"n", g.n},
                      {"failed", g.failed},
                      {"fraction_lr_gt_1", g.fraction_lr_gt_1},
                      {"fraction_excluded", g.fraction_excluded},
                      {"log10_lr_quantiles", q}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : s.variance_pairs) pairs.push_back({a, b});
  return {{"groups", groups},
          {"nondonor_fraction_lr_gt_1",
           {{"MLE", s.nondonor_fraction_lr_gt_1(EngineKind::kMle)},
            {"INT", s.nondonor_fraction_lr_gt_1(EngineKind::kInt)}}},
          {"median_c2_hp_minus_c2_hd_nondonor", opt(s.median_c2_diff_nondonor)},
          {"max_c2_ratio_nondonor", opt(s.max_c2_ratio_nondonor)},
          {"median_mixprop_divergence", opt(s.median_mixprop_divergence)},
          {"median_log10_lr_mle_minus_int_nondonor", opt(s.median_mle_minus_int_nondonor)},
          {"paired_nondonors", s.paired_nondonors},
          {"variance_pairs_c2_hp_c2_hd", pairs}};
}

std::string scatter_csv(const std::vector<LrRecord>& records, std::uint64_t jitter_seed,
                        double jitter_lo, double jitter_hi) {
  Rng rng(jitter_seed);
  std::ostringstream os;
  os << "case_id,poi,donor_label,engine,log10_lr,plot_log10_lr,c2_hp,c2_hd\n";
  for (const auto& r : records) {
    std::optional<double> plot;
    if (r.excluded()) plot = rng.uniform(jitter_lo, jitter_hi);
    else if (std::isfinite(r.log10_lr)) plot = r.log10_lr;
    os << r.case_id << ',' << r.poi << ',' << to_string(r.donor) << ',' << to_string(r.engine) << ','
       << lr_text(r.log10_lr) << ',' << num(plot) << ',' << num(r.c2_hp) << ',' << num(r.c2_hd) << '\n';
  }
  return os.str();
}

std::string scatter_svg(const std::vector<LrRecord>& records, std::uint64_t jitter_seed,
                        double jitter_lo, double jitter_hi) {
  Rng rng(jitter_seed);
  std::map<std::pair<int, int>, std::pair<std::optional<double>, std::optional<double>>> pts;
  std::map<std::pair<int, int>, DonorLabel> label;
  for (const auto& r : records) {
    if (std::isnan(r.log10_lr)) continue;
    const double v = r.excluded() ? rng.uniform(jitter_lo, jitter_hi) : r.log10_lr;
    auto& p = pts[{r.case_id, r.poi}];
    (r.engine == EngineKind::kMle ? p.first : p.second) = v;
    label[{r.case_id, r.poi}] = r.donor;
  }
  double lo = jitter_lo, hi = 1.0;
  for (const auto& [k, p] : pts)
    for (const auto& v : {p.first, p.second})
      if (v && std::isfinite(*v)) hi = std::max(hi, *v);
  hi = std::ceil(hi);
  const double size = 480.0, pad = 50.0;
  auto map = [&](double v) { return pad + (v - lo) / (hi - lo) * (size - 2 * pad); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << map(lo) << "\" y1=\"" << size - map(lo) << "\" x2=\"" << map(hi) << "\" y2=\""
     << size - map(hi) << "\" stroke=\"#999\"/>\n";
  for (const auto& [k, p] : pts) {
    if (!p.first || !p.second || !std::isfinite(*p.first) || !std::isfinite(*p.second)) continue;
    const char* colour = label[k] == DonorLabel::kTrueDonor ? "#c0392b" : "#2471a3";
    char buf[160];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"2.5\" fill=\"%s\"/>\n",
                  map(*p.second), size - map(*p.first), colour);
    os << buf;
  }
  os << "<text x=\"" << size / 2 << "\" y=\"" << size - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << "log10 LR (integrated)</text>\n";
  os << "<text x=\"14\" y=\"" << size / 2 << "\" transform=\"rotate(-90 14 " << size / 2
     << ")\" text-anchor=\"middle\" font-size=\"12\">log10 LR (MLE)</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace pgmix
