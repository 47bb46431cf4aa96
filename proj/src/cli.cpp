#include "pgmix/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pgmix/calibration.hpp"
#include "pgmix/divergence_lab.hpp"
#include "pgmix/error.hpp"
#include "pgmix/fingerprint.hpp"
#include "pgmix/integration_engine.hpp"
#include "pgmix/io.hpp"
#include "pgmix/mle_engine.hpp"
#include "pgmix/simd/kernels.hpp"
#include "pgmix/toy_bench.hpp"

namespace pgmix::cli {

namespace fs = std::filesystem;

namespace {

struct Meta {
  std::uint64_t seed = 0;
  std::string config_text;  // canonical text the hash is taken over

  std::string hash() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
    return buf;
  }
  std::string csv_header(const std::string& what) const {
    return "# pgmix " + std::string(kVersion) + " " + what + " seed=" + std::to_string(seed) +
           " config_hash=" + hash() + "\n";
  }
  nlohmann::json json(const std::string& format) const {
    return {{"format", format}, {"version", kVersion}, {"seed", seed}, {"config_hash", hash()}};
  }
};

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_json(const fs::path& p, const nlohmann::json& j) { io::write_text(p, j.dump(2) + "\n"); }

std::string fixed(double v, int d) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", d, v);
  return buf;
}

// ---- toy

int cmd_toy(const std::string& mode, const std::string& out_dir, bool check, std::ostream& out) {
  if (mode != "lattice" && mode != "refined" && mode != "both")
    throw ValidationError("--mode must be lattice, refined or both");
  Meta meta;
  meta.config_text = "toy;" + mode;
  nlohmann::json doc = meta.json("pgmix.toy/1");
  doc["header_resolution"] = toy::header_resolution();
  doc["reports"] = nlohmann::json::array();
  bool pass = true;
  const auto grid = toy::grid();
  if (mode != "refined") {
    const auto gc = toy::check_grid(grid);
    const auto r = toy::lattice_report();
    const auto c = toy::check_lattice(r, gc);
    auto j = toy::to_json(r);
    j["check"] = toy::to_json(c);
    j["grid"] = {{"cells", gc.cells}, {"misses", gc.misses}, {"max_abs_error", gc.max_abs_error},
                 {"missed", gc.missed}};
    doc["reports"].push_back(j);
    pass = pass && c.pass();
    out << "LATTICE  mle H1 " << fixed(r.mle_two, 4) << "  mle H2 " << fixed(r.mle_one, 4)
        << "  lr_ml " << fixed(r.lr_ml, 4) << "  int H1 " << fixed(r.int_two.marginal(), 6)
        << "  int H2 " << fixed(r.int_one.marginal(), 6) << "  lr_int " << fixed(r.lr_int, 6)
        << "\n  grid cells within 0.005: " << gc.cells - gc.misses << "/" << gc.cells << "\n";
    for (const auto& i : c.items)
      out << "  " << (i.pass ? "ok   " : "MISS ") << i.name << " " << i.computed << " (expected "
          << i.expected << " +- " << i.tolerance << ")\n";
  }
  if (mode != "lattice") {
    const auto r = toy::refined_report();
    const auto c = toy::check_refined(r);
    auto j = toy::to_json(r);
    j["check"] = toy::to_json(c);
    doc["reports"].push_back(j);
    pass = pass && c.pass();
    out << "REFINED  mle H1 " << fixed(r.mle_two, 4) << "  mle H2 " << fixed(r.mle_one, 4)
        << "  lr_ml " << fixed(r.lr_ml, 4) << "  int H1 " << fixed(r.int_two.marginal(), 6)
        << "  int H2 " << fixed(r.int_one.marginal(), 6) << "  lr_int " << fixed(r.lr_int, 6) << "\n";
    for (const auto& i : c.items)
      out << "  " << (i.pass ? "ok   " : "MISS ") << i.name << " " << i.computed << " (expected "
          << i.expected << " +- " << i.tolerance << ")\n";
  }
  doc["pass"] = pass;
  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    io::write_text(fs::path(out_dir) / "toy_grid.csv", meta.csv_header("toy grid") + grid.csv(6));
    write_json(fs::path(out_dir) / "toy_report.json", doc);
  }
  if (check && !pass) return kGoldenMiss;
  return kOk;
}

// ---- lr

struct LrConfig {
  double threshold = 50.0;
  ModelConfig model;
  SearchSpec search;
  PriorSpec prior;
  std::string method = "auto";  // auto, quadrature, lattice, importance, monte_carlo
  std::vector<std::vector<double>> axes;
  QuadratureOptions quadrature;
  ImportanceSpec importance;
  std::size_t mc_samples = 20000;
};

LrConfig lr_config(const nlohmann::json& j) {
  LrConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "analytical_threshold" && k != "model" && k != "search" && k != "prior" &&
        k != "integration" && k != "format")
      throw ValidationError("unknown config field '" + k + "'");
  try {
    if (j.contains("analytical_threshold")) c.threshold = j["analytical_threshold"].get<double>();
    if (j.contains("model")) c.model = io::model_config_from_json(j["model"]);
    if (j.contains("search")) c.search = io::search_from_json(j["search"]);
    if (j.contains("prior")) c.prior = io::prior_from_json(j["prior"]);
    if (j.contains("integration")) {
      const auto& g = j["integration"];
      for (const auto& [k, v] : g.items())
        if (k != "method" && k != "axes" && k != "tolerance" && k != "initial_points" && k != "samples")
          throw ValidationError("unknown integration field '" + k + "'");
      if (g.contains("method")) c.method = g["method"].get<std::string>();
      if (g.contains("axes")) c.axes = g["axes"].get<std::vector<std::vector<double>>>();
      if (g.contains("tolerance")) c.quadrature.tolerance = g["tolerance"].get<double>();
      if (g.contains("initial_points")) c.quadrature.initial_points = g["initial_points"].get<std::size_t>();
      if (g.contains("samples")) {
        c.importance.n_samples = g["samples"].get<std::size_t>();
        c.mc_samples = c.importance.n_samples;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.method != "auto" && c.method != "quadrature" && c.method != "lattice" &&
      c.method != "importance" && c.method != "monte_carlo")
    throw ValidationError("integration method must be auto, quadrature, lattice, importance or monte_carlo");
  if (!(c.threshold > 0.0)) throw ValidationError("analytical threshold must be positive");
  return c;
}

/// Grid axes are listed per slot; a hypothesis with fewer contributors uses the leading ones.
std::vector<std::vector<double>> leading(const std::vector<std::vector<double>>& axes, int noc) {
  if (static_cast<int>(axes.size()) < noc)
    throw ValidationError("need a template axis for every contributor");
  return {axes.begin(), axes.begin() + noc};
}

void report_params(std::ostream& out, const char* tag, const MleResult& r) {
  out << "  " << tag << " log10 max L " << io::format_log10(r.log10_max, 6) << "  templates";
  for (double t : r.params.templates) out << ' ' << fixed(t, 2);
  out << "  c2 " << fixed(r.params.variance_c2, 4);
  if (r.params.bw_stutter_prop > 0) out << "  bw " << fixed(r.params.bw_stutter_prop, 4);
  if (r.params.fw_stutter_prop > 0) out << "  fw " << fixed(r.params.fw_stutter_prop, 4);
  if (r.params.degradation_slope != 1.0) out << "  slope " << fixed(r.params.degradation_slope, 4);
  out << "  evaluations " << r.evaluations << (r.converged ? "" : "  (not converged)") << "\n";
}

IntegralResult integrate(const HypothesisLikelihood& h, const LrConfig& c, const MleResult& fit,
                         std::uint64_t seed) {
  std::string method = c.method;
  if (method == "auto")
    method = prior_layout(h, c.prior).dim() <= kMaxQuadratureDim ? "quadrature" : "importance";
  if (method == "quadrature") return marginal_quadrature(h, c.prior, c.quadrature);
  if (method == "lattice") return marginal_lattice(h, c.prior, leading(c.axes, h.noc()));
  if (method == "monte_carlo") return marginal_monte_carlo(h, c.prior, c.mc_samples, seed);
  ImportanceSpec is = c.importance;
  is.seed = seed;
  std::vector<MassParams> seeds = fit.local_optima;
  if (seeds.empty() && !fit.excluded) seeds.push_back(fit.params);
  return marginal_importance(h, c.prior, seeds, is);
}

int cmd_lr(const std::string& profile_path, const std::string& freq_path, const std::string& hp_spec,
           const std::string& hd_spec, const std::string& engine, const std::string& policy_text,
           const std::string& config_path, std::uint64_t seed, const std::string& json_out,
           std::ostream& out) {
  if (engine != "mle" && engine != "int" && engine != "both")
    throw ValidationError("--engine must be mle, int or both");
  const auto config_json = config_path.empty() ? nlohmann::json() : io::read_json(config_path);
  const LrConfig c = lr_config(config_json);
  const auto policy = RareAllelePolicy::parse(policy_text);
  const Profile profile = io::read_profile_csv(profile_path, c.threshold);
  const FrequencyTable table = io::read_frequency_csv(freq_path);
  const Proposition hp = io::parse_proposition(hp_spec, HypothesisLabel::kHp);
  const Proposition hd = io::parse_proposition(hd_spec, HypothesisLabel::kHd);
  const HypothesisLikelihood lhp(profile, hp, table, policy, c.model);
  const HypothesisLikelihood lhd(profile, hd, table, policy, c.model);

  Meta meta;
  meta.seed = seed;
  meta.config_text = config_json.dump() + ";" + policy.str() + ";" + hp_spec + ";" + hd_spec + ";" + engine;
  nlohmann::json doc = meta.json("pgmix.lr/1");
  doc["policy"] = policy.str();
  out << "# pgmix " << kVersion << " lr seed=" << seed << " config_hash=" << meta.hash()
      << " kernels=" << simd::active_kernels().name << "\n";

  SearchSpec s = c.search;
  s.seed = seed;
  auto search_for = [&](int noc) {
    SearchSpec x = s;
    if (x.mode == SearchSpec::Mode::kGrid) x.template_grid = leading(s.template_grid, noc);
    return x;
  };
  MleResult fhp, fhd;
  std::optional<MlLrReport> pair;
  if (hp.noc == hd.noc) {
    SearchSpec x = search_for(hp.noc);
    pair = fit_pair(lhp, lhd, x);
    fhp = pair->numerator;
    fhd = pair->denominator;
  } else {
    fhp = maximize(lhp, search_for(hp.noc));
    SearchSpec x = search_for(hd.noc);
    x.seed = seed ^ 0x5bd1e995;
    fhd = maximize(lhd, x);
  }
  if (engine != "int") {
    const double v = pair ? pair->log10_lr_ml : log10_lr_ml(fhp, fhd);
    out << "MLE  log10 LR " << io::format_log10(v, 6);
    if (std::isfinite(v)) out << "  LR " << std::pow(10.0, v);
    out << "\n";
    report_params(out, "Hp", fhp);
    report_params(out, "Hd", fhd);
    nlohmann::json j{{"log10_lr", io::format_log10(v, 10)},
                     {"Hp", {{"log10_max", io::format_log10(fhp.log10_max, 10)}, {"params", io::to_json(fhp.params)}}},
                     {"Hd", {{"log10_max", io::format_log10(fhd.log10_max, 10)}, {"params", io::to_json(fhd.params)}}}};
    if (pair && pair->log10_lr_bound_low) {
      out << "  bounds [" << io::format_log10(*pair->log10_lr_bound_low, 6) << ", "
          << io::format_log10(*pair->log10_lr_bound_high, 6) << "]\n";
      j["bound_low"] = io::format_log10(*pair->log10_lr_bound_low, 10);
      j["bound_high"] = io::format_log10(*pair->log10_lr_bound_high, 10);
    }
    doc["mle"] = j;
  }
  if (engine != "mle") {
    const auto ihp = integrate(lhp, c, fhp, derive_seed(seed, 11));
    const auto ihd = integrate(lhd, c, fhd, derive_seed(seed, 12));
    const double v = log10_lr_int(ihp, ihd);
    out << "INT  log10 LR " << io::format_log10(v, 6);
    if (std::isfinite(v)) out << "  LR " << std::pow(10.0, v);
    out << "\n";
    for (const auto* r : {&ihp, &ihd})
      out << "  " << (r == &ihp ? "Hp" : "Hd") << " log10 marginal " << io::format_log10(r->log10_marginal, 6)
          << "  " << to_string(r->estimator) << " n=" << r->resolution
          << (r->relative_se > 0 ? "  rel SE " + fixed(r->relative_se, 4) : std::string())
          << (r->converged ? "" : "  (not converged)") << "\n";
    doc["int"] = {{"log10_lr", io::format_log10(v, 10)},
                  {"Hp", {{"log10_marginal", io::format_log10(ihp.log10_marginal, 10)},
                          {"estimator", to_string(ihp.estimator)}, {"relative_se", ihp.relative_se}}},
                  {"Hd", {{"log10_marginal", io::format_log10(ihd.log10_marginal, 10)},
                          {"estimator", to_string(ihd.estimator)}, {"relative_se", ihd.relative_se}}}};
  }
  if (!json_out.empty()) write_json(json_out, doc);
  return kOk;
}

// ---- study

int cmd_study(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
              int threads, std::ostream& out) {
  auto j = config_path.empty() ? nlohmann::json::object() : io::read_json(config_path);
  StudyConfig c = StudyConfig::from_json(j);
  if (seed) c.seed = *seed;
  c.validate();
  Meta meta;
  meta.seed = c.seed;
  meta.config_text = c.to_json().dump();
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_study(c, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto summary = divergence_summary(records);
  prepare_dir(out_dir);
  const fs::path d(out_dir);
  io::write_text(d / "records.csv", meta.csv_header("lr records") + records_csv(records));
  io::write_text(d / "scatter.csv", meta.csv_header("scatter") + scatter_csv(records, derive_seed(c.seed, 77)));
  io::write_text(d / "scatter.svg", scatter_svg(records, derive_seed(c.seed, 77)));
  auto doc = meta.json("pgmix.study/1");
  doc["config"] = c.to_json();
  doc["records"] = records.size();
  doc["summary"] = to_json(summary);
  write_json(d / "summary.json", doc);
  out << "records " << records.size() << " in " << fixed(secs, 1) << " s\n";
  out << "non-donor fraction LR>1: MLE " << fixed(summary.nondonor_fraction_lr_gt_1(EngineKind::kMle), 4)
      << "  INT " << fixed(summary.nondonor_fraction_lr_gt_1(EngineKind::kInt), 4) << "\n";
  if (summary.median_mle_minus_int_nondonor)
    out << "median log10 LR_ML - log10 LR_int (non-donors): " << fixed(*summary.median_mle_minus_int_nondonor, 4)
        << "\n";
  if (summary.median_c2_diff_nondonor)
    out << "median c2_Hp - c2_Hd (non-donors): " << fixed(*summary.median_c2_diff_nondonor, 4)
        << "  max ratio " << fixed(summary.max_c2_ratio_nondonor.value_or(0.0), 3) << "\n";
  return kOk;
}

// ---- calibrate

int cmd_calibrate(const std::string& records_path, double bin_width, const std::string& out_dir,
                  std::optional<std::size_t> total_hp, std::optional<std::size_t> total_ha,
                  const std::string& exclusions, double level, std::ostream& out) {
  CalibrationOptions o;
  o.bin_width = bin_width;
  o.level = level;
  o.total_hp = total_hp;
  o.total_ha = total_ha;
  if (exclusions == "lowest") o.exclusions = ExclusionPolicy::kLowestBin;
  else if (exclusions != "drop") throw ValidationError("--exclusions must be drop or lowest");
  const auto records = io::read_lr_records_csv(records_path);
  const auto tables = calibrate(records, o);
  Meta meta;
  meta.config_text = "calibrate;" + std::to_string(bin_width) + ";" + exclusions + ";" + std::to_string(level) +
                     ";" + std::to_string(total_hp.value_or(0)) + ";" + std::to_string(total_ha.value_or(0));
  prepare_dir(out_dir);
  const fs::path d(out_dir);
  io::write_text(d / "calibration.csv", meta.csv_header("calibration") + calibration_csv(tables));
  io::write_text(d / "calibration_plot.csv", meta.csv_header("calibration plot") + calibration_plot_csv(tables));
  auto doc = meta.json("pgmix.calibration/1");
  doc["systems"] = calibration_verdicts(tables);
  write_json(d / "verdicts.json", doc);
  for (const auto& t : tables)
    out << (t.system.empty() ? "(all)" : t.system) << ": " << t.bins.size() << " bins, " << t.misses
        << " MISS, excluded " << t.excluded_hp << "/" << t.excluded_ha << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pgmix: MLE versus integrated likelihood ratios on a log-normal peak model"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::Range(1, 256));
  app.set_version_flag("--version", kVersion);

  auto* toy = app.add_subcommand("toy", "single-locus toy benchmark");
  std::string toy_mode = "lattice", toy_out;
  bool toy_check = false;
  toy->add_option("--mode", toy_mode, "lattice, refined or both");
  toy->add_option("--out", toy_out, "output directory");
  toy->add_flag("--check", toy_check, "exit 3 when a golden value misses");

  auto* lr = app.add_subcommand("lr", "likelihood ratio for one profile");
  std::string profile, freq, hp, hd, engine = "both", policy = "5over2n", config, json_out;
  std::uint64_t lr_seed = 1;
  lr->add_option("--profile", profile, "peak CSV")->required();
  lr->add_option("--freq", freq, "frequency CSV")->required();
  lr->add_option("--hp", hp, "numerator proposition")->required();
  lr->add_option("--hd", hd, "denominator proposition")->required();
  lr->add_option("--engine", engine, "mle, int or both");
  lr->add_option("--policy", policy, "5over2n, betamean or fixed:<v>");
  lr->add_option("--config", config, "JSON config");
  lr->add_option("--seed", lr_seed);
  lr->add_option("--json", json_out, "also write the report as JSON");

  auto* study = app.add_subcommand("study", "simulated non-donor study");
  std::string study_config, study_out;
  std::optional<std::uint64_t> study_seed;
  study->add_option("--config", study_config, "study JSON");
  study->add_option("--seed", study_seed);
  study->add_option("--out", study_out, "output directory")->required();

  auto* cal = app.add_subcommand("calibrate", "binned calibration of labelled LRs");
  std::string records, cal_out, exclusions = "drop";
  double bin_width = 1.0, level = 0.95;
  std::optional<std::size_t> total_hp, total_ha;
  cal->add_option("--records", records, "CSV with log10_lr,label[,system]")->required();
  cal->add_option("--binwidth", bin_width);
  cal->add_option("--out", cal_out, "output directory")->required();
  cal->add_option("--total-hp", total_hp, "Hp-true total for the prior odds");
  cal->add_option("--total-ha", total_ha, "Ha-true total for the prior odds");
  cal->add_option("--exclusions", exclusions, "drop or lowest");
  cal->add_option("--level", level, "interval level");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }
  try {
    if (*toy) return cmd_toy(toy_mode, toy_out, toy_check, out);
    if (*lr) return cmd_lr(profile, freq, hp, hd, engine, policy, config, lr_seed, json_out, out);
    if (*study) return cmd_study(study_config, study_seed, study_out, threads, out);
    if (*cal) return cmd_calibrate(records, bin_width, cal_out, total_hp, total_ha, exclusions, level, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const ContractError& e) {
    err << "invalid request: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace pgmix::cli
