#include "pgmix/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pgmix/error.hpp"

namespace pgmix::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double to_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not a number for " + what + ": '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not a number for " + what + ": '" + s + "'");
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Genotype parse_pair(const std::string& text, const std::string& where) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw ValidationError("genotype '" + text + "' at " + where + " needs a/b");
  return Genotype(AlleleLabel(trim(text.substr(0, slash))), AlleleLabel(trim(text.substr(slash + 1))));
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quote in CSV line");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (lower(header[i]) == lower(name)) return i;
  throw ValidationError("missing CSV column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header)
    if (lower(h) == lower(name)) return true;
  return false;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    const std::string s = trim(line);
    if (s.empty() || (s[0] == '#' && first)) continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() < t.header.size()) cells.resize(t.header.size());
    t.rows.push_back(std::move(cells));
  }
  if (first) throw ValidationError("CSV has no header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(slurp(path)); }

Profile parse_profile_csv(const std::string& text, double analytical_threshold) {
  const CsvTable t = parse_csv(text);
  const auto cl = t.column("locus"), ca = t.column("allele"), ch = t.column("height");
  const bool has_size = t.has_column("size");
  const auto cs = has_size ? t.column("size") : 0;
  std::vector<LocusPeaks> loci;
  for (const auto& r : t.rows) {
    const std::string name = r[cl];
    if (name.empty()) throw ValidationError("empty locus name in profile");
    auto it = std::find_if(loci.begin(), loci.end(), [&](const LocusPeaks& l) { return l.name == name; });
    if (it == loci.end()) {
      loci.push_back({name, {}});
      it = std::prev(loci.end());
    }
    Peak p{AlleleLabel(r[ca]), to_number(r[ch], "height"), std::nullopt};
    if (has_size && !r[cs].empty()) p.size = to_number(r[cs], "size");
    it->peaks.push_back(std::move(p));
  }
  return Profile(std::move(loci), analytical_threshold);
}

Profile read_profile_csv(const std::filesystem::path& path, double analytical_threshold) {
  return parse_profile_csv(slurp(path), analytical_threshold);
}

FrequencyTable parse_frequency_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  const auto cl = t.column("locus"), ca = t.column("allele"), cf = t.column("frequency");
  std::map<std::string, std::map<AlleleLabel, double>> freqs;
  std::map<std::string, int> k;
  std::optional<int> n;
  for (const auto& r : t.rows) {
    if (r[ca] == "#N") {
      n = static_cast<int>(to_number(r[cf], "N"));
    } else if (r[ca] == "#k") {
      k[r[cl]] = static_cast<int>(to_number(r[cf], "k"));
    } else {
      auto& m = freqs[r[cl]];
      const AlleleLabel a(r[ca]);
      if (m.count(a)) throw ValidationError("duplicate allele " + a.str() + " at " + r[cl]);
      m[a] = to_number(r[cf], "frequency");
    }
  }
  if (!n) throw ValidationError("frequency table lacks the '*,#N,<N>' row");
  return FrequencyTable(std::move(freqs), *n, std::move(k));
}

FrequencyTable read_frequency_csv(const std::filesystem::path& path) {
  return parse_frequency_csv(slurp(path));
}

MultiLocusGenotype read_genotype_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto cl = t.column("locus"), c1 = t.column("allele1"), c2 = t.column("allele2");
  MultiLocusGenotype g;
  for (const auto& r : t.rows) {
    if (g.count(r[cl])) throw ValidationError("duplicate locus " + r[cl] + " in genotype file");
    g[r[cl]] = Genotype(AlleleLabel(r[c1]), AlleleLabel(r[c2]));
  }
  return g;
}

MultiLocusGenotype parse_inline_genotype(const std::string& text) {
  MultiLocusGenotype g;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("genotype entry '" + item + "' needs locus:a/b");
    const std::string locus = trim(item.substr(0, colon));
    if (g.count(locus)) throw ValidationError("duplicate locus " + locus + " in genotype");
    g[locus] = parse_pair(item.substr(colon + 1), locus);
  }
  if (g.empty()) throw ValidationError("empty genotype");
  return g;
}

Proposition parse_proposition(const std::string& spec, HypothesisLabel label) {
  Proposition p;
  p.label = label;
  bool have_noc = false;
  std::istringstream is(spec);
  std::string part;
  while (std::getline(is, part, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ValidationError("proposition item '" + part + "' needs key=value");
    const std::string key = trim(part.substr(0, eq)), value = trim(part.substr(eq + 1));
    if (key == "noc") {
      p.noc = static_cast<int>(to_number(value, "noc"));
      have_noc = true;
    } else {
      const int slot = static_cast<int>(to_number(key, "contributor slot"));
      if (p.fixed_contributors.count(slot)) throw ValidationError("slot fixed twice");
      p.fixed_contributors[slot] =
          !value.empty() && value[0] == '@' ? read_genotype_csv(value.substr(1)) : parse_inline_genotype(value);
    }
  }
  if (!have_noc) throw ValidationError("proposition needs noc=<n>");
  p.validate();
  return p;
}

std::vector<LabelledLr> parse_lr_records_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  const auto cv = t.column("log10_lr"), cl = t.column("label");
  const bool has_sys = t.has_column("system");
  const auto cs = has_sys ? t.column("system") : 0;
  std::vector<LabelledLr> out;
  for (const auto& r : t.rows) {
    LabelledLr x;
    x.log10_lr = r[cv] == "EXCLUSION" ? -std::numeric_limits<double>::infinity() : to_number(r[cv], "log10_lr");
    const std::string lab = r[cl];
    if (lab == "HP") x.hp_true = true;
    else if (lab == "HA" || lab == "HD") x.hp_true = false;
    else throw ValidationError("label must be HP or HA, got '" + lab + "'");
    if (has_sys) x.system = r[cs];
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<LabelledLr> read_lr_records_csv(const std::filesystem::path& path) {
  return parse_lr_records_csv(slurp(path));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

template <class T>
void get(const nlohmann::json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ValidationError(std::string("unknown field '") + k + "' in " + where);
  }
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"back_stutter", "forward_stutter", "degradation", "locus_multipliers",
                     "split_stutter_variance", "repeat_bp", "nominal_sizes"},
                 "model");
  ModelConfig c;
  get(j, "back_stutter", c.back_stutter);
  get(j, "forward_stutter", c.forward_stutter);
  get(j, "degradation", c.degradation);
  get(j, "locus_multipliers", c.locus_multipliers);
  get(j, "split_stutter_variance", c.split_stutter_variance);
  get(j, "repeat_bp", c.repeat_bp);
  get(j, "nominal_sizes", c.nominal_sizes);
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"back_stutter", c.back_stutter},
          {"forward_stutter", c.forward_stutter},
          {"degradation", c.degradation},
          {"locus_multipliers", c.locus_multipliers},
          {"split_stutter_variance", c.split_stutter_variance},
          {"repeat_bp", c.repeat_bp},
          {"nominal_sizes", c.nominal_sizes}};
}

SearchSpec search_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"mode", "n_starts", "max_iterations", "tolerance", "initial_step", "fixed_c2",
                     "template_grid"},
                 "search");
  SearchSpec s;
  std::string mode = "continuous";
  get(j, "mode", mode);
  if (mode == "grid") s.mode = SearchSpec::Mode::kGrid;
  else if (mode != "continuous") throw ValidationError("search mode must be continuous or grid");
  get(j, "n_starts", s.n_starts);
  get(j, "max_iterations", s.simplex.max_iterations);
  get(j, "tolerance", s.simplex.tolerance);
  get(j, "initial_step", s.simplex.initial_step);
  if (j.contains("fixed_c2") && !j["fixed_c2"].is_null()) s.fixed_c2 = j["fixed_c2"].get<double>();
  get(j, "template_grid", s.template_grid);
  if (s.mode == SearchSpec::Mode::kGrid && s.template_grid.empty())
    throw ValidationError("grid search needs template_grid");
  if (s.n_starts < 1) throw ValidationError("n_starts must be >= 1");
  return s;
}

PriorSpec prior_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"template_lo", "template_hi", "fixed_c2", "c2_lo", "c2_hi", "stutter_lo",
                     "stutter_hi", "slope_lo", "slope_hi", "multiplier_lo", "multiplier_hi"},
                 "prior");
  PriorSpec p;
  get(j, "template_lo", p.template_lo);
  get(j, "template_hi", p.template_hi);
  if (j.contains("fixed_c2") && !j["fixed_c2"].is_null()) p.fixed_c2 = j["fixed_c2"].get<double>();
  get(j, "c2_lo", p.c2_lo);
  get(j, "c2_hi", p.c2_hi);
  get(j, "stutter_lo", p.stutter_lo);
  get(j, "stutter_hi", p.stutter_hi);
  get(j, "slope_lo", p.slope_lo);
  get(j, "slope_hi", p.slope_hi);
  get(j, "multiplier_lo", p.multiplier_lo);
  get(j, "multiplier_hi", p.multiplier_hi);
  p.validate();
  return p;
}

nlohmann::json to_json(const PriorSpec& p) {
  nlohmann::json j{{"template_lo", p.template_lo}, {"template_hi", p.template_hi},
                   {"stutter_lo", p.stutter_lo},   {"stutter_hi", p.stutter_hi},
                   {"slope_lo", p.slope_lo},       {"slope_hi", p.slope_hi},
                   {"multiplier_lo", p.multiplier_lo}, {"multiplier_hi", p.multiplier_hi}};
  if (p.fixed_c2) {
    j["fixed_c2"] = *p.fixed_c2;
  } else {
    j["c2_lo"] = p.c2_lo;
    j["c2_hi"] = p.c2_hi;
  }
  return j;
}

nlohmann::json to_json(const MassParams& p) {
  nlohmann::json j{{"templates", p.templates},
                   {"mixture_proportions", p.mixture_proportions()},
                   {"total_template", p.total_template()},
                   {"variance_c2", p.variance_c2},
                   {"degradation_slope", p.degradation_slope},
                   {"bw_stutter_prop", p.bw_stutter_prop},
                   {"fw_stutter_prop", p.fw_stutter_prop}};
  if (p.variance_c2_stutter) j["variance_c2_stutter"] = *p.variance_c2_stutter;
  if (!p.locus_multipliers.empty()) j["locus_multipliers"] = p.locus_multipliers;
  return j;
}

std::string format_log10(double v, int precision) {
  if (v == -std::numeric_limits<double>::infinity()) return "EXCLUSION";
  if (v == std::numeric_limits<double>::infinity()) return "INF";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace pgmix::io
