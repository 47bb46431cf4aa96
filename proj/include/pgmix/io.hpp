#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgmix/calibration.hpp"
#include "pgmix/genotype_space.hpp"
#include "pgmix/integration_engine.hpp"
#include "pgmix/mle_engine.hpp"
#include "pgmix/profile_model.hpp"

namespace pgmix::io {

/// Splits one CSV line; handles double quotes, trims unquoted whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads all non-empty, non-comment ('#') lines; first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;  // throws when absent
  bool has_column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

/// Columns locus, allele, height, size (size optional). Locus order is the
/// order of first appearance.
Profile read_profile_csv(const std::filesystem::path& path, double analytical_threshold);
Profile parse_profile_csv(const std::string& text, double analytical_threshold);

/// Columns locus, allele, frequency. Pseudo-rows carry the database size and
/// allele-class counts: "*,#N,<N>" and "<locus>,#k,<k>".
FrequencyTable read_frequency_csv(const std::filesystem::path& path);
FrequencyTable parse_frequency_csv(const std::string& text);

/// Columns locus, allele1, allele2.
MultiLocusGenotype read_genotype_csv(const std::filesystem::path& path);

/// "noc=<n>[;<slot>=<genotype>]..." where a genotype is "@file.csv" or inline
/// "L1:a/b,L2:c/d".
Proposition parse_proposition(const std::string& spec, HypothesisLabel label);
MultiLocusGenotype parse_inline_genotype(const std::string& text);

/// Columns log10_lr (number or EXCLUSION), label (HP|HA), optional system.
std::vector<LabelledLr> read_lr_records_csv(const std::filesystem::path& path);
std::vector<LabelledLr> parse_lr_records_csv(const std::string& text);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& c);
SearchSpec search_from_json(const nlohmann::json& j);
PriorSpec prior_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PriorSpec& p);
nlohmann::json to_json(const MassParams& p);

/// Formats a log10 LR, writing EXCLUSION for -inf.
std::string format_log10(double v, int precision = 6);

}  // namespace pgmix::io
