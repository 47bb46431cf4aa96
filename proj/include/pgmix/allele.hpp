#pragma once

#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace pgmix {

/// Allele designator such as "12", "13.2" or "A".
///
/// The label "Q" is reserved for the aggregate of all alleles not explicitly
/// enumerated at a locus. It may appear in genotype hypotheses but never in an
/// observed profile.
class AlleleLabel {
 public:
  static constexpr std::string_view kAggregate = "Q";

  AlleleLabel() = default;
  explicit AlleleLabel(std::string label);

  static AlleleLabel aggregate() { return AlleleLabel{std::string(kAggregate)}; }

  const std::string& str() const noexcept { return label_; }
  bool is_aggregate() const noexcept { return label_ == kAggregate; }

  /// Numeric repeat value ("13.2" -> 13.2); nullopt for non-numeric labels.
  std::optional<double> repeat_value() const;

  /// Label shifted by `delta` repeat units ("12" + -1 -> "11", "13.2" + 1 -> "14.2").
  /// nullopt for non-numeric labels and for shifts that would go below 1.
  std::optional<AlleleLabel> shifted(int delta) const;

  friend bool operator==(const AlleleLabel&, const AlleleLabel&) = default;
  friend std::strong_ordering operator<=>(const AlleleLabel& a, const AlleleLabel& b) {
    return a.label_ <=> b.label_;
  }

 private:
  std::string label_;
};

}  // namespace pgmix

template <>
struct std::hash<pgmix::AlleleLabel> {
  std::size_t operator()(const pgmix::AlleleLabel& a) const noexcept {
    return std::hash<std::string>{}(a.str());
  }
};
