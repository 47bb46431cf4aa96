#include "pgmix/allele.hpp"

#include <charconv>
#include <cmath>

#include "pgmix/error.hpp"

namespace pgmix {

AlleleLabel::AlleleLabel(std::string label) : label_(std::move(label)) {
  if (label_.empty()) throw ValidationError("allele label must be non-empty");
}

namespace {

// Parses "<int>" or "<int>.<int>" strictly; anything else is non-numeric.
bool parse_repeat(const std::string& s, long& whole, std::string& fraction) {
  const auto dot = s.find('.');
  const std::string head = s.substr(0, dot);
  if (head.empty()) return false;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), whole);
  if (ec != std::errc{} || ptr != head.data() + head.size()) return false;
  fraction.clear();
  if (dot != std::string::npos) {
    fraction = s.substr(dot + 1);
    if (fraction.empty()) return false;
    for (char c : fraction)
      if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

std::optional<double> AlleleLabel::repeat_value() const {
  long whole = 0;
  std::string fraction;
  if (!parse_repeat(label_, whole, fraction)) return std::nullopt;
  double v = static_cast<double>(whole);
  if (!fraction.empty()) v += std::stod("0." + fraction);
  return v;
}

std::optional<AlleleLabel> AlleleLabel::shifted(int delta) const {
  long whole = 0;
  std::string fraction;
  if (!parse_repeat(label_, whole, fraction)) return std::nullopt;
  const long next = whole + delta;
  if (next < 1) return std::nullopt;
  std::string out = std::to_string(next);
  if (!fraction.empty()) out += "." + fraction;
  return AlleleLabel{std::move(out)};
}

}  // namespace pgmix
