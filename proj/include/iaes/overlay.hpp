// Parsed (unbound) second-order definitions: red flags, risk entries,
// valuation categories. Binding against compiled graphs lives in metalayer.
#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace iaes {

/// `kb_id.attribute` reference into a knowledge base.
struct QualifiedRef {
  std::string kb;
  std::string attribute;
  std::size_t line = 0;
  std::size_t column = 0;

  [[nodiscard]] std::string str() const { return kb + "." + attribute; }

  friend bool operator==(const QualifiedRef& a, const QualifiedRef& b) {
    return a.kb == b.kb && a.attribute == b.attribute;
  }
};

enum class Severity { info, warning, critical };
enum class Comparator { eq, ge, le };

const char* to_string(Severity severity) noexcept;
const char* to_string(Comparator op) noexcept;

struct FlagTerm {
  QualifiedRef ref;
  Comparator op = Comparator::eq;
  std::string level;

  bool operator==(const FlagTerm&) const = default;
};

struct RedFlagDef {
  std::string id;
  Severity severity = Severity::info;
  std::vector<FlagTerm> terms;  // conjunction
  std::string message;
  std::size_t line = 0;

  friend bool operator==(const RedFlagDef& a, const RedFlagDef& b) {
    return a.id == b.id && a.severity == b.severity && a.terms == b.terms && a.message == b.message;
  }
};

/// level -> number, in source order.
using LevelMap = std::vector<std::pair<std::string, double>>;

struct RiskEntryDef {
  QualifiedRef ref;
  double weight = 1.0;
  LevelMap severities;

  bool operator==(const RiskEntryDef&) const = default;
};

struct ValuationDriverDef {
  QualifiedRef ref;
  LevelMap multipliers;

  bool operator==(const ValuationDriverDef&) const = default;
};

struct ValuationCategoryDef {
  std::string name;
  double base = 1.0;
  std::vector<ValuationDriverDef> drivers;
  std::size_t line = 0;

  friend bool operator==(const ValuationCategoryDef& a, const ValuationCategoryDef& b) {
    return a.name == b.name && a.base == b.base && a.drivers == b.drivers;
  }
};

struct OverlaySpec {
  std::string name;
  std::vector<RedFlagDef> red_flags;
  std::vector<RiskEntryDef> risk_entries;
  std::vector<ValuationCategoryDef> valuation_categories;

  bool operator==(const OverlaySpec&) const = default;
};

}  // namespace iaes
