// Red flags, risk scores and relative valuation over evaluation results of
// one or more knowledge bases.
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iaes/compiler.hpp"
#include "iaes/engine.hpp"
#include "iaes/overlay.hpp"

namespace iaes {

namespace diag {
inline constexpr std::string_view kUnknownKb = "unknown-kb";
inline constexpr std::string_view kUnknownAttribute = "unknown-attribute";
inline constexpr std::string_view kUnknownLevel = "unknown-level";
inline constexpr std::string_view kIncompleteMap = "incomplete-map";
inline constexpr std::string_view kBadNumber = "bad-number";
inline constexpr std::string_view kDuplicate = "duplicate";
inline constexpr std::string_view kUnsatisfiableFlag = "unsatisfiable-flag";
}  // namespace diag

/// A qualified reference resolved against a compiled graph.
struct BoundRef {
  std::string kb;
  std::string name;
  std::uint32_t attribute = 0;      // index in the graph
  std::vector<std::string> levels;  // the attribute's scale, in order

  [[nodiscard]] std::string str() const { return kb + "." + name; }
  bool operator==(const BoundRef&) const = default;
};

struct BoundTerm {
  BoundRef ref;
  Comparator op = Comparator::eq;
  std::uint32_t level = 0;

  bool operator==(const BoundTerm&) const = default;
};

struct BoundFlag {
  std::string id;
  Severity severity = Severity::info;
  std::vector<BoundTerm> terms;
  std::string message;

  bool operator==(const BoundFlag&) const = default;
};

struct BoundRiskEntry {
  BoundRef ref;
  double weight = 1.0;
  std::vector<double> severities;  // by level index

  bool operator==(const BoundRiskEntry&) const = default;
};

struct BoundDriver {
  BoundRef ref;
  std::vector<double> multipliers;  // by level index

  bool operator==(const BoundDriver&) const = default;
};

struct BoundCategory {
  std::string name;
  double base = 1.0;
  std::vector<BoundDriver> drivers;

  bool operator==(const BoundCategory&) const = default;
};

/// Overlay with every reference resolved and every map made total.
struct BoundOverlay {
  std::string name;
  std::vector<BoundFlag> flags;
  std::vector<BoundRiskEntry> risk_entries;
  std::vector<BoundCategory> categories;

  bool operator==(const BoundOverlay&) const = default;
};

struct BindResult {
  std::optional<BoundOverlay> value;  // set iff no diagnostic is an error
  std::vector<Diagnostic> diagnostics;

  [[nodiscard]] bool ok() const noexcept { return value.has_value(); }
};

BindResult bind_overlay(const OverlaySpec& spec, std::span<const CompiledGraph> graphs);

/// kb id -> evaluation of that kb's graph. A missing kb reads as all-unknown.
using ResultSet = std::map<std::string, EvaluationResult, std::less<>>;

/// Status of a bound reference within a result set.
Status status_of(const ResultSet& results, const BoundRef& ref);

enum class Truth { yes, no, unknown };
enum class FlagState { triggered, potential, clear };

const char* to_string(Truth truth) noexcept;
const char* to_string(FlagState state) noexcept;

Truth term_truth(const BoundTerm& term, const Status& status);

struct RedFlagStatus {
  std::string id;
  Severity severity = Severity::info;
  std::string message;
  FlagState state = FlagState::potential;
  std::vector<Truth> terms;

  bool operator==(const RedFlagStatus&) const = default;
};

std::vector<RedFlagStatus> detect_red_flags(const BoundOverlay& bound, const ResultSet& results);

struct RiskContribution {
  std::string ref;  // kb.attr
  std::string level;
  double weight = 0;
  double severity = 0;

  bool operator==(const RiskContribution&) const = default;
};

struct RiskReport {
  std::optional<double> score;  // 0..100, nullopt when no entry resolved
  double coverage = 0;          // resolved entries / entries; 0 without entries
  std::vector<RiskContribution> contributions;

  bool operator==(const RiskReport&) const = default;
};

RiskReport risk_score(const BoundOverlay& bound, const ResultSet& results);

struct CategoryValue {
  std::string name;
  double raw = 0;
  double share = 0;
  double confidence = 1;  // resolved drivers / drivers; 1 for a category with no drivers

  bool operator==(const CategoryValue&) const = default;
};

struct ValuationReport {
  std::vector<CategoryValue> categories;

  bool operator==(const ValuationReport&) const = default;
};

ValuationReport compute_valuation(const BoundOverlay& bound, const ResultSet& results);

}  // namespace iaes
