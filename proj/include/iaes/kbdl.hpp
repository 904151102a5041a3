// Knowledge Base Definition Language: model types, parser and serializer.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iaes/overlay.hpp"

namespace iaes {

/// 1-based position inside a source text. A zero line means "not from source".
struct SourceLoc {
  std::size_t line = 0;
  std::size_t column = 0;
};

struct ParseError {
  SourceLoc loc;
  std::string message;
};

std::string to_string(const ParseError& error);

/// Either a value or at least one error, never both.
template <typename T>
struct ParseResult {
  std::optional<T> value;
  std::vector<ParseError> errors;

  [[nodiscard]] bool ok() const noexcept { return value.has_value(); }
};

/// Ordered enumeration of qualitative levels, lowest first.
struct Scale {
  std::string name;
  std::vector<std::string> levels;

  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view level) const;
  [[nodiscard]] std::size_t size() const noexcept { return levels.size(); }

  bool operator==(const Scale&) const = default;
};

enum class AttributeKind { input, derived };

/// One pattern position of a rule row. No levels means wildcard.
struct Pattern {
  std::vector<std::string> levels;

  [[nodiscard]] bool is_wildcard() const noexcept { return levels.empty(); }
  [[nodiscard]] static Pattern wildcard() { return {}; }

  bool operator==(const Pattern&) const = default;
};

struct RuleRow {
  std::vector<Pattern> patterns;
  std::string output;
  SourceLoc loc;

  // Source locations are not part of the model identity.
  friend bool operator==(const RuleRow& a, const RuleRow& b) {
    return a.patterns == b.patterns && a.output == b.output;
  }
};

/// One production-rule table. Rows fire first-match; `default_output` acts as
/// a final all-wildcard row.
struct RuleBlock {
  std::vector<std::string> children;
  std::vector<RuleRow> rows;
  std::optional<std::string> default_output;
  SourceLoc default_loc;

  friend bool operator==(const RuleBlock& a, const RuleBlock& b) {
    return a.children == b.children && a.rows == b.rows && a.default_output == b.default_output;
  }
};

/// Maximum number of texts in a help drill-down chain.
inline constexpr std::size_t kMaxHelpDepth = 5;

struct Attribute {
  std::string name;
  std::string scale;
  AttributeKind kind = AttributeKind::input;
  std::string question;           // inputs only
  std::vector<std::string> help;  // drill-down chain, outermost first
  std::optional<RuleBlock> rules; // derived only
  SourceLoc loc;

  [[nodiscard]] bool is_input() const noexcept { return kind == AttributeKind::input; }

  friend bool operator==(const Attribute& a, const Attribute& b) {
    return a.name == b.name && a.scale == b.scale && a.kind == b.kind && a.question == b.question &&
           a.help == b.help && a.rules == b.rules;
  }
};

struct KnowledgeBase {
  std::string id;
  std::int64_t version = 0;
  std::vector<Scale> scales;
  std::vector<Attribute> attributes;
  std::string goal;
  SourceLoc goal_loc;

  [[nodiscard]] const Scale* find_scale(std::string_view name) const;
  [[nodiscard]] const Attribute* find_attribute(std::string_view name) const;
  /// Scale of a declared attribute, or nullptr when either is missing.
  [[nodiscard]] const Scale* scale_of(std::string_view attribute) const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.id == b.id && a.version == b.version && a.scales == b.scales &&
           a.attributes == b.attributes && a.goal == b.goal;
  }
};

[[nodiscard]] bool is_identifier(std::string_view text);

ParseResult<KnowledgeBase> parse_kb(std::string_view source);
ParseResult<OverlaySpec> parse_overlay(std::string_view source);

/// Canonical KBDL text. parse_kb(serialize_kb(kb)) reproduces kb.
std::string serialize_kb(const KnowledgeBase& kb);

/// `rules (a, b) { ... }` fragment at the given indentation.
std::string serialize_rule_block(const RuleBlock& block, std::string_view indent = "");

/// Canonical overlay text; numbers use the shortest round-tripping form.
std::string serialize_overlay(const OverlaySpec& spec);

std::string quote_string(std::string_view text);

}  // namespace iaes
