// Semantic validation, compilation to an executable inference graph,
// flattening and structural statistics.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iaes/kbdl.hpp"

namespace iaes {

enum class DiagnosticSeverity { error, warning };

struct Diagnostic {
  DiagnosticSeverity severity = DiagnosticSeverity::error;
  std::string code;
  std::string message;
  std::string attribute;         // empty when not attribute-specific
  std::size_t row_number = 0;    // 1-based rule row, 0 when not row-specific
  SourceLoc loc;

  [[nodiscard]] bool is_error() const noexcept { return severity == DiagnosticSeverity::error; }
};

std::string to_string(const Diagnostic& d);
[[nodiscard]] bool has_errors(const std::vector<Diagnostic>& diagnostics);

// Diagnostic codes emitted by validate().
namespace diag {
inline constexpr std::string_view kUndeclaredChild = "undeclared-child";
inline constexpr std::string_view kCycle = "dependency-cycle";
inline constexpr std::string_view kNotExhaustive = "not-exhaustive";
inline constexpr std::string_view kUnreachableRow = "unreachable-row";
inline constexpr std::string_view kUnreachableDefault = "unreachable-default";
inline constexpr std::string_view kUnreachableAttribute = "unreachable-attribute";
inline constexpr std::string_view kMalformed = "malformed";
}  // namespace diag

/// Structural checks on a parsed knowledge base. An empty result means the KB
/// compiles cleanly; warnings never block compilation.
std::vector<Diagnostic> validate(const KnowledgeBase& kb);

/// Scales are limited to 64 levels so a pattern fits in one bitmask.
inline constexpr std::size_t kMaxScaleLevels = 64;

using LevelMask = std::uint64_t;

struct CompiledRow {
  std::vector<LevelMask> masks;  // one per child; a full mask acts as a wildcard
  std::uint32_t output = 0;
  bool is_default = false;
  std::string text;              // source form, e.g. "(low, *) -> low"

  bool operator==(const CompiledRow&) const = default;
};

struct CompiledAttribute {
  std::string name;
  Scale scale;
  AttributeKind kind = AttributeKind::input;
  std::string question;
  std::vector<std::string> help;
  std::vector<std::uint32_t> children;  // attribute indices
  std::vector<LevelMask> child_full_masks;  // all levels of each child's scale
  std::vector<CompiledRow> rows;        // default, if any, is the last row
  std::vector<std::uint32_t> input_ancestry;  // sorted input indices feeding this attribute
  std::uint32_t depth = 0;              // 0 for inputs

  [[nodiscard]] bool is_input() const noexcept { return kind == AttributeKind::input; }
  [[nodiscard]] LevelMask full_mask() const noexcept;
};

class CompileError : public std::runtime_error {
 public:
  explicit CompileError(std::vector<Diagnostic> diagnostics);
  [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Immutable executable form of a knowledge base. Built only by compile().
class CompiledGraph {
 public:
  [[nodiscard]] const std::string& kb_id() const noexcept { return kb_id_; }
  [[nodiscard]] std::int64_t version() const noexcept { return version_; }
  [[nodiscard]] const std::vector<CompiledAttribute>& attributes() const noexcept { return attributes_; }
  [[nodiscard]] const CompiledAttribute& attribute(std::uint32_t index) const { return attributes_.at(index); }
  /// Derived attribute indices in evaluation order.
  [[nodiscard]] const std::vector<std::uint32_t>& topo_order() const noexcept { return topo_order_; }
  /// Input attribute indices in declaration order.
  [[nodiscard]] const std::vector<std::uint32_t>& inputs() const noexcept { return inputs_; }
  [[nodiscard]] std::uint32_t goal() const noexcept { return goal_; }
  [[nodiscard]] std::optional<std::uint32_t> find(std::string_view name) const;
  [[nodiscard]] std::size_t size() const noexcept { return attributes_.size(); }

  bool operator==(const CompiledGraph& other) const;

 private:
  friend CompiledGraph compile(const KnowledgeBase& kb);

  std::string kb_id_;
  std::int64_t version_ = 0;
  std::vector<CompiledAttribute> attributes_;
  std::vector<std::uint32_t> topo_order_;
  std::vector<std::uint32_t> inputs_;
  std::uint32_t goal_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Throws CompileError when validate() reports errors.
CompiledGraph compile(const KnowledgeBase& kb);

inline constexpr std::uint64_t kFlattenLimit = 1'000'000;

class FlattenTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complete single-level mapping from goal input tuples to goal levels.
/// Rows are in lexicographic tuple order, first input varying slowest.
struct FlatRuleList {
  std::string goal;
  std::vector<std::string> inputs;
  std::vector<Scale> input_scales;
  std::vector<std::uint32_t> outputs;  // goal level index per tuple
  Scale goal_scale;

  [[nodiscard]] std::size_t size() const noexcept { return outputs.size(); }
  /// Row index for a tuple of level indices (one per input).
  [[nodiscard]] std::size_t row_of(const std::vector<std::uint32_t>& tuple) const;
  std::string to_csv() const;
};

/// Throws FlattenTooLarge above kFlattenLimit tuples.
FlatRuleList flatten(const CompiledGraph& graph, std::uint64_t limit = kFlattenLimit);

struct KbStats {
  std::size_t attribute_count = 0;
  std::size_t input_count = 0;
  std::size_t derived_count = 0;
  std::size_t hierarchical_rule_count = 0;  // rows incl. defaults
  std::uint64_t flat_tuple_count = 0;       // saturates at UINT64_MAX
  double flat_tuple_log10 = 0.0;
  std::size_t max_depth = 0;
};

KbStats kb_stats(const KnowledgeBase& kb);
KbStats kb_stats(const CompiledGraph& graph);

}  // namespace iaes
