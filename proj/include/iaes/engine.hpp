// Three-valued evaluation of compiled graphs, explanation trees and question
// ranking.
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iaes/compiler.hpp"

namespace iaes {

/// Input attribute name -> level name. Absent keys are unanswered.
using Assignment = std::map<std::string, std::string, std::less<>>;

/// Resolved level index, or nullopt for unknown.
using Status = std::optional<std::uint32_t>;

class EvaluationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Why a derived attribute resolved: the fired row (0-based, the default row
/// included) and the child statuses it was matched against.
struct TraceEntry {
  std::uint32_t row = 0;
  std::vector<Status> children;

  bool operator==(const TraceEntry&) const = default;
};

struct EvaluationResult {
  std::vector<Status> values;                   // indexed like graph.attributes()
  std::vector<std::optional<TraceEntry>> trace;  // set for resolved derived attributes
  std::chrono::system_clock::time_point evaluated_at;

  [[nodiscard]] bool resolved(std::uint32_t attribute) const { return values.at(attribute).has_value(); }

  /// Equality of values and traces; the timestamp is not compared.
  [[nodiscard]] bool same_outcome(const EvaluationResult& other) const {
    return values == other.values && trace == other.trace;
  }
};

enum class RowMatch { matches, fails, undetermined };

/// Definite-match / definite-fail test of one row against child statuses.
RowMatch match_row(const CompiledAttribute& attribute, const CompiledRow& row, std::span<const Status> children);

/// Converts named answers to per-attribute statuses (inputs only).
/// Throws EvaluationError on an unknown input or a level outside its scale.
std::vector<Status> bind_answers(const CompiledGraph& graph, const Assignment& answers);

EvaluationResult evaluate(const CompiledGraph& graph, const Assignment& answers);

/// Same as evaluate() with answers already bound; `inputs` is indexed like
/// graph.attributes() and only input positions are read.
EvaluationResult evaluate_bound(const CompiledGraph& graph, std::span<const Status> inputs);

struct ExplanationNode {
  std::string attribute;
  std::optional<std::string> level;  // nullopt when unknown
  bool derived = false;
  std::size_t fired_row = 0;         // 1-based; 0 when nothing fired
  std::string fired_rule;            // e.g. "(low, *) -> low"
  std::vector<ExplanationNode> children;
};

/// Throws EvaluationError for an unknown attribute name.
ExplanationNode explain(const EvaluationResult& result, const CompiledGraph& graph, std::string_view attribute);

struct QuestionScore {
  std::uint32_t input = 0;
  std::size_t score = 0;  // unknown derived attributes this input feeds
};

/// All unanswered inputs with a positive score, best first. Empty once the
/// goal is resolved.
std::vector<QuestionScore> rank_questions(const CompiledGraph& graph, const EvaluationResult& result);

std::vector<std::string> next_questions(const CompiledGraph& graph, const Assignment& answers, std::size_t k);

}  // namespace iaes
