#include "iaes/engine.hpp"

#include <algorithm>

namespace iaes {

RowMatch match_row(const CompiledAttribute& attribute, const CompiledRow& row, std::span<const Status> children) {
  bool undetermined = false;
  for (std::size_t c = 0; c < row.masks.size(); ++c) {
    const LevelMask mask = row.masks[c];
    if (const Status& child = children[c]) {
      if (((mask >> *child) & 1U) == 0) return RowMatch::fails;
    } else if (mask != attribute.child_full_masks[c]) {
      // A pattern listing every level is as good as a wildcard.
      undetermined = true;
    }
  }
  return undetermined ? RowMatch::undetermined : RowMatch::matches;
}

std::vector<Status> bind_answers(const CompiledGraph& graph, const Assignment& answers) {
  std::vector<Status> statuses(graph.size());
  for (const auto& [name, level] : answers) {
    const auto index = graph.find(name);
    if (!index) throw EvaluationError("unknown input '" + name + "' in knowledge base '" + graph.kb_id() + "'");
    const CompiledAttribute& attr = graph.attribute(*index);
    if (!attr.is_input()) throw EvaluationError("'" + name + "' is derived and cannot be answered");
    const auto pos = attr.scale.index_of(level);
    if (!pos) throw EvaluationError(level + " not in scale " + attr.scale.name + " (attribute '" + name + "')");
    statuses[*index] = static_cast<std::uint32_t>(*pos);
  }
  return statuses;
}

EvaluationResult evaluate_bound(const CompiledGraph& graph, std::span<const Status> inputs) {
  EvaluationResult result;
  result.evaluated_at = std::chrono::system_clock::now();
  result.values.resize(graph.size());
  result.trace.resize(graph.size());
  for (auto i : graph.inputs()) result.values[i] = inputs[i];

  std::vector<Status> children;
  for (auto a : graph.topo_order()) {
    const CompiledAttribute& attr = graph.attribute(a);
    children.clear();
    for (auto c : attr.children) children.push_back(result.values[c]);
    for (std::uint32_t r = 0; r < attr.rows.size(); ++r) {
      const RowMatch m = match_row(attr, attr.rows[r], children);
      if (m == RowMatch::fails) continue;
      if (m == RowMatch::matches) {
        result.values[a] = attr.rows[r].output;
        result.trace[a] = TraceEntry{r, children};
      }
      break;  // a row that might match blocks every later row
    }
  }
  return result;
}

EvaluationResult evaluate(const CompiledGraph& graph, const Assignment& answers) {
  const auto inputs = bind_answers(graph, answers);
  return evaluate_bound(graph, inputs);
}

namespace {

ExplanationNode explain_node(const EvaluationResult& result, const CompiledGraph& graph, std::uint32_t index) {
  const CompiledAttribute& attr = graph.attribute(index);
  ExplanationNode node;
  node.attribute = attr.name;
  node.derived = !attr.is_input();
  if (const Status& s = result.values.at(index)) node.level = attr.scale.levels[*s];
  if (const auto& entry = result.trace.at(index)) {
    node.fired_row = entry->row + 1;
    node.fired_rule = attr.rows[entry->row].text;
  }
  for (auto c : attr.children) node.children.push_back(explain_node(result, graph, c));
  return node;
}

}  // namespace

ExplanationNode explain(const EvaluationResult& result, const CompiledGraph& graph, std::string_view attribute) {
  const auto index = graph.find(attribute);
  if (!index) {
    throw EvaluationError("unknown attribute '" + std::string(attribute) + "' in knowledge base '" + graph.kb_id() +
                          "'");
  }
  if (result.values.size() != graph.size()) throw EvaluationError("evaluation result does not belong to this graph");
  return explain_node(result, graph, *index);
}

std::vector<QuestionScore> rank_questions(const CompiledGraph& graph, const EvaluationResult& result) {
  std::vector<QuestionScore> ranked;
  if (result.resolved(graph.goal())) return ranked;
  std::vector<std::size_t> score(graph.size(), 0);
  for (auto a : graph.topo_order()) {
    if (result.resolved(a)) continue;
    for (auto i : graph.attribute(a).input_ancestry) ++score[i];
  }
  for (auto i : graph.inputs()) {
    if (!result.resolved(i) && score[i] > 0) ranked.push_back({i, score[i]});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const QuestionScore& a, const QuestionScore& b) { return a.score > b.score; });
  return ranked;
}

std::vector<std::string> next_questions(const CompiledGraph& graph, const Assignment& answers, std::size_t k) {
  const auto ranked = rank_questions(graph, evaluate(graph, answers));
  std::vector<std::string> names;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) names.push_back(graph.attribute(ranked[i].input).name);
  return names;
}

}  // namespace iaes
