#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "iaes/compiler.hpp"

namespace iaes {

std::size_t FlatRuleList::row_of(const std::vector<std::uint32_t>& tuple) const {
  std::size_t row = 0;
  for (std::size_t i = 0; i < input_scales.size(); ++i) row = row * input_scales[i].size() + tuple.at(i);
  return row;
}

std::string FlatRuleList::to_csv() const {
  std::ostringstream os;
  for (const auto& name : inputs) os << name << ',';
  os << goal << '\n';
  std::vector<std::uint32_t> tuple(inputs.size(), 0);
  for (std::size_t row = 0; row < outputs.size(); ++row) {
    for (std::size_t i = 0; i < tuple.size(); ++i) os << input_scales[i].levels[tuple[i]] << ',';
    os << goal_scale.levels[outputs[row]] << '\n';
    for (std::size_t i = tuple.size(); i-- > 0;) {
      if (++tuple[i] < input_scales[i].size()) break;
      tuple[i] = 0;
    }
  }
  return os.str();
}

// Plain first-match evaluation of complete tuples. This deliberately does not
// share code with the engine's three-valued evaluator so the two can be
// checked against each other.
FlatRuleList flatten(const CompiledGraph& graph, std::uint64_t limit) {
  const auto& attrs = graph.attributes();
  const CompiledAttribute& goal = graph.attribute(graph.goal());

  std::uint64_t tuples = 1;
  for (auto i : goal.input_ancestry) {
    const std::uint64_t levels = attrs[i].scale.size();
    if (tuples > limit / levels) {
      throw FlattenTooLarge("too large to flatten: more than " + std::to_string(limit) + " input tuples");
    }
    tuples *= levels;
  }
  if (tuples > limit) {
    throw FlattenTooLarge("too large to flatten: " + std::to_string(tuples) + " input tuples exceed the limit of " +
                          std::to_string(limit));
  }

  FlatRuleList flat;
  flat.goal = goal.name;
  flat.goal_scale = goal.scale;
  for (auto i : goal.input_ancestry) {
    flat.inputs.push_back(attrs[i].name);
    flat.input_scales.push_back(attrs[i].scale);
  }

  // Only derived attributes feeding the goal need evaluating.
  std::vector<bool> needed(attrs.size(), false);
  std::vector<std::uint32_t> stack{graph.goal()};
  needed[graph.goal()] = true;
  while (!stack.empty()) {
    const auto a = stack.back();
    stack.pop_back();
    for (auto c : attrs[a].children) {
      if (!needed[c]) {
        needed[c] = true;
        stack.push_back(c);
      }
    }
  }
  std::vector<std::uint32_t> order;
  for (auto i : graph.topo_order()) {
    if (needed[i]) order.push_back(i);
  }

  std::vector<std::uint32_t> value(attrs.size(), 0);
  std::vector<std::uint32_t> tuple(goal.input_ancestry.size(), 0);
  flat.outputs.reserve(tuples);
  for (std::uint64_t row = 0; row < tuples; ++row) {
    for (std::size_t k = 0; k < tuple.size(); ++k) value[goal.input_ancestry[k]] = tuple[k];
    for (auto a : order) {
      const auto& attr = attrs[a];
      bool fired = false;
      for (const auto& r : attr.rows) {
        bool match = true;
        for (std::size_t c = 0; c < attr.children.size() && match; ++c) {
          match = ((r.masks[c] >> value[attr.children[c]]) & 1U) != 0;
        }
        if (match) {
          value[a] = r.output;
          fired = true;
          break;
        }
      }
      if (!fired) throw std::logic_error("no row matched for '" + attr.name + "' in a validated graph");
    }
    flat.outputs.push_back(value[graph.goal()]);
    for (std::size_t k = tuple.size(); k-- > 0;) {
      if (++tuple[k] < flat.input_scales[k].size()) break;
      tuple[k] = 0;
    }
  }
  return flat;
}

KbStats kb_stats(const CompiledGraph& graph) {
  KbStats stats;
  stats.attribute_count = graph.size();
  stats.input_count = graph.inputs().size();
  stats.derived_count = stats.attribute_count - stats.input_count;
  for (const auto& attr : graph.attributes()) {
    stats.hierarchical_rule_count += attr.rows.size();
    stats.max_depth = std::max<std::size_t>(stats.max_depth, attr.depth);
  }
  std::uint64_t product = 1;
  double log10 = 0.0;
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  for (auto i : graph.attribute(graph.goal()).input_ancestry) {
    const std::uint64_t levels = graph.attribute(i).scale.size();
    product = product > kMax / levels ? kMax : product * levels;
    log10 += std::log10(static_cast<double>(levels));
  }
  stats.flat_tuple_count = product;
  stats.flat_tuple_log10 = log10;
  return stats;
}

KbStats kb_stats(const KnowledgeBase& kb) { return kb_stats(compile(kb)); }

}  // namespace iaes
