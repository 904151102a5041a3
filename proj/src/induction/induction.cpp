#include "iaes/induction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "iaes/engine.hpp"

namespace iaes {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

constexpr std::string_view kLabelColumn = "label";

}  // namespace

ParseResult<CaseSet> parse_cases(std::string_view csv, const KnowledgeBase* kb) {
  ParseResult<CaseSet> result;
  auto error = [&](std::size_t line, std::string message) { result.errors.push_back({{line, 1}, std::move(message)}); };

  CaseSet set;
  std::vector<std::string> header;
  std::optional<std::size_t> label_column;
  // For each column that is an attribute: index into set.attributes.
  std::vector<std::optional<std::size_t>> column_attribute;
  bool inferred_target = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto nl = csv.find('\n', pos);
    const std::string_view raw = csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_fields(line);

    if (header.empty()) {
      header = fields;
      if (header.size() < 2) {
        error(line_no, "header needs at least one attribute column and an outcome column");
        break;
      }
      std::set<std::string> seen;
      for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (!seen.insert(name).second) error(line_no, "duplicate column '" + name + "'");
        const bool is_outcome = c + 1 == header.size();
        if (!is_outcome && name == kLabelColumn) {
          label_column = c;
          column_attribute.emplace_back();
          continue;
        }
        if (!is_identifier(name)) error(line_no, "invalid column name '" + name + "'");
        if (is_outcome) {
          set.target = name;
          if (kb != nullptr) {
            const Scale* s = kb->scale_of(name);
            if (s == nullptr) s = kb->scale_of(kb->goal);
            if (s == nullptr) {
              error(line_no, "knowledge base '" + kb->id + "' has no scale for outcome '" + name + "'");
            } else {
              set.target_scale = *s;
            }
          } else {
            set.target_scale = Scale{"s_" + name, {}};
            inferred_target = true;
          }
          column_attribute.emplace_back();
          continue;
        }
        CaseAttribute attr{name, {}};
        if (kb != nullptr) {
          const Scale* s = kb->scale_of(name);
          if (s == nullptr) {
            error(line_no, "unknown attribute '" + name + "' in knowledge base '" + kb->id + "'");
          } else {
            attr.scale = *s;
          }
        } else {
          attr.scale = Scale{"s_" + name, {}};
        }
        column_attribute.emplace_back(set.attributes.size());
        set.attributes.push_back(std::move(attr));
      }
      if (set.attributes.empty()) error(line_no, "header needs at least one attribute column and an outcome column");
      if (!result.errors.empty()) break;
      continue;
    }

    if (fields.size() != header.size()) {
      error(line_no, "expected " + std::to_string(header.size()) + " values, found " + std::to_string(fields.size()));
      continue;
    }
    Case c;
    c.values.resize(set.attributes.size());
    c.label = label_column ? fields[*label_column] : "line " + std::to_string(line_no);
    bool ok = true;
    auto level_index = [&](Scale& scale, const std::string& value, const std::string& column,
                           bool infer) -> std::optional<std::uint32_t> {
      if (auto i = scale.index_of(value)) return static_cast<std::uint32_t>(*i);
      if (infer && is_identifier(value)) {
        scale.levels.push_back(value);
        return static_cast<std::uint32_t>(scale.levels.size() - 1);
      }
      error(line_no, infer ? "invalid level '" + value + "' in column '" + column + "'"
                           : "level '" + value + "' not in scale " + scale.name + " (column '" + column + "')");
      ok = false;
      return std::nullopt;
    };
    for (std::size_t col = 0; col + 1 < header.size(); ++col) {
      if (!column_attribute[col]) continue;
      auto& attr = set.attributes[*column_attribute[col]];
      if (auto v = level_index(attr.scale, fields[col], attr.name, kb == nullptr)) c.values[*column_attribute[col]] = *v;
    }
    if (auto v = level_index(set.target_scale, fields.back(), set.target, inferred_target)) c.outcome = *v;
    if (ok) set.cases.push_back(std::move(c));
  }
  if (header.empty() && result.errors.empty()) error(1, "missing header row");
  if (result.errors.empty()) result.value = std::move(set);
  return result;
}

double entropy(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<std::size_t> outcome_counts(const CaseSet& cases, std::span<const std::size_t> subset) {
  std::vector<std::size_t> counts(cases.target_scale.size(), 0);
  for (auto i : subset) ++counts[cases.cases[i].outcome];
  return counts;
}

double information_gain(const CaseSet& cases, std::span<const std::size_t> subset, std::uint32_t attribute) {
  if (subset.empty()) return 0.0;
  const std::size_t levels = cases.attributes[attribute].scale.size();
  std::vector<std::vector<std::size_t>> parts(levels, std::vector<std::size_t>(cases.target_scale.size(), 0));
  std::vector<std::size_t> sizes(levels, 0);
  for (auto i : subset) {
    const auto& c = cases.cases[i];
    ++parts[c.values[attribute]][c.outcome];
    ++sizes[c.values[attribute]];
  }
  double remainder = 0.0;
  for (std::size_t v = 0; v < levels; ++v) {
    if (sizes[v] == 0) continue;
    remainder += static_cast<double>(sizes[v]) / static_cast<double>(subset.size()) * entropy(parts[v]);
  }
  return entropy(outcome_counts(cases, subset)) - remainder;
}

namespace {

// Most frequent outcome; ties go to the lowest scale position.
std::uint32_t majority(const std::vector<std::size_t>& counts) {
  return static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

void check_consistency(const CaseSet& cases) {
  std::map<std::vector<std::uint32_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cases.cases.size(); ++i) groups[cases.cases[i].values].push_back(i);
  std::string conflicts;
  for (const auto& [values, members] : groups) {
    const auto first = cases.cases[members.front()].outcome;
    const bool mixed = std::any_of(members.begin(), members.end(),
                                   [&](std::size_t i) { return cases.cases[i].outcome != first; });
    if (!mixed) continue;
    if (!conflicts.empty()) conflicts += "; ";
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& c = cases.cases[members[k]];
      if (k > 0) conflicts += ", ";
      conflicts += "'" + c.label + "' -> " + cases.target_scale.levels[c.outcome];
    }
  }
  if (!conflicts.empty()) {
    throw InductionError("inconsistent cases (identical inputs, different outcomes): " + conflicts);
  }
}

struct Grower {
  const CaseSet& cases;
  const SplitCriterion& criterion;
  std::vector<bool> used;

  TreeNode grow(const std::vector<std::size_t>& subset, std::uint32_t parent_majority) {
    TreeNode node;
    if (subset.empty()) {
      node.outcome = parent_majority;
      return node;
    }
    const auto counts = outcome_counts(cases, subset);
    node.outcome = majority(counts);
    if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) == 1) return node;

    std::optional<std::uint32_t> best;
    double best_score = 0.0;
    for (std::uint32_t a = 0; a < cases.attributes.size(); ++a) {
      if (used[a]) continue;
      const double score = criterion(cases, subset, a);
      if (!best || score > best_score + 1e-12) {
        best = a;
        best_score = score;
      }
    }
    if (!best) return node;

    node.split = *best;
    const std::size_t levels = cases.attributes[*best].scale.size();
    std::vector<std::vector<std::size_t>> parts(levels);
    for (auto i : subset) parts[cases.cases[i].values[*best]].push_back(i);
    used[*best] = true;
    for (const auto& part : parts) node.children.push_back(grow(part, node.outcome));
    used[*best] = false;
    return node;
  }
};

std::size_t depth_of(const TreeNode& n) {
  std::size_t d = 0;
  for (const auto& c : n.children) d = std::max(d, 1 + depth_of(c));
  return d;
}

std::size_t leaves_of(const TreeNode& n) {
  if (n.is_leaf()) return 1;
  std::size_t total = 0;
  for (const auto& c : n.children) total += leaves_of(c);
  return total;
}

}  // namespace

std::size_t DecisionTree::depth() const { return depth_of(root); }
std::size_t DecisionTree::leaf_count() const { return leaves_of(root); }

DecisionTree induce_tree(const CaseSet& cases, const SplitCriterion& criterion) {
  if (cases.cases.empty()) throw InductionError("empty case set");
  if (cases.attributes.empty()) throw InductionError("case set has no attributes to split on");
  check_consistency(cases);
  std::vector<std::size_t> all(cases.cases.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Grower g{cases, criterion, std::vector<bool>(cases.attributes.size(), false)};
  return DecisionTree{g.grow(all, majority(outcome_counts(cases, all)))};
}

std::uint32_t classify(const DecisionTree& tree, std::span<const std::uint32_t> values) {
  const TreeNode* n = &tree.root;
  while (!n->is_leaf()) n = &n->children.at(values[*n->split]);
  return n->outcome;
}

RuleBlock tree_to_ruleblock(const DecisionTree& tree, const CaseSet& cases) {
  RuleBlock block;
  for (const auto& a : cases.attributes) block.children.push_back(a.name);
  std::vector<Pattern> path(cases.attributes.size(), Pattern::wildcard());
  std::function<void(const TreeNode&)> walk = [&](const TreeNode& n) {
    if (n.is_leaf()) {
      block.rows.push_back(RuleRow{path, cases.target_scale.levels[n.outcome], {}});
      return;
    }
    const auto& attr = cases.attributes[*n.split];
    for (std::size_t v = 0; v < n.children.size(); ++v) {
      path[*n.split] = Pattern{{attr.scale.levels[v]}};
      walk(n.children[v]);
    }
    path[*n.split] = Pattern::wildcard();
  };
  if (!tree.root.is_leaf()) walk(tree.root);

  std::vector<std::size_t> all(cases.cases.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const std::uint32_t fallback = all.empty() ? tree.root.outcome : majority(outcome_counts(cases, all));
  block.default_output = cases.target_scale.levels[fallback];
  return block;
}

KnowledgeBase case_set_kb(const CaseSet& cases, const RuleBlock& block) {
  KnowledgeBase kb;
  kb.id = "induced";
  kb.version = 1;
  auto add_scale = [&](const Scale& s) {
    if (s.size() < 2) throw InductionError("scale " + s.name + " has fewer than two levels");
    if (kb.find_scale(s.name) == nullptr) kb.scales.push_back(s);
  };
  for (const auto& a : cases.attributes) {
    add_scale(a.scale);
    kb.attributes.push_back(Attribute{a.name, a.scale.name, AttributeKind::input, a.name + "?", {}, std::nullopt, {}});
  }
  add_scale(cases.target_scale);
  kb.attributes.push_back(Attribute{cases.target, cases.target_scale.name, AttributeKind::derived, "", {}, block, {}});
  kb.goal = cases.target;
  return kb;
}

CaseReport check_cases(const CompiledGraph& graph, const CaseSet& cases) {
  std::vector<std::uint32_t> input_index;
  for (const auto& a : cases.attributes) {
    const auto i = graph.find(a.name);
    if (!i || !graph.attribute(*i).is_input()) {
      throw InductionError("case attribute '" + a.name + "' is not an input of '" + graph.kb_id() + "'");
    }
    input_index.push_back(*i);
  }
  const auto& goal = graph.attribute(graph.goal());

  CaseReport report;
  for (const auto& c : cases.cases) {
    std::vector<Status> inputs(graph.size());
    for (std::size_t k = 0; k < cases.attributes.size(); ++k) {
      const auto& name = cases.attributes[k].scale.levels[c.values[k]];
      const auto& scale = graph.attribute(input_index[k]).scale;
      const auto level = scale.index_of(name);
      if (!level) {
        throw InductionError(name + " not in scale " + scale.name + " (attribute '" + cases.attributes[k].name + "')");
      }
      inputs[input_index[k]] = static_cast<std::uint32_t>(*level);
    }
    const auto& expected = cases.target_scale.levels[c.outcome];
    if (!goal.scale.index_of(expected)) {
      throw InductionError("outcome " + expected + " not in scale " + goal.scale.name + " of goal '" + goal.name + "'");
    }
    const auto result = evaluate_bound(graph, inputs);
    CaseCheck check{c.label, expected, std::nullopt, false};
    if (const auto& v = result.values[graph.goal()]) check.actual = goal.scale.levels[*v];
    check.agrees = check.actual == expected;
    ++(check.agrees ? report.agreements : report.disagreements);
    report.cases.push_back(std::move(check));
  }
  return report;
}

}  // namespace iaes
