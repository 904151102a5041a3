// ID3 induction of decision trees from cases, conversion to rule blocks and
// checking of recorded cases against a compiled knowledge base.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iaes/compiler.hpp"
#include "iaes/kbdl.hpp"

namespace iaes {

struct CaseAttribute {
  std::string name;
  Scale scale;

  bool operator==(const CaseAttribute&) const = default;
};

struct Case {
  std::vector<std::uint32_t> values;  // level index per case attribute
  std::uint32_t outcome = 0;          // level index in the target scale
  std::string label;

  bool operator==(const Case&) const = default;
};

struct CaseSet {
  std::vector<CaseAttribute> attributes;
  std::string target;  // outcome column name
  Scale target_scale;
  std::vector<Case> cases;

  bool operator==(const CaseSet&) const = default;
};

/// Case CSV: a header `attr1,...,outcome`, then one case per line. A column
/// named `label` (anywhere before the outcome) names the case; unlabeled cases
/// are called "line N". Blank and `#` lines are skipped.
///
/// With `kb`, every attribute column must be a declared attribute and takes
/// its scale from the KB; the outcome column uses the scale of the attribute
/// of that name, or the goal's scale. Without `kb`, each column gets a scale
/// whose levels are listed in order of first appearance.
ParseResult<CaseSet> parse_cases(std::string_view csv, const KnowledgeBase* kb = nullptr);

class InductionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shannon entropy in bits of a distribution given as counts.
double entropy(std::span<const std::size_t> counts);

/// Outcome counts of `subset` (indices into cases.cases), by target level.
std::vector<std::size_t> outcome_counts(const CaseSet& cases, std::span<const std::size_t> subset);

/// G(A) = H(S) - sum_v |S_v|/|S| H(S_v).
double information_gain(const CaseSet& cases, std::span<const std::size_t> subset, std::uint32_t attribute);

/// Scores a candidate split; larger is better.
using SplitCriterion =
    std::function<double(const CaseSet& cases, std::span<const std::size_t> subset, std::uint32_t attribute)>;

struct TreeNode {
  std::optional<std::uint32_t> split;  // case attribute index; nullopt for a leaf
  std::uint32_t outcome = 0;           // leaf outcome (majority for a split node)
  std::vector<TreeNode> children;      // one per level of the split attribute

  [[nodiscard]] bool is_leaf() const noexcept { return !split.has_value(); }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  TreeNode root;

  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::size_t leaf_count() const;
  bool operator==(const DecisionTree&) const = default;
};

/// Throws InductionError on an empty case set, a set without attributes, or
/// cases with identical inputs and different outcomes (all labels listed).
DecisionTree induce_tree(const CaseSet& cases, const SplitCriterion& criterion = information_gain);

std::uint32_t classify(const DecisionTree& tree, std::span<const std::uint32_t> values);

/// One row per root-to-leaf path over all case attributes, plus a default
/// holding the majority outcome of the cases.
RuleBlock tree_to_ruleblock(const DecisionTree& tree, const CaseSet& cases);

/// A standalone KB (id "induced") whose goal is the target attribute ruled by
/// `block`. Throws InductionError if a scale has fewer than two levels.
KnowledgeBase case_set_kb(const CaseSet& cases, const RuleBlock& block);

struct CaseCheck {
  std::string label;
  std::string expected;
  std::optional<std::string> actual;  // nullopt when the goal stays unknown
  bool agrees = false;
};

struct CaseReport {
  std::vector<CaseCheck> cases;
  std::size_t agreements = 0;
  std::size_t disagreements = 0;
};

/// Evaluates each case and compares the goal with the recorded outcome.
/// Throws InductionError when a case attribute is not an input of the graph or
/// a level is not in the corresponding scale.
CaseReport check_cases(const CompiledGraph& graph, const CaseSet& cases);

}  // namespace iaes
