#include <algorithm>
#include <queue>
#include <sstream>

#include "compiler/coverage.hpp"
#include "iaes/compiler.hpp"

namespace iaes {

LevelMask CompiledAttribute::full_mask() const noexcept { return detail::full_mask(scale.size()); }

namespace {

bool same_attribute(const CompiledAttribute& a, const CompiledAttribute& b) {
  return a.name == b.name && a.scale == b.scale && a.kind == b.kind && a.question == b.question &&
         a.help == b.help && a.children == b.children && a.child_full_masks == b.child_full_masks && a.rows == b.rows && a.input_ancestry == b.input_ancestry &&
         a.depth == b.depth;
}

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  std::ostringstream os;
  os << "knowledge base does not compile:";
  for (const auto& d : diagnostics) {
    if (d.is_error()) os << "\n  " << to_string(d);
  }
  return os.str();
}

std::string row_text(const RuleRow& row) {
  std::string text = "(";
  for (std::size_t i = 0; i < row.patterns.size(); ++i) {
    if (i) text += ", ";
    const Pattern& p = row.patterns[i];
    if (p.is_wildcard()) {
      text += '*';
      continue;
    }
    for (std::size_t j = 0; j < p.levels.size(); ++j) {
      if (j) text += '|';
      text += p.levels[j];
    }
  }
  return text + ") -> " + row.output;
}

}  // namespace

CompileError::CompileError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::optional<std::uint32_t> CompiledGraph::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool CompiledGraph::operator==(const CompiledGraph& other) const {
  if (kb_id_ != other.kb_id_ || version_ != other.version_ || topo_order_ != other.topo_order_ ||
      inputs_ != other.inputs_ || goal_ != other.goal_ || attributes_.size() != other.attributes_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (!same_attribute(attributes_[i], other.attributes_[i])) return false;
  }
  return true;
}

CompiledGraph compile(const KnowledgeBase& kb) {
  auto diagnostics = validate(kb);
  if (has_errors(diagnostics)) throw CompileError(std::move(diagnostics));

  CompiledGraph g;
  g.kb_id_ = kb.id;
  g.version_ = kb.version;
  const auto n = static_cast<std::uint32_t>(kb.attributes.size());
  for (std::uint32_t i = 0; i < n; ++i) g.index_.emplace(kb.attributes[i].name, i);

  g.attributes_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const Attribute& src = kb.attributes[i];
    CompiledAttribute& dst = g.attributes_.emplace_back();
    dst.name = src.name;
    dst.scale = *kb.find_scale(src.scale);
    dst.kind = src.kind;
    dst.question = src.question;
    dst.help = src.help;
    if (src.is_input()) {
      g.inputs_.push_back(i);
      continue;
    }
    const RuleBlock& block = *src.rules;
    std::vector<const Scale*> child_scales;
    for (const auto& child : block.children) {
      dst.children.push_back(g.index_.at(child));
      child_scales.push_back(kb.scale_of(child));
      dst.child_full_masks.push_back(detail::full_mask(child_scales.back()->size()));
    }
    for (const auto& row : block.rows) {
      CompiledRow out;
      for (std::size_t c = 0; c < row.patterns.size(); ++c) {
        LevelMask m = 0;
        if (row.patterns[c].is_wildcard()) {
          m = detail::full_mask(child_scales[c]->size());
        } else {
          for (const auto& level : row.patterns[c].levels) m |= LevelMask{1} << *child_scales[c]->index_of(level);
        }
        out.masks.push_back(m);
      }
      out.output = static_cast<std::uint32_t>(*dst.scale.index_of(row.output));
      out.text = row_text(row);
      dst.rows.push_back(std::move(out));
    }
    if (block.default_output) {
      CompiledRow out;
      for (const Scale* s : child_scales) out.masks.push_back(detail::full_mask(s->size()));
      out.output = static_cast<std::uint32_t>(*dst.scale.index_of(*block.default_output));
      out.is_default = true;
      out.text = "default -> " + *block.default_output;
      dst.rows.push_back(std::move(out));
    }
  }

  // Kahn's algorithm over derived attributes; the smallest declaration index
  // among ready attributes goes next.
  std::vector<std::uint32_t> pending(n, 0);
  std::vector<std::vector<std::uint32_t>> dependents(n);
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& attr = g.attributes_[i];
    if (attr.is_input()) continue;
    std::vector<std::uint32_t> derived_children;
    for (auto c : attr.children) {
      if (!g.attributes_[c].is_input()) derived_children.push_back(c);
    }
    std::sort(derived_children.begin(), derived_children.end());
    derived_children.erase(std::unique(derived_children.begin(), derived_children.end()), derived_children.end());
    pending[i] = static_cast<std::uint32_t>(derived_children.size());
    for (auto c : derived_children) dependents[c].push_back(i);
    if (pending[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const std::uint32_t next = ready.top();
    ready.pop();
    g.topo_order_.push_back(next);
    for (auto d : dependents[next]) {
      if (--pending[d] == 0) ready.push(d);
    }
  }

  for (auto i : g.inputs_) g.attributes_[i].input_ancestry = {i};
  for (auto i : g.topo_order_) {
    auto& attr = g.attributes_[i];
    std::vector<std::uint32_t> ancestry;
    std::uint32_t depth = 0;
    for (auto c : attr.children) {
      const auto& child = g.attributes_[c];
      std::vector<std::uint32_t> merged;
      std::set_union(ancestry.begin(), ancestry.end(), child.input_ancestry.begin(), child.input_ancestry.end(),
                     std::back_inserter(merged));
      ancestry = std::move(merged);
      depth = std::max(depth, child.depth + 1);
    }
    attr.input_ancestry = std::move(ancestry);
    attr.depth = depth;
  }
  g.goal_ = g.index_.at(kb.goal);
  return g;
}

}  // namespace iaes
