#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "compiler/coverage.hpp"
#include "iaes/compiler.hpp"

namespace iaes {

std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  if (d.loc.line != 0) os << d.loc.line << ':' << d.loc.column << ": ";
  os << (d.is_error() ? "error" : "warning") << " [" << d.code << "] " << d.message;
  return os.str();
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.is_error(); });
}

namespace {

class Validator {
 public:
  explicit Validator(const KnowledgeBase& kb) : kb_(kb) {
    for (std::size_t i = 0; i < kb.attributes.size(); ++i) index_.emplace(kb.attributes[i].name, i);
  }

  std::vector<Diagnostic> run() {
    check_shapes();
    check_children();
    check_cycles();
    for (std::size_t i = 0; i < kb_.attributes.size(); ++i) {
      if (well_formed_[i]) check_rows(kb_.attributes[i]);
    }
    check_reachability();
    return std::move(out_);
  }

 private:
  void emit(DiagnosticSeverity sev, std::string_view code, std::string message, const Attribute* attr = nullptr,
            std::size_t row = 0, SourceLoc loc = {}) {
    Diagnostic d;
    d.severity = sev;
    d.code = std::string(code);
    d.message = std::move(message);
    if (attr != nullptr) {
      d.attribute = attr->name;
      if (loc.line == 0) loc = attr->loc;
    }
    d.row_number = row;
    d.loc = loc;
    out_.push_back(std::move(d));
  }

  void error(std::string_view code, std::string message, const Attribute* attr = nullptr, std::size_t row = 0,
             SourceLoc loc = {}) {
    emit(DiagnosticSeverity::error, code, std::move(message), attr, row, loc);
  }

  void warning(std::string_view code, std::string message, const Attribute* attr = nullptr, std::size_t row = 0,
               SourceLoc loc = {}) {
    emit(DiagnosticSeverity::warning, code, std::move(message), attr, row, loc);
  }

  // Re-checks the invariants the parser enforces so that programmatically
  // built models get the same guarantees.
  void check_shapes() {
    std::map<std::string, int> scale_count;
    for (const auto& s : kb_.scales) {
      if (++scale_count[s.name] == 2) error(diag::kMalformed, "duplicate scale name '" + s.name + "'");
      if (s.levels.size() < 2) error(diag::kMalformed, "scale '" + s.name + "' needs at least 2 levels");
      if (s.levels.size() > kMaxScaleLevels) {
        error(diag::kMalformed, "scale '" + s.name + "' has more than " + std::to_string(kMaxScaleLevels) + " levels");
      }
      for (std::size_t i = 0; i < s.levels.size(); ++i) {
        if (std::find(s.levels.begin(), s.levels.begin() + static_cast<std::ptrdiff_t>(i), s.levels[i]) !=
            s.levels.begin() + static_cast<std::ptrdiff_t>(i)) {
          error(diag::kMalformed, "duplicate level '" + s.levels[i] + "' in scale '" + s.name + "'");
        }
      }
    }
    if (index_.size() != kb_.attributes.size()) error(diag::kMalformed, "duplicate attribute names");

    well_formed_.assign(kb_.attributes.size(), false);
    for (std::size_t i = 0; i < kb_.attributes.size(); ++i) {
      const Attribute& attr = kb_.attributes[i];
      const Scale* own = kb_.find_scale(attr.scale);
      bool ok = own != nullptr;
      if (!ok) error(diag::kMalformed, "unknown scale '" + attr.scale + "' for attribute '" + attr.name + "'", &attr);
      if (attr.is_input()) {
        if (attr.rules) error(diag::kMalformed, "input attribute '" + attr.name + "' has a rule block", &attr);
        if (attr.help.size() > kMaxHelpDepth) {
          error(diag::kMalformed, "help chain of '" + attr.name + "' is deeper than " + std::to_string(kMaxHelpDepth), &attr);
        }
        continue;
      }
      if (!attr.rules) {
        error(diag::kMalformed, "derived attribute '" + attr.name + "' has no rule block", &attr);
        continue;
      }
      const RuleBlock& block = *attr.rules;
      if (block.children.empty()) {
        error(diag::kMalformed, "rule block of '" + attr.name + "' has no children", &attr);
        ok = false;
      }
      if (block.rows.empty() && !block.default_output) {
        error(diag::kMalformed, "rule block of '" + attr.name + "' has no rows", &attr);
        ok = false;
      }
      for (std::size_t r = 0; r < block.rows.size(); ++r) {
        const RuleRow& row = block.rows[r];
        if (row.patterns.size() != block.children.size()) {
          error(diag::kMalformed,
                "arity mismatch, expected " + std::to_string(block.children.size()) + " patterns", &attr, r + 1,
                row.loc);
          ok = false;
          continue;
        }
        for (std::size_t c = 0; c < row.patterns.size(); ++c) {
          const Scale* cs = kb_.scale_of(block.children[c]);
          if (cs == nullptr) continue;
          for (const auto& level : row.patterns[c].levels) {
            if (!cs->index_of(level)) {
              error(diag::kMalformed, "unknown level '" + level + "' for attribute '" + block.children[c] + "'",
                    &attr, r + 1, row.loc);
              ok = false;
            }
          }
        }
        if (own != nullptr && !own->index_of(row.output)) {
          error(diag::kMalformed, "unknown output level '" + row.output + "' for attribute '" + attr.name + "'",
                &attr, r + 1, row.loc);
          ok = false;
        }
      }
      if (block.default_output && own != nullptr && !own->index_of(*block.default_output)) {
        error(diag::kMalformed, "unknown default level '" + *block.default_output + "'", &attr, 0, block.default_loc);
        ok = false;
      }
      well_formed_[i] = ok;
    }

    const Attribute* goal = kb_.find_attribute(kb_.goal);
    if (goal == nullptr) {
      error(diag::kMalformed, "goal '" + kb_.goal + "' is not a declared attribute");
    } else if (goal->is_input()) {
      error(diag::kMalformed, "goal '" + kb_.goal + "' must be a derived attribute");
    }
  }

  void check_children() {
    for (std::size_t i = 0; i < kb_.attributes.size(); ++i) {
      const Attribute& attr = kb_.attributes[i];
      if (!attr.rules) continue;
      for (const auto& child : attr.rules->children) {
        if (!index_.count(child)) {
          error(diag::kUndeclaredChild, "'" + attr.name + "' references undeclared attribute '" + child + "'", &attr);
          well_formed_[i] = false;
        }
      }
    }
  }

  std::vector<std::size_t> child_indices(const Attribute& attr) const {
    std::vector<std::size_t> out;
    if (!attr.rules) return out;
    for (const auto& child : attr.rules->children) {
      if (auto it = index_.find(child); it != index_.end()) out.push_back(it->second);
    }
    return out;
  }

  void check_cycles() {
    enum class Color { white, grey, black };
    std::vector<Color> color(kb_.attributes.size(), Color::white);
    std::vector<std::size_t> path;

    // Recursion depth is bounded by the number of derived attributes.
    auto visit = [&](auto&& self, std::size_t node) -> void {
      color[node] = Color::grey;
      path.push_back(node);
      for (std::size_t child : child_indices(kb_.attributes[node])) {
        if (color[child] == Color::grey) {
          auto start = std::find(path.begin(), path.end(), child);
          std::string text;
          for (auto it = start; it != path.end(); ++it) text += kb_.attributes[*it].name + " -> ";
          text += kb_.attributes[child].name;
          error(diag::kCycle, "dependency cycle: " + text, &kb_.attributes[child]);
          for (auto it = start; it != path.end(); ++it) well_formed_[*it] = false;
        } else if (color[child] == Color::white) {
          self(self, child);
        }
      }
      path.pop_back();
      color[node] = Color::black;
    };
    for (std::size_t i = 0; i < kb_.attributes.size(); ++i) {
      if (color[i] == Color::white) visit(visit, i);
    }
  }

  void check_rows(const Attribute& attr) {
    const RuleBlock& block = *attr.rules;
    std::vector<const Scale*> scales;
    for (const auto& child : block.children) scales.push_back(kb_.scale_of(child));

    std::vector<detail::Box> rows;
    for (const auto& row : block.rows) {
      detail::Box box;
      for (std::size_t c = 0; c < scales.size(); ++c) {
        LevelMask m = 0;
        if (row.patterns[c].is_wildcard()) {
          m = detail::full_mask(scales[c]->size());
        } else {
          for (const auto& level : row.patterns[c].levels) m |= LevelMask{1} << *scales[c]->index_of(level);
        }
        box.push_back(m);
      }
      rows.push_back(std::move(box));
    }
    detail::Box everything;
    for (const Scale* s : scales) everything.push_back(detail::full_mask(s->size()));

    const auto gap = detail::find_uncovered(rows, rows.size(), everything);
    if (gap && !block.default_output) {
      std::string tuple = "(";
      for (std::size_t c = 0; c < gap->size(); ++c) {
        if (c) tuple += ", ";
        tuple += scales[c]->levels[(*gap)[c]];
      }
      tuple += ")";
      error(diag::kNotExhaustive,
            "rule block of '" + attr.name + "' is neither exhaustive nor defaulted; no row matches " + tuple, &attr);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!detail::find_uncovered(rows, r, rows[r])) {
        warning(diag::kUnreachableRow,
                "unreachable row " + std::to_string(r + 1) + " of '" + attr.name + "' (shadowed by earlier rows)",
                &attr, r + 1, block.rows[r].loc);
      }
    }
    if (!gap && block.default_output) {
      warning(diag::kUnreachableDefault, "default of '" + attr.name + "' is unreachable (rows are exhaustive)", &attr,
              0, block.default_loc);
    }
  }

  void check_reachability() {
    auto goal = index_.find(kb_.goal);
    if (goal == index_.end()) return;
    std::vector<bool> seen(kb_.attributes.size(), false);
    std::vector<std::size_t> stack{goal->second};
    seen[goal->second] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t child : child_indices(kb_.attributes[node])) {
        if (!seen[child]) {
          seen[child] = true;
          stack.push_back(child);
        }
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        const Attribute& attr = kb_.attributes[i];
        warning(diag::kUnreachableAttribute, "attribute '" + attr.name + "' is unreachable from goal '" + kb_.goal + "'",
                &attr);
      }
    }
  }

  const KnowledgeBase& kb_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<bool> well_formed_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const KnowledgeBase& kb) { return Validator(kb).run(); }

}  // namespace iaes
