#include "iaes/metalayer.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace iaes {

namespace {

std::string number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::to_string(v);
}

class Binder {
 public:
  Binder(std::span<const CompiledGraph> graphs, std::vector<Diagnostic>& out) : graphs_(graphs), out_(out) {}

  std::optional<BoundRef> resolve(const QualifiedRef& ref) {
    const CompiledGraph* graph = nullptr;
    for (const auto& g : graphs_) {
      if (g.kb_id() == ref.kb) graph = &g;
    }
    if (graph == nullptr) {
      error(diag::kUnknownKb, "unknown knowledge base " + ref.kb + " in " + ref.str(), ref);
      return std::nullopt;
    }
    const auto index = graph->find(ref.attribute);
    if (!index) {
      error(diag::kUnknownAttribute, "unknown attribute " + ref.str(), ref);
      return std::nullopt;
    }
    const auto& attr = graph->attribute(*index);
    return BoundRef{ref.kb, ref.attribute, *index, attr.scale.levels};
  }

  std::optional<std::uint32_t> level(const BoundRef& ref, const std::string& name, const QualifiedRef& at,
                                     const std::string& scale) {
    const auto it = std::find(ref.levels.begin(), ref.levels.end(), name);
    if (it == ref.levels.end()) {
      error(diag::kUnknownLevel, name + " not in scale " + scale + " (" + ref.str() + ")", at);
      return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - ref.levels.begin());
  }

  // Turns a level map into a by-index table; nullopt after reporting problems.
  std::optional<std::vector<double>> table(const BoundRef& ref, const LevelMap& map, const QualifiedRef& at,
                                           std::string_view what, bool unit_interval) {
    const std::string scale = scale_name(ref);
    std::vector<std::optional<double>> slots(ref.levels.size());
    bool ok = true;
    for (const auto& [name, value] : map) {
      const auto idx = level(ref, name, at, scale);
      if (!idx) {
        ok = false;
        continue;
      }
      if (slots[*idx]) {
        error(diag::kDuplicate, std::string(what) + " map of " + ref.str() + " lists " + name + " twice", at);
        ok = false;
      }
      slots[*idx] = value;
      if (unit_interval ? (value < 0.0 || value > 1.0) : !(value > 0.0)) {
        error(diag::kBadNumber,
              std::string(what) + " " + number(value) + " for " + ref.str() + " = " + name + " must be " +
                  (unit_interval ? "within [0,1]" : "positive"),
              at);
        ok = false;
      }
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!slots[i]) missing.push_back(ref.levels[i]);
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      error(diag::kIncompleteMap,
            std::string(what) + " map must cover all levels of " + scale + " (" + ref.str() + " is missing " + list +
                ")",
            at);
      return std::nullopt;
    }
    if (!ok) return std::nullopt;
    std::vector<double> values;
    for (const auto& s : slots) values.push_back(*s);
    return values;
  }

  std::string scale_name(const BoundRef& ref) const {
    for (const auto& g : graphs_) {
      if (g.kb_id() == ref.kb) return g.attribute(ref.attribute).scale.name;
    }
    return {};
  }

  void error(std::string_view code, std::string message, const QualifiedRef& at) {
    report(DiagnosticSeverity::error, code, std::move(message), at.str(), {at.line, at.column});
  }

  void report(DiagnosticSeverity severity, std::string_view code, std::string message, std::string subject,
              SourceLoc loc) {
    Diagnostic d;
    d.severity = severity;
    d.code = std::string(code);
    d.message = std::move(message);
    d.attribute = std::move(subject);
    d.loc = loc;
    out_.push_back(std::move(d));
  }

 private:
  std::span<const CompiledGraph> graphs_;
  std::vector<Diagnostic>& out_;
};

LevelMask allowed_levels(const BoundTerm& term) {
  const std::size_t n = term.ref.levels.size();
  LevelMask mask = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = term.op == Comparator::eq ? i == term.level
                    : term.op == Comparator::ge ? i >= term.level
                                                 : i <= term.level;
    if (ok) mask |= LevelMask{1} << i;
  }
  return mask;
}

}  // namespace

BindResult bind_overlay(const OverlaySpec& spec, std::span<const CompiledGraph> graphs) {
  BindResult result;
  Binder b(graphs, result.diagnostics);
  BoundOverlay bound;
  bound.name = spec.name;

  std::set<std::string> flag_ids;
  for (const auto& flag : spec.red_flags) {
    const SourceLoc at{flag.line, 1};
    if (!flag_ids.insert(flag.id).second) {
      b.report(DiagnosticSeverity::error, diag::kDuplicate, "duplicate red flag id \"" + flag.id + "\"", flag.id, at);
    }
    BoundFlag bf{flag.id, flag.severity, {}, flag.message};
    bool ok = !flag.terms.empty();
    if (!ok) b.report(DiagnosticSeverity::error, diag::kMalformed, "red flag \"" + flag.id + "\" has no terms", flag.id, at);
    for (const auto& term : flag.terms) {
      auto ref = b.resolve(term.ref);
      if (!ref) {
        ok = false;
        continue;
      }
      auto level = b.level(*ref, term.level, term.ref, b.scale_name(*ref));
      if (!level) {
        ok = false;
        continue;
      }
      bf.terms.push_back(BoundTerm{std::move(*ref), term.op, *level});
    }
    if (!ok) continue;
    // Terms on the same attribute can contradict each other.
    std::map<std::string, LevelMask> per_attribute;
    for (const auto& t : bf.terms) {
      auto [it, fresh] = per_attribute.try_emplace(t.ref.str(), ~LevelMask{0});
      it->second &= allowed_levels(t);
    }
    for (const auto& [name, mask] : per_attribute) {
      if (mask == 0) {
        b.report(DiagnosticSeverity::warning, diag::kUnsatisfiableFlag,
                 "red flag \"" + flag.id + "\" can never trigger: its terms on " + name + " contradict each other",
                 flag.id, at);
      }
    }
    bound.flags.push_back(std::move(bf));
  }

  for (const auto& entry : spec.risk_entries) {
    auto ref = b.resolve(entry.ref);
    if (!(entry.weight > 0.0)) b.error(diag::kBadNumber, "risk weight of " + entry.ref.str() + " must be positive", entry.ref);
    if (!ref) continue;
    auto severities = b.table(*ref, entry.severities, entry.ref, "severity", true);
    if (!severities || !(entry.weight > 0.0)) continue;
    bound.risk_entries.push_back(BoundRiskEntry{std::move(*ref), entry.weight, std::move(*severities)});
  }

  std::set<std::string> category_names;
  for (const auto& category : spec.valuation_categories) {
    const SourceLoc at{category.line, 1};
    if (!category_names.insert(category.name).second) {
      b.report(DiagnosticSeverity::error, diag::kDuplicate, "duplicate valuation category \"" + category.name + "\"",
               category.name, at);
    }
    if (!(category.base > 0.0)) {
      b.report(DiagnosticSeverity::error, diag::kBadNumber,
               "base of valuation category \"" + category.name + "\" must be positive", category.name, at);
    }
    BoundCategory bc{category.name, category.base, {}};
    for (const auto& driver : category.drivers) {
      auto ref = b.resolve(driver.ref);
      if (!ref) continue;
      auto multipliers = b.table(*ref, driver.multipliers, driver.ref, "multiplier", false);
      if (!multipliers) continue;
      bc.drivers.push_back(BoundDriver{std::move(*ref), std::move(*multipliers)});
    }
    bound.categories.push_back(std::move(bc));
  }

  if (!has_errors(result.diagnostics)) result.value = std::move(bound);
  return result;
}

Status status_of(const ResultSet& results, const BoundRef& ref) {
  const auto it = results.find(ref.kb);
  if (it == results.end() || ref.attribute >= it->second.values.size()) return std::nullopt;
  return it->second.values[ref.attribute];
}

const char* to_string(Truth truth) noexcept {
  switch (truth) {
    case Truth::yes: return "true";
    case Truth::no: return "false";
    case Truth::unknown: return "unknown";
  }
  return "unknown";
}

const char* to_string(FlagState state) noexcept {
  switch (state) {
    case FlagState::triggered: return "triggered";
    case FlagState::potential: return "potential";
    case FlagState::clear: return "clear";
  }
  return "potential";
}

Truth term_truth(const BoundTerm& term, const Status& status) {
  if (!status) return Truth::unknown;
  const auto v = *status;
  bool holds = false;
  switch (term.op) {
    case Comparator::eq: holds = v == term.level; break;
    case Comparator::ge: holds = v >= term.level; break;
    case Comparator::le: holds = v <= term.level; break;
  }
  return holds ? Truth::yes : Truth::no;
}

std::vector<RedFlagStatus> detect_red_flags(const BoundOverlay& bound, const ResultSet& results) {
  std::vector<RedFlagStatus> out;
  out.reserve(bound.flags.size());
  for (const auto& flag : bound.flags) {
    RedFlagStatus s{flag.id, flag.severity, flag.message, FlagState::triggered, {}};
    bool any_false = false;
    bool any_unknown = false;
    for (const auto& term : flag.terms) {
      const Truth t = term_truth(term, status_of(results, term.ref));
      any_false = any_false || t == Truth::no;
      any_unknown = any_unknown || t == Truth::unknown;
      s.terms.push_back(t);
    }
    if (any_false) {
      s.state = FlagState::clear;
    } else if (any_unknown) {
      s.state = FlagState::potential;
    }
    out.push_back(std::move(s));
  }
  return out;
}

RiskReport risk_score(const BoundOverlay& bound, const ResultSet& results) {
  RiskReport report;
  double weighted = 0;
  double weights = 0;
  for (const auto& entry : bound.risk_entries) {
    const Status s = status_of(results, entry.ref);
    if (!s) continue;
    const double severity = entry.severities[*s];
    weighted += entry.weight * severity;
    weights += entry.weight;
    report.contributions.push_back({entry.ref.str(), entry.ref.levels[*s], entry.weight, severity});
  }
  if (!report.contributions.empty()) report.score = std::clamp(100.0 * (weighted / weights), 0.0, 100.0);
  if (!bound.risk_entries.empty()) {
    report.coverage =
        static_cast<double>(report.contributions.size()) / static_cast<double>(bound.risk_entries.size());
  }
  return report;
}

ValuationReport compute_valuation(const BoundOverlay& bound, const ResultSet& results) {
  ValuationReport report;
  double total = 0;
  for (const auto& category : bound.categories) {
    CategoryValue v{category.name, category.base, 0, 1};
    std::size_t resolved = 0;
    for (const auto& driver : category.drivers) {
      if (const Status s = status_of(results, driver.ref)) {
        v.raw *= driver.multipliers[*s];
        ++resolved;
      }
    }
    if (!category.drivers.empty()) {
      v.confidence = static_cast<double>(resolved) / static_cast<double>(category.drivers.size());
    }
    total += v.raw;
    report.categories.push_back(std::move(v));
  }
  if (total > 0) {
    for (auto& v : report.categories) v.share = v.raw / total;
  }
  return report;
}

}  // namespace iaes
