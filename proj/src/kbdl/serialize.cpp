#include <charconv>
#include <sstream>

#include "iaes/kbdl.hpp"

namespace iaes {

std::string quote_string(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 2);
  out.push_back('"');
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

void write_pattern(std::ostream& os, const Pattern& p) {
  if (p.is_wildcard()) {
    os << '*';
    return;
  }
  for (std::size_t i = 0; i < p.levels.size(); ++i) {
    if (i) os << '|';
    os << p.levels[i];
  }
}

void write_help(std::ostream& os, const std::vector<std::string>& chain) {
  os << "help { " << quote_string(chain.front());
  for (std::size_t i = 1; i < chain.size(); ++i) os << " more { " << quote_string(chain[i]) << " }";
  os << " }";
}

}  // namespace

std::string serialize_rule_block(const RuleBlock& block, std::string_view indent) {
  std::ostringstream os;
  os << indent << "rules (";
  for (std::size_t i = 0; i < block.children.size(); ++i) {
    if (i) os << ", ";
    os << block.children[i];
  }
  os << ") {\n";
  for (const auto& row : block.rows) {
    os << indent << "  (";
    for (std::size_t i = 0; i < row.patterns.size(); ++i) {
      if (i) os << ", ";
      write_pattern(os, row.patterns[i]);
    }
    os << ") -> " << row.output << '\n';
  }
  if (block.default_output) os << indent << "  default -> " << *block.default_output << '\n';
  os << indent << "}\n";
  return os.str();
}

std::string serialize_kb(const KnowledgeBase& kb) {
  std::ostringstream os;
  os << "kb " << quote_string(kb.id) << " version " << kb.version << '\n';
  for (const auto& scale : kb.scales) {
    os << "scale " << scale.name << " = ";
    for (std::size_t i = 0; i < scale.levels.size(); ++i) {
      if (i) os << " | ";
      os << scale.levels[i];
    }
    os << '\n';
  }
  for (const auto& attr : kb.attributes) {
    os << "attribute " << attr.name << " : " << attr.scale;
    if (attr.is_input()) {
      os << " input\n  question " << quote_string(attr.question) << '\n';
      if (!attr.help.empty()) {
        os << "  ";
        write_help(os, attr.help);
        os << '\n';
      }
    } else {
      os << " derived\n";
      if (attr.rules) os << serialize_rule_block(*attr.rules, "  ");
    }
  }
  os << "goal " << kb.goal << '\n';
  return os.str();
}

namespace {

std::string number_text(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string text(buf, res.ptr);
  // Keep a decimal point so the value reads as a real number.
  if (text.find_first_of(".eE") == std::string::npos && text.find_first_of("ni") == std::string::npos) text += ".0";
  return text;
}

void write_map(std::ostream& os, const LevelMap& map) {
  os << "{ ";
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (i) os << ", ";
    os << map[i].first << " -> " << number_text(map[i].second);
  }
  os << " }";
}

}  // namespace

std::string serialize_overlay(const OverlaySpec& spec) {
  std::ostringstream os;
  os << "overlay " << quote_string(spec.name) << '\n';
  for (const auto& flag : spec.red_flags) {
    os << "redflag " << quote_string(flag.id) << " severity " << to_string(flag.severity) << "\n  when ";
    for (std::size_t i = 0; i < flag.terms.size(); ++i) {
      if (i) os << " and ";
      const auto& t = flag.terms[i];
      os << t.ref.str() << ' ' << to_string(t.op) << ' ' << t.level;
    }
    os << "\n  message " << quote_string(flag.message) << '\n';
  }
  for (const auto& risk : spec.risk_entries) {
    os << "risk " << risk.ref.str() << " weight " << number_text(risk.weight) << ' ';
    write_map(os, risk.severities);
    os << '\n';
  }
  for (const auto& cat : spec.valuation_categories) {
    os << "valuation category " << quote_string(cat.name) << " base " << number_text(cat.base) << '\n';
    for (const auto& driver : cat.drivers) {
      os << "  driver " << driver.ref.str() << ' ';
      write_map(os, driver.multipliers);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace iaes
