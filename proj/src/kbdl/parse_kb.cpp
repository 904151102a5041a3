#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "iaes/kbdl.hpp"
#include "kbdl/lexer.hpp"

namespace iaes {

using detail::SyntaxError;
using detail::Token;
using detail::TokenKind;
using detail::TokenStream;

std::string to_string(const ParseError& error) {
  return std::to_string(error.loc.line) + ":" + std::to_string(error.loc.column) + ": " + error.message;
}

std::optional<std::size_t> Scale::index_of(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return i;
  }
  return std::nullopt;
}

const Scale* KnowledgeBase::find_scale(std::string_view name) const {
  for (const auto& s : scales) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Attribute* KnowledgeBase::find_attribute(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const Scale* KnowledgeBase::scale_of(std::string_view attribute) const {
  const Attribute* attr = find_attribute(attribute);
  return attr != nullptr ? find_scale(attr->scale) : nullptr;
}

bool is_identifier(std::string_view text) {
  if (text.empty() || text[0] < 'a' || text[0] > 'z') return false;
  for (char c : text) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

namespace {

bool is_item_keyword(const Token& tok) {
  return tok.kind == TokenKind::identifier &&
         (tok.text == "scale" || tok.text == "attribute" || tok.text == "goal");
}

// Item keywords can also appear as level or attribute names; only treat them
// as a resync point when the previous token cannot precede a name.
bool value_position(const Token& prev) {
  if (prev.kind != TokenKind::symbol) return false;
  return prev.text == "(" || prev.text == "," || prev.text == "|" || prev.text == "->" ||
         prev.text == ":" || prev.text == "=";
}

class KbParser {
 public:
  KbParser(std::vector<Token> tokens, std::vector<ParseError>& errors)
      : ts_(std::move(tokens)), errors_(errors) {}

  KnowledgeBase run() {
    if (ts_.at_end() || !ts_.is_keyword("kb")) {
      error(ts_.peek().loc, "missing header (expected 'kb \"<id>\" version <n>')");
      synchronize();
    } else {
      guarded([&] { header(); });
    }
    while (!ts_.at_end()) {
      guarded([&] {
        if (ts_.is_keyword("scale")) {
          scale();
        } else if (ts_.is_keyword("attribute")) {
          attribute();
        } else if (ts_.is_keyword("goal")) {
          goal();
        } else {
          detail::fail(ts_.peek(), "expected 'scale', 'attribute' or 'goal', found " + detail::describe(ts_.peek()));
        }
      });
    }
    check_model();
    return std::move(kb_);
  }

 private:
  template <typename F>
  void guarded(F&& body) {
    try {
      body();
    } catch (const SyntaxError& e) {
      errors_.push_back(e.error);
      synchronize();
    }
  }

  void synchronize() {
    while (!ts_.at_end()) {
      const Token prev = ts_.next();
      if (is_item_keyword(ts_.peek()) && !value_position(prev)) return;
    }
  }

  void error(SourceLoc loc, std::string message) { errors_.push_back({loc, std::move(message)}); }

  void header() {
    ts_.expect_keyword("kb");
    kb_.id = ts_.expect_string("knowledge base id string");
    ts_.expect_keyword("version");
    const Token& v = ts_.peek();
    if (v.kind != TokenKind::number || v.text.find_first_not_of("0123456789") != std::string::npos) {
      detail::fail(v, "expected non-negative integer version, found " + detail::describe(v));
    }
    try {
      kb_.version = std::stoll(ts_.next().text);
    } catch (const std::out_of_range&) {
      detail::fail(v, "version number out of range");
    }
  }

  void scale() {
    const SourceLoc loc = ts_.peek().loc;
    ts_.expect_keyword("scale");
    Scale s;
    s.name = ts_.expect_identifier("scale name");
    ts_.expect_symbol("=");
    s.levels.push_back(ts_.expect_identifier("level name"));
    while (ts_.accept_symbol("|")) s.levels.push_back(ts_.expect_identifier("level name"));
    if (s.levels.size() < 2) error(loc, "scale '" + s.name + "' needs at least 2 levels");
    std::unordered_set<std::string> seen;
    for (const auto& level : s.levels) {
      if (!seen.insert(level).second) error(loc, "duplicate level '" + level + "' in scale '" + s.name + "'");
    }
    if (!scale_names_.insert(s.name).second) {
      error(loc, "duplicate scale name '" + s.name + "'");
      return;
    }
    kb_.scales.push_back(std::move(s));
  }

  void attribute() {
    Attribute attr;
    attr.loc = ts_.peek().loc;
    ts_.expect_keyword("attribute");
    attr.name = ts_.expect_identifier("attribute name");
    ts_.expect_symbol(":");
    attr.scale = ts_.expect_identifier("scale name");
    if (ts_.accept_keyword("input")) {
      attr.kind = AttributeKind::input;
      ts_.expect_keyword("question");
      attr.question = ts_.expect_string("question text");
      if (ts_.is_keyword("help")) attr.help = help();
    } else if (ts_.accept_keyword("derived")) {
      attr.kind = AttributeKind::derived;
      attr.rules = rule_block();
    } else {
      detail::fail(ts_.peek(), "expected 'input' or 'derived', found " + detail::describe(ts_.peek()));
    }
    if (!attribute_names_.insert(attr.name).second) {
      error(attr.loc, "duplicate attribute name '" + attr.name + "'");
      return;
    }
    kb_.attributes.push_back(std::move(attr));
  }

  std::vector<std::string> help() {
    const Token& start = ts_.peek();
    ts_.expect_keyword("help");
    ts_.expect_symbol("{");
    std::vector<std::string> chain;
    chain.push_back(ts_.expect_string("help text"));
    while (ts_.is_keyword("more")) {
      const Token& more = ts_.next();
      ts_.expect_symbol("{");
      chain.push_back(ts_.expect_string("help text"));
      ts_.expect_symbol("}");
      if (chain.size() > kMaxHelpDepth) {
        detail::fail(more, "help drill-down deeper than " + std::to_string(kMaxHelpDepth) + " levels");
      }
    }
    if (!ts_.is_symbol("}")) {
      detail::fail(ts_.peek(), "expected 'more' or '}' in help block starting at line " +
                                   std::to_string(start.loc.line) + ", found " + detail::describe(ts_.peek()));
    }
    ts_.next();
    return chain;
  }

  RuleBlock rule_block() {
    RuleBlock block;
    ts_.expect_keyword("rules");
    ts_.expect_symbol("(");
    block.children.push_back(ts_.expect_identifier("child attribute name"));
    while (ts_.accept_symbol(",")) block.children.push_back(ts_.expect_identifier("child attribute name"));
    ts_.expect_symbol(")");
    ts_.expect_symbol("{");
    while (!ts_.is_symbol("}")) {
      const Token& first = ts_.peek();
      if (first.kind == TokenKind::end) detail::fail(first, "unterminated rule block, expected '}'");
      if (block.default_output) error(first.loc, "rows after 'default' are not allowed; default must be last");
      if (ts_.accept_keyword("default")) {
        ts_.expect_symbol("->");
        const std::string out = ts_.expect_identifier("output level");
        if (!block.default_output) {
          block.default_output = out;
          block.default_loc = first.loc;
        }
        continue;
      }
      RuleRow row = rule_row();
      if (row.patterns.size() != block.children.size()) {
        error(row.loc, "arity mismatch, expected " + std::to_string(block.children.size()) + " patterns, found " +
                           std::to_string(row.patterns.size()));
      }
      if (!block.default_output) block.rows.push_back(std::move(row));
    }
    const Token& close = ts_.next();
    if (block.rows.empty() && !block.default_output) error(close.loc, "rule block has no rows");
    return block;
  }

  RuleRow rule_row() {
    RuleRow row;
    row.loc = ts_.peek().loc;
    ts_.expect_symbol("(");
    row.patterns.push_back(pattern());
    while (ts_.accept_symbol(",")) row.patterns.push_back(pattern());
    ts_.expect_symbol(")");
    ts_.expect_symbol("->");
    row.output = ts_.expect_identifier("output level");
    return row;
  }

  Pattern pattern() {
    if (ts_.accept_symbol("*")) return Pattern::wildcard();
    const Token& start = ts_.peek();
    Pattern p;
    p.levels.push_back(ts_.expect_identifier("level name or '*'"));
    while (ts_.accept_symbol("|")) p.levels.push_back(ts_.expect_identifier("level name"));
    std::set<std::string> seen;
    for (const auto& level : p.levels) {
      if (!seen.insert(level).second) error(start.loc, "duplicate level '" + level + "' in pattern");
    }
    return p;
  }

  void goal() {
    const SourceLoc loc = ts_.peek().loc;
    ts_.expect_keyword("goal");
    std::string name = ts_.expect_identifier("goal attribute name");
    if (have_goal_) {
      error(loc, "duplicate goal declaration");
      return;
    }
    have_goal_ = true;
    kb_.goal = std::move(name);
    kb_.goal_loc = loc;
  }

  // Checks that need the whole file: references to scales, level names in
  // patterns (children may be declared later), and the goal.
  void check_model() {
    for (const auto& attr : kb_.attributes) {
      const Scale* own = kb_.find_scale(attr.scale);
      if (own == nullptr) {
        error(attr.loc, "unknown scale '" + attr.scale + "' for attribute '" + attr.name + "'");
      }
      if (!attr.rules) continue;
      const RuleBlock& block = *attr.rules;
      auto check_output = [&](const std::string& level, SourceLoc loc) {
        if (own != nullptr && !own->index_of(level)) {
          error(loc, "unknown level '" + level + "' for attribute '" + attr.name + "' (scale " + own->name + ")");
        }
      };
      for (const auto& row : block.rows) {
        const std::size_t n = std::min(row.patterns.size(), block.children.size());
        for (std::size_t i = 0; i < n; ++i) {
          const Scale* child_scale = kb_.scale_of(block.children[i]);
          if (child_scale == nullptr) continue;  // undeclared child: reported by validation
          for (const auto& level : row.patterns[i].levels) {
            if (!child_scale->index_of(level)) {
              error(row.loc, "unknown level '" + level + "' for attribute '" + block.children[i] + "' (scale " +
                                 child_scale->name + ")");
            }
          }
        }
        check_output(row.output, row.loc);
      }
      if (block.default_output) check_output(*block.default_output, block.default_loc);
    }
    if (!have_goal_) {
      error(ts_.peek().loc, "missing goal declaration");
    } else if (const Attribute* g = kb_.find_attribute(kb_.goal); g == nullptr) {
      error(kb_.goal_loc, "goal '" + kb_.goal + "' is not a declared attribute");
    } else if (g->is_input()) {
      error(kb_.goal_loc, "goal '" + kb_.goal + "' must be a derived attribute");
    }
  }

  TokenStream ts_;
  std::vector<ParseError>& errors_;
  KnowledgeBase kb_;
  std::unordered_set<std::string> scale_names_;
  std::unordered_set<std::string> attribute_names_;
  bool have_goal_ = false;
};

}  // namespace

ParseResult<KnowledgeBase> parse_kb(std::string_view source) {
  ParseResult<KnowledgeBase> result;
  auto tokens = detail::tokenize(source, result.errors);
  KnowledgeBase kb = KbParser(std::move(tokens), result.errors).run();
  if (result.errors.empty()) result.value = std::move(kb);
  return result;
}

}  // namespace iaes
