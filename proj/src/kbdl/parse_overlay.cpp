#include <cmath>
#include <string>

#include "iaes/kbdl.hpp"
#include "kbdl/lexer.hpp"

namespace iaes {

using detail::SyntaxError;
using detail::Token;
using detail::TokenKind;
using detail::TokenStream;

const char* to_string(Severity severity) noexcept {
  switch (severity) {
    case Severity::info: return "info";
    case Severity::warning: return "warning";
    case Severity::critical: return "critical";
  }
  return "info";
}

const char* to_string(Comparator op) noexcept {
  switch (op) {
    case Comparator::eq: return "=";
    case Comparator::ge: return ">=";
    case Comparator::le: return "<=";
  }
  return "=";
}

namespace {

bool is_entry_keyword(const Token& tok) {
  return tok.kind == TokenKind::identifier &&
         (tok.text == "redflag" || tok.text == "risk" || tok.text == "valuation");
}

class OverlayParser {
 public:
  OverlayParser(std::vector<Token> tokens, std::vector<ParseError>& errors)
      : ts_(std::move(tokens)), errors_(errors) {}

  OverlaySpec run() {
    if (ts_.at_end() || !ts_.is_keyword("overlay")) {
      errors_.push_back({ts_.peek().loc, "missing header (expected 'overlay \"<name>\"')"});
      synchronize();
    } else {
      guarded([&] {
        ts_.expect_keyword("overlay");
        spec_.name = ts_.expect_string("overlay name string");
      });
    }
    while (!ts_.at_end()) {
      guarded([&] {
        if (ts_.is_keyword("redflag")) {
          red_flag();
        } else if (ts_.is_keyword("risk")) {
          risk();
        } else if (ts_.is_keyword("valuation")) {
          valuation();
        } else {
          detail::fail(ts_.peek(),
                       "expected 'redflag', 'risk' or 'valuation', found " + detail::describe(ts_.peek()));
        }
      });
    }
    return std::move(spec_);
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
      const bool after_dot = prev.kind == TokenKind::symbol && prev.text == ".";
      if (is_entry_keyword(ts_.peek()) && !after_dot) return;
    }
  }

  QualifiedRef qref() {
    const Token& start = ts_.peek();
    QualifiedRef ref;
    ref.kb = ts_.expect_identifier("qualified reference 'kb.attribute'");
    if (!ts_.is_symbol(".")) {
      detail::fail(ts_.peek(), "expected '.' in qualified reference after '" + ref.kb + "'");
    }
    ts_.next();
    ref.attribute = ts_.expect_identifier("attribute name after '.'");
    ref.line = start.loc.line;
    ref.column = start.loc.column;
    return ref;
  }

  double finite_number(std::string_view what) {
    const Token& tok = ts_.peek();
    if (tok.kind != TokenKind::number) {
      detail::fail(tok, std::string(what) + " is not a finite number: found " + detail::describe(tok));
    }
    const double v = ts_.expect_number(what);
    if (!std::isfinite(v)) detail::fail(tok, std::string(what) + " is not a finite number: " + tok.text);
    return v;
  }

  void red_flag() {
    RedFlagDef flag;
    flag.line = ts_.peek().loc.line;
    ts_.expect_keyword("redflag");
    flag.id = ts_.expect_string("red flag id string");
    ts_.expect_keyword("severity");
    const Token& sev = ts_.peek();
    const std::string word = ts_.expect_identifier("severity");
    if (word == "info") {
      flag.severity = Severity::info;
    } else if (word == "warning") {
      flag.severity = Severity::warning;
    } else if (word == "critical") {
      flag.severity = Severity::critical;
    } else {
      detail::fail(sev, "unknown severity '" + word + "' (expected info, warning or critical)");
    }
    if (!ts_.is_keyword("when")) detail::fail(ts_.peek(), "expected 'when', found " + detail::describe(ts_.peek()));
    ts_.next();
    if (ts_.peek().kind != TokenKind::identifier || ts_.is_keyword("message")) {
      detail::fail(ts_.peek(), "empty condition: 'when' needs at least one term");
    }
    flag.terms.push_back(term());
    while (ts_.accept_keyword("and")) flag.terms.push_back(term());
    ts_.expect_keyword("message");
    flag.message = ts_.expect_string("message string");
    spec_.red_flags.push_back(std::move(flag));
  }

  FlagTerm term() {
    FlagTerm t;
    t.ref = qref();
    if (ts_.accept_symbol("=")) {
      t.op = Comparator::eq;
    } else if (ts_.accept_symbol(">=")) {
      t.op = Comparator::ge;
    } else if (ts_.accept_symbol("<=")) {
      t.op = Comparator::le;
    } else {
      detail::fail(ts_.peek(), "expected '=', '>=' or '<=', found " + detail::describe(ts_.peek()));
    }
    t.level = ts_.expect_identifier("level name");
    return t;
  }

  LevelMap level_map() {
    ts_.expect_symbol("{");
    LevelMap map;
    do {
      std::string level = ts_.expect_identifier("level name");
      ts_.expect_symbol("->");
      map.emplace_back(std::move(level), finite_number("map value"));
    } while (ts_.accept_symbol(","));
    ts_.expect_symbol("}");
    return map;
  }

  void risk() {
    ts_.expect_keyword("risk");
    RiskEntryDef entry;
    entry.ref = qref();
    ts_.expect_keyword("weight");
    entry.weight = finite_number("weight");
    entry.severities = level_map();
    spec_.risk_entries.push_back(std::move(entry));
  }

  void valuation() {
    ValuationCategoryDef cat;
    cat.line = ts_.peek().loc.line;
    ts_.expect_keyword("valuation");
    ts_.expect_keyword("category");
    cat.name = ts_.expect_string("category name string");
    ts_.expect_keyword("base");
    cat.base = finite_number("base");
    while (ts_.accept_keyword("driver")) {
      ValuationDriverDef driver;
      driver.ref = qref();
      driver.multipliers = level_map();
      cat.drivers.push_back(std::move(driver));
    }
    spec_.valuation_categories.push_back(std::move(cat));
  }

  TokenStream ts_;
  std::vector<ParseError>& errors_;
  OverlaySpec spec_;
};

}  // namespace

ParseResult<OverlaySpec> parse_overlay(std::string_view source) {
  ParseResult<OverlaySpec> result;
  auto tokens = detail::tokenize(source, result.errors);
  OverlaySpec spec = OverlayParser(std::move(tokens), result.errors).run();
  if (result.errors.empty()) result.value = std::move(spec);
  return result;
}

}  // namespace iaes
