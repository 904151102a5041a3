// Shared tokenizer for knowledge-base and overlay sources.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "iaes/kbdl.hpp"

namespace iaes::detail {

enum class TokenKind {
  identifier,
  string,
  number,
  symbol,  // = | : { } ( ) , -> * . >= <=
  end,
};

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;  // decoded for strings
  SourceLoc loc;
};

/// Tokenizes the whole source. Lexical problems are appended to `errors`; the
/// offending characters are skipped so later errors are still reported.
std::vector<Token> tokenize(std::string_view source, std::vector<ParseError>& errors);

/// Token cursor with the expect/accept helpers both grammars use.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  [[nodiscard]] const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  [[nodiscard]] bool at_end() const { return peek().kind == TokenKind::end; }

  [[nodiscard]] bool is_symbol(std::string_view sym) const;
  [[nodiscard]] bool is_keyword(std::string_view word) const;
  bool accept_symbol(std::string_view sym);
  bool accept_keyword(std::string_view word);

  // The expect_* family throws SyntaxError.
  const Token& expect_symbol(std::string_view sym);
  void expect_keyword(std::string_view word);
  std::string expect_identifier(std::string_view what);
  std::string expect_string(std::string_view what);
  double expect_number(std::string_view what);

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

struct SyntaxError {
  ParseError error;
};

[[noreturn]] void fail(const Token& at, std::string message);

std::string describe(const Token& token);

}  // namespace iaes::detail
