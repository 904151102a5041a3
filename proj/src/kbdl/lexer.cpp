#include "kbdl/lexer.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>

namespace iaes::detail {

namespace {

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_tail(char c) { return is_lower(c) || is_digit(c) || c == '_'; }

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<ParseError>& errors) : src_(src), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      if (pos_ >= src_.size()) break;
      const SourceLoc start{line_, col_};
      last_end_ = start;
      const char c = src_[pos_];
      if (is_lower(c)) {
        out.push_back(identifier(start));
      } else if (c == '"') {
        if (auto tok = string_literal(start)) out.push_back(std::move(*tok));
      } else if (is_digit(c) || (c == '-' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
        out.push_back(number(start));
      } else if (auto sym = symbol()) {
        out.push_back(Token{TokenKind::symbol, std::string(*sym), start});
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        // Consume the whole word so one bad identifier yields one error.
        std::string word;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          word.push_back(src_[pos_]);
          advance();
        }
        error(start, "invalid identifier '" + word + "' (identifiers match [a-z][a-z0-9_]*)");
      } else {
        error(start, std::string("unexpected character '") + c + "'");
        advance();
      }
    }
    // End-of-input errors point at the last token rather than past the text.
    out.push_back(Token{TokenKind::end, "", last_end_});
    return out;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
      // Columns count code points, not UTF-8 continuation bytes.
      ++col_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  Token identifier(SourceLoc start) {
    std::string text;
    while (pos_ < src_.size() && is_ident_tail(src_[pos_])) {
      text.push_back(src_[pos_]);
      advance();
    }
    if (pos_ < src_.size() && std::isupper(static_cast<unsigned char>(src_[pos_]))) {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        text.push_back(src_[pos_]);
        advance();
      }
      error(start, "invalid identifier '" + text + "' (identifiers match [a-z][a-z0-9_]*)");
    }
    return Token{TokenKind::identifier, std::move(text), start};
  }

  std::optional<Token> string_literal(SourceLoc start) {
    advance();  // opening quote
    std::string text;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '"') {
        advance();
        return Token{TokenKind::string, std::move(text), start};
      }
      if (c == '\n') break;
      if (c == '\\') {
        const SourceLoc esc{line_, col_};
        advance();
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\\')) {
          text.push_back(src_[pos_]);
          advance();
          continue;
        }
        error(esc, "invalid escape sequence (only \\\" and \\\\ are allowed)");
        continue;
      }
      text.push_back(c);
      advance();
    }
    error(start, "unterminated string");
    return std::nullopt;
  }

  Token number(SourceLoc start) {
    std::string text;
    auto take_digits = [&] {
      while (pos_ < src_.size() && is_digit(src_[pos_])) {
        text.push_back(src_[pos_]);
        advance();
      }
    };
    if (src_[pos_] == '-') {
      text.push_back('-');
      advance();
    }
    take_digits();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
      text.push_back('.');
      advance();
      take_digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && is_digit(src_[look])) {
        while (pos_ < look) {
          text.push_back(src_[pos_]);
          advance();
        }
        take_digits();
      }
    }
    return Token{TokenKind::number, std::move(text), start};
  }

  std::optional<std::string_view> symbol() {
    static constexpr std::string_view two[] = {"->", ">=", "<="};
    static constexpr std::string_view one[] = {"=", "|", ":", "{", "}", "(", ")", ",", "*", "."};
    for (auto s : two) {
      if (src_.substr(pos_, 2) == s) {
        advance();
        advance();
        return s;
      }
    }
    for (auto s : one) {
      if (src_[pos_] == s[0]) {
        advance();
        return s;
      }
    }
    return std::nullopt;
  }

  void error(SourceLoc at, std::string message) { errors_.push_back({at, std::move(message)}); }

  std::string_view src_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  SourceLoc last_end_{1, 1};
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, std::vector<ParseError>& errors) {
  return Lexer(source, errors).run();
}

std::string describe(const Token& token) {
  switch (token.kind) {
    case TokenKind::end: return "end of input";
    case TokenKind::string: return "string \"" + token.text + "\"";
    case TokenKind::number: return "number " + token.text;
    case TokenKind::identifier: return "'" + token.text + "'";
    case TokenKind::symbol: return "'" + token.text + "'";
  }
  return "token";
}

void fail(const Token& at, std::string message) { throw SyntaxError{ParseError{at.loc, std::move(message)}}; }

const Token& TokenStream::peek(std::size_t ahead) const {
  const std::size_t i = pos_ + ahead;
  return i < tokens_.size() ? tokens_[i] : tokens_.back();
}

const Token& TokenStream::next() {
  const Token& tok = peek();
  if (pos_ + 1 < tokens_.size()) ++pos_;
  return tok;
}

bool TokenStream::is_symbol(std::string_view sym) const {
  return peek().kind == TokenKind::symbol && peek().text == sym;
}

bool TokenStream::is_keyword(std::string_view word) const {
  return peek().kind == TokenKind::identifier && peek().text == word;
}

bool TokenStream::accept_symbol(std::string_view sym) {
  if (!is_symbol(sym)) return false;
  next();
  return true;
}

bool TokenStream::accept_keyword(std::string_view word) {
  if (!is_keyword(word)) return false;
  next();
  return true;
}

const Token& TokenStream::expect_symbol(std::string_view sym) {
  if (!is_symbol(sym)) fail(peek(), "expected '" + std::string(sym) + "', found " + describe(peek()));
  return next();
}

void TokenStream::expect_keyword(std::string_view word) {
  if (!is_keyword(word)) fail(peek(), "expected '" + std::string(word) + "', found " + describe(peek()));
  next();
}

std::string TokenStream::expect_identifier(std::string_view what) {
  if (peek().kind != TokenKind::identifier) {
    fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
  }
  return next().text;
}

std::string TokenStream::expect_string(std::string_view what) {
  if (peek().kind != TokenKind::string) {
    fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
  }
  return next().text;
}

double TokenStream::expect_number(std::string_view what) {
  if (peek().kind != TokenKind::number) {
    fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
  }
  return std::strtod(next().text.c_str(), nullptr);
}

}  // namespace iaes::detail
