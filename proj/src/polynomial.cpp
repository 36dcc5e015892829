#include "posmod/polynomial.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace posmod {

std::string monomial_to_string(const Monomial& m, const VarList& vars) {
  std::string out;
  for (std::size_t i = 0; i < m.exps.size(); ++i) {
    if (m.exps[i] == 0) continue;
    if (!out.empty()) out += "*";
    out += vars[i];
    if (m.exps[i] > 1) out += "^" + std::to_string(m.exps[i]);
  }
  return out.empty() ? "1" : out;
}

namespace detail {

std::string coeff_to_string(double c) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, c);  // shortest round-trip
  return std::string(buf, res.ptr);
}

std::string coeff_to_string(const Rational& c) { return c.str(); }

}  // namespace detail

Poly to_double_poly(const QPoly& p) {
  Poly out(p.vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, to_double(c));
  return out;
}

namespace {

// Single-purpose recursive-descent parser over a flat token stream.
struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Caret, Slash, End } kind;
  std::string text;
  int line;
  int col;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && is_space(text_[pos_])) advance();
    if (pos_ >= text_.size()) return {Token::End, "", line_, col_};
    int line = line_, col = col_;
    char c = text_[pos_];
    switch (c) {
      case '+': advance(); return {Token::Plus, "+", line, col};
      case '-': advance(); return {Token::Minus, "-", line, col};
      case '*': advance(); return {Token::Star, "*", line, col};
      case '^': advance(); return {Token::Caret, "^", line, col};
      case '/': advance(); return {Token::Slash, "/", line, col};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      bool saw_dot = false;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          num += d;
          advance();
        } else if (d == '.' && !saw_dot) {
          saw_dot = true;
          num += d;
          advance();
          if (pos_ >= text_.size() ||
              !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            throw ParseError("expected digits after decimal point", line_, col_);
        } else {
          break;
        }
      }
      return {Token::Number, num, line, col};
    }
    if (is_ident_start(c)) {
      std::string id;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
        id += text_[pos_];
        advance();
      }
      return {Token::Ident, id, line, col};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
  static bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

Rational decimal_to_rational(const std::string& text, int line, int col) {
  auto dot = text.find('.');
  try {
    if (dot == std::string::npos) return Rational(BigInt(text));
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    BigInt num(digits);
    BigInt den = 1;
    for (std::size_t i = 0; i < text.size() - dot - 1; ++i) den *= 10;
    return Rational(num, den);
  } catch (const std::exception&) {
    throw ParseError("invalid number '" + text + "'", line, col);
  }
}

class PolyParser {
public:
  PolyParser(std::string_view text, const VarList& vars)
      : lexer_(text), vars_(vars) {
    cur_ = lexer_.next();
  }

  QPoly parse() {
    QPoly out(vars_);
    if (cur_.kind == Token::End)
      throw ParseError("empty polynomial", cur_.line, cur_.col);
    bool first = true;
    while (cur_.kind != Token::End) {
      Rational sign(1);
      if (cur_.kind == Token::Plus || cur_.kind == Token::Minus) {
        if (cur_.kind == Token::Minus) sign = -1;
        consume();
      } else if (!first) {
        throw ParseError("expected '+' or '-' between terms", cur_.line, cur_.col);
      }
      auto [m, c] = parse_term();
      out.add_term(std::move(m), sign * c);
      first = false;
    }
    return out;
  }

private:
  void consume() { cur_ = lexer_.next(); }

  Token expect(Token::Kind kind, const char* what) {
    if (cur_.kind != kind)
      throw ParseError(std::string("expected ") + what, cur_.line, cur_.col);
    Token t = cur_;
    consume();
    return t;
  }

  std::pair<Monomial, Rational> parse_term() {
    Rational coeff(1);
    if (cur_.kind == Token::Number) {
      coeff = decimal_to_rational(cur_.text, cur_.line, cur_.col);
      consume();
      if (cur_.kind == Token::Slash) {
        consume();
        Token den = expect(Token::Number, "denominator");
        if (den.text.find('.') != std::string::npos)
          throw ParseError("denominator must be an integer", den.line, den.col);
        BigInt d(den.text);
        if (d == 0) throw ParseError("zero denominator", den.line, den.col);
        coeff /= Rational(d);
      }
      if (cur_.kind == Token::Star) {
        consume();
        // A '*' after the coefficient must introduce a monomial.
        Monomial m = parse_monomial();
        return {std::move(m), coeff};
      }
      if (cur_.kind == Token::Ident) {
        Monomial m = parse_monomial();
        return {std::move(m), coeff};
      }
      return {Monomial(vars_.size()), coeff};
    }
    if (cur_.kind == Token::Ident) return {parse_monomial(), coeff};
    throw ParseError("expected coefficient or variable", cur_.line, cur_.col);
  }

  Monomial parse_monomial() {
    Monomial m(vars_.size());
    while (true) {
      Token id = expect(Token::Ident, "variable name");
      auto it = std::find(vars_.begin(), vars_.end(), id.text);
      if (it == vars_.end())
        throw ParseError("unknown variable '" + id.text + "'", id.line, id.col);
      unsigned exp = 1;
      if (cur_.kind == Token::Caret) {
        consume();
        Token e = expect(Token::Number, "exponent");
        if (e.text.find('.') != std::string::npos)
          throw ParseError("exponent must be a nonnegative integer", e.line, e.col);
        unsigned long v = 0;
        auto res = std::from_chars(e.text.data(), e.text.data() + e.text.size(), v);
        if (res.ec != std::errc() || v > 1000000)
          throw ParseError("exponent out of range", e.line, e.col);
        exp = static_cast<unsigned>(v);
      }
      m.exps[static_cast<std::size_t>(it - vars_.begin())] += exp;
      if (cur_.kind == Token::Star) {
        // Lookahead: '*' continues the monomial only if a variable follows.
        consume();
        if (cur_.kind != Token::Ident)
          throw ParseError("expected variable after '*'", cur_.line, cur_.col);
        continue;
      }
      break;
    }
    return m;
  }

  Lexer lexer_;
  const VarList& vars_;
  Token cur_;
};

}  // namespace

QPoly parse_polynomial(std::string_view text, const VarList& vars) {
  PolyParser parser(text, vars);
  return parser.parse();
}

}  // namespace posmod
