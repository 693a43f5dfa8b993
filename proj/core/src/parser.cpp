#include "sdgrad/parser.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include "sdgrad/error.hpp"
#include "sdgrad/names.hpp"
#include "sdgrad/unary_ops.hpp"

namespace sdg {

namespace {

enum class Tok { Ident, Int, Real, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

const char* const kKeywords[] = {"sum", "in", "let", "if", "then", "not", "true", "false", "unique"};

bool is_keyword(const std::string& s) {
  for (const char* k : kKeywords) {
    if (s == k) return true;
  }
  return false;
}

class Lexer {
 public:
  Lexer(const std::string& src, bool internal) : src_(src), internal_(internal) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", line_, col_});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
      if (peek() == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      return;
    }
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  Token next() {
    int line = line_, col = col_;
    char c = peek();
    if (ident_start(c) || (internal_ && c == '?' && ident_start(peek(1)))) {
      std::string s;
      if (c == '?') {
        s += c;
        advance();
      }
      while (ident_char(peek()) || (peek() == kReservedChar)) {
        if (peek() == kReservedChar && !internal_) {
          throw ParseError("identifiers may not contain '$'", line_, col_);
        }
        s += peek();
        advance();
      }
      if (internal_) {
        while (peek() == '\'') {
          s = tangent_name(s);
          advance();
        }
      }
      return {Tok::Ident, s, line, col};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string s;
      bool real = false;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        s += peek();
        advance();
      }
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        real = true;
        s += '.';
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          s += peek();
          advance();
        }
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (std::isdigit(static_cast<unsigned char>(peek(1))) ||
           ((peek(1) == '-' || peek(1) == '+') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
        real = true;
        s += peek();
        advance();
        if (peek() == '-' || peek() == '+') {
          s += peek();
          advance();
        }
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          s += peek();
          advance();
        }
      }
      return {real ? Tok::Real : Tok::Int, s, line, col};
    }
    if (c == '-' && peek(1) == '>') {
      advance();
      advance();
      return {Tok::Punct, "->", line, col};
    }
    static const std::string singles = "(){}<>,=+*:-";
    if (singles.find(c) != std::string::npos) {
      advance();
      return {Tok::Punct, std::string(1, c), line, col};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

  const std::string& src_;
  bool internal_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, const ParseOptions& opts) : toks_(std::move(toks)), opts_(opts) {}

  ExprPtr run() {
    ExprPtr e = expr();
    if (cur().kind != Tok::End) fail("unexpected '" + cur().text + "'");
    return e;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur().line, cur().col);
  }

  bool is_punct(const char* p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool is_word(const char* w) const { return cur().kind == Tok::Ident && cur().text == w; }

  bool accept(const char* p) {
    if (is_punct(p)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(const char* p) {
    if (!accept(p)) {
      fail(std::string("expected '") + p + "'" +
           (cur().kind == Tok::End ? " at end of input" : ", found '" + cur().text + "'"));
    }
  }

  void expect_word(const char* w) {
    if (!is_word(w)) fail(std::string("expected '") + w + "'");
    ++pos_;
  }

  void physical_only(const std::string& construct) const {
    if (opts_.mode == Fragment::Logical) {
      throw FragmentError(std::to_string(cur().line) + ":" + std::to_string(cur().col) + ": " +
                          construct + " is only allowed in physical programs");
    }
  }

  std::string binder_name() {
    if (cur().kind != Tok::Ident) fail("expected a variable name");
    std::string n = cur().text;
    if (is_keyword(n)) fail("'" + n + "' is a keyword");
    if (find_unary_op(n)) fail("'" + n + "' is an operation name");
    ++pos_;
    return n;
  }

  ExprPtr expr() {
    if (is_word("sum")) return sum_expr();
    if (is_word("let")) return let_expr();
    if (is_word("if")) return if_expr();
    return eq_expr();
  }

  ExprPtr sum_expr() {
    ++pos_;
    expect("(");
    expect("<");
    std::string k = binder_name();
    expect(",");
    std::string v = binder_name();
    if (k == v && k != "_") fail("sum binds '" + k + "' twice");
    expect(">");
    expect_word("in");
    ExprPtr range = expr();
    expect(")");
    ExprPtr body = expr();
    return ex::sum(k, v, range, body);
  }

  ExprPtr let_expr() {
    ++pos_;
    if (accept("<")) {
      std::vector<std::string> names{binder_name()};
      while (accept(",")) names.push_back(binder_name());
      expect(">");
      expect("=");
      expect("<");
      std::vector<ExprPtr> bounds{expr()};
      while (accept(",")) bounds.push_back(expr());
      expect(">");
      if (bounds.size() != names.size()) fail("tupled let arity mismatch");
      expect_word("in");
      ExprPtr body = expr();
      for (std::size_t i = names.size(); i-- > 0;) body = ex::let(names[i], bounds[i], body);
      return body;
    }
    std::string x = binder_name();
    expect("=");
    ExprPtr bound = expr();
    expect_word("in");
    return ex::let(x, bound, expr());
  }

  ExprPtr if_expr() {
    ++pos_;
    ExprPtr c = expr();
    expect_word("then");
    return ex::if_(c, expr());
  }

  ExprPtr eq_expr() {
    ExprPtr lhs = add_expr();
    while (accept("=")) lhs = ex::eq(lhs, add_expr());
    return lhs;
  }

  ExprPtr add_expr() {
    ExprPtr lhs = mul_expr();
    while (accept("+")) lhs = ex::add(lhs, mul_expr());
    return lhs;
  }

  ExprPtr mul_expr() {
    ExprPtr lhs = unary_expr();
    while (accept("*")) lhs = ex::mul(lhs, unary_expr());
    return lhs;
  }

  ExprPtr unary_expr() {
    if (is_word("not")) {
      ++pos_;
      return ex::not_(unary_expr());
    }
    return postfix();
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    while (is_punct("(")) {
      ++pos_;
      ExprPtr k = expr();
      if (is_punct(":")) {
        physical_only("subarray");
        ++pos_;
        ExprPtr hi = expr();
        expect(")");
        e = ex::subarray(e, k, hi);
      } else {
        expect(")");
        e = ex::lookup(e, k);
      }
    }
    return e;
  }

  ExprPtr number(bool negative) {
    const Token& t = cur();
    ++pos_;
    if (t.kind == Tok::Int) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) throw ParseError("integer literal out of range", t.line, t.col);
      return ex::int_(negative ? -v : v);
    }
    double v = std::stod(t.text);
    return ex::real(negative ? -v : v);
  }

  ExprPtr primary() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Int:
      case Tok::Real:
        return number(false);
      case Tok::End:
        fail("unexpected end of input");
      case Tok::Punct:
        break;
      case Tok::Ident: {
        if (t.text == "sum" || t.text == "let" || t.text == "if") return expr();
        if (t.text == "true" || t.text == "false") {
          ++pos_;
          return ex::bool_(t.text == "true");
        }
        if (t.text == "unique") {
          physical_only("unique");
          ++pos_;
          expect("(");
          ExprPtr a = expr();
          expect(")");
          return ex::unique(a);
        }
        if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
        if (find_unary_op(t.text)) {
          std::string op = t.text;
          ++pos_;
          expect("(");
          ExprPtr a = expr();
          expect(")");
          return ex::unary(op, a);
        }
        if (t.text == "_") fail("'_' cannot be referenced");
        ++pos_;
        return ex::var(t.text);
      }
    }
    if (t.text == "-") {
      ++pos_;
      if (cur().kind != Tok::Int && cur().kind != Tok::Real) fail("expected a number after '-'");
      return number(true);
    }
    if (t.text == "{") {
      ++pos_;
      if (accept("}")) return ex::empty();
      ExprPtr k = expr();
      expect("->");
      ExprPtr v = expr();
      expect("}");
      return ex::singleton(k, v);
    }
    if (t.text == "(") {
      ++pos_;
      ExprPtr e = expr();
      if (is_punct(":")) {
        physical_only("range");
        ++pos_;
        ExprPtr hi = expr();
        expect(")");
        return ex::range(e, hi);
      }
      expect(")");
      return e;
    }
    fail("unexpected '" + t.text + "'");
  }

  std::vector<Token> toks_;
  ParseOptions opts_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse(const std::string& source, const ParseOptions& opts) {
  Lexer lex(source, opts.allow_internal_names);
  Parser p(lex.run(), opts);
  return p.run();
}

}  // namespace sdg
