#pragma once

// A hermetic interpreter for a small Python subset. It runs straight-line
// arithmetic programs of the kind the logic-generation stage emits, so the
// pipeline can be exercised without an external sandbox.
//
// Supported: int/float/bool/str/None values with Python arithmetic rules,
// assignment and augmented assignment, comparison chains, and/or/not,
// conditional expressions, if/elif/else, while, for-in-range, break,
// continue, pass, print(), f-strings with {expr} and {expr:.Nf}, the builtins
// abs/min/max/round/int/float/str/bool/len/pow, `import math` and `from math import ...`.
//
// Integers are 64-bit; overflow is reported as a runtime error rather than
// promoted to big integers.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "logicforge/answer.hpp"
#include "logicforge/text.hpp"

namespace logicforge::mini {

enum class Outcome { ok, timeout, runtime_error, forbidden_operation, output_overflow };

struct RunLimits {
  std::chrono::duration<double> wall_timeout{10.0};
  std::size_t memory_cap = 512u << 20;
  std::size_t output_cap = 64u << 10;
};

struct RunResult {
  Outcome outcome = Outcome::runtime_error;
  std::optional<std::string> answer;
  std::string diagnostic;
  std::string stdout_text;
};

struct None {
  bool operator==(const None&) const = default;
};
using Value = std::variant<None, bool, std::int64_t, double, std::string>;

// Raised inside the interpreter; converted to RunResult at the boundary.
struct Fault {
  Outcome outcome;
  std::string message;
};

namespace detail {

[[noreturn]] inline void fail(std::string msg) { throw Fault{Outcome::runtime_error, std::move(msg)}; }
[[noreturn]] inline void forbid(std::string msg) {
  throw Fault{Outcome::forbidden_operation, std::move(msg)};
}

// ---------------------------------------------------------------- lexer

enum class Tok { name, number, string, fstring, op, newline, indent, dedent, end };

struct Token {
  Tok kind;
  std::string text;
  int line;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::vector<std::size_t> indents{0};
  int depth = 0;  // bracket nesting
  int line = 0;
  bool joined = false;  // previous line ended with a backslash
  auto lines = text::split_lines(src);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    line = static_cast<int>(li) + 1;
    std::string_view l = lines[li];
    std::size_t i = 0;
    bool continues = false;
    if (depth == 0 && !joined) {
      std::size_t col = 0;
      while (i < l.size() && (l[i] == ' ' || l[i] == '\t')) {
        col += l[i] == '\t' ? 8 - (col % 8) : 1;
        ++i;
      }
      if (i == l.size() || l[i] == '#') continue;
      if (col > indents.back()) {
        indents.push_back(col);
        out.push_back({Tok::indent, {}, line});
      } else {
        while (col < indents.back()) {
          indents.pop_back();
          out.push_back({Tok::dedent, {}, line});
        }
        if (col != indents.back()) fail("IndentationError: unindent does not match (line " + std::to_string(line) + ")");
      }
    }
    while (i < l.size()) {
      char c = l[i];
      if (c == ' ' || c == '\t') { ++i; continue; }
      if (c == '#') break;
      if (c == '\\' && i + 1 == l.size()) {
        continues = true;
        break;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && i + 1 < l.size() && std::isdigit(static_cast<unsigned char>(l[i + 1])))) {
        std::size_t j = i;
        while (j < l.size() && (std::isalnum(static_cast<unsigned char>(l[j])) || l[j] == '.' || l[j] == '_' ||
                                ((l[j] == '+' || l[j] == '-') && (l[j - 1] == 'e' || l[j - 1] == 'E'))))
          ++j;
        out.push_back({Tok::number, std::string(l.substr(i, j - i)), line});
        i = j;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < l.size() && text::is_ident_char(l[j])) ++j;
        std::string word(l.substr(i, j - i));
        bool fprefix = (word == "f" || word == "F") && j < l.size() && (l[j] == '"' || l[j] == '\'');
        if (!fprefix) {
          out.push_back({Tok::name, word, line});
          i = j;
          continue;
        }
        i = j;
        c = l[i];
        // fall through to string with f flag
        char q = c;
        std::size_t k = i + 1;
        std::string s;
        while (k < l.size() && l[k] != q) s += l[k++];
        if (k >= l.size()) fail("SyntaxError: unterminated string (line " + std::to_string(line) + ")");
        out.push_back({Tok::fstring, s, line});
        i = k + 1;
        continue;
      }
      if (c == '"' || c == '\'') {
        char q = c;
        std::size_t k = i + 1;
        std::string s;
        while (k < l.size() && l[k] != q) {
          if (l[k] == '\\' && k + 1 < l.size()) {
            char e = l[k + 1];
            s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
            k += 2;
            continue;
          }
          s += l[k++];
        }
        if (k >= l.size()) fail("SyntaxError: unterminated string (line " + std::to_string(line) + ")");
        out.push_back({Tok::string, s, line});
        i = k + 1;
        continue;
      }
      static const char* three[] = {"//=", "**="};
      static const char* two[] = {"**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%="};
      std::string op;
      for (auto t : three)
        if (l.substr(i, 3) == t) op = t;
      if (op.empty())
        for (auto t : two)
          if (l.substr(i, 2) == t) op = t;
      if (op.empty()) {
        if (std::string_view("+-*/%()[],:=<>.{}").find(c) == std::string_view::npos)
          fail(std::string("SyntaxError: unexpected character '") + c + "' (line " + std::to_string(line) + ")");
        op = std::string(1, c);
      }
      if (op == "(" || op == "[" || op == "{") ++depth;
      if (op == ")" || op == "]" || op == "}") --depth;
      out.push_back({Tok::op, op, line});
      i += op.size();
    }
    joined = continues;
    if (depth == 0 && !continues) out.push_back({Tok::newline, {}, line});
  }
  if (depth != 0) fail("SyntaxError: unbalanced brackets");
  if (!out.empty() && out.back().kind != Tok::newline) out.push_back({Tok::newline, {}, line});
  while (indents.size() > 1) {
    indents.pop_back();
    out.push_back({Tok::dedent, {}, line});
  }
  out.push_back({Tok::end, {}, line});
  return out;
}

// ---------------------------------------------------------------- AST

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class ExprKind { literal, name, attribute, unary, binary, boolop, notop, compare, cond, call, fstring };

struct FPart {
  std::string literal;
  ExprPtr expr;  // null for literal parts
  std::string spec;
};

struct Expr {
  ExprKind kind;
  int line = 0;
  Value literal;
  std::string name;  // name / attribute / operator
  std::vector<ExprPtr> children;
  std::vector<std::string> ops;  // comparison operators
  std::vector<FPart> parts;
};

struct Stmt;
using Block = std::vector<std::unique_ptr<Stmt>>;

enum class StmtKind { expr, assign, augassign, if_, while_, for_, brk, cont, pass, import };

struct Stmt {
  StmtKind kind;
  int line = 0;
  std::string target;  // assign target, loop var, module
  std::string op;
  ExprPtr value;
  std::vector<ExprPtr> range_args;
  std::vector<std::string> names;  // from-import list
  Block body;
  Block orelse;
};

// ---------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Block parse_program() {
    Block b;
    while (peek().kind != Tok::end) {
      if (peek().kind == Tok::newline) { ++pos_; continue; }
      b.push_back(statement());
    }
    return b;
  }

  ExprPtr parse_single_expression() {
    auto e = expression();
    while (peek().kind == Tok::newline) ++pos_;
    if (peek().kind != Tok::end) error("unexpected trailing tokens");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool is_op(std::string_view op, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::op && peek(ahead).text == op;
  }
  bool is_name(std::string_view n) const { return peek().kind == Tok::name && peek().text == n; }
  [[noreturn]] void error(const std::string& what) const {
    fail("SyntaxError: " + what + " (line " + std::to_string(peek().line) + ")");
  }
  void expect_op(std::string_view op) {
    if (!is_op(op)) error("expected '" + std::string(op) + "'");
    ++pos_;
  }
  void expect_newline() {
    if (peek().kind != Tok::newline && peek().kind != Tok::end) error("expected end of line");
    if (peek().kind == Tok::newline) ++pos_;
  }

  Block block() {
    expect_op(":");
    Block b;
    if (peek().kind != Tok::newline) {
      b.push_back(simple_statement());
      return b;
    }
    ++pos_;
    if (peek().kind != Tok::indent) error("expected an indented block");
    ++pos_;
    while (peek().kind != Tok::dedent && peek().kind != Tok::end) {
      if (peek().kind == Tok::newline) { ++pos_; continue; }
      b.push_back(statement());
    }
    if (peek().kind == Tok::dedent) ++pos_;
    return b;
  }

  std::unique_ptr<Stmt> statement() {
    int line = peek().line;
    if (is_name("if")) return if_statement();
    if (is_name("while")) {
      ++pos_;
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::while_;
      s->line = line;
      s->value = expression();
      s->body = block();
      return s;
    }
    if (is_name("for")) {
      ++pos_;
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::for_;
      s->line = line;
      if (peek().kind != Tok::name) error("expected loop variable");
      s->target = toks_[pos_++].text;
      if (!is_name("in")) error("expected 'in'");
      ++pos_;
      if (!is_name("range")) fail("runtime: only range() loops are supported (line " + std::to_string(line) + ")");
      ++pos_;
      expect_op("(");
      while (!is_op(")")) {
        s->range_args.push_back(expression());
        if (is_op(",")) ++pos_;
      }
      ++pos_;
      if (s->range_args.empty() || s->range_args.size() > 3) error("range expects 1 to 3 arguments");
      s->body = block();
      return s;
    }
    if (is_name("def") || is_name("class") || is_name("lambda") || is_name("try") || is_name("with"))
      fail("unsupported statement '" + peek().text + "' (line " + std::to_string(line) + ")");
    return simple_statement();
  }

  std::unique_ptr<Stmt> if_statement() {
    int line = peek().line;
    ++pos_;  // 'if' or 'elif'
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::if_;
    s->line = line;
    s->value = expression();
    s->body = block();
    if (is_name("elif")) {
      s->orelse.push_back(if_statement());
    } else if (is_name("else")) {
      ++pos_;
      s->orelse = block();
    }
    return s;
  }

  std::unique_ptr<Stmt> simple_statement() {
    auto s = std::make_unique<Stmt>();
    s->line = peek().line;
    if (is_name("pass")) { ++pos_; s->kind = StmtKind::pass; expect_newline(); return s; }
    if (is_name("break")) { ++pos_; s->kind = StmtKind::brk; expect_newline(); return s; }
    if (is_name("continue")) { ++pos_; s->kind = StmtKind::cont; expect_newline(); return s; }
    if (is_name("import") || is_name("from")) {
      bool from = is_name("from");
      ++pos_;
      if (peek().kind != Tok::name) error("expected module name");
      s->kind = StmtKind::import;
      s->target = toks_[pos_++].text;
      while (is_op(".")) {
        ++pos_;
        s->target += "." + toks_[pos_++].text;
      }
      s->op = from ? "from" : "import";
      if (from) {
        if (!is_name("import")) error("expected 'import'");
        ++pos_;
        bool paren = is_op("(");
        if (paren) ++pos_;
        while (true) {
          if (is_op("*")) {
            s->names.push_back("*");
          } else if (peek().kind == Tok::name) {
            s->names.push_back(peek().text);
          } else {
            error("expected imported name");
          }
          ++pos_;
          if (is_name("as")) error("import aliases are not supported");
          if (!is_op(",")) break;
          ++pos_;
        }
        if (paren) {
          if (!is_op(")")) error("expected ')'");
          ++pos_;
        }
      } else if (is_name("as")) {
        error("import aliases are not supported");
      }
      expect_newline();
      return s;
    }
    if (peek().kind == Tok::name && peek(1).kind == Tok::op) {
      const std::string& op = peek(1).text;
      if (op == "=" || op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "//=" ||
          op == "%=" || op == "**=") {
        s->kind = op == "=" ? StmtKind::assign : StmtKind::augassign;
        s->target = peek().text;
        s->op = op == "=" ? "" : op.substr(0, op.size() - 1);
        pos_ += 2;
        s->value = expression();
        if (is_op("=")) error("chained assignment is not supported");
        expect_newline();
        return s;
      }
    }
    s->kind = StmtKind::expr;
    s->value = expression();
    if (is_op("=") || is_op(",")) error("unsupported assignment target");
    expect_newline();
    return s;
  }

  ExprPtr make(ExprKind k) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->line = peek().line;
    return e;
  }

  ExprPtr expression() {
    auto body = or_expr();
    if (is_name("if")) {
      ++pos_;
      auto e = make(ExprKind::cond);
      auto test = or_expr();
      if (!is_name("else")) error("expected 'else' in conditional expression");
      ++pos_;
      auto orelse = expression();
      e->children.push_back(std::move(test));
      e->children.push_back(std::move(body));
      e->children.push_back(std::move(orelse));
      return e;
    }
    return body;
  }

  ExprPtr or_expr() {
    auto l = and_expr();
    while (is_name("or")) {
      ++pos_;
      auto e = make(ExprKind::boolop);
      e->name = "or";
      e->children.push_back(std::move(l));
      e->children.push_back(and_expr());
      l = std::move(e);
    }
    return l;
  }

  ExprPtr and_expr() {
    auto l = not_expr();
    while (is_name("and")) {
      ++pos_;
      auto e = make(ExprKind::boolop);
      e->name = "and";
      e->children.push_back(std::move(l));
      e->children.push_back(not_expr());
      l = std::move(e);
    }
    return l;
  }

  ExprPtr not_expr() {
    if (is_name("not")) {
      ++pos_;
      auto e = make(ExprKind::notop);
      e->children.push_back(not_expr());
      return e;
    }
    return comparison();
  }

  ExprPtr comparison() {
    auto first = arith();
    std::unique_ptr<Expr> cmp;
    while (true) {
      std::string op;
      if (peek().kind == Tok::op) {
        const auto& t = peek().text;
        if (t == "<" || t == ">" || t == "==" || t == "!=" || t == "<=" || t == ">=") op = t;
      }
      if (op.empty()) break;
      ++pos_;
      if (!cmp) {
        cmp = make(ExprKind::compare);
        cmp->children.push_back(std::move(first));
      }
      cmp->ops.push_back(op);
      cmp->children.push_back(arith());
    }
    return cmp ? std::move(cmp) : std::move(first);
  }

  ExprPtr binary(ExprPtr l, std::string op, ExprPtr r) {
    auto e = make(ExprKind::binary);
    e->name = std::move(op);
    e->children.push_back(std::move(l));
    e->children.push_back(std::move(r));
    return e;
  }

  ExprPtr arith() {
    auto l = term();
    while (is_op("+") || is_op("-")) {
      std::string op = toks_[pos_++].text;
      l = binary(std::move(l), op, term());
    }
    return l;
  }

  ExprPtr term() {
    auto l = unary();
    while (is_op("*") || is_op("/") || is_op("//") || is_op("%")) {
      std::string op = toks_[pos_++].text;
      l = binary(std::move(l), op, unary());
    }
    return l;
  }

  ExprPtr unary() {
    if (is_op("-") || is_op("+")) {
      std::string op = toks_[pos_++].text;
      auto e = make(ExprKind::unary);
      e->name = op;
      e->children.push_back(unary());
      return e;
    }
    return power();
  }

  ExprPtr power() {
    auto base = postfix();
    if (is_op("**")) {
      ++pos_;
      return binary(std::move(base), "**", unary());
    }
    return base;
  }

  ExprPtr postfix() {
    auto e = atom();
    while (true) {
      if (is_op(".")) {
        ++pos_;
        if (peek().kind != Tok::name) error("expected attribute name");
        auto a = make(ExprKind::attribute);
        a->name = toks_[pos_++].text;
        a->children.push_back(std::move(e));
        e = std::move(a);
      } else if (is_op("(")) {
        ++pos_;
        auto c = make(ExprKind::call);
        c->children.push_back(std::move(e));
        while (!is_op(")")) {
          if (peek().kind == Tok::name && is_op("=", 1)) {
            // keyword arguments are accepted and ignored (e.g. print sep/end)
            pos_ += 2;
            (void)expression();
          } else {
            c->children.push_back(expression());
          }
          if (is_op(",")) ++pos_;
          else if (!is_op(")")) error("expected ',' or ')'");
        }
        ++pos_;
        e = std::move(c);
      } else if (is_op("[")) {
        error("subscripts are not supported");
      } else {
        return e;
      }
    }
  }

  ExprPtr atom() {
    const Token& t = peek();
    if (t.kind == Tok::number) {
      ++pos_;
      auto e = make(ExprKind::literal);
      e->literal = parse_number(t.text, t.line);
      return e;
    }
    if (t.kind == Tok::string) {
      ++pos_;
      auto e = make(ExprKind::literal);
      std::string s = t.text;
      while (peek().kind == Tok::string) s += toks_[pos_++].text;
      e->literal = s;
      return e;
    }
    if (t.kind == Tok::fstring) {
      ++pos_;
      return fstring(t.text, t.line);
    }
    if (t.kind == Tok::name) {
      ++pos_;
      auto e = make(ExprKind::literal);
      if (t.text == "True") { e->literal = true; return e; }
      if (t.text == "False") { e->literal = false; return e; }
      if (t.text == "None") { e->literal = None{}; return e; }
      if (t.text == "lambda") fail("unsupported expression 'lambda'");
      e->kind = ExprKind::name;
      e->name = t.text;
      return e;
    }
    if (is_op("(")) {
      ++pos_;
      auto e = expression();
      if (is_op(",")) error("tuples are not supported");
      expect_op(")");
      return e;
    }
    if (is_op("[") || is_op("{")) error("list/dict literals are not supported");
    error("unexpected token '" + t.text + "'");
  }

  static Value parse_number(const std::string& raw, int line) {
    std::string s;
    for (char c : raw)
      if (c != '_') s += c;
    bool is_float = s.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec == std::errc::result_out_of_range) fail("integer literal too large (line " + std::to_string(line) + ")");
      if (ec != std::errc{} || p != s.data() + s.size()) fail("SyntaxError: bad number '" + raw + "'");
      return v;
    }
    double d = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec != std::errc{} || p != s.data() + s.size()) fail("SyntaxError: bad number '" + raw + "'");
    return d;
  }

  ExprPtr fstring(const std::string& body, int line) {
    auto e = make(ExprKind::fstring);
    std::string lit;
    for (std::size_t i = 0; i < body.size(); ++i) {
      char c = body[i];
      if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') { lit += '{'; ++i; continue; }
      if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') { lit += '}'; ++i; continue; }
      if (c != '{') { lit += c; continue; }
      std::size_t close = body.find('}', i);
      if (close == std::string::npos) fail("SyntaxError: unterminated f-string field (line " + std::to_string(line) + ")");
      std::string field = body.substr(i + 1, close - i - 1);
      std::string spec;
      if (auto colon = field.find(':'); colon != std::string::npos) {
        spec = field.substr(colon + 1);
        field = field.substr(0, colon);
      }
      if (!lit.empty()) e->parts.push_back({lit, nullptr, {}});
      lit.clear();
      Parser sub(tokenize(field));
      e->parts.push_back({{}, sub.parse_single_expression(), spec});
      i = close;
    }
    if (!lit.empty()) e->parts.push_back({lit, nullptr, {}});
    return e;
  }
};

// ---------------------------------------------------------------- values

inline std::string type_name(const Value& v) {
  switch (v.index()) {
    case 0: return "NoneType";
    case 1: return "bool";
    case 2: return "int";
    case 3: return "float";
    default: return "str";
  }
}

inline std::string to_str(const Value& v) {
  if (std::holds_alternative<None>(v)) return "None";
  if (auto b = std::get_if<bool>(&v)) return *b ? "True" : "False";
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto d = std::get_if<double>(&v)) return render_float(*d);
  return std::get<std::string>(v);
}

inline bool is_numeric(const Value& v) {
  return std::holds_alternative<bool>(v) || std::holds_alternative<std::int64_t>(v) ||
         std::holds_alternative<double>(v);
}

inline bool is_intlike(const Value& v) {
  return std::holds_alternative<bool>(v) || std::holds_alternative<std::int64_t>(v);
}

inline std::int64_t as_int(const Value& v) {
  if (auto b = std::get_if<bool>(&v)) return *b ? 1 : 0;
  return std::get<std::int64_t>(v);
}

inline double as_double(const Value& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  return static_cast<double>(as_int(v));
}

inline bool truthy(const Value& v) {
  if (std::holds_alternative<None>(v)) return false;
  if (auto b = std::get_if<bool>(&v)) return *b;
  if (auto i = std::get_if<std::int64_t>(&v)) return *i != 0;
  if (auto d = std::get_if<double>(&v)) return *d != 0.0;
  return !std::get<std::string>(v).empty();
}

[[noreturn]] inline void int_overflow() { fail("OverflowError: integer result exceeds 64 bits"); }

inline std::int64_t add_i(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) int_overflow();
  return r;
}
inline std::int64_t sub_i(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) int_overflow();
  return r;
}
inline std::int64_t mul_i(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) int_overflow();
  return r;
}

inline std::int64_t floordiv(std::int64_t a, std::int64_t b) {
  if (b == 0) fail("ZeroDivisionError: integer division or modulo by zero");
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) fail("OverflowError: integer result exceeds 64 bits");
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t pymod(std::int64_t a, std::int64_t b) {
  if (b == 0) fail("ZeroDivisionError: integer division or modulo by zero");
  if (b == -1) return 0;
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

inline double pyfmod(double a, double b) {
  if (b == 0.0) fail("ZeroDivisionError: float modulo");
  double r = std::fmod(a, b);
  if (r != 0.0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

inline std::int64_t ipow(std::int64_t base, std::int64_t exp) {
  std::int64_t result = 1;
  while (exp > 0) {
    if (exp & 1) result = mul_i(result, base);
    exp >>= 1;
    if (exp > 0) base = mul_i(base, base);
  }
  return result;
}

inline Value arithmetic(const std::string& op, const Value& a, const Value& b) {
  if (op == "+" && std::holds_alternative<std::string>(a) && std::holds_alternative<std::string>(b))
    return std::get<std::string>(a) + std::get<std::string>(b);
  if (op == "*" && std::holds_alternative<std::string>(a) && is_intlike(b)) {
    const auto& base = std::get<std::string>(a);
    std::int64_t n = std::max<std::int64_t>(as_int(b), 0);
    if (!base.empty() && static_cast<std::uint64_t>(n) > (std::uint64_t{1} << 30) / base.size())
      fail("MemoryError: string repetition too large");
    std::string out;
    out.reserve(base.size() * static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) out += base;
    return out;
  }
  if (!is_numeric(a) || !is_numeric(b))
    fail("TypeError: unsupported operand type(s) for " + op + ": '" + type_name(a) + "' and '" + type_name(b) + "'");
  if (is_intlike(a) && is_intlike(b)) {
    std::int64_t x = as_int(a), y = as_int(b);
    if (op == "+") return add_i(x, y);
    if (op == "-") return sub_i(x, y);
    if (op == "*") return mul_i(x, y);
    if (op == "//") return floordiv(x, y);
    if (op == "%") return pymod(x, y);
    if (op == "/") {
      if (y == 0) fail("ZeroDivisionError: division by zero");
      return static_cast<double>(x) / static_cast<double>(y);
    }
    if (op == "**") {
      if (y >= 0) return ipow(x, y);
      if (x == 0) fail("ZeroDivisionError: 0.0 cannot be raised to a negative power");
      return std::pow(static_cast<double>(x), static_cast<double>(y));
    }
  }
  double x = as_double(a), y = as_double(b);
  if (op == "+") return x + y;
  if (op == "-") return x - y;
  if (op == "*") return x * y;
  if (op == "/") {
    if (y == 0.0) fail("ZeroDivisionError: float division by zero");
    return x / y;
  }
  if (op == "//") {
    if (y == 0.0) fail("ZeroDivisionError: float floor division by zero");
    return std::floor(x / y);
  }
  if (op == "%") return pyfmod(x, y);
  if (op == "**") {
    if (x == 0.0 && y < 0) fail("ZeroDivisionError: 0.0 cannot be raised to a negative power");
    double r = std::pow(x, y);
    if (std::isnan(r) && !std::isnan(x) && !std::isnan(y)) fail("ValueError: complex result not supported");
    if (std::isinf(r) && std::isfinite(x) && std::isfinite(y)) fail("OverflowError: numerical result out of range");
    return r;
  }
  fail("unknown operator " + op);
}

inline bool compare(const std::string& op, const Value& a, const Value& b) {
  if (op == "==" || op == "!=") {
    bool eq;
    if (is_numeric(a) && is_numeric(b)) {
      eq = (is_intlike(a) && is_intlike(b)) ? as_int(a) == as_int(b) : as_double(a) == as_double(b);
    } else {
      eq = a == b;
    }
    return op == "==" ? eq : !eq;
  }
  int ord;
  if (is_numeric(a) && is_numeric(b)) {
    if (is_intlike(a) && is_intlike(b)) {
      auto x = as_int(a), y = as_int(b);
      ord = x < y ? -1 : (x > y ? 1 : 0);
    } else {
      double x = as_double(a), y = as_double(b);
      ord = x < y ? -1 : (x > y ? 1 : 0);
    }
  } else if (std::holds_alternative<std::string>(a) && std::holds_alternative<std::string>(b)) {
    ord = std::get<std::string>(a).compare(std::get<std::string>(b));
    ord = ord < 0 ? -1 : (ord > 0 ? 1 : 0);
  } else {
    fail("TypeError: '" + op + "' not supported between '" + type_name(a) + "' and '" + type_name(b) + "'");
  }
  if (op == "<") return ord < 0;
  if (op == "<=") return ord <= 0;
  if (op == ">") return ord > 0;
  return ord >= 0;
}

inline std::int64_t to_int_checked(double d) {
  if (!std::isfinite(d)) fail("ValueError: cannot convert non-finite float to integer");
  double t = std::trunc(d);
  if (t >= 9.2233720368547758e18 || t < -9.2233720368547758e18) fail("OverflowError: integer result exceeds 64 bits");
  return static_cast<std::int64_t>(t);
}

// ---------------------------------------------------------------- evaluator

inline const std::set<std::string, std::less<>>& forbidden_names() {
  static const std::set<std::string, std::less<>> names{
      "open", "exec", "eval", "compile", "__import__", "input", "globals", "locals", "vars",
      "getattr", "setattr", "delattr", "breakpoint", "exit", "quit", "os", "sys", "subprocess",
      "socket", "shutil", "pathlib"};
  return names;
}

inline const std::set<std::string, std::less<>>& allowed_modules() {
  static const std::set<std::string, std::less<>> mods{"math", "fractions", "itertools", "functools", "collections"};
  return mods;
}

struct BreakSignal {};
struct ContinueSignal {};

class Machine {
 public:
  Machine(const RunLimits& limits, std::chrono::steady_clock::time_point deadline)
      : limits_(limits), deadline_(deadline) {}

  void run(const Block& b) { exec_block(b); }

  const std::string& output() const { return out_; }
  const std::unordered_map<std::string, Value>& globals() const { return env_; }

 private:
  const RunLimits& limits_;
  std::chrono::steady_clock::time_point deadline_;
  std::unordered_map<std::string, Value> env_;
  std::set<std::string, std::less<>> modules_;
  std::set<std::string, std::less<>> math_names_;  // bound by from-import
  bool math_star_ = false;

  bool imported_from_math(const std::string& name) const {
    return !env_.contains(name) && (math_names_.contains(name) || (math_star_ && is_math_member(name)));
  }
  std::string out_;
  std::uint64_t steps_ = 0;

  void tick() {
    if ((++steps_ & 0xFF) == 0 && std::chrono::steady_clock::now() > deadline_)
      throw Fault{Outcome::timeout, "execution exceeded wall timeout"};
  }

  void track(const Value& v) {
    if (auto s = std::get_if<std::string>(&v); s && s->size() > limits_.memory_cap)
      fail("MemoryError: string exceeds memory cap");
  }

  void exec_block(const Block& b) {
    for (const auto& s : b) exec(*s);
  }

  void exec(const Stmt& s) {
    tick();
    switch (s.kind) {
      case StmtKind::pass: return;
      case StmtKind::brk: throw BreakSignal{};
      case StmtKind::cont: throw ContinueSignal{};
      case StmtKind::expr: (void)eval(*s.value); return;
      case StmtKind::assign: {
        check_target(s.target, s.line);
        Value v = eval(*s.value);
        track(v);
        env_[s.target] = std::move(v);
        return;
      }
      case StmtKind::augassign: {
        auto it = env_.find(s.target);
        if (it == env_.end()) fail("NameError: name '" + s.target + "' is not defined");
        Value v = arithmetic(s.op, it->second, eval(*s.value));
        track(v);
        env_[s.target] = std::move(v);
        return;
      }
      case StmtKind::if_:
        if (truthy(eval(*s.value))) exec_block(s.body);
        else exec_block(s.orelse);
        return;
      case StmtKind::while_:
        while (truthy(eval(*s.value))) {
          tick();
          try {
            exec_block(s.body);
          } catch (const BreakSignal&) {
            break;
          } catch (const ContinueSignal&) {
          }
        }
        return;
      case StmtKind::for_: {
        std::vector<std::int64_t> args;
        for (const auto& a : s.range_args) {
          Value v = eval(*a);
          if (!is_intlike(v)) fail("TypeError: range() arguments must be integers");
          args.push_back(as_int(v));
        }
        std::int64_t start = args.size() > 1 ? args[0] : 0;
        std::int64_t stop = args.size() > 1 ? args[1] : args[0];
        std::int64_t step = args.size() > 2 ? args[2] : 1;
        if (step == 0) fail("ValueError: range() arg 3 must not be zero");
        check_target(s.target, s.line);
        for (std::int64_t i = start; step > 0 ? i < stop : i > stop; i += step) {
          tick();
          env_[s.target] = i;
          try {
            exec_block(s.body);
          } catch (const BreakSignal&) {
            break;
          } catch (const ContinueSignal&) {
          }
        }
        return;
      }
      case StmtKind::import: {
        std::string root = s.target.substr(0, s.target.find('.'));
        if (!allowed_modules().contains(root)) forbid("import of module '" + s.target + "' is not allowed");
        if (root != "math") fail("module '" + root + "' is not available in the built-in interpreter");
        if (s.op == "from") {
          for (const auto& n : s.names) {
            if (n == "*") {
              math_star_ = true;
              continue;
            }
            if (!is_math_member(n)) fail("ImportError: cannot import name '" + n + "' from 'math'");
            math_names_.insert(n);
          }
        } else {
          modules_.insert(root);
        }
        return;
      }
    }
  }

  static void check_target(const std::string& name, int line) {
    if (forbidden_names().contains(name) || text::starts_with(name, "__"))
      forbid("assignment to reserved name '" + name + "' (line " + std::to_string(line) + ")");
  }

  Value eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::literal: return e.literal;
      case ExprKind::name: {
        if (forbidden_names().contains(e.name) || text::starts_with(e.name, "__"))
          forbid("use of '" + e.name + "' is not allowed");
        auto it = env_.find(e.name);
        if (it == env_.end() && imported_from_math(e.name)) {
          if (is_math_constant(e.name)) return math_constant(e.name);
          fail("TypeError: math function '" + e.name + "' used as a value");
        }
        if (it == env_.end()) fail("NameError: name '" + e.name + "' is not defined");
        return it->second;
      }
      case ExprKind::attribute: {
        if (text::starts_with(e.name, "__")) forbid("dunder attribute access is not allowed");
        const Expr& obj = *e.children[0];
        if (obj.kind == ExprKind::name && obj.name == "math" && modules_.contains("math"))
          return math_constant(e.name);
        fail("AttributeError: unsupported attribute '" + e.name + "'");
      }
      case ExprKind::unary: {
        Value v = eval(*e.children[0]);
        if (!is_numeric(v)) fail("TypeError: bad operand type for unary " + e.name + ": '" + type_name(v) + "'");
        if (e.name == "+") return is_intlike(v) ? Value(as_int(v)) : v;
        if (is_intlike(v)) {
          return sub_i(std::int64_t{0}, as_int(v));
        }
        return -as_double(v);
      }
      case ExprKind::binary:
        return arithmetic(e.name, eval(*e.children[0]), eval(*e.children[1]));
      case ExprKind::boolop: {
        Value l = eval(*e.children[0]);
        if (e.name == "and") return truthy(l) ? eval(*e.children[1]) : l;
        return truthy(l) ? l : eval(*e.children[1]);
      }
      case ExprKind::notop: return !truthy(eval(*e.children[0]));
      case ExprKind::compare: {
        Value left = eval(*e.children[0]);
        for (std::size_t k = 0; k < e.ops.size(); ++k) {
          Value right = eval(*e.children[k + 1]);
          if (!compare(e.ops[k], left, right)) return false;
          left = std::move(right);
        }
        return true;
      }
      case ExprKind::cond:
        return truthy(eval(*e.children[0])) ? eval(*e.children[1]) : eval(*e.children[2]);
      case ExprKind::call: return call(e);
      case ExprKind::fstring: {
        std::string out;
        for (const auto& p : e.parts) {
          if (!p.expr) {
            out += p.literal;
            continue;
          }
          Value v = eval(*p.expr);
          out += format_spec(v, p.spec);
        }
        track(out);
        return out;
      }
    }
    fail("unsupported expression");
  }

  static std::string format_spec(const Value& v, const std::string& spec) {
    if (spec.empty()) return to_str(v);
    std::string s = spec;
    bool comma = false;
    if (auto c = s.find(','); c != std::string::npos) {
      comma = true;
      s.erase(c, 1);
    }
    std::string out;
    if (s.size() >= 3 && s[0] == '.' && (s.back() == 'f' || s.back() == 'F')) {
      if (!is_numeric(v)) fail("ValueError: unknown format code 'f' for " + type_name(v));
      int prec = std::stoi(s.substr(1, s.size() - 2));
      char buf[512];
      std::snprintf(buf, sizeof buf, "%.*f", prec, as_double(v));
      out = buf;
    } else if (s == "d") {
      if (!is_intlike(v)) fail("ValueError: unknown format code 'd'");
      out = std::to_string(as_int(v));
    } else if (s.empty() && comma) {
      out = to_str(v);
    } else {
      fail("unsupported format spec '" + spec + "'");
    }
    if (comma) {
      auto dot = out.find('.');
      std::string intpart = out.substr(0, dot), rest = dot == std::string::npos ? "" : out.substr(dot);
      bool neg = !intpart.empty() && intpart[0] == '-';
      if (neg) intpart.erase(0, 1);
      std::string grouped;
      for (std::size_t i = 0; i < intpart.size(); ++i) {
        if (i > 0 && (intpart.size() - i) % 3 == 0) grouped += ',';
        grouped += intpart[i];
      }
      out = (neg ? "-" : "") + grouped + rest;
    }
    return out;
  }

  static bool is_math_constant(std::string_view name) {
    return name == "pi" || name == "e" || name == "inf" || name == "tau";
  }

  static bool is_math_member(std::string_view name) {
    static const std::set<std::string, std::less<>> fns{
        "sqrt", "floor", "ceil", "trunc", "fabs", "exp", "log", "log10", "log2", "sin", "cos", "tan",
        "pow", "gcd", "lcm", "factorial", "comb", "perm"};
    return is_math_constant(name) || fns.contains(name);
  }

  Value math_constant(const std::string& name) {
    if (name == "pi") return std::numbers::pi;
    if (name == "e") return std::numbers::e;
    if (name == "inf") return std::numeric_limits<double>::infinity();
    if (name == "tau") return 2 * std::numbers::pi;
    fail("AttributeError: module 'math' has no attribute '" + name + "'");
  }

  void emit(const std::string& s) {
    out_ += s;
    if (out_.size() > limits_.output_cap)
      throw Fault{Outcome::output_overflow, "program output exceeded " + std::to_string(limits_.output_cap) + " bytes"};
  }

  Value call(const Expr& e) {
    const Expr& fn = *e.children[0];
    std::vector<Value> args;
    for (std::size_t k = 1; k < e.children.size(); ++k) args.push_back(eval(*e.children[k]));
    auto arity = [&](std::size_t lo, std::size_t hi, const std::string& name) {
      if (args.size() < lo || args.size() > hi) fail("TypeError: " + name + "() takes " + std::to_string(lo) + " to " + std::to_string(hi) + " arguments");
    };
    auto numeric = [&](std::size_t k, const std::string& name) {
      if (!is_numeric(args[k])) fail("TypeError: " + name + "() argument must be a number, not '" + type_name(args[k]) + "'");
    };

    if (fn.kind == ExprKind::attribute) {
      const Expr& obj = *fn.children[0];
      if (text::starts_with(fn.name, "__")) forbid("dunder attribute access is not allowed");
      if (obj.kind == ExprKind::name && forbidden_names().contains(obj.name)) forbid("use of '" + obj.name + "' is not allowed");
      if (!(obj.kind == ExprKind::name && obj.name == "math" && modules_.contains("math")))
        fail("AttributeError: unsupported method call '" + fn.name + "'");
      return math_call(fn.name, args);
    }
    if (fn.kind != ExprKind::name) fail("TypeError: object is not callable");
    const std::string& name = fn.name;
    if (forbidden_names().contains(name) || text::starts_with(name, "__")) forbid("call to '" + name + "' is not allowed");
    if (imported_from_math(name) && !is_math_constant(name)) return math_call(name, args);

    if (name == "print") {
      std::string line;
      for (std::size_t k = 0; k < args.size(); ++k) {
        if (k > 0) line += ' ';
        line += to_str(args[k]);
      }
      emit(line + "\n");
      return None{};
    }
    if (name == "abs") {
      arity(1, 1, name);
      numeric(0, name);
      if (is_intlike(args[0])) {
        std::int64_t v = as_int(args[0]);
        if (v == std::numeric_limits<std::int64_t>::min()) fail("OverflowError: integer result exceeds 64 bits");
        return v < 0 ? -v : v;
      }
      return std::fabs(as_double(args[0]));
    }
    if (name == "min" || name == "max") {
      if (args.empty()) fail("TypeError: " + name + " expected at least 1 argument");
      if (args.size() == 1) fail("TypeError: iterable arguments are not supported");
      Value best = args[0];
      for (std::size_t k = 1; k < args.size(); ++k) {
        bool better = name == "min" ? compare("<", args[k], best) : compare(">", args[k], best);
        if (better) best = args[k];
      }
      return best;
    }
    if (name == "round") {
      arity(1, 2, name);
      numeric(0, name);
      if (args.size() == 1 || std::holds_alternative<None>(args[1])) {
        if (is_intlike(args[0])) return as_int(args[0]);
        return to_int_checked(std::nearbyint(as_double(args[0])));
      }
      if (!is_intlike(args[1])) fail("TypeError: round() ndigits must be an integer");
      if (is_intlike(args[0])) return as_int(args[0]);
      std::int64_t nd = as_int(args[1]);
      if (nd < 0 || nd > 300) fail("round() ndigits out of supported range");
      char buf[512];
      std::snprintf(buf, sizeof buf, "%.*f", static_cast<int>(nd), as_double(args[0]));
      return std::strtod(buf, nullptr);
    }
    if (name == "int") {
      arity(1, 1, name);
      if (auto s = std::get_if<std::string>(&args[0])) {
        std::string t = text::trim_copy(*s);
        std::int64_t v = 0;
        const char* first = t.data() + (!t.empty() && t[0] == '+' ? 1 : 0);
        auto [p, ec] = std::from_chars(first, t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
          fail("ValueError: invalid literal for int(): '" + *s + "'");
        return v;
      }
      numeric(0, name);
      if (is_intlike(args[0])) return as_int(args[0]);
      return to_int_checked(as_double(args[0]));
    }
    if (name == "float") {
      arity(1, 1, name);
      if (auto s = std::get_if<std::string>(&args[0])) {
        std::string t = text::trim_copy(*s);
        double d = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
        if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
          fail("ValueError: could not convert string to float: '" + *s + "'");
        return d;
      }
      numeric(0, name);
      return as_double(args[0]);
    }
    if (name == "str") {
      arity(0, 1, name);
      return args.empty() ? std::string{} : to_str(args[0]);
    }
    if (name == "bool") {
      arity(0, 1, name);
      return args.empty() ? false : truthy(args[0]);
    }
    if (name == "len") {
      arity(1, 1, name);
      auto s = std::get_if<std::string>(&args[0]);
      if (!s) fail("TypeError: object of type '" + type_name(args[0]) + "' has no len()");
      return static_cast<std::int64_t>(s->size());
    }
    if (name == "pow") {
      arity(2, 2, name);
      return arithmetic("**", args[0], args[1]);
    }
    if (name == "range" || name == "sum" || name == "list" || name == "sorted")
      fail("TypeError: iterables are not supported by the built-in interpreter");
    if (env_.contains(name)) fail("TypeError: '" + type_name(env_.at(name)) + "' object is not callable");
    fail("NameError: name '" + name + "' is not defined");
  }

  Value math_call(const std::string& name, const std::vector<Value>& args) {
    auto need = [&](std::size_t n) {
      if (args.size() != n) fail("TypeError: math." + name + "() takes " + std::to_string(n) + " arguments");
      for (const auto& a : args)
        if (!is_numeric(a)) fail("TypeError: must be real number, not " + type_name(a));
    };
    auto domain = [&](bool ok) {
      if (!ok) fail("ValueError: math domain error");
    };
    if (name == "sqrt") { need(1); domain(as_double(args[0]) >= 0); return std::sqrt(as_double(args[0])); }
    if (name == "floor") { need(1); return is_intlike(args[0]) ? as_int(args[0]) : to_int_checked(std::floor(as_double(args[0]))); }
    if (name == "ceil") { need(1); return is_intlike(args[0]) ? as_int(args[0]) : to_int_checked(std::ceil(as_double(args[0]))); }
    if (name == "trunc") { need(1); return is_intlike(args[0]) ? as_int(args[0]) : to_int_checked(as_double(args[0])); }
    if (name == "fabs") { need(1); return std::fabs(as_double(args[0])); }
    if (name == "exp") {
      need(1);
      double r = std::exp(as_double(args[0]));
      if (std::isinf(r)) fail("OverflowError: math range error");
      return r;
    }
    if (name == "log") {
      if (args.size() == 2) {
        need(2);
        domain(as_double(args[0]) > 0 && as_double(args[1]) > 0 && as_double(args[1]) != 1);
        return std::log(as_double(args[0])) / std::log(as_double(args[1]));
      }
      need(1);
      domain(as_double(args[0]) > 0);
      return std::log(as_double(args[0]));
    }
    if (name == "log10") { need(1); domain(as_double(args[0]) > 0); return std::log10(as_double(args[0])); }
    if (name == "log2") { need(1); domain(as_double(args[0]) > 0); return std::log2(as_double(args[0])); }
    if (name == "sin") { need(1); return std::sin(as_double(args[0])); }
    if (name == "cos") { need(1); return std::cos(as_double(args[0])); }
    if (name == "tan") { need(1); return std::tan(as_double(args[0])); }
    if (name == "pow") { need(2); return std::pow(as_double(args[0]), as_double(args[1])); }
    if (name == "gcd" || name == "lcm" || name == "factorial" || name == "comb" || name == "perm") {
      for (const auto& a : args)
        if (!is_intlike(a)) fail("TypeError: '" + type_name(a) + "' object cannot be interpreted as an integer");
      if (name == "gcd") { need(2); return std::gcd(as_int(args[0]), as_int(args[1])); }
      if (name == "lcm") {
        need(2);
        std::int64_t a = as_int(args[0]), b = as_int(args[1]);
        if (a == 0 || b == 0) return std::int64_t{0};
        return std::abs(mul_i(a / std::gcd(a, b), b));
      }
      if (name == "factorial") {
        need(1);
        std::int64_t n = as_int(args[0]);
        if (n < 0) fail("ValueError: factorial() not defined for negative values");
        std::int64_t r = 1;
        for (std::int64_t k = 2; k <= n; ++k) r = mul_i(r, k);
        return r;
      }
      need(2);
      std::int64_t n = as_int(args[0]), k = as_int(args[1]);
      if (n < 0 || k < 0) fail("ValueError: must be non-negative integers");
      if (k > n) return std::int64_t{0};
      std::int64_t r = 1;
      if (name == "perm") {
        for (std::int64_t i = 0; i < k; ++i) r = mul_i(r, n - i);
        return r;
      }
      k = std::min(k, n - k);
      for (std::int64_t i = 1; i <= k; ++i) {
        r = mul_i(r, n - k + i);
        r /= i;
      }
      return r;
    }
    fail("AttributeError: module 'math' has no attribute '" + name + "'");
  }
};

}  // namespace detail

// Final nonempty printed line wins; otherwise the `answer` binding.
inline std::optional<std::string> extract_answer(
    const std::unordered_map<std::string, Value>& globals, std::string_view stdout_text) {
  auto lines = text::split_lines(stdout_text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto t = text::trim(*it);
    if (!t.empty()) return std::string(t);
  }
  if (auto it = globals.find("answer"); it != globals.end()) return detail::to_str(it->second);
  return std::nullopt;
}

inline RunResult run(std::string_view program, const RunLimits& limits = {}) {
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(limits.wall_timeout);
  RunResult result;
  detail::Machine machine(limits, deadline);
  try {
    detail::Parser parser(detail::tokenize(program));
    auto block = parser.parse_program();
    try {
      machine.run(block);
    } catch (const detail::BreakSignal&) {
      detail::fail("SyntaxError: 'break' outside loop");
    } catch (const detail::ContinueSignal&) {
      detail::fail("SyntaxError: 'continue' not properly in loop");
    }
  } catch (const Fault& f) {
    result.outcome = f.outcome;
    result.diagnostic = f.message;
    result.stdout_text = machine.output();
    return result;
  }
  result.stdout_text = machine.output();
  result.answer = extract_answer(machine.globals(), result.stdout_text);
  if (!result.answer) {
    result.outcome = Outcome::runtime_error;
    result.diagnostic = "no-answer: program printed nothing and bound no `answer`";
    return result;
  }
  result.outcome = Outcome::ok;
  return result;
}

}  // namespace logicforge::mini
