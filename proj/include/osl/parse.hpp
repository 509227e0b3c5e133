#pragma once

#include <cctype>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "osl/ast.hpp"

namespace osl {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string &msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_), col(col_) {}
};

struct Token {
  enum class Kind { Ident, Number, Sym, End };
  Kind kind;
  std::string text;
  int line, col;
};

// Shared tokenizer for the program and assertion surface syntaxes.
struct Lexer {
  std::string src;
  size_t pos = 0;
  int line = 1, col = 1;
  std::vector<Token> toks;
  size_t cur = 0;

  explicit Lexer(std::string s) : src(std::move(s)) { tokenize(); }

  void advance_char() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void tokenize() {
    static const std::vector<std::string> syms = {
        ":=",  "<-",  "|->", "!|->", "(+)", "+[", "!=", "<=", "&&", "/\\",
        "\\/", "==>", ";",   ",",    "(",   ")",  "{",  "}",  "[",  "]",
        "+",   "-",   "=",   "!",    "*",   ".",  "_",  ":"};
    while (pos < src.size()) {
      char c = src[pos];
      if (isspace(static_cast<unsigned char>(c))) {
        advance_char();
        continue;
      }
      if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
        while (pos < src.size() && src[pos] != '\n') advance_char();
        continue;
      }
      int tl = line, tc = col;
      if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
        // "_" alone is a wildcard symbol, not an identifier.
        std::string id;
        while (pos < src.size() &&
               (isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
          id += src[pos];
          advance_char();
        }
        if (id == "_")
          toks.push_back({Token::Kind::Sym, "_", tl, tc});
        else
          toks.push_back({Token::Kind::Ident, id, tl, tc});
        continue;
      }
      if (isdigit(static_cast<unsigned char>(c))) {
        std::string num;
        while (pos < src.size() && (isdigit(static_cast<unsigned char>(src[pos])) ||
                                    src[pos] == '.')) {
          num += src[pos];
          advance_char();
        }
        // rational literal n/d (a lone '/' otherwise starts a comment)
        if (pos + 1 < src.size() && src[pos] == '/' &&
            isdigit(static_cast<unsigned char>(src[pos + 1]))) {
          num += '/';
          advance_char();
          while (pos < src.size() && isdigit(static_cast<unsigned char>(src[pos]))) {
            num += src[pos];
            advance_char();
          }
        }
        toks.push_back({Token::Kind::Number, num, tl, tc});
        continue;
      }
      bool matched = false;
      for (auto &s : syms) {
        if (src.compare(pos, s.size(), s) == 0) {
          for (size_t i = 0; i < s.size(); ++i) advance_char();
          toks.push_back({Token::Kind::Sym, s, tl, tc});
          matched = true;
          break;
        }
      }
      if (!matched) throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
    }
    toks.push_back({Token::Kind::End, "", line, col});
  }

  const Token &peek(size_t ahead = 0) const {
    size_t i = cur + ahead;
    return i < toks.size() ? toks[i] : toks.back();
  }
  Token next() { return toks[cur < toks.size() - 1 ? cur++ : cur]; }
  bool at_sym(const std::string &s) const {
    return peek().kind == Token::Kind::Sym && peek().text == s;
  }
  bool at_ident(const std::string &s) const {
    return peek().kind == Token::Kind::Ident && peek().text == s;
  }
  bool eat_sym(const std::string &s) {
    if (!at_sym(s)) return false;
    next();
    return true;
  }
  bool eat_ident(const std::string &s) {
    if (!at_ident(s)) return false;
    next();
    return true;
  }
  void expect_sym(const std::string &s) {
    if (!eat_sym(s)) throw ParseError("expected '" + s + "'", peek().line, peek().col);
  }
  [[noreturn]] void fail(const std::string &msg) const {
    throw ParseError(msg, peek().line, peek().col);
  }
};

namespace detail {

inline bool is_keyword(const std::string &s) {
  static const std::set<std::string> kw = {"proc",  "skip",  "assume", "while", "if",
                                           "else",  "alloc", "malloc", "free",  "error",
                                           "null",  "true",  "false"};
  return kw.count(s) != 0;
}

struct ProgParser {
  Lexer &lx;
  bool allow_lvars;  // assertions may mention logical variables, programs may not

  ExprPtr parse_expr() { return parse_conj(); }

  ExprPtr parse_conj() {
    ExprPtr e = parse_cmp();
    while (lx.at_sym("&&")) {
      lx.next();
      e = ebin(BinOp::And, e, parse_cmp());
    }
    return e;
  }

  ExprPtr parse_cmp() {
    ExprPtr e = parse_add();
    if (lx.at_sym("=")) {
      lx.next();
      return ebin(BinOp::Eq, e, parse_add());
    }
    if (lx.at_sym("!=")) {
      lx.next();
      return enot(ebin(BinOp::Eq, e, parse_add()));
    }
    if (lx.at_sym("<=")) {
      lx.next();
      return ebin(BinOp::Le, e, parse_add());
    }
    return e;
  }

  ExprPtr parse_add() {
    ExprPtr e = parse_unary();
    while (true) {
      // "+[" starts a probabilistic choice at the command level.
      if (lx.at_sym("+")) {
        lx.next();
        e = ebin(BinOp::Add, e, parse_unary());
      } else if (lx.at_sym("-")) {
        lx.next();
        e = ebin(BinOp::Sub, e, parse_unary());
      } else {
        break;
      }
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (lx.eat_sym("!")) return enot(parse_unary());
    return parse_atom();
  }

  ExprPtr parse_atom() {
    const Token &t = lx.peek();
    if (t.kind == Token::Kind::Number) {
      lx.next();
      auto q = parse_rat(t.text);
      if (!q) throw ParseError("bad numeric literal '" + t.text + "'", t.line, t.col);
      return econst(*q);
    }
    if (t.kind == Token::Kind::Ident) {
      if (t.text == "null") {
        lx.next();
        return enull();
      }
      if (t.text == "true") {
        lx.next();
        return econst(Value(1));
      }
      if (t.text == "false") {
        lx.next();
        return econst(Value(0));
      }
      if (is_keyword(t.text)) lx.fail("unexpected keyword '" + t.text + "'");
      if (!allow_lvars && is_lvar(t.text))
        throw ParseError("logical variable '" + t.text + "' not allowed in programs", t.line,
                         t.col);
      lx.next();
      return evar(t.text);
    }
    if (lx.eat_sym("(")) {
      ExprPtr e = parse_expr();
      lx.expect_sym(")");
      return e;
    }
    lx.fail("expected expression");
  }
};

} // namespace detail

inline ExprPtr parse_expr_text(const std::string &text, bool allow_lvars = false) {
  Lexer lx(text);
  detail::ProgParser p{lx, allow_lvars};
  ExprPtr e = p.parse_expr();
  if (lx.peek().kind != Token::Kind::End) lx.fail("trailing input after expression");
  return e;
}

namespace detail {

struct CmdParser {
  Lexer &lx;
  ProgParser ep{lx, false};

  // choice (loosest): seq ('+' seq | '+[p]' seq)*
  CmdPtr parse_cmd() {
    CmdPtr c = parse_seq();
    while (true) {
      if (lx.at_sym("+[")) {
        Token t = lx.next();
        if (lx.peek().kind != Token::Kind::Number) lx.fail("expected probability literal");
        auto q = parse_rat(lx.next().text);
        if (!q) throw ParseError("bad probability literal", t.line, t.col);
        lx.expect_sym("]");
        CmdPtr rhs = parse_seq();
        c = cprob(c, rhs, *q);
      } else if (lx.at_sym("+")) {
        lx.next();
        c = cchoice(c, parse_seq());
      } else {
        break;
      }
    }
    return c;
  }

  CmdPtr parse_seq() {
    CmdPtr c = parse_stmt();
    while (true) {
      if (lx.eat_sym(";")) {
        if (starts_stmt()) {
          c = cseq(c, parse_stmt());
          continue;
        }
        break;  // trailing separator
      }
      // newline-separated statements: sequence continues wherever a new
      // statement can start
      if (starts_stmt()) {
        c = cseq(c, parse_stmt());
        continue;
      }
      break;
    }
    return c;
  }

  bool starts_stmt() const {
    const Token &t = lx.peek();
    if (t.kind == Token::Kind::Ident)
      return t.text == "skip" || t.text == "assume" || t.text == "while" || t.text == "if" ||
             t.text == "free" || t.text == "error" || !is_keyword(t.text);
    if (t.kind == Token::Kind::Sym) return t.text == "[" || t.text == "{";
    return false;
  }

  CmdPtr parse_block() {
    lx.expect_sym("{");
    CmdPtr c = parse_cmd();
    lx.expect_sym("}");
    return c;
  }

  CmdPtr parse_stmt() {
    const Token &t = lx.peek();
    if (lx.at_sym("{")) return parse_block();
    if (lx.eat_ident("skip")) return cskip();
    if (lx.eat_ident("assume")) {
      lx.expect_sym("(");
      ExprPtr e = ep.parse_expr();
      lx.expect_sym(")");
      return cassume(e);
    }
    if (lx.eat_ident("while")) {
      ExprPtr e = ep.parse_expr();
      CmdPtr body = parse_block();
      return cwhile(e, body);
    }
    if (lx.eat_ident("if")) {
      ExprPtr e = ep.parse_expr();
      CmdPtr a = parse_block();
      CmdPtr b = cskip();
      if (lx.eat_ident("else")) {
        if (lx.at_ident("if"))
          b = parse_stmt();
        else
          b = parse_block();
      }
      return cif(e, a, b);
    }
    if (lx.eat_ident("free")) {
      lx.expect_sym("(");
      ExprPtr e = ep.parse_expr();
      lx.expect_sym(")");
      return cfree(e);
    }
    if (lx.eat_ident("error")) {
      lx.expect_sym("(");
      lx.expect_sym(")");
      return cerror();
    }
    if (lx.at_sym("[")) {
      lx.next();
      ExprPtr a = ep.parse_expr();
      lx.expect_sym("]");
      lx.expect_sym("<-");
      ExprPtr v = ep.parse_expr();
      return cstore(a, v);
    }
    if (t.kind == Token::Kind::Ident && !is_keyword(t.text)) {
      if (is_lvar(t.text))
        throw ParseError("logical variable '" + t.text + "' not allowed in programs", t.line,
                         t.col);
      std::string name = lx.next().text;
      if (lx.eat_sym(":=")) {
        if (lx.at_ident("alloc")) {
          lx.next();
          lx.expect_sym("(");
          lx.expect_sym(")");
          return calloc_(name);
        }
        if (lx.at_ident("malloc")) {
          lx.next();
          lx.expect_sym("(");
          lx.expect_sym(")");
          return cmalloc(name);
        }
        return cassign(name, ep.parse_expr());
      }
      if (lx.eat_sym("<-")) {
        lx.expect_sym("[");
        ExprPtr e = ep.parse_expr();
        lx.expect_sym("]");
        return cload(name, e);
      }
      if (lx.eat_sym("(")) {
        std::vector<ExprPtr> args;
        if (!lx.at_sym(")")) {
          args.push_back(ep.parse_expr());
          while (lx.eat_sym(",")) args.push_back(ep.parse_expr());
        }
        lx.expect_sym(")");
        return ccall(name, std::move(args));
      }
      lx.fail("expected ':=', '<-' or '(' after '" + name + "'");
    }
    lx.fail("expected statement");
  }
};

inline void check_calls(const CmdPtr &c, const Program &prog,
                        std::map<std::string, std::set<std::string>> &callees,
                        const std::string &in_proc) {
  switch (c->kind) {
  case Command::Kind::Skip: return;
  case Command::Kind::Seq:
  case Command::Kind::Choice:
  case Command::Kind::ProbChoice:
  case Command::Kind::If:
    check_calls(c->c1, prog, callees, in_proc);
    check_calls(c->c2, prog, callees, in_proc);
    return;
  case Command::Kind::While: check_calls(c->c1, prog, callees, in_proc); return;
  case Command::Kind::Assume: return;
  case Command::Kind::Act:
    if (c->act.kind == Action::Kind::Call) {
      auto it = prog.procs.find(c->act.var);
      if (it == prog.procs.end())
        throw ParseError("call to unknown procedure '" + c->act.var + "'", 0, 0);
      if (it->second.params.size() != c->act.args.size())
        throw ParseError("arity mismatch calling '" + c->act.var + "': expected " +
                             std::to_string(it->second.params.size()) + " argument(s), got " +
                             std::to_string(c->act.args.size()),
                         0, 0);
      callees[in_proc].insert(c->act.var);
    }
    return;
  }
}

} // namespace detail

// Parses a program; throws ParseError (with line/column) on syntax errors,
// duplicate or unknown procedures, arity mismatches and cyclic call graphs.
inline Program parse_program(const std::string &text) {
  Lexer lx(text);
  detail::CmdParser cp{lx};
  Program prog;
  std::vector<std::string> order;
  while (lx.peek().kind != Token::Kind::End) {
    const Token &t = lx.peek();
    if (!lx.eat_ident("proc")) lx.fail("expected 'proc'");
    if (lx.peek().kind != Token::Kind::Ident) lx.fail("expected procedure name");
    std::string name = lx.next().text;
    if (prog.procs.count(name))
      throw ParseError("duplicate procedure '" + name + "'", t.line, t.col);
    Proc proc;
    lx.expect_sym("(");
    if (!lx.at_sym(")")) {
      do {
        if (lx.peek().kind != Token::Kind::Ident) lx.fail("expected parameter name");
        Token pt = lx.next();
        if (is_lvar(pt.text))
          throw ParseError("logical variable '" + pt.text + "' not allowed as parameter",
                           pt.line, pt.col);
        proc.params.push_back(pt.text);
      } while (lx.eat_sym(","));
    }
    lx.expect_sym(")");
    lx.expect_sym("{");
    proc.body = cp.parse_cmd();
    lx.expect_sym("}");
    prog.procs.emplace(name, std::move(proc));
    order.push_back(name);
  }
  if (order.empty()) throw ParseError("empty program", 1, 1);
  prog.entry = prog.procs.count("main") ? "main" : order.front();

  std::map<std::string, std::set<std::string>> callees;
  for (auto &[name, proc] : prog.procs) detail::check_calls(proc.body, prog, callees, name);

  // cycle check via iterative elimination of leaf procedures
  std::set<std::string> remaining;
  for (auto &[name, _] : prog.procs) remaining.insert(name);
  bool progress = true;
  while (progress && !remaining.empty()) {
    progress = false;
    for (auto it = remaining.begin(); it != remaining.end();) {
      bool leaf = true;
      for (auto &callee : callees[*it])
        if (remaining.count(callee) && callee != *it) leaf = false;
      if (callees[*it].count(*it)) leaf = false;
      if (leaf) {
        it = remaining.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  if (!remaining.empty())
    throw ParseError("cyclic call graph involving '" + *remaining.begin() + "'", 0, 0);
  return prog;
}

// Reverse-topological order of the call graph: callees come before callers.
inline std::vector<std::string> analysis_order(const Program &prog) {
  std::map<std::string, std::set<std::string>> callees;
  for (auto &[name, proc] : prog.procs) {
    detail::check_calls(proc.body, prog, callees, name);
  }
  std::vector<std::string> out;
  std::set<std::string> done;
  std::function<void(const std::string &)> visit = [&](const std::string &f) {
    if (done.count(f)) return;
    done.insert(f);
    for (auto &g : callees[f]) visit(g);
    out.push_back(f);
  };
  for (auto &[name, _] : prog.procs) visit(name);
  return out;
}

} // namespace osl
