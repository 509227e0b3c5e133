#pragma once

#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "osl/state.hpp"

namespace osl {

enum class BinOp { Add, Sub, Eq, Le, And };

inline std::string binop_str(BinOp op) {
  switch (op) {
  case BinOp::Add: return "+";
  case BinOp::Sub: return "-";
  case BinOp::Eq: return "=";
  case BinOp::Le: return "<=";
  case BinOp::And: return "&&";
  }
  return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Var, Const, Bin, Not };
  Kind kind;
  std::string var;        // Var
  Value val;              // Const
  BinOp op = BinOp::Add;  // Bin
  ExprPtr lhs, rhs;       // Bin; Not uses lhs only
};

inline ExprPtr evar(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->var = std::move(name);
  return e;
}

inline ExprPtr econst(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Const;
  e->val = std::move(v);
  return e;
}

inline ExprPtr ebin(BinOp op, ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Bin;
  e->op = op;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

inline ExprPtr enot(ExprPtr x) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Not;
  e->lhs = std::move(x);
  return e;
}

inline ExprPtr enull() { return econst(Value(0)); }

// Canonical print; parses back to the same tree.
inline std::string expr_str(const ExprPtr &e) {
  switch (e->kind) {
  case Expr::Kind::Var: return e->var;
  case Expr::Kind::Const:
    if (e->val == 0) return "null";
    return rat_str(e->val);
  case Expr::Kind::Bin:
    return "(" + expr_str(e->lhs) + " " + binop_str(e->op) + " " + expr_str(e->rhs) + ")";
  case Expr::Kind::Not: return "!" + expr_str(e->lhs);
  }
  return "?";
}

inline bool expr_equal(const ExprPtr &a, const ExprPtr &b) {
  if (a == b) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
  case Expr::Kind::Var: return a->var == b->var;
  case Expr::Kind::Const: return a->val == b->val;
  case Expr::Kind::Bin:
    return a->op == b->op && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  case Expr::Kind::Not: return expr_equal(a->lhs, b->lhs);
  }
  return false;
}

inline void collect_vars(const ExprPtr &e, std::set<std::string> &out) {
  switch (e->kind) {
  case Expr::Kind::Var: out.insert(e->var); break;
  case Expr::Kind::Const: break;
  case Expr::Kind::Bin:
    collect_vars(e->lhs, out);
    collect_vars(e->rhs, out);
    break;
  case Expr::Kind::Not: collect_vars(e->lhs, out); break;
  }
}

inline std::set<std::string> expr_vars(const ExprPtr &e) {
  std::set<std::string> s;
  collect_vars(e, s);
  return s;
}

// Simultaneous substitution of expressions for variable names.
inline ExprPtr subst_expr(const ExprPtr &e, const std::map<std::string, ExprPtr> &sub) {
  switch (e->kind) {
  case Expr::Kind::Var: {
    auto it = sub.find(e->var);
    return it == sub.end() ? e : it->second;
  }
  case Expr::Kind::Const: return e;
  case Expr::Kind::Bin: {
    ExprPtr l = subst_expr(e->lhs, sub), r = subst_expr(e->rhs, sub);
    return (l == e->lhs && r == e->rhs) ? e : ebin(e->op, l, r);
  }
  case Expr::Kind::Not: {
    ExprPtr l = subst_expr(e->lhs, sub);
    return l == e->lhs ? e : enot(l);
  }
  }
  return e;
}

struct Command;
using CmdPtr = std::shared_ptr<const Command>;

struct Action {
  enum class Kind { Assign, Alloc, Malloc, Free, Store, Load, Error, Call };
  Kind kind;
  std::string var;             // Assign/Alloc/Malloc/Load target, Call name
  ExprPtr e1, e2;              // operands
  std::vector<ExprPtr> args;   // Call
};

struct Command {
  enum class Kind { Skip, Seq, Choice, ProbChoice, Assume, While, If, Act };
  Kind kind;
  CmdPtr c1, c2;
  ExprPtr guard;  // Assume / While / If
  Rat prob;       // ProbChoice
  Action act;     // Act
};

inline CmdPtr cskip() {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::Skip;
  return c;
}

inline CmdPtr cseq(CmdPtr a, CmdPtr b) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::Seq;
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  return c;
}

inline CmdPtr cchoice(CmdPtr a, CmdPtr b) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::Choice;
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  return c;
}

inline CmdPtr cprob(CmdPtr a, CmdPtr b, Rat p) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::ProbChoice;
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  c->prob = std::move(p);
  return c;
}

inline CmdPtr cassume(ExprPtr e) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::Assume;
  c->guard = std::move(e);
  return c;
}

inline CmdPtr cwhile(ExprPtr e, CmdPtr body) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::While;
  c->guard = std::move(e);
  c->c1 = std::move(body);
  return c;
}

inline CmdPtr cif(ExprPtr e, CmdPtr a, CmdPtr b) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::If;
  c->guard = std::move(e);
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  return c;
}

inline CmdPtr cact(Action a) {
  auto c = std::make_shared<Command>();
  c->kind = Command::Kind::Act;
  c->act = std::move(a);
  return c;
}

inline CmdPtr cassign(std::string x, ExprPtr e) {
  return cact({Action::Kind::Assign, std::move(x), std::move(e), nullptr, {}});
}
inline CmdPtr calloc_(std::string x) {
  return cact({Action::Kind::Alloc, std::move(x), nullptr, nullptr, {}});
}
inline CmdPtr cmalloc(std::string x) {
  return cact({Action::Kind::Malloc, std::move(x), nullptr, nullptr, {}});
}
inline CmdPtr cfree(ExprPtr e) {
  return cact({Action::Kind::Free, "", std::move(e), nullptr, {}});
}
inline CmdPtr cstore(ExprPtr a, ExprPtr v) {
  return cact({Action::Kind::Store, "", std::move(a), std::move(v), {}});
}
inline CmdPtr cload(std::string x, ExprPtr e) {
  return cact({Action::Kind::Load, std::move(x), std::move(e), nullptr, {}});
}
inline CmdPtr cerror() {
  return cact({Action::Kind::Error, "", nullptr, nullptr, {}});
}
inline CmdPtr ccall(std::string f, std::vector<ExprPtr> args) {
  return cact({Action::Kind::Call, std::move(f), nullptr, nullptr, std::move(args)});
}

struct Proc {
  std::vector<std::string> params;
  CmdPtr body;
};

struct Program {
  std::map<std::string, Proc> procs;
  std::string entry;
};

// ---- pretty printing -------------------------------------------------

inline void cmd_print(const CmdPtr &c, std::ostringstream &os, int indent);

inline std::string ind(int n) { return std::string(n * 2, ' '); }

inline void act_print(const Action &a, std::ostringstream &os) {
  switch (a.kind) {
  case Action::Kind::Assign: os << a.var << " := " << expr_str(a.e1); break;
  case Action::Kind::Alloc: os << a.var << " := alloc()"; break;
  case Action::Kind::Malloc: os << a.var << " := malloc()"; break;
  case Action::Kind::Free: os << "free(" << expr_str(a.e1) << ")"; break;
  case Action::Kind::Store:
    os << "[" << expr_str(a.e1) << "] <- " << expr_str(a.e2);
    break;
  case Action::Kind::Load: os << a.var << " <- [" << expr_str(a.e1) << "]"; break;
  case Action::Kind::Error: os << "error()"; break;
  case Action::Kind::Call: {
    os << a.var << "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (i) os << ", ";
      os << expr_str(a.args[i]);
    }
    os << ")";
    break;
  }
  }
}

inline void cmd_print(const CmdPtr &c, std::ostringstream &os, int indent) {
  switch (c->kind) {
  case Command::Kind::Skip: os << ind(indent) << "skip"; break;
  case Command::Kind::Seq:
    cmd_print(c->c1, os, indent);
    os << ";\n";
    cmd_print(c->c2, os, indent);
    break;
  case Command::Kind::Choice:
  case Command::Kind::ProbChoice:
    os << ind(indent) << "{\n";
    cmd_print(c->c1, os, indent + 1);
    os << "\n" << ind(indent) << "}";
    if (c->kind == Command::Kind::ProbChoice)
      os << " +[" << rat_str(c->prob) << "] ";
    else
      os << " + ";
    os << "{\n";
    cmd_print(c->c2, os, indent + 1);
    os << "\n" << ind(indent) << "}";
    break;
  case Command::Kind::Assume:
    os << ind(indent) << "assume(" << expr_str(c->guard) << ")";
    break;
  case Command::Kind::While:
    os << ind(indent) << "while " << expr_str(c->guard) << " {\n";
    cmd_print(c->c1, os, indent + 1);
    os << "\n" << ind(indent) << "}";
    break;
  case Command::Kind::If:
    os << ind(indent) << "if " << expr_str(c->guard) << " {\n";
    cmd_print(c->c1, os, indent + 1);
    os << "\n" << ind(indent) << "} else {\n";
    cmd_print(c->c2, os, indent + 1);
    os << "\n" << ind(indent) << "}";
    break;
  case Command::Kind::Act:
    os << ind(indent);
    act_print(c->act, os);
    break;
  }
}

inline std::string cmd_str(const CmdPtr &c) {
  std::ostringstream os;
  cmd_print(c, os, 0);
  return os.str();
}

inline std::string program_str(const Program &p) {
  std::ostringstream os;
  for (auto &[name, proc] : p.procs) {
    os << "proc " << name << "(";
    for (size_t i = 0; i < proc.params.size(); ++i) {
      if (i) os << ", ";
      os << proc.params[i];
    }
    os << ") {\n";
    std::ostringstream body;
    cmd_print(proc.body, body, 1);
    os << body.str() << "\n}\n";
  }
  return os.str();
}

// ---- modified variables ----------------------------------------------

// Program variables assigned anywhere in c; calls expand through the
// procedure table (params count as assigned at the call).
inline void mod_vars(const CmdPtr &c, const Program &prog, std::set<std::string> &out,
                     std::set<std::string> &seen_procs) {
  switch (c->kind) {
  case Command::Kind::Skip: return;
  case Command::Kind::Seq:
  case Command::Kind::Choice:
  case Command::Kind::ProbChoice:
    mod_vars(c->c1, prog, out, seen_procs);
    mod_vars(c->c2, prog, out, seen_procs);
    return;
  case Command::Kind::Assume: return;
  case Command::Kind::While: mod_vars(c->c1, prog, out, seen_procs); return;
  case Command::Kind::If:
    mod_vars(c->c1, prog, out, seen_procs);
    mod_vars(c->c2, prog, out, seen_procs);
    return;
  case Command::Kind::Act:
    switch (c->act.kind) {
    case Action::Kind::Assign:
    case Action::Kind::Alloc:
    case Action::Kind::Malloc:
    case Action::Kind::Load: out.insert(c->act.var); return;
    case Action::Kind::Free:
    case Action::Kind::Store:
    case Action::Kind::Error: return;
    case Action::Kind::Call: {
      auto it = prog.procs.find(c->act.var);
      if (it == prog.procs.end()) return;
      for (auto &p : it->second.params) out.insert(p);
      if (seen_procs.insert(c->act.var).second)
        mod_vars(it->second.body, prog, out, seen_procs);
      return;
    }
    }
  }
}

inline std::set<std::string> mod_vars(const CmdPtr &c, const Program &prog) {
  std::set<std::string> out, seen;
  mod_vars(c, prog, out, seen);
  return out;
}

} // namespace osl
