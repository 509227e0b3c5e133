#pragma once

#include <stdexcept>

#include "osl/ast.hpp"

namespace osl {

struct DesugarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rewrites if/else, probabilistic choice and malloc into the core grammar:
//   if e {C1} else {C2}  =>  (assume(e); C1) + (assume(!e); C2)
//   C1 +[p] C2           =>  (assume(p); C1) + (assume(1-p); C2)
//   x := malloc()        =>  (x := alloc()) + (x := null)
// Idempotent; the result contains only core nodes.
inline CmdPtr desugar(const CmdPtr &c) {
  switch (c->kind) {
  case Command::Kind::Skip: return c;
  case Command::Kind::Seq: {
    CmdPtr a = desugar(c->c1), b = desugar(c->c2);
    return (a == c->c1 && b == c->c2) ? c : cseq(a, b);
  }
  case Command::Kind::Choice: {
    CmdPtr a = desugar(c->c1), b = desugar(c->c2);
    return (a == c->c1 && b == c->c2) ? c : cchoice(a, b);
  }
  case Command::Kind::ProbChoice: {
    if (c->prob < 0 || c->prob > 1)
      throw DesugarError("probability literal " + rat_str(c->prob) + " outside [0,1]");
    CmdPtr a = cseq(cassume(econst(c->prob)), desugar(c->c1));
    CmdPtr b = cseq(cassume(econst(Rat(1) - c->prob)), desugar(c->c2));
    return cchoice(a, b);
  }
  case Command::Kind::Assume: return c;
  case Command::Kind::While: {
    CmdPtr body = desugar(c->c1);
    return body == c->c1 ? c : cwhile(c->guard, body);
  }
  case Command::Kind::If: {
    CmdPtr a = cseq(cassume(c->guard), desugar(c->c1));
    CmdPtr b = cseq(cassume(enot(c->guard)), desugar(c->c2));
    return cchoice(a, b);
  }
  case Command::Kind::Act:
    if (c->act.kind == Action::Kind::Malloc)
      return cchoice(calloc_(c->act.var), cassign(c->act.var, enull()));
    return c;
  }
  return c;
}

inline Program desugar(const Program &p) {
  Program out = p;
  for (auto &[name, proc] : out.procs) proc.body = desugar(proc.body);
  return out;
}

inline bool has_sugar(const CmdPtr &c) {
  switch (c->kind) {
  case Command::Kind::Skip:
  case Command::Kind::Assume: return false;
  case Command::Kind::Seq:
  case Command::Kind::Choice: return has_sugar(c->c1) || has_sugar(c->c2);
  case Command::Kind::ProbChoice:
  case Command::Kind::If: return true;
  case Command::Kind::While: return has_sugar(c->c1);
  case Command::Kind::Act: return c->act.kind == Action::Kind::Malloc;
  }
  return false;
}

} // namespace osl
