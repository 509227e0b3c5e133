#pragma once

#include <stdexcept>

#include "osl/allocator.hpp"
#include "osl/ast.hpp"
#include "osl/weighting.hpp"

namespace osl {

// A program combination whose weighting sum is undefined (or whose assume
// guard is not a valid weight) lies outside the total fragment; execution
// aborts with a diagnostic instead of clamping.
struct IllFormedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Value eval_expr(const ExprPtr &e, const Store &s) {
  switch (e->kind) {
  case Expr::Kind::Var: return s.get(e->var);
  case Expr::Kind::Const: return e->val;
  case Expr::Kind::Bin: {
    Value l = eval_expr(e->lhs, s), r = eval_expr(e->rhs, s);
    switch (e->op) {
    case BinOp::Add: return l + r;
    case BinOp::Sub: return l - r;
    case BinOp::Eq: return Value(l == r ? 1 : 0);
    case BinOp::Le: return Value(l <= r ? 1 : 0);
    case BinOp::And: return Value(l != 0 && r != 0 ? 1 : 0);
    }
    return Value(0);
  }
  case Expr::Kind::Not: return Value(eval_expr(e->lhs, s) == 0 ? 1 : 0);
  }
  return Value(0);
}

struct ExecCtx {
  Algebra alg;
  const Program *prog = nullptr;  // for procedure calls; may be null
  Allocator af;
  int fuel = 8;
};

inline Weighting exec(const CmdPtr &c, const Store &s, const Heap &h, const ExecCtx &ctx);

namespace detail {

// Fig. 1's update: ok on an allocated cell, er on a deallocated or null
// address, und outside the heap's domain.
inline Weighting update(Algebra alg, const Store &s, const Heap &h, const Value &addr,
                        const Store &s2, const Heap &h2) {
  if (addr == 0) return unit_w(alg, TaggedState::er(s, h));
  auto cell = h.lookup(addr);
  if (!cell) return unit_w(alg, TaggedState::und());
  if (!*cell) return unit_w(alg, TaggedState::er(s, h));
  return unit_w(alg, TaggedState::ok(s2, h2));
}

inline Weighting exec_act(const Action &a, const Store &s, const Heap &h, const ExecCtx &ctx) {
  Algebra alg = ctx.alg;
  switch (a.kind) {
  case Action::Kind::Assign:
    return unit_w(alg, TaggedState::ok(s.with(a.var, eval_expr(a.e1, s)), h));
  case Action::Kind::Alloc: {
    Weighting r(alg);
    for (auto &choice : ctx.af.pick(s, h)) {
      assert(!h.contains(choice.addr) && "allocator returned a used address");
      TaggedState t = TaggedState::ok(s.with(a.var, choice.addr), h.with(choice.addr, choice.init));
      bool ok = add_weight(r, t, Weight{alg, choice.weight});
      assert(ok);
      (void)ok;
    }
    return r;
  }
  case Action::Kind::Free: {
    Value addr = eval_expr(a.e1, s);
    return update(alg, s, h, addr, s, h.with(addr, std::nullopt));
  }
  case Action::Kind::Store: {
    Value addr = eval_expr(a.e1, s);
    return update(alg, s, h, addr, s, h.with(addr, eval_expr(a.e2, s)));
  }
  case Action::Kind::Load: {
    Value addr = eval_expr(a.e1, s);
    auto cell = h.lookup(addr);
    Store s2 = (cell && *cell) ? s.with(a.var, **cell) : s;
    return update(alg, s, h, addr, s2, h);
  }
  case Action::Kind::Error: return unit_w(alg, TaggedState::er(s, h));
  case Action::Kind::Call: {
    if (!ctx.prog) throw IllFormedError("procedure call without a program context");
    auto it = ctx.prog->procs.find(a.var);
    if (it == ctx.prog->procs.end())
      throw IllFormedError("call to unknown procedure '" + a.var + "'");
    const Proc &proc = it->second;
    if (proc.params.size() != a.args.size())
      throw IllFormedError("arity mismatch calling '" + a.var + "'");
    std::vector<Value> vals;
    vals.reserve(a.args.size());
    for (auto &arg : a.args) vals.push_back(eval_expr(arg, s));
    Store s2 = s;
    for (size_t i = 0; i < vals.size(); ++i) s2.set(proc.params[i], vals[i]);
    return exec(proc.body, s2, h, ctx);
  }
  case Action::Kind::Malloc: break;
  }
  throw std::logic_error("exec: command not desugared");
}

inline Weighting exec_while(const ExprPtr &guard, const CmdPtr &body, const Store &s,
                            const Heap &h, const ExecCtx &ctx, int unfoldings,
                            bool &truncated) {
  if (unfoldings <= 0) {
    truncated = true;  // unexpended iterations: missing mass
    return empty_w(ctx.alg);
  }
  Value v = eval_expr(guard, s);
  if (v == 0) return unit_w(ctx.alg, TaggedState::ok(s, h));
  if (v != 1)
    throw IllFormedError("while guard evaluated to " + rat_str(v) + ", not a test");
  return bind_w(exec(body, s, h, ctx), [&](const Store &s2, const Heap &h2) {
    return exec_while(guard, body, s2, h2, ctx, unfoldings - 1, truncated);
  });
}

} // namespace detail

// Denotational semantics of a desugared command: a weighting over tagged
// end states. Loops are bounded Kleene iterations of the loop functional;
// for the finite-support det/nondet instances the iteration stops early
// once it stabilizes.
inline Weighting exec(const CmdPtr &c, const Store &s, const Heap &h, const ExecCtx &ctx) {
  switch (c->kind) {
  case Command::Kind::Skip: return unit_w(ctx.alg, TaggedState::ok(s, h));
  case Command::Kind::Seq:
    return bind_w(exec(c->c1, s, h, ctx),
                  [&](const Store &s2, const Heap &h2) { return exec(c->c2, s2, h2, ctx); });
  case Command::Kind::Choice: {
    auto r = wsum(exec(c->c1, s, h, ctx), exec(c->c2, s, h, ctx));
    if (!r)
      throw IllFormedError("undefined weighting sum in choice: " + cmd_str(c->c1) + " + " +
                           cmd_str(c->c2));
    return *r;
  }
  case Command::Kind::Assume: {
    Value v = eval_expr(c->guard, s);
    if (!carrier_contains(ctx.alg, v))
      throw IllFormedError("assume guard evaluated to " + rat_str(v) +
                           ", not a weight in algebra " + algebra_name(ctx.alg));
    return scale(Weight{ctx.alg, v}, unit_w(ctx.alg, TaggedState::ok(s, h)));
  }
  case Command::Kind::While: {
    // Kleene iterate of the loop functional, cut off at the fuel bound. If
    // no path exhausts the fuel the result is the exact least fixed point.
    bool truncated = false;
    return detail::exec_while(c->guard, c->c1, s, h, ctx, ctx.fuel, truncated);
  }
  case Command::Kind::Act: return detail::exec_act(c->act, s, h, ctx);
  case Command::Kind::If:
  case Command::Kind::ProbChoice: break;
  }
  throw std::logic_error("exec: command not desugared");
}

// Kleisli extension: er and und states pass through unchanged.
inline Weighting exec_lifted(const CmdPtr &c, const Weighting &m, const ExecCtx &ctx) {
  return bind_w(m, [&](const Store &s, const Heap &h) { return exec(c, s, h, ctx); });
}

} // namespace osl
