#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "osl/rational.hpp"

namespace osl {

// Program values are exact rationals: integers (den 1), null (0), booleans
// (0/1) and probability weights all live in one carrier. Addresses are the
// positive integers; null is not an address.
using Value = Rat;

inline bool is_address(const Value &v) { return is_integer(v) && v > 0; }

// Variable naming convention: identifiers starting with an uppercase letter
// are logical variables, all others are program variables. Programs cannot
// mention logical variables; assertions may mention both.
inline bool is_lvar(const std::string &name) {
  return !name.empty() && isupper(static_cast<unsigned char>(name[0]));
}

// Finite-support store; unmapped names read as 0, and zero entries are
// erased so semantically equal stores compare equal as map keys.
struct Store {
  std::map<std::string, Value> m;

  Value get(const std::string &x) const {
    auto it = m.find(x);
    return it == m.end() ? Value(0) : it->second;
  }
  void set(const std::string &x, const Value &v) {
    if (v == 0)
      m.erase(x);
    else
      m[x] = v;
  }
  Store with(const std::string &x, const Value &v) const {
    Store s = *this;
    s.set(x, v);
    return s;
  }
  friend auto operator<=>(const Store &a, const Store &b) = default;
};

// Heap cell: a value, or nullopt for an explicitly deallocated cell.
using Cell = std::optional<Value>;

struct Heap {
  std::map<Value, Cell> m;

  bool contains(const Value &a) const { return m.count(a) != 0; }
  // nullopt when the address is outside the domain entirely.
  std::optional<Cell> lookup(const Value &a) const {
    auto it = m.find(a);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }
  Heap with(const Value &a, const Cell &c) const {
    Heap h = *this;
    h.m[a] = c;
    return h;
  }
  friend auto operator<=>(const Heap &a, const Heap &b) = default;
};

enum class Tag { Ok, Er, Und };

inline std::string tag_name(Tag t) {
  switch (t) {
  case Tag::Ok: return "ok";
  case Tag::Er: return "er";
  case Tag::Und: return "und";
  }
  return "?";
}

// inj_ok / inj_er carry a (store, heap); inj_und carries nothing.
struct TaggedState {
  Tag tag = Tag::Und;
  Store store;
  Heap heap;

  static TaggedState ok(Store s, Heap h) { return {Tag::Ok, std::move(s), std::move(h)}; }
  static TaggedState er(Store s, Heap h) { return {Tag::Er, std::move(s), std::move(h)}; }
  static TaggedState und() { return {}; }

  bool is_defined() const { return tag != Tag::Und; }
  friend auto operator<=>(const TaggedState &a, const TaggedState &b) = default;
};

inline std::string store_str(const Store &s) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (auto &[k, v] : s.m) {
    if (!first) os << ", ";
    first = false;
    os << k << "=" << rat_str(v);
  }
  os << "}";
  return os.str();
}

inline std::string heap_str(const Heap &h) {
  std::ostringstream os;
  os << "[";
  bool first = true;
  for (auto &[a, c] : h.m) {
    if (!first) os << ", ";
    first = false;
    os << rat_str(a) << "->" << (c ? rat_str(*c) : std::string("_|_"));
  }
  os << "]";
  return os.str();
}

inline std::string state_str(const TaggedState &t) {
  if (t.tag == Tag::Und) return "und";
  return tag_name(t.tag) + " " + store_str(t.store) + " " + heap_str(t.heap);
}

} // namespace osl
