#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "osl/algebra.hpp"
#include "osl/state.hpp"

namespace osl {

// One allocation outcome: fresh address, initial cell value, weight.
struct AllocChoice {
  Value addr;
  Value init;
  Rat weight;
};

// Allocators map (store, heap) to a unit-mass collection of fresh
// address/value pairs. All members here are single-support and therefore
// valid in every algebra instance.
struct Allocator {
  std::string id;
  std::function<std::vector<AllocChoice>(const Store &, const Heap &)> pick;
};

struct AllocExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Value min_free_from(const Heap &h, long start) {
  long a = start < 1 ? 1 : start;
  while (h.contains(Value(a))) ++a;
  return Value(a);
}

// alloc_det of the semantics: first unused address, initial value 0.
inline Allocator make_min_free() {
  return {"min_free", [](const Store &, const Heap &h) {
            return std::vector<AllocChoice>{{min_free_from(h, 1), Value(0), Rat(1)}};
          }};
}

inline Allocator make_min_free_offset(long k) {
  return {"min_free_offset(" + std::to_string(k) + ")",
          [k](const Store &, const Heap &h) {
            return std::vector<AllocChoice>{{min_free_from(h, k), Value(0), Rat(1)}};
          }};
}

inline uint64_t fnv1a(const std::string &s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Pseudo-random but reproducible: the address is a pure function of the
// seed and the current machine state.
inline Allocator make_seeded_random(uint64_t seed, long addr_bound) {
  return {"seeded_random(" + std::to_string(seed) + "," + std::to_string(addr_bound) + ")",
          [seed, addr_bound](const Store &s, const Heap &h) {
            uint64_t hash = fnv1a(store_str(s), fnv1a(heap_str(h), seed * 0x9e3779b97f4a7c15ull + 0x1234567));
            for (long probe = 0; probe < addr_bound; ++probe) {
              long cand = 1 + static_cast<long>((hash + static_cast<uint64_t>(probe)) %
                                                static_cast<uint64_t>(addr_bound));
              if (!h.contains(Value(cand))) {
                Value init(static_cast<long>((hash >> 7) % 4));
                return std::vector<AllocChoice>{{Value(cand), init, Rat(1)}};
              }
            }
            throw AllocExhausted("seeded_random: no free address within bound " +
                                 std::to_string(addr_bound));
          }};
}

// Reads the logical variable X to choose the address, exercising the fact
// that allocators may depend on hidden state invisible to programs.
inline Allocator make_lvar_keyed(const std::string &lvar) {
  return {"lvar_keyed(" + lvar + ")", [lvar](const Store &s, const Heap &h) {
            Value key = s.get(lvar);
            long base = 1;
            if (is_integer(key)) {
              mpz_class n = key.get_num();
              mpz_class m = n % 16;
              if (m < 0) m += 16;
              base = 1 + m.get_si();
            }
            return std::vector<AllocChoice>{{min_free_from(h, base), Value(0), Rat(1)}};
          }};
}

struct AllocatorSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Spec strings: min_free | min_free_offset(k) | seeded_random(seed,bound)
// | lvar_keyed(X)
inline Allocator make_allocator(const std::string &spec) {
  auto args_of = [&](const std::string &prefix) -> std::vector<std::string> {
    std::string inner = spec.substr(prefix.size() + 1, spec.size() - prefix.size() - 2);
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= inner.size()) {
      size_t comma = inner.find(',', start);
      if (comma == std::string::npos) {
        parts.push_back(inner.substr(start));
        break;
      }
      parts.push_back(inner.substr(start, comma - start));
      start = comma + 1;
    }
    return parts;
  };
  if (spec == "min_free") return make_min_free();
  if (spec.rfind("min_free_offset(", 0) == 0 && spec.back() == ')')
    return make_min_free_offset(std::stol(args_of("min_free_offset")[0]));
  if (spec.rfind("seeded_random(", 0) == 0 && spec.back() == ')') {
    auto args = args_of("seeded_random");
    if (args.size() != 2) throw AllocatorSpecError("seeded_random needs (seed,bound)");
    return make_seeded_random(std::stoull(args[0]), std::stol(args[1]));
  }
  if (spec.rfind("lvar_keyed(", 0) == 0 && spec.back() == ')')
    return make_lvar_keyed(args_of("lvar_keyed")[0]);
  throw AllocatorSpecError("unknown allocator spec '" + spec + "'");
}

} // namespace osl
