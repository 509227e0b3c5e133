#pragma once

#include <gmpxx.h>
#include <optional>
#include <stdexcept>
#include <string>

namespace osl {

using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  Rat q(num, den);
  q.canonicalize();
  return q;
}

inline bool is_integer(const Rat &q) { return q.get_den() == 1; }

// Accepts "3", "-7", "3/4" and decimal fractions like "0.99"; exact in all cases.
inline std::optional<Rat> parse_rat(const std::string &text) {
  if (text.empty()) return std::nullopt;
  auto dot = text.find('.');
  try {
    if (dot == std::string::npos) {
      Rat q(text);
      q.canonicalize();
      return q;
    }
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (frac.empty()) return std::nullopt;
    for (char c : frac)
      if (!isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    bool neg = !whole.empty() && whole[0] == '-';
    if (neg) whole = whole.substr(1);
    if (whole.empty()) whole = "0";
    mpz_class w(whole), f(frac), scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    Rat q(w * scale + f, scale);
    q.canonicalize();
    if (neg) q = -q;
    return q;
  } catch (const std::invalid_argument &) {
    return std::nullopt;
  }
}

// Canonical text: integers bare, proper fractions as "n/d".
inline std::string rat_str(const Rat &q) { return q.get_str(); }

} // namespace osl
