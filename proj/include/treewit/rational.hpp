#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace treewit {

/// Exact arbitrary-precision rational. All probability and value arithmetic
/// in this library is exact; there is no floating-point fast path.
using Rational = mpq_class;

/// Parses "p/q" or "p" (optional leading '-') into a canonical rational.
/// Throws Error on malformed input or a zero denominator.
Rational parse_rational(const std::string& text);

std::optional<Rational> try_parse_rational(const std::string& text);

/// Canonical "p/q" form; integers print without the "/q" part.
std::string to_string(const Rational& r);

/// r^exp for exp >= 0.
Rational rational_pow(const Rational& base, unsigned long exp);

/// Largest power of two 2^-k (k >= 0) that is <= bound. Requires bound > 0.
Rational pow2_below(const Rational& bound);

/// num/den in canonical form. The mpq_class(num, den) constructor does NOT
/// canonicalize; use this whenever the operands may share a factor.
Rational make_rational(long num, long den);

}  // namespace treewit
