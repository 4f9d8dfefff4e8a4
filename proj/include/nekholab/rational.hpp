// Exact integer/rational helpers shared across the library.
// Thin layer over gmpxx: dyadic rounding of doubles, gcd/lcm utilities,
// sup norms and dot products in exact arithmetic, and a "p/q" text form.
#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace nekholab {

using Int = mpz_class;
using Rat = mpq_class;

// Nearest multiple of 2^-bits (ties away from zero is irrelevant here since
// dyadic ties cannot occur for bits >= 53 inputs; we round half up).
// Throws std::domain_error on NaN/inf.
Rat rationalize(double x, unsigned bits = 53);
std::vector<Rat> rationalize(const std::vector<double> &xs, unsigned bits = 53);

// gcd of absolute values; 0 when every entry is zero.
Int content(const std::vector<Int> &v);

// lcm of the canonical (positive) denominators; 1 for the empty vector.
Int lcm_denominators(const std::vector<Rat> &v);

Rat sup_norm(const std::vector<Rat> &v);
Rat dot(const std::vector<Rat> &a, const std::vector<Rat> &b);

Rat abs_rat(const Rat &x);

// a^k for integer k >= 0.
Rat pow_rat(const Rat &a, unsigned long k);

// "p" when the denominator is 1, otherwise "p/q".
std::string rat_text(const Rat &x);
// Inverse of rat_text; also accepts plain integers. Throws std::invalid_argument.
Rat parse_rat(const std::string &text);

inline double to_double(const Rat &x) { return x.get_d(); }

} // namespace nekholab
