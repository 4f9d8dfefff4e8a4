#include "nekholab/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace nekholab {

Rat rationalize(double x, unsigned bits) {
  if (!std::isfinite(x))
    throw std::domain_error("rationalize: input is not finite");
  if (x == 0.0)
    return Rat(0);
  // mpq_class(double) is exact: x = p / 2^e with bounded e. Scale by 2^bits
  // and round to the nearest integer, i.e. floor(scaled + 1/2).
  Rat exact(x);
  Int num = exact.get_num() << bits;
  Int den = exact.get_den();
  Int rounded;
  mpz_fdiv_q(rounded.get_mpz_t(), Int(2 * num + den).get_mpz_t(),
             Int(2 * den).get_mpz_t());
  Rat out(rounded, Int(1) << bits);
  out.canonicalize();
  return out;
}

std::vector<Rat> rationalize(const std::vector<double> &xs, unsigned bits) {
  std::vector<Rat> out;
  out.reserve(xs.size());
  for (double x : xs)
    out.push_back(rationalize(x, bits));
  return out;
}

Int content(const std::vector<Int> &v) {
  Int g = 0;
  for (const Int &x : v)
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  return g;
}

Int lcm_denominators(const std::vector<Rat> &v) {
  Int l = 1;
  for (const Rat &x : v)
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den().get_mpz_t());
  return l;
}

Rat sup_norm(const std::vector<Rat> &v) {
  Rat m = 0;
  for (const Rat &x : v) {
    Rat a = abs_rat(x);
    if (a > m)
      m = a;
  }
  return m;
}

Rat dot(const std::vector<Rat> &a, const std::vector<Rat> &b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot: dimension mismatch");
  Rat s = 0;
  for (size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

Rat abs_rat(const Rat &x) { return x < 0 ? Rat(-x) : x; }

Rat pow_rat(const Rat &a, unsigned long k) {
  Rat out;
  mpz_pow_ui(out.get_num_mpz_t(), a.get_num().get_mpz_t(), k);
  mpz_pow_ui(out.get_den_mpz_t(), a.get_den().get_mpz_t(), k);
  return out;
}

std::string rat_text(const Rat &x) {
  if (x.get_den() == 1)
    return x.get_num().get_str();
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

Rat parse_rat(const std::string &text) {
  Rat out;
  if (out.set_str(text, 10) != 0)
    throw std::invalid_argument("parse_rat: bad rational '" + text + "'");
  if (out.get_den() == 0)
    throw std::invalid_argument("parse_rat: zero denominator in '" + text + "'");
  out.canonicalize();
  return out;
}

} // namespace nekholab
