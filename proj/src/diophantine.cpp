#include "nekholab/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nekholab {

namespace {

Int floor_div(const Int &a, const Int &b) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

Int floor_rat(const Rat &x) { return floor_div(x.get_num(), x.get_den()); }

// Distance from x to the nearest integer, exact.
Rat dist_to_integer(const Rat &x) {
  Rat frac = x - Rat(floor_rat(x));
  Rat other = 1 - frac;
  return frac < other ? frac : other;
}

void subtract_scaled(std::vector<Int> &a, const Int &q, const std::vector<Int> &b) {
  for (size_t i = 0; i < a.size(); ++i)
    a[i] -= q * b[i];
}

bool all_zero(const std::vector<Int> &v) {
  for (const Int &x : v)
    if (x != 0)
      return false;
  return true;
}

// Column echelon form over Z restricted to the first `rows` coordinates of
// each column; columns are modified in place by unimodular operations and
// reordered so that echelon columns come first. Returns the echelon rank.
int column_echelon(std::vector<std::vector<Int>> &cols, int rows) {
  int r = 0;
  for (int i = 0; i < rows && r < static_cast<int>(cols.size()); ++i) {
    // Repeated gcd steps until at most one column has a nonzero entry in row i.
    for (;;) {
      int best = -1;
      for (int j = r; j < static_cast<int>(cols.size()); ++j) {
        if (cols[j][i] == 0)
          continue;
        if (best < 0 || cmp(abs(cols[j][i]), abs(cols[best][i])) < 0)
          best = j;
      }
      if (best < 0)
        break;
      std::swap(cols[best], cols[r]);
      bool clean = true;
      for (int j = r + 1; j < static_cast<int>(cols.size()); ++j) {
        if (cols[j][i] == 0)
          continue;
        Int q = floor_div(cols[j][i], cols[r][i]);
        subtract_scaled(cols[j], q, cols[r]);
        if (cols[j][i] != 0)
          clean = false;
      }
      if (clean)
        break;
    }
    if (cols[r][i] != 0)
      ++r;
  }
  return r;
}

int lattice_rank(const std::vector<std::vector<Int>> &rows, int ambient) {
  if (rows.empty())
    return 0;
  std::vector<std::vector<Int>> cols(rows.begin(), rows.end());
  return column_echelon(cols, ambient);
}

} // namespace

std::vector<Rat> PeriodicVector::omega() const {
  std::vector<Rat> out(numerator.size());
  for (size_t i = 0; i < numerator.size(); ++i) {
    out[i] = Rat(numerator[i]) / period;
    out[i].canonicalize();
  }
  return out;
}

Eigen::VectorXd PeriodicVector::omega_double() const {
  Eigen::VectorXd out(dim());
  double t = to_double(period);
  for (int i = 0; i < dim(); ++i)
    out[i] = numerator[i].get_d() / t;
  return out;
}

PeriodicVector make_periodic(std::vector<Int> numerator, Rat period) {
  if (numerator.empty())
    throw std::domain_error("make_periodic: empty vector");
  if (period <= 0)
    throw std::domain_error("make_periodic: period must be positive");
  if (all_zero(numerator))
    throw std::domain_error("make_periodic: zero frequency vector");
  period.canonicalize();
  Int g;
  mpz_gcd(g.get_mpz_t(), content(numerator).get_mpz_t(), period.get_num().get_mpz_t());
  if (g > 1) {
    for (Int &x : numerator)
      x /= g;
    period = Rat(period.get_num() / g, period.get_den());
  }
  PeriodicVector out;
  out.numerator = std::move(numerator);
  out.period = period;
  return out;
}

Int period_of(const std::vector<Rat> &w) {
  if (w.empty())
    throw std::domain_error("period_of: empty vector");
  bool nonzero = false;
  for (const Rat &x : w)
    if (x != 0)
      nonzero = true;
  if (!nonzero)
    throw std::domain_error("period_of: zero frequency vector");
  return lcm_denominators(w);
}

PeriodicVector periodic_from_rational(const std::vector<Rat> &w) {
  Int t = period_of(w);
  std::vector<Int> numerator(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    Rat scaled = Rat(t) * w[i];
    scaled.canonicalize();
    numerator[i] = scaled.get_num(); // denominator is 1 by choice of t
  }
  PeriodicVector out;
  out.numerator = std::move(numerator);
  out.period = Rat(t);
  return out;
}

bool ApproximationCertificate::error_within_bound() const {
  unsigned long d = static_cast<unsigned long>(dim() - 1);
  return pow_rat(error * result.period, d) * quality <= 1;
}

bool ApproximationCertificate::period_within_bounds() const {
  Rat scaled = result.period * input_norm;
  return scaled >= 1 && scaled <= quality;
}

double ApproximationCertificate::error_bound() const {
  double d = static_cast<double>(dim() - 1);
  return to_double(Rat(1) / result.period) * std::pow(to_double(quality), -1.0 / d);
}

Int dirichlet_denominator_bruteforce(const std::vector<Rat> &x, const Rat &quality) {
  unsigned long d = static_cast<unsigned long>(x.size());
  for (Int q = 1; Rat(q) < quality; ++q) {
    Rat sup = 0;
    for (const Rat &xi : x) {
      Rat dist = dist_to_integer(Rat(q) * xi);
      if (dist > sup)
        sup = dist;
    }
    if (pow_rat(sup, d) * quality <= 1)
      return q;
  }
  throw std::logic_error("dirichlet_denominator_bruteforce: no admissible q below Q");
}

Int dirichlet_denominator_cf(const Rat &x, const Rat &quality) {
  // Convergent denominators are exactly the record minima of ||q*x||, so the
  // first convergent within threshold uses the minimal q. Euclid terminates
  // because x is rational.
  Int a = x.get_num(), b = x.get_den();
  Int h_prev = 1, h = floor_div(a, b); // p_{-1}, p_0
  Int k_prev = 0, k = 1;               // q_{-1}, q_0
  Int num = a - h * b;                 // remainder of the first division
  Int den = b;
  for (;;) {
    Rat dist = abs_rat(Rat(k) * x - Rat(h));
    if (dist * quality <= 1) {
      if (!(Rat(k) < quality))
        throw std::logic_error("dirichlet_denominator_cf: convergent exceeded Q");
      return k;
    }
    if (num == 0)
      throw std::logic_error("dirichlet_denominator_cf: exhausted convergents");
    Int digit = floor_div(den, num);
    Int next_num = den - digit * num;
    den = num;
    num = next_num;
    Int h_next = digit * h + h_prev;
    Int k_next = digit * k + k_prev;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
  }
}

ApproximationCertificate dirichlet_approx(const std::vector<Rat> &v, const Rat &quality) {
  int n = static_cast<int>(v.size());
  if (n < 2)
    throw std::domain_error("dirichlet_approx: need dimension >= 2");
  if (quality <= 1)
    throw std::domain_error("dirichlet_approx: quality must exceed 1");
  bool nonzero = false;
  for (const Rat &vi : v)
    if (vi != 0)
      nonzero = true;
  if (!nonzero)
    throw std::domain_error("dirichlet_approx: zero vector");

  // Order components by |v_i| descending, original index ascending, so the
  // largest component leads and the rest are approximated relative to it.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return abs_rat(v[i]) > abs_rat(v[j]);
  });
  Rat norm = abs_rat(v[order[0]]);
  int sign = v[order[0]] > 0 ? 1 : -1;

  std::vector<Rat> x(n - 1);
  for (int i = 1; i < n; ++i) {
    x[i - 1] = v[order[i]] / norm;
    x[i - 1].canonicalize();
  }

  Int q;
  if (n == 2 && quality > 10000)
    q = dirichlet_denominator_cf(x[0], quality);
  else if (quality <= 1000000)
    q = dirichlet_denominator_bruteforce(x, quality);
  else
    throw std::domain_error("dirichlet_approx: quality above brute-force cap for n > 2");

  // Component-wise numerators: smallest admissible integer (at most two
  // candidates since the threshold is below 1).
  unsigned long d = static_cast<unsigned long>(n - 1);
  std::vector<Int> p(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    Int lo = floor_rat(Rat(q) * x[i]);
    bool found = false;
    for (Int cand = lo; cand <= lo + 1; ++cand) {
      Rat dist = abs_rat(Rat(q) * x[i] - Rat(cand));
      if (pow_rat(dist, d) * quality <= 1) {
        p[i] = cand;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::logic_error("dirichlet_approx: no admissible numerator component");
  }

  // omega agrees with v exactly on the leading component: omega = norm*(sign, p/q)
  // in sorted coordinates, so period * omega = (sign*q, p) is integral with
  // period = q / norm.
  std::vector<Int> numerator(n);
  numerator[order[0]] = sign * q;
  for (int i = 1; i < n; ++i)
    numerator[order[i]] = p[i - 1];

  ApproximationCertificate cert;
  cert.input = v;
  cert.quality = quality;
  cert.result = make_periodic(numerator, Rat(q) / norm);
  cert.denominator = q;
  cert.input_norm = norm;
  std::vector<Rat> omega = cert.result.omega();
  std::vector<Rat> diff(n);
  for (int i = 0; i < n; ++i)
    diff[i] = v[i] - omega[i];
  cert.error = sup_norm(diff);
  return cert;
}

ApproximationCertificate dirichlet_approx(const std::vector<double> &v, double quality,
                                          unsigned dyadic_bits) {
  return dirichlet_approx(rationalize(v, dyadic_bits), rationalize(quality, dyadic_bits));
}

Eigen::MatrixXd ResonanceModule::projector() const {
  if (rank() == 0)
    return Eigen::MatrixXd::Zero(ambient, ambient);
  return span * span.transpose();
}

ResonanceModule resonance_module(const std::vector<PeriodicVector> &omegas) {
  if (omegas.empty())
    throw std::invalid_argument("resonance_module: empty list needs an explicit dimension");
  return resonance_module(omegas, omegas.front().dim());
}

ResonanceModule resonance_module(const std::vector<PeriodicVector> &omegas, int ambient) {
  if (ambient < 1)
    throw std::invalid_argument("resonance_module: dimension must be positive");
  if (static_cast<int>(omegas.size()) > ambient)
    throw std::invalid_argument("resonance_module: more vectors than ambient dimension");

  std::vector<std::vector<Int>> rows;
  for (size_t j = 0; j < omegas.size(); ++j) {
    if (omegas[j].dim() != ambient)
      throw std::invalid_argument("resonance_module: omega[" + std::to_string(j) +
                                  "] has mismatched dimension");
    rows.push_back(omegas[j].numerator);
    if (lattice_rank(rows, ambient) != static_cast<int>(rows.size()))
      throw std::invalid_argument("resonance_module: omega[" + std::to_string(j) +
                                  "] is a rational combination of earlier vectors");
  }

  ResonanceModule m;
  m.ambient = ambient;
  m.basis = integer_kernel_basis(rows, ambient);

  int r = static_cast<int>(m.basis.size());
  Eigen::MatrixXd gen(ambient, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < ambient; ++i)
      gen(i, j) = m.basis[j][i].get_d();
  if (r > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gen);
    m.span = qr.householderQ() * Eigen::MatrixXd::Identity(ambient, r);
  } else {
    m.span = Eigen::MatrixXd::Zero(ambient, 0);
  }
  return m;
}

Eigen::VectorXd project_onto(const ResonanceModule &m, const Eigen::VectorXd &v) {
  if (v.size() != m.ambient)
    throw std::invalid_argument("project_onto: dimension mismatch");
  if (m.rank() == 0)
    return Eigen::VectorXd::Zero(m.ambient);
  return m.span * (m.span.transpose() * v);
}

Rat smallest_divisor(const PeriodicVector &omega, int K) {
  if (K < 1)
    throw std::domain_error("smallest_divisor: K must be >= 1");
  int n = omega.dim();
  Int best = 0;
  bool have = false;
  // Enumerate |k|_1 <= K with the first nonzero entry positive; |k.omega| is
  // symmetric under k -> -k so the half-space suffices.
  auto visit = [&](auto &&self, int pos, int budget, const Int &acc, bool lead) -> void {
    if (pos == n) {
      if (acc != 0) {
        Int a = abs(acc);
        if (!have || a < best) {
          best = a;
          have = true;
        }
      }
      return;
    }
    for (int c = lead ? 0 : -budget; c <= budget; ++c)
      self(self, pos + 1, budget - std::abs(c), acc + Int(c) * omega.numerator[pos],
           lead && c == 0);
  };
  visit(visit, 0, K, Int(0), true);
  if (!have)
    throw std::domain_error("smallest_divisor: no nonzero k.omega in range");
  Rat out = Rat(best) / omega.period;
  out.canonicalize();
  return out;
}

std::vector<std::vector<Int>> hnf_basis(const std::vector<std::vector<Int>> &generators,
                                        int ambient) {
  std::vector<std::vector<Int>> cols;
  for (const auto &g : generators) {
    if (static_cast<int>(g.size()) != ambient)
      throw std::invalid_argument("hnf_basis: generator has wrong dimension");
    cols.push_back(g);
  }
  if (cols.empty())
    return cols;

  // Echelon pass with pivot rows ascending, then normalize: positive pivots
  // and earlier columns reduced into [0, pivot) at each pivot row.
  int r = 0;
  for (int i = 0; i < ambient && r < static_cast<int>(cols.size()); ++i) {
    // gcd elimination on row i across columns r..end.
    for (;;) {
      int best = -1;
      for (int j = r; j < static_cast<int>(cols.size()); ++j) {
        if (cols[j][i] == 0)
          continue;
        if (best < 0 || cmp(abs(cols[j][i]), abs(cols[best][i])) < 0)
          best = j;
      }
      if (best < 0)
        break;
      std::swap(cols[best], cols[r]);
      bool clean = true;
      for (int j = r + 1; j < static_cast<int>(cols.size()); ++j) {
        if (cols[j][i] == 0)
          continue;
        Int q = floor_div(cols[j][i], cols[r][i]);
        subtract_scaled(cols[j], q, cols[r]);
        if (cols[j][i] != 0)
          clean = false;
      }
      if (clean)
        break;
    }
    if (cols[r][i] == 0)
      continue;
    if (cols[r][i] < 0)
      for (Int &x : cols[r])
        x = -x;
    for (int j = 0; j < r; ++j) {
      Int q = floor_div(cols[j][i], cols[r][i]);
      subtract_scaled(cols[j], q, cols[r]);
    }
    ++r;
  }
  cols.resize(r);
  return cols;
}

std::vector<std::vector<Int>> integer_kernel_basis(const std::vector<std::vector<Int>> &rows,
                                                   int ambient) {
  int j = static_cast<int>(rows.size());
  for (const auto &row : rows)
    if (static_cast<int>(row.size()) != ambient)
      throw std::invalid_argument("integer_kernel_basis: row has wrong dimension");

  // Columns of [A; I]: unimodular column operations keep the bottom block a
  // basis-change record; columns whose top block vanishes span the kernel.
  std::vector<std::vector<Int>> cols(ambient, std::vector<Int>(j + ambient, 0));
  for (int c = 0; c < ambient; ++c) {
    for (int i = 0; i < j; ++i)
      cols[c][i] = rows[i][c];
    cols[c][j + c] = 1;
  }
  column_echelon(cols, j);

  std::vector<std::vector<Int>> kernel;
  for (const auto &col : cols) {
    bool top_zero = true;
    for (int i = 0; i < j; ++i)
      if (col[i] != 0)
        top_zero = false;
    if (!top_zero)
      continue;
    kernel.emplace_back(col.begin() + j, col.end());
  }
  return hnf_basis(kernel, ambient);
}

bool in_lattice(const std::vector<std::vector<Int>> &basis, const std::vector<Int> &y,
                int ambient) {
  auto h = hnf_basis(basis, ambient);
  auto extended = basis;
  extended.push_back(y);
  return h == hnf_basis(extended, ambient);
}

std::string format_vector(const std::vector<Rat> &v) {
  std::string out = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += ", ";
    out += rat_text(v[i]);
  }
  out += ")";
  return out;
}

} // namespace nekholab
