// Rational frequency vectors, Dirichlet approximation with exact certificates,
// resonance modules of periodic vectors, and small-divisor floors.
//
// Everything here runs in exact arithmetic (gmpxx); doubles only enter through
// an explicit dyadic rounding step and only leave through eval helpers.
#pragma once

#include "nekholab/rational.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace nekholab {

// Frequency vector omega = numerator / period with period * omega integral.
// period > 0 and exact; it is an integer whenever the vector came from
// period_of, and q/|v| (usually non-integral) for Dirichlet approximants.
// numerator content and the period numerator share no common factor.
struct PeriodicVector {
  std::vector<Int> numerator;
  Rat period = 1;

  int dim() const { return static_cast<int>(numerator.size()); }
  Rat omega(int i) const { return Rat(numerator[i]) / period; }
  std::vector<Rat> omega() const;
  Eigen::VectorXd omega_double() const;

  bool operator==(const PeriodicVector &o) const {
    return numerator == o.numerator && period == o.period;
  }
};

// Validates (period > 0, some numerator entry nonzero) and reduces the common
// factor between the numerator entries and the period's numerator.
PeriodicVector make_periodic(std::vector<Int> numerator, Rat period);

// Minimal positive integer T with T*w integral (lcm of reduced denominators).
// Throws std::domain_error when w is the zero vector.
Int period_of(const std::vector<Rat> &w);

// PeriodicVector with period_of(w) as period.
PeriodicVector periodic_from_rational(const std::vector<Rat> &w);

// Outcome of the Dirichlet construction: a periodic vector omega close to the
// (rationalized) input v, with every bound checkable in exact arithmetic.
struct ApproximationCertificate {
  std::vector<Rat> input;    // dyadic rationalization of v
  Rat quality;               // Q
  PeriodicVector result;     // omega, original component order
  Int denominator;           // the Dirichlet q actually used
  Rat error;                 // |input - omega|_sup, exact
  Rat input_norm;            // |input|_sup

  int dim() const { return static_cast<int>(input.size()); }

  // error <= period^-1 * Q^{-1/(n-1)}, checked as (error*period)^{n-1} * Q <= 1.
  bool error_within_bound() const;
  // |v|^-1 <= period <= Q * |v|^-1, i.e. 1 <= period * |v| <= Q.
  bool period_within_bounds() const;
  // Double rendering of the error bound period^-1 * Q^{-1/(n-1)}.
  double error_bound() const;
};

// Approximates v by a periodic vector using the smallest admissible Dirichlet
// denominator q in [1, Q). Preconditions: n >= 2, v != 0, Q > 1. Brute-force
// search is capped at Q <= 10^6; n = 2 switches to continued fractions above
// Q = 10^4 (same minimal q, by the best-approximation theorem).
ApproximationCertificate dirichlet_approx(const std::vector<double> &v, double quality,
                                          unsigned dyadic_bits = 53);
ApproximationCertificate dirichlet_approx(const std::vector<Rat> &v, const Rat &quality);

// Exposed for cross-checking the two search strategies in tests.
Int dirichlet_denominator_bruteforce(const std::vector<Rat> &x, const Rat &quality);
Int dirichlet_denominator_cf(const Rat &x, const Rat &quality);

// Integer lattice { k : k . numerator(omega_i) = 0 for all i }, i.e. the
// common resonance directions of a list of periodic vectors. The basis is the
// column Hermite normal form of the (automatically saturated) kernel, so equal
// modules always produce identical bases. span holds an orthonormal real basis.
struct ResonanceModule {
  int ambient = 0;
  std::vector<std::vector<Int>> basis; // ambient-dimensional vectors, HNF order
  Eigen::MatrixXd span;                // ambient x rank, orthonormal columns

  int rank() const { return static_cast<int>(basis.size()); }
  Eigen::MatrixXd projector() const;   // span * span^T (zero matrix for rank 0)
};

// Requires 1 <= omegas.size() <= ambient inferred from the first vector, all
// dimensions equal, and each omega_j independent of its predecessors; throws
// std::invalid_argument naming the offending vector otherwise.
ResonanceModule resonance_module(const std::vector<PeriodicVector> &omegas);
// Same, but tolerates an empty list (needs the ambient dimension spelled out;
// the module is then all of Z^n).
ResonanceModule resonance_module(const std::vector<PeriodicVector> &omegas, int ambient);

Eigen::VectorXd project_onto(const ResonanceModule &m, const Eigen::VectorXd &v);

// min |k . omega| over integer k with 0 < |k|_1 <= K and k . omega != 0.
// Exact; always >= 1/period. Throws std::domain_error if K < 1 or no k
// qualifies (impossible for nonzero omega).
Rat smallest_divisor(const PeriodicVector &omega, int K);

// Canonical basis (column Hermite normal form) of the integer lattice spanned
// by the given generators; dependent/duplicate generators are fine.
std::vector<std::vector<Int>> hnf_basis(const std::vector<std::vector<Int>> &generators,
                                        int ambient);

// Saturated kernel { y in Z^n : rows . y = 0 } in HNF. "Saturated" is automatic
// for kernels: any rational solution scales to an integer one inside the span.
std::vector<std::vector<Int>> integer_kernel_basis(const std::vector<std::vector<Int>> &rows,
                                                   int ambient);

// True iff y lies in the integer span of basis (basis need not be in HNF).
bool in_lattice(const std::vector<std::vector<Int>> &basis, const std::vector<Int> &y,
                int ambient);

std::string format_vector(const std::vector<Rat> &v);

} // namespace nekholab
