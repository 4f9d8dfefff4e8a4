// Closed-form stability exponents and a diagnostic ledger for the smallness
// conditions that make the averaging scheme close.
//
// The scheme runs n averaging stages. Stage j works at radius r_j = C T_j^-1
// eps^(a_j) around a periodic frequency of period T_j, the stability horizon
// is exp(eps^-a) and the confinement radius is eps^b, with
//
//   a_j = (2 tau (n+1))^(j-n-1),   a = b = a_1 / 3.
//
// exponent_plan() produces these as exact rationals. condition_ledger() then
// audits the bookkeeping: every smallness condition the construction needs
// reduces, after bounding the periods and multipliers by their Dirichlet
// estimates, to an inequality of the shape
//
//   eps^margin < C * K
//
// with an exact rational margin > 0, a parameter factor K drawn from
// {1, gamma, R, s, min(r, s)} and an implicit constant C from a ConstantTable
// (default 1, shared with the normal-form bounds). Each row records its
// margin, the log10 threshold on eps, and pass/fail at the requested eps;
// the ledger reports the binding row and the largest eps passing every row,
// located by bisection on log10(eps) to one ulp.
//
// Two caveats, both deliberate. Rows are a diagnostic of the construction's
// bookkeeping with all constants surfaced, not a certified stability bound.
// And the per-solution confinement conditions (the (B_j) rows) depend on a
// traced orbit, not on eps alone, so they appear as descriptive shape rows
// that the resonance-trace analyzer checks empirically.
#pragma once

#include <string>
#include <vector>

#include "nekholab/constants.hpp"
#include "nekholab/rational.hpp"

namespace nekholab {

// Exponent choices for an n-degree system with steepness exponent tau.
// All entries are exact rationals; text forms carry a decimal alongside.
struct ExponentPlan {
  int n = 0;
  Rat tau;
  std::vector<Rat> a_seq; // a_seq[j-1] = a_j = (2 tau (n+1))^(j-n-1), increasing
  Rat a;                  // horizon exponent: stable for times below exp(eps^-a)
  Rat b;                  // drift exponent: actions confined within eps^b
  // Dimension-only composite 3^-1 (2n)^-3n quoted for the headline statement
  // with tau fixed internally. Reported next to a and b for comparison; the
  // two bookkeepings are not asserted equal.
  Rat headline;

  // Parameter sequences as printable forms, j in 1..n.
  std::string r_form(int j) const;   // stage radius r_j
  std::string rho_form(int j) const; // accumulated radius rho_j = r_1 + ... + r_j
  std::string m_form() const;        // horizon exponent m = ceil(C eps^-a)
  std::string r0_form() const;       // confinement radius r_0 = eps^b

  std::string to_text() const;
  std::string to_json() const;
};

// Exact plan for n >= 2 degrees of freedom and steepness exponent tau >= 2.
// Throws std::domain_error outside that range.
ExponentPlan exponent_plan(int n, const Rat &tau);

// Inputs for the condition ledger. gamma, R, r, s bound the frequency map
// (steepness constant, domain radius, analyticity widths); M is the
// perturbation's gradient bound and is recorded with the run, entering the
// rows only through constant-table entries the caller sets. The table is
// looked up by the first token of each row name, so "(ix')" covers that row
// and "(vi')" covers every j instance of the family.
struct LedgerParams {
  int n = 2;
  Rat tau = 2;
  double gamma = 1.0;
  double R = 1.0;
  double r = 1.0;
  double s = 1.0;
  double M = 1.0;
  double epsilon = 1e-6;
  ConstantTable constants;
};

enum class RowKind {
  margin, // eps^margin < C K with margin > 0; thresholds and pass/fail apply
  shape,  // structural or per-solution condition, reported for reference
};

struct LedgerRow {
  std::string name;    // "(vi') j=2", "(A_1) impulse", "(B_0) confinement"
  std::string formula; // the inequality with this row's indices substituted
  RowKind kind = RowKind::margin;
  Rat margin;          // exact exponent of eps on the small side
  double k_value = 1.0;  // parameter factor K on the roomy side
  double constant = 1.0; // constant-table entry for this row's family
  double lhs_log10 = 0.0; // log10 of eps^margin at the requested eps
  double rhs_log10 = 0.0; // log10 of C K
  double log10_threshold = 0.0; // rhs_log10 / margin; pass iff log10 eps below
  bool pass = true;
  // Families whose original statement bounds eps itself rather than a derived
  // radius. Ties in the binding selection prefer these.
  bool eps_explicit = false;
  std::string note;
};

struct ConditionLedger {
  LedgerParams params;
  ExponentPlan plan;
  std::vector<LedgerRow> rows;
  bool passes = false;      // every row passes at params.epsilon
  int binding_index = -1;   // margin row with the smallest threshold
  std::string binding;      // its name
  double log10_epsilon0 = 0.0; // bisection limit: sup of passing log10 eps
  double epsilon0 = 0.0;       // 10^log10_epsilon0, 0 when that underflows

  std::string to_text() const;
  std::string to_json() const;
  std::string to_csv() const; // one row per condition, long format
};

// Audits every smallness condition at the plan's exponents. Infeasibility is
// a report, not an error; bad parameter values (nonpositive, eps outside
// (0,1)) throw std::invalid_argument.
ConditionLedger condition_ledger(const LedgerParams &params);

} // namespace nekholab
