// Trigonometric polynomials on T^n x R^n with a formal perturbation grade:
// finite sums  c * e^{2 pi i k.theta} * I^alpha * eps^g  with complex double
// coefficients keyed on (k, alpha, g). The coefficient map is ordered, so
// iteration, serialization and evaluation are deterministic.
//
// Real polynomials satisfy c(-k,alpha,g) = conj(c(k,alpha,g)); every operation
// here preserves that symmetry bit for bit. Scalar factors are applied as
// explicit IEEE mirrors and products accumulate each destination coefficient
// in a conjugation-symmetric order, so no cleanup pass ever touches values.
#pragma once

#include "nekholab/diophantine.hpp"
#include "nekholab/rational.hpp"

#include <json.hpp>

#include <complex>
#include <map>
#include <vector>

namespace nekholab {

struct TermKey {
  std::vector<int> k;          // Fourier mode
  std::vector<unsigned> alpha; // action powers
  unsigned eps = 0;            // perturbation grade

  auto operator<=>(const TermKey &) const = default;
};

class TrigPoly {
public:
  using Coeff = std::complex<double>;
  using TermMap = std::map<TermKey, Coeff>;

  TrigPoly() = default;
  explicit TrigPoly(int n) : n_(n) {}

  static TrigPoly zero(int n) { return TrigPoly(n); }
  static TrigPoly constant(int n, double c);
  // w . I
  static TrigPoly action_linear(const std::vector<double> &w);
  // c * I^alpha * eps^g
  static TrigPoly action_monomial(int n, std::vector<unsigned> alpha, double c,
                                  unsigned eps = 0);
  // amp * cos(2 pi k.theta) * I^alpha * eps^g   (and sin likewise)
  static TrigPoly cosine(int n, std::vector<int> k, double amp,
                         std::vector<unsigned> alpha = {}, unsigned eps = 0);
  static TrigPoly sine(int n, std::vector<int> k, double amp,
                       std::vector<unsigned> alpha = {}, unsigned eps = 0);

  int vars() const { return n_; }
  size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  const TermMap &terms() const { return terms_; }

  // Accumulates; exact cancellations drop the term.
  void add_term(TermKey key, Coeff c);
  Coeff coeff(const TermKey &key) const;

  TrigPoly &operator+=(const TrigPoly &o);
  TrigPoly &operator-=(const TrigPoly &o);
  TrigPoly operator+(const TrigPoly &o) const;
  TrigPoly operator-(const TrigPoly &o) const;
  TrigPoly operator-() const;
  TrigPoly operator*(const TrigPoly &o) const;
  TrigPoly operator*(double m) const;

  TrigPoly dtheta(int i) const;
  TrigPoly dI(int i) const;

  std::complex<double> eval_complex(const std::vector<double> &theta,
                                    const std::vector<double> &actions,
                                    double eps = 1.0) const;
  double eval(const std::vector<double> &theta, const std::vector<double> &actions,
              double eps = 1.0) const;

  // Exact symmetry check / worst deviation |c(-k,a,g) - conj(c(k,a,g))|.
  bool is_real() const { return reality_defect() == 0.0; }
  double reality_defect() const;

  unsigned min_grade() const; // 0 for the zero polynomial
  unsigned max_grade() const;
  int max_mode_l1() const;    // max |k|_1
  unsigned max_action_degree() const;

  TrigPoly grade_part(unsigned g) const;
  TrigPoly grade_at_least(unsigned g) const;
  TrigPoly fourier_zero_part() const; // k = 0 terms only
  bool has_angles() const;            // some k != 0
  bool depends_on_actions() const;    // some alpha != 0

  // Split along exact resonance with a periodic vector: k is resonant iff
  // k . (period * omega) = 0 in integer arithmetic.
  TrigPoly resonant_part(const PeriodicVector &omega) const;
  TrigPoly nonresonant_part(const PeriodicVector &omega) const;

  // Substitutes I -> I + center (binomial expansion, grades untouched).
  TrigPoly shift_actions(const std::vector<double> &center) const;

  // Scales every coefficient by eps^grade and collapses the labels to 0;
  // terms differing only in grade merge. Keeping labels alive instead would
  // let bracket iterations split one numeric coefficient across ever more
  // grade values and blow the term count up exponentially.
  TrigPoly substitute_epsilon(double eps) const;

private:
  void require_same_space(const TrigPoly &o) const;

  int n_ = 0;
  TermMap terms_;
};

inline TrigPoly operator*(double m, const TrigPoly &f) { return f * m; }

// {f, g} = sum_i dtheta_i f * dI_i g - dI_i f * dtheta_i g.
TrigPoly poisson(const TrigPoly &f, const TrigPoly &g);

// chi with {chi, omega . I} = f for f free of omega-resonant terms; mode by
// mode chi_k = f_k / (2 pi i k.omega). Throws std::domain_error when f has a
// resonant term (including k = 0).
TrigPoly homological_solve(const TrigPoly &f, const PeriodicVector &omega);

// Polydisc |I_i - center_i| <= radius, |Im theta_i| <= width (angles live on
// the torus; width is the analyticity strip's half-height).
struct AnalyticDomain {
  std::vector<double> center;
  double radius = 0;
  double width = 0;
};

// sum |c| * e^{2 pi |k|_1 width} * prod_i (|center_i| + radius)^{alpha_i},
// an upper bound for |f| on the domain. Grades count as 1.
double majorant_norm(const TrigPoly &f, double radius, double width,
                     const std::vector<double> &center = {});
double majorant_norm(const TrigPoly &f, const AnalyticDomain &dom);

// Size of the Hamiltonian vector field of f in the weighted sup metric:
// max(max_i N(dI_i f), weight * max_i N(dtheta_i f)); weight converts action
// displacement into the angle scale (typically width/radius).
double vector_field_norm(const TrigPoly &f, double radius, double width, double weight,
                         const std::vector<double> &center = {});

// One Poisson application with chi maps the majorant on (radius, width) to at
// most this factor times the majorant on (radius - gap_r, width - gap_s):
//   sum_i [ N(dtheta_i chi)/gap_r + N(dI_i chi)/(e * gap_s) ].
double bracket_step_factor(const TrigPoly &chi, double radius, double width,
                           double gap_r, double gap_s);

// Removes the smallest terms of f, cheapest majorant mass first, while the
// total removed stays within budget; the exact mass removed is written to
// *dropped. Terms go in conjugate pairs so a real polynomial stays real.
// Keeps bracket iterations from dragging along negligible high-order debris.
TrigPoly truncate_small_terms(const TrigPoly &f, double budget, double radius,
                              double width, double *dropped);

void to_json(nlohmann::json &j, const TrigPoly &f);
void from_json(const nlohmann::json &j, TrigPoly &f);

// Human-editable Hamiltonian description:
//   {"n": 2, "terms": [
//     {"type": "action", "alpha": [2,0], "coeff": 0.5},
//     {"type": "cos"|"sin", "k": [1,1], "coeff": 1.0, "alpha": [0,0], "eps": 1}]}
// alpha defaults to zeros and eps to 0.
TrigPoly parse_hamiltonian(const nlohmann::json &j);

} // namespace nekholab
