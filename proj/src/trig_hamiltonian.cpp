#include "nekholab/trig_hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace nekholab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

using Coeff = std::complex<double>;

int sign_class(const std::vector<int> &k) {
  for (int x : k) {
    if (x > 0)
      return 1;
    if (x < 0)
      return -1;
  }
  return 0;
}

TermKey mirror_key(const TermKey &key) {
  TermKey out = key;
  for (int &x : out.k)
    x = -x;
  return out;
}

// Exact IEEE mirrors: applying these to (conj c, mirrored scalar) yields the
// conjugate result bit for bit, which is what keeps reality intact.
Coeff times_real(const Coeff &c, double m) { return {c.real() * m, c.imag() * m}; }
Coeff times_imag(const Coeff &c, double y) { return {-c.imag() * y, c.real() * y}; }

Coeff product(const Coeff &a, const Coeff &b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

double int_power(double base, unsigned m) {
  double out = 1.0;
  while (m--)
    out *= base;
  return out;
}

int l1_norm(const std::vector<int> &k) {
  int out = 0;
  for (int x : k)
    out += std::abs(x);
  return out;
}

// Orders multiplication addends so that the lists feeding a destination and
// its mirror are positionally conjugate; for self-conjugate destinations the
// conjugate pairs end up adjacent (positive member first) and partial sums
// keep an exactly zero imaginary part on real input.
struct AddendOrder {
  int cls;
  using Entry = std::pair<TermKey, Coeff>;
  bool operator()(const Entry &lhs, const Entry &rhs) const {
    const TermKey &a = lhs.first, &b = rhs.first;
    if (cls > 0)
      return a < b;
    if (cls < 0)
      return mirror_key(a) < mirror_key(b);
    TermKey ca = sign_class(a.k) < 0 ? mirror_key(a) : a;
    TermKey cb = sign_class(b.k) < 0 ? mirror_key(b) : b;
    if (ca != cb)
      return ca < cb;
    return sign_class(a.k) > sign_class(b.k);
  }
};

} // namespace

TrigPoly TrigPoly::constant(int n, double c) {
  TrigPoly out(n);
  out.add_term({std::vector<int>(n, 0), std::vector<unsigned>(n, 0), 0}, Coeff(c));
  return out;
}

TrigPoly TrigPoly::action_linear(const std::vector<double> &w) {
  int n = static_cast<int>(w.size());
  TrigPoly out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<unsigned> alpha(n, 0);
    alpha[i] = 1;
    out.add_term({std::vector<int>(n, 0), std::move(alpha), 0}, Coeff(w[i]));
  }
  return out;
}

TrigPoly TrigPoly::action_monomial(int n, std::vector<unsigned> alpha, double c,
                                   unsigned eps) {
  if (static_cast<int>(alpha.size()) != n)
    throw std::invalid_argument("action_monomial: alpha has wrong length");
  TrigPoly out(n);
  out.add_term({std::vector<int>(n, 0), std::move(alpha), eps}, Coeff(c));
  return out;
}

TrigPoly TrigPoly::cosine(int n, std::vector<int> k, double amp,
                          std::vector<unsigned> alpha, unsigned eps) {
  if (static_cast<int>(k.size()) != n)
    throw std::invalid_argument("cosine: k has wrong length");
  if (alpha.empty())
    alpha.assign(n, 0);
  TrigPoly out(n);
  TermKey pos{k, alpha, eps};
  out.add_term(mirror_key(pos), Coeff(amp / 2));
  out.add_term(std::move(pos), Coeff(amp / 2));
  return out;
}

TrigPoly TrigPoly::sine(int n, std::vector<int> k, double amp,
                        std::vector<unsigned> alpha, unsigned eps) {
  if (static_cast<int>(k.size()) != n)
    throw std::invalid_argument("sine: k has wrong length");
  if (alpha.empty())
    alpha.assign(n, 0);
  TrigPoly out(n);
  TermKey pos{k, alpha, eps};
  out.add_term(mirror_key(pos), Coeff(0.0, amp / 2));
  out.add_term(std::move(pos), Coeff(0.0, -amp / 2));
  return out;
}

void TrigPoly::add_term(TermKey key, Coeff c) {
  if (static_cast<int>(key.k.size()) != n_ || static_cast<int>(key.alpha.size()) != n_)
    throw std::invalid_argument("add_term: key has wrong dimension");
  auto it = terms_.find(key);
  if (it == terms_.end()) {
    if (c != Coeff(0))
      terms_.emplace(std::move(key), c);
    return;
  }
  it->second += c;
  if (it->second == Coeff(0))
    terms_.erase(it);
}

Coeff TrigPoly::coeff(const TermKey &key) const {
  auto it = terms_.find(key);
  return it == terms_.end() ? Coeff(0) : it->second;
}

void TrigPoly::require_same_space(const TrigPoly &o) const {
  if (n_ != o.n_)
    throw std::invalid_argument("TrigPoly: mixed phase-space dimensions");
}

TrigPoly &TrigPoly::operator+=(const TrigPoly &o) {
  require_same_space(o);
  for (const auto &[key, c] : o.terms_)
    add_term(key, c);
  return *this;
}

TrigPoly &TrigPoly::operator-=(const TrigPoly &o) {
  require_same_space(o);
  for (const auto &[key, c] : o.terms_)
    add_term(key, -c);
  return *this;
}

TrigPoly TrigPoly::operator+(const TrigPoly &o) const {
  TrigPoly out = *this;
  out += o;
  return out;
}

TrigPoly TrigPoly::operator-(const TrigPoly &o) const {
  TrigPoly out = *this;
  out -= o;
  return out;
}

TrigPoly TrigPoly::operator-() const {
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_)
    out.terms_.emplace(key, -c);
  return out;
}

TrigPoly TrigPoly::operator*(double m) const {
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_) {
    Coeff v = times_real(c, m);
    if (v != Coeff(0))
      out.terms_.emplace(key, v);
  }
  return out;
}

TrigPoly TrigPoly::operator*(const TrigPoly &o) const {
  require_same_space(o);
  if (terms_.size() * o.terms_.size() > 20'000'000)
    throw std::length_error("TrigPoly: product exceeds the term budget");

  std::map<TermKey, std::vector<std::pair<TermKey, Coeff>>> addends;
  for (const auto &[ka, ca] : terms_)
    for (const auto &[kb, cb] : o.terms_) {
      TermKey d;
      d.k.resize(n_);
      d.alpha.resize(n_);
      for (int i = 0; i < n_; ++i) {
        d.k[i] = ka.k[i] + kb.k[i];
        d.alpha[i] = ka.alpha[i] + kb.alpha[i];
      }
      d.eps = ka.eps + kb.eps;
      addends[std::move(d)].emplace_back(ka, product(ca, cb));
    }

  TrigPoly out(n_);
  for (auto &[d, list] : addends) {
    std::sort(list.begin(), list.end(), AddendOrder{sign_class(d.k)});
    Coeff s = 0;
    for (const auto &[src, v] : list)
      s += v;
    if (s != Coeff(0))
      out.terms_.emplace(d, s);
  }
  return out;
}

TrigPoly TrigPoly::dtheta(int i) const {
  if (i < 0 || i >= n_)
    throw std::out_of_range("dtheta: index");
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_) {
    if (key.k[i] == 0)
      continue;
    out.terms_.emplace(key, times_imag(c, kTwoPi * key.k[i]));
  }
  return out;
}

TrigPoly TrigPoly::dI(int i) const {
  if (i < 0 || i >= n_)
    throw std::out_of_range("dI: index");
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_) {
    if (key.alpha[i] == 0)
      continue;
    TermKey d = key;
    d.alpha[i] -= 1;
    out.terms_.emplace(std::move(d), times_real(c, static_cast<double>(key.alpha[i])));
  }
  return out;
}

std::complex<double> TrigPoly::eval_complex(const std::vector<double> &theta,
                                            const std::vector<double> &actions,
                                            double eps) const {
  if (static_cast<int>(theta.size()) != n_ || static_cast<int>(actions.size()) != n_)
    throw std::invalid_argument("eval: point has wrong dimension");
  std::complex<double> out = 0;
  for (const auto &[key, c] : terms_) {
    double phase = 0;
    double amp = int_power(eps, key.eps);
    for (int i = 0; i < n_; ++i) {
      phase += key.k[i] * theta[i];
      amp *= int_power(actions[i], key.alpha[i]);
    }
    out += c * std::polar(amp, kTwoPi * phase);
  }
  return out;
}

double TrigPoly::eval(const std::vector<double> &theta, const std::vector<double> &actions,
                      double eps) const {
  return eval_complex(theta, actions, eps).real();
}

double TrigPoly::reality_defect() const {
  double worst = 0;
  for (const auto &[key, c] : terms_) {
    Coeff m = coeff(mirror_key(key));
    worst = std::max(worst, std::abs(m.real() - c.real()));
    worst = std::max(worst, std::abs(m.imag() + c.imag()));
  }
  return worst;
}

unsigned TrigPoly::min_grade() const {
  unsigned g = 0;
  bool first = true;
  for (const auto &[key, c] : terms_) {
    (void)c;
    if (first || key.eps < g)
      g = key.eps;
    first = false;
  }
  return g;
}

unsigned TrigPoly::max_grade() const {
  unsigned g = 0;
  for (const auto &[key, c] : terms_) {
    (void)c;
    g = std::max(g, key.eps);
  }
  return g;
}

int TrigPoly::max_mode_l1() const {
  int out = 0;
  for (const auto &[key, c] : terms_) {
    (void)c;
    out = std::max(out, l1_norm(key.k));
  }
  return out;
}

unsigned TrigPoly::max_action_degree() const {
  unsigned out = 0;
  for (const auto &[key, c] : terms_) {
    (void)c;
    unsigned d = 0;
    for (unsigned a : key.alpha)
      d += a;
    out = std::max(out, d);
  }
  return out;
}

TrigPoly TrigPoly::grade_part(unsigned g) const {
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_)
    if (key.eps == g)
      out.terms_.emplace(key, c);
  return out;
}

TrigPoly TrigPoly::grade_at_least(unsigned g) const {
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_)
    if (key.eps >= g)
      out.terms_.emplace(key, c);
  return out;
}

TrigPoly TrigPoly::fourier_zero_part() const {
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_)
    if (sign_class(key.k) == 0)
      out.terms_.emplace(key, c);
  return out;
}

bool TrigPoly::has_angles() const {
  for (const auto &[key, c] : terms_) {
    (void)c;
    if (sign_class(key.k) != 0)
      return true;
  }
  return false;
}

bool TrigPoly::depends_on_actions() const {
  for (const auto &[key, c] : terms_) {
    (void)c;
    for (unsigned a : key.alpha)
      if (a != 0)
        return true;
  }
  return false;
}

TrigPoly TrigPoly::resonant_part(const PeriodicVector &omega) const {
  if (omega.dim() != n_)
    throw std::invalid_argument("resonant_part: dimension mismatch");
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_) {
    Int acc = 0;
    for (int i = 0; i < n_; ++i)
      acc += Int(key.k[i]) * omega.numerator[i];
    if (acc == 0)
      out.terms_.emplace(key, c);
  }
  return out;
}

TrigPoly TrigPoly::nonresonant_part(const PeriodicVector &omega) const {
  if (omega.dim() != n_)
    throw std::invalid_argument("nonresonant_part: dimension mismatch");
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_) {
    Int acc = 0;
    for (int i = 0; i < n_; ++i)
      acc += Int(key.k[i]) * omega.numerator[i];
    if (acc != 0)
      out.terms_.emplace(key, c);
  }
  return out;
}

TrigPoly TrigPoly::shift_actions(const std::vector<double> &center) const {
  if (static_cast<int>(center.size()) != n_)
    throw std::invalid_argument("shift_actions: center has wrong dimension");
  bool trivial = true;
  for (double c : center)
    if (c != 0.0)
      trivial = false;
  if (trivial)
    return *this;

  TrigPoly out(n_);
  std::vector<unsigned> beta(n_, 0);
  for (const auto &[key, c] : terms_) {
    // (I + center)^alpha expanded one component at a time.
    auto expand = [&](auto &&self, int pos, double mult) -> void {
      if (pos == n_) {
        out.add_term({key.k, beta, key.eps}, times_real(c, mult));
        return;
      }
      unsigned a = key.alpha[pos];
      double binom = 1.0;
      for (unsigned b = 0; b <= a; ++b) {
        beta[pos] = b;
        // binom = C(a, b), pow = center^(a-b)
        self(self, pos + 1, mult * binom * int_power(center[pos], a - b));
        binom = binom * static_cast<double>(a - b) / static_cast<double>(b + 1);
      }
    };
    expand(expand, 0, 1.0);
  }
  return out;
}

TrigPoly TrigPoly::substitute_epsilon(double eps) const {
  TrigPoly out(n_);
  for (const auto &[key, c] : terms_) {
    TermKey flat = key;
    flat.eps = 0;
    out.add_term(std::move(flat), times_real(c, int_power(eps, key.eps)));
  }
  return out;
}

TrigPoly poisson(const TrigPoly &f, const TrigPoly &g) {
  if (f.vars() != g.vars())
    throw std::invalid_argument("poisson: mixed phase-space dimensions");
  TrigPoly out(f.vars());
  for (int i = 0; i < f.vars(); ++i) {
    out += f.dtheta(i) * g.dI(i);
    out -= f.dI(i) * g.dtheta(i);
  }
  return out;
}

TrigPoly homological_solve(const TrigPoly &f, const PeriodicVector &omega) {
  if (omega.dim() != f.vars())
    throw std::invalid_argument("homological_solve: dimension mismatch");
  TrigPoly out(f.vars());
  for (const auto &[key, c] : f.terms()) {
    Int acc = 0;
    for (int i = 0; i < f.vars(); ++i)
      acc += Int(key.k[i]) * omega.numerator[i];
    if (acc == 0)
      throw std::domain_error("homological_solve: resonant term in the right-hand side");
    Rat divisor = Rat(acc) / omega.period;
    divisor.canonicalize();
    double u = 1.0 / (kTwoPi * to_double(divisor));
    // c / (2 pi i k.omega) = c * (-i u)
    out.add_term(key, Coeff(c.imag() * u, -c.real() * u));
  }
  return out;
}

double majorant_norm(const TrigPoly &f, double radius, double width,
                     const std::vector<double> &center) {
  if (radius < 0 || width < 0)
    throw std::domain_error("majorant_norm: negative domain size");
  if (!center.empty() && static_cast<int>(center.size()) != f.vars())
    throw std::invalid_argument("majorant_norm: center has wrong dimension");
  double out = 0;
  for (const auto &[key, c] : f.terms()) {
    double t = std::abs(c) * std::exp(kTwoPi * l1_norm(key.k) * width);
    for (int i = 0; i < f.vars(); ++i) {
      double reach = center.empty() ? radius : std::abs(center[i]) + radius;
      t *= int_power(reach, key.alpha[i]);
    }
    out += t;
  }
  return out;
}

double majorant_norm(const TrigPoly &f, const AnalyticDomain &dom) {
  return majorant_norm(f, dom.radius, dom.width, dom.center);
}

double vector_field_norm(const TrigPoly &f, double radius, double width, double weight,
                         const std::vector<double> &center) {
  double worst = 0;
  for (int i = 0; i < f.vars(); ++i) {
    worst = std::max(worst, majorant_norm(f.dI(i), radius, width, center));
    worst = std::max(worst, weight * majorant_norm(f.dtheta(i), radius, width, center));
  }
  return worst;
}

double bracket_step_factor(const TrigPoly &chi, double radius, double width,
                           double gap_r, double gap_s) {
  if (gap_r <= 0 || gap_s <= 0)
    throw std::domain_error("bracket_step_factor: gaps must be positive");
  double out = 0;
  for (int i = 0; i < chi.vars(); ++i) {
    out += majorant_norm(chi.dtheta(i), radius, width) / gap_r;
    out += majorant_norm(chi.dI(i), radius, width) / (std::exp(1.0) * gap_s);
  }
  return out;
}

TrigPoly truncate_small_terms(const TrigPoly &f, double budget, double radius,
                              double width, double *dropped) {
  *dropped = 0;
  if (budget <= 0 || f.is_zero())
    return f;

  auto term_mass = [&](const TermKey &key, const Coeff &c) {
    double t = std::abs(c) * std::exp(kTwoPi * l1_norm(key.k) * width);
    for (int i = 0; i < f.vars(); ++i)
      t *= int_power(radius, key.alpha[i]);
    return t;
  };

  // One entry per conjugate group: the k = 0 or lexicographically positive
  // representative, with the group's combined mass.
  std::vector<std::pair<double, TermKey>> groups;
  for (const auto &[key, c] : f.terms()) {
    if (sign_class(key.k) < 0)
      continue;
    double mass = term_mass(key, c);
    if (sign_class(key.k) > 0) {
      Coeff m = f.coeff(mirror_key(key));
      if (m != Coeff(0))
        mass += term_mass(key, m);
    }
    groups.emplace_back(mass, key);
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto &a, const auto &b) {
              return a.first != b.first ? a.first < b.first : a.second < b.second;
            });

  std::set<TermKey> doomed;
  double used = 0;
  for (const auto &[mass, key] : groups) {
    if (used + mass > budget)
      break;
    used += mass;
    doomed.insert(key);
    doomed.insert(mirror_key(key));
  }
  if (doomed.empty())
    return f;

  *dropped = used;
  TrigPoly out(f.vars());
  for (const auto &[key, c] : f.terms())
    if (!doomed.count(key))
      out.add_term(key, c);
  return out;
}

void to_json(nlohmann::json &j, const TrigPoly &f) {
  j = nlohmann::json{{"n", f.vars()}, {"terms", nlohmann::json::array()}};
  for (const auto &[key, c] : f.terms())
    j["terms"].push_back({{"k", key.k},
                          {"alpha", key.alpha},
                          {"eps", key.eps},
                          {"re", c.real()},
                          {"im", c.imag()}});
}

void from_json(const nlohmann::json &j, TrigPoly &f) {
  f = TrigPoly(j.at("n").get<int>());
  for (const auto &t : j.at("terms")) {
    TermKey key{t.at("k").get<std::vector<int>>(),
                t.at("alpha").get<std::vector<unsigned>>(), t.at("eps").get<unsigned>()};
    f.add_term(std::move(key),
               std::complex<double>(t.at("re").get<double>(), t.at("im").get<double>()));
  }
}

TrigPoly parse_hamiltonian(const nlohmann::json &j) {
  int n = j.at("n").get<int>();
  if (n < 1)
    throw std::invalid_argument("parse_hamiltonian: n must be positive");
  TrigPoly out(n);
  for (const auto &t : j.at("terms")) {
    std::string type = t.at("type").get<std::string>();
    double coeff = t.at("coeff").get<double>();
    unsigned eps = t.value("eps", 0u);
    std::vector<unsigned> alpha = t.value("alpha", std::vector<unsigned>(n, 0));
    if (static_cast<int>(alpha.size()) != n)
      throw std::invalid_argument("parse_hamiltonian: alpha has wrong length");
    if (type == "action") {
      out += TrigPoly::action_monomial(n, alpha, coeff, eps);
    } else if (type == "cos" || type == "sin") {
      std::vector<int> k = t.at("k").get<std::vector<int>>();
      if (static_cast<int>(k.size()) != n)
        throw std::invalid_argument("parse_hamiltonian: k has wrong length");
      out += type == "cos" ? TrigPoly::cosine(n, std::move(k), coeff, alpha, eps)
                           : TrigPoly::sine(n, std::move(k), coeff, alpha, eps);
    } else {
      throw std::invalid_argument("parse_hamiltonian: unknown term type '" + type + "'");
    }
  }
  return out;
}

} // namespace nekholab
