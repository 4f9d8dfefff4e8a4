// Acceptance checklist for the laboratory. Ten independent end-to-end checks,
// each printing one PASS/FAIL line with the measured numbers; the process
// exits nonzero when any check fails. Tolerances and runtime budgets are
// fixed here, not tuned per run.
//
//  1. random Dirichlet certificates satisfy their exact bounds, under 10 s
//  2. periodic small divisors never drop below 1/T (exact, zero tolerance)
//  3. homological identity residual < 1e-12; averaging = 64-point quadrature
//  4. averaging and generators at a second frequency stay inside omega_1^perp
//  5. normal-form per-step contraction <= 1/e and an exponentially small tail
//  6. forced-resonance escape time delta/(2 pi eps |cos 2 pi phi0|) within 2%
//  7. SDM check refutes the saddle, passes the elliptic case, exact margins
//  8. refuted-shift fraction: monotone in gamma, sqrt(gamma) bound, seed-stable
//  9. exponent plan exact values, binding row at gamma = 1/2, eps monotone
// 10. integrator errors scale as O(dt^2) under angle-only forcing

#include "nekholab/diophantine.hpp"
#include "nekholab/dynamics.hpp"
#include "nekholab/exponents.hpp"
#include "nekholab/normal_form.hpp"
#include "nekholab/steepness.hpp"
#include "nekholab/trig_hamiltonian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace nekholab;

constexpr double kPi = 3.14159265358979323846;

struct Checklist {
  int failures = 0;

  void record(int id, const std::string &label, bool ok, const std::string &detail) {
    std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok)
      ++failures;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// h = I1^2 - I2^2, the exactly degenerate quadratic.
TrigPoly saddle_hamiltonian() {
  TrigPoly h = TrigPoly::action_monomial(2, {2, 0}, 1.0);
  h += TrigPoly::action_monomial(2, {0, 2}, -1.0);
  return h;
}

// H = (I1^2 - I2^2)/2 + eps sin(2 pi (theta1 + theta2)), the forced-resonance
// case whose drift rate and escape time are known in closed form.
TrigPoly forced_resonance_hamiltonian() {
  TrigPoly h = TrigPoly::action_monomial(2, {2, 0}, 0.5);
  h += TrigPoly::action_monomial(2, {0, 2}, -0.5);
  h += TrigPoly::sine(2, {1, 1}, 1.0, {}, 1);
  return h;
}

double max_coeff(const TrigPoly &f) {
  double worst = 0;
  for (const auto &[key, c] : f.terms())
    worst = std::max(worst, std::abs(c));
  return worst;
}

// Random real trig polynomial on T^n x R^n: mixed cosine/sine modes with
// |k|_1 <= 4, action degree <= 2, plus an angle-free monomial.
TrigPoly random_trig(int n, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> mode(-2, 2);
  std::uniform_int_distribution<unsigned> degree(0, 2);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  TrigPoly f(n);
  for (int t = 0; t < 8; ++t) {
    std::vector<int> k(n);
    for (int i = 0; i < n; ++i)
      k[i] = mode(rng);
    std::vector<unsigned> alpha(n);
    for (int i = 0; i < n; ++i)
      alpha[i] = degree(rng);
    if (t % 2 == 0)
      f += TrigPoly::cosine(n, k, amp(rng), alpha);
    else
      f += TrigPoly::sine(n, k, amp(rng), alpha);
  }
  f += TrigPoly::action_monomial(n, std::vector<unsigned>(n, 1), amp(rng));
  return f;
}

PeriodicVector random_periodic(int n, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> numerator(-3, 3);
  std::uniform_int_distribution<int> period(1, 10);
  for (;;) {
    std::vector<Int> num(n);
    bool nonzero = false;
    for (int i = 0; i < n; ++i) {
      num[i] = numerator(rng);
      nonzero = nonzero || num[i] != 0;
    }
    if (nonzero)
      return make_periodic(num, period(rng));
  }
}

// 1. Every random certificate satisfies its two exact bounds.
bool crit_dirichlet(std::string &detail) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260818);
  std::uniform_int_distribution<int> dims(2, 4);
  std::uniform_real_distribution<double> comp(-2.0, 2.0);
  std::uniform_real_distribution<double> logq(std::log(2.0), std::log(300.0));
  std::uniform_real_distribution<double> logq_cf(std::log(1e4), std::log(1e6));
  int good = 0;
  const int total = 1000;
  for (int trial = 0; trial < total; ++trial) {
    // Every 50th draw goes through the large-Q continued-fraction path.
    const bool big = trial % 50 == 0;
    const int n = big ? 2 : dims(rng);
    std::vector<double> v(n);
    double sup = 0;
    do {
      sup = 0;
      for (int i = 0; i < n; ++i) {
        v[i] = comp(rng);
        sup = std::max(sup, std::abs(v[i]));
      }
    } while (sup < 0.1);
    const double quality = std::exp(big ? logq_cf(rng) : logq(rng));
    ApproximationCertificate cert = dirichlet_approx(v, quality);
    if (cert.error_within_bound() && cert.period_within_bounds())
      ++good;
  }
  const double elapsed = seconds_since(start);
  detail = std::to_string(good) + "/" + std::to_string(total) + " certificates exact, " +
           fmt(elapsed) + " s";
  return good == total && elapsed < 10.0;
}

// 2. |k . omega| >= 1/T for all enumerated rational omega (denominators up to
//    20) and every nonorthogonal |k|_1 <= 6, checked in exact arithmetic.
bool crit_divisor_floor(std::string &detail) {
  std::set<std::string> seen;
  long checked = 0;
  long violations = 0;
  for (int p1 = -2; p1 <= 2; ++p1)
    for (int q1 = 1; q1 <= 20; ++q1)
      for (int p2 = -2; p2 <= 2; ++p2)
        for (int q2 = 1; q2 <= 20; ++q2) {
          if (p1 == 0 && p2 == 0)
            continue;
          std::vector<Rat> w = {Rat(p1, q1), Rat(p2, q2)};
          w[0].canonicalize();
          w[1].canonicalize();
          const std::string key = rat_text(w[0]) + "," + rat_text(w[1]);
          if (!seen.insert(key).second)
            continue;
          PeriodicVector pv = periodic_from_rational(w);
          ++checked;
          if (smallest_divisor(pv, 6) < Rat(1) / pv.period)
            ++violations;
        }
  detail = std::to_string(checked) + " frequency vectors, " +
           std::to_string(violations) + " below 1/T";
  return violations == 0;
}

// 3. {chi, omega . I} reproduces the nonresonant part coefficient by
//    coefficient, and the mode-space average matches flow-line quadrature.
bool crit_homological(std::string &detail) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, 1.0);
  std::uniform_real_distribution<double> act(-1.0, 1.0);
  double worst_residual = 0;
  double worst_quadrature = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const TrigPoly f = random_trig(2, rng);
    const PeriodicVector omega = random_periodic(2, rng);
    const TrigPoly nonres = f.nonresonant_part(omega);
    const TrigPoly chi = homological_solve(nonres, omega);
    const TrigPoly line = TrigPoly::action_linear(
        {omega.omega(0).get_d(), omega.omega(1).get_d()});
    worst_residual = std::max(worst_residual, max_coeff(poisson(chi, line) - nonres));

    // 64 equally spaced samples over one period integrate every mode of f
    // exactly (|k . T omega| <= 4 * 3 < 64, so nothing aliases to zero).
    const std::vector<double> theta0 = {angle(rng), angle(rng)};
    const std::vector<double> actions = {act(rng), act(rng)};
    const double t1 = omega.numerator[0].get_d();
    const double t2 = omega.numerator[1].get_d();
    double mean = 0;
    for (int j = 0; j < 64; ++j)
      mean += f.eval({theta0[0] + t1 * j / 64.0, theta0[1] + t2 * j / 64.0}, actions);
    mean /= 64.0;
    const double averaged = f.resonant_part(omega).eval(theta0, actions);
    worst_quadrature = std::max(worst_quadrature, std::abs(mean - averaged));
  }
  detail = "identity residual " + fmt(worst_residual) + ", quadrature gap " +
           fmt(worst_quadrature);
  return worst_residual < 1e-12 && worst_quadrature < 1e-10;
}

// 4. Modes orthogonal to omega_1 stay orthogonal to omega_1 through
//    averaging and the generator at any second frequency.
bool crit_commuting_average(std::string &detail) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> combo(-2, 2);
  std::uniform_int_distribution<unsigned> degree(0, 2);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  int good = 0;
  const int total = 100;
  for (int trial = 0; trial < total; ++trial) {
    const PeriodicVector omega1 = random_periodic(3, rng);
    std::vector<std::vector<Int>> row = {omega1.numerator};
    const std::vector<std::vector<Int>> kernel = integer_kernel_basis(row, 3);

    TrigPoly g(3);
    for (int t = 0; t < 6; ++t) {
      const int c1 = combo(rng), c2 = combo(rng);
      std::vector<int> k(3);
      for (int i = 0; i < 3; ++i)
        k[i] = static_cast<int>(Int(c1 * kernel[0][i] + c2 * kernel[1][i]).get_si());
      std::vector<unsigned> alpha = {degree(rng), degree(rng), degree(rng)};
      if (t % 2 == 0)
        g += TrigPoly::cosine(3, k, amp(rng), alpha);
      else
        g += TrigPoly::sine(3, k, amp(rng), alpha);
    }
    g += TrigPoly::action_monomial(3, {1, 0, 1}, amp(rng));

    const PeriodicVector omega2 = random_periodic(3, rng);
    const TrigPoly averaged = g.resonant_part(omega2);
    const TrigPoly chi = homological_solve(g.nonresonant_part(omega2), omega2);
    bool ok = true;
    for (const TrigPoly *part : {&averaged, &chi})
      for (const auto &[key, c] : part->terms()) {
        std::vector<Int> k(key.k.begin(), key.k.end());
        if (!in_lattice(kernel, k, 3))
          ok = false;
      }
    if (ok)
      ++good;
  }
  detail = std::to_string(good) + "/" + std::to_string(total) +
           " stayed inside omega_1^perp";
  return good == total;
}

// 5. Ten averaging steps on the convex two-frequency case: every step
//    contracts by at least 1/e, and the running remainder stays under
//    exp(-m) * C * eps with one constant C fixed by the first step.
bool crit_contraction(std::string &detail) {
  TrigPoly H = TrigPoly::action_monomial(2, {2, 0}, 0.5);
  H += TrigPoly::action_monomial(2, {0, 2}, 0.5);
  H += TrigPoly::sine(2, {1, 1}, 1.0, {}, 1);
  const double eps = 1e-9;

  NormalFormOptions opts;
  opts.steps_per_stage = 10;
  opts.depth = 4;
  const AnalyticDomain dom{{1.0, 1.0}, 6e-4, 0.1};
  const NormalFormResult result =
      normal_form(H, {make_periodic({1, 1}, 1)}, {dom}, opts, eps);

  const StageReport &stage = result.stages.at(0);
  if (stage.rejected || stage.steps.size() != 10) {
    detail = stage.rejected ? "stage rejected" : "stage ended early";
    return false;
  }
  double worst_contraction = 0;
  for (const StepRecord &step : stage.steps)
    worst_contraction = std::max(worst_contraction, step.contraction);

  // R_m e^m played against R_1 e: stability of the fitted constant means the
  // first step already pays for the whole tail.
  const double c_fit = stage.steps[0].remainder_norm * std::exp(1.0) / eps;
  bool tail_ok = true;
  for (size_t m = 1; m <= stage.steps.size(); ++m) {
    const double bound = std::exp(-static_cast<double>(m)) * c_fit * eps;
    if (!(stage.steps[m - 1].remainder_norm <= bound * (1.0 + 1e-12)))
      tail_ok = false;
  }
  detail = "worst step contraction " + fmt(worst_contraction) + ", fitted C " +
           fmt(c_fit);
  return worst_contraction <= std::exp(-1.0) && tail_ok && c_fit < 1.0;
}

// 6. Measured escape times against delta/(2 pi eps |cos 2 pi phi0|), plus the
//    log-log slope across three decades of eps.
bool crit_fast_drift(std::string &detail) {
  const auto start = std::chrono::steady_clock::now();
  const TrigPoly H = forced_resonance_hamiltonian();
  const double delta = 0.1;
  const std::vector<double> eps_list = {1e-2, 1e-3, 1e-4};

  Eigen::VectorXd theta0(2), action0(2);
  theta0 << 0.0, 0.0;
  action0 << 0.3, 0.3;
  ScalingOptions opts;
  opts.dt = 0.01;
  const ScalingTable table =
      stability_time(H, theta0, action0, eps_list, delta, 200.0, opts);

  bool within = table.uncensored == 3;
  double worst_rel = 0;
  for (const ScalingRow &row : table.rows) {
    const double expected = delta / (2 * kPi * row.epsilon);
    const double rel = std::abs(row.t_star / expected - 1.0);
    worst_rel = std::max(worst_rel, rel);
    within = within && !row.censored && rel <= 0.02;
  }

  // Second launch angle: phi0 = 0.1 scales the rate by cos(0.2 pi).
  Eigen::VectorXd theta1(2);
  theta1 << 0.05, 0.05;
  const double cosine = std::abs(std::cos(2 * kPi * 0.1));
  const ScalingTable tilted =
      stability_time(H, theta1, action0, {1e-2, 1e-3}, delta, 40.0, opts);
  for (const ScalingRow &row : tilted.rows) {
    const double expected = delta / (2 * kPi * row.epsilon * cosine);
    const double rel = std::abs(row.t_star / expected - 1.0);
    worst_rel = std::max(worst_rel, rel);
    within = within && !row.censored && rel <= 0.02;
  }

  const double elapsed = seconds_since(start);
  detail = "worst relative error " + fmt(worst_rel) + ", slope " + fmt(table.slope) +
           ", " + fmt(elapsed) + " s";
  return within && std::abs(table.slope + 1.0) <= 0.05 && elapsed < 60.0;
}

// 7. The sampled alternative separates the degenerate saddle from the convex
//    case, and its margins match the closed form for I1^2 - 2 I2^2.
bool crit_sdm(std::string &detail) {
  const TrigPoly saddle = saddle_hamiltonian();
  bool saddle_ok = true;
  for (double gamma : {1e-6, 1e-3, 0.1, 0.5, 1.0, 10.0}) {
    SdmOptions opts;
    opts.grid_res = 8;
    opts.random_points = 200;
    const SdmReport report = sdm_check(saddle, gamma, 11.0, 3, opts);
    bool diagonal_named = false;
    for (const SdmFrameRecord &rec : report.frames) {
      if (!rec.violated)
        continue;
      const std::string where = rec.frame.describe();
      if (where.find("span{(1,1)}") != std::string::npos ||
          where.find("span{(1,-1)}") != std::string::npos)
        diagonal_named = true;
    }
    saddle_ok = saddle_ok && !report.passed && diagonal_named;
  }

  TrigPoly elliptic = TrigPoly::action_monomial(2, {2, 0}, 0.5);
  elliptic += TrigPoly::action_monomial(2, {0, 2}, 0.5);
  const SdmReport convex = sdm_check(elliptic, 0.5, 11.0, 3);
  const bool elliptic_ok = convex.passed;

  // h = I1^2 - 2 I2^2: on span{(q,p)} the restricted Hessian is constant and
  // the origin kills the gradient, so each frame's margin is exactly
  // 2 |q^2 - 2 p^2| / (q^2 + p^2); the full-dimensional frame gives 2.
  TrigPoly skew = TrigPoly::action_monomial(2, {2, 0}, 1.0);
  skew += TrigPoly::action_monomial(2, {0, 2}, -2.0);
  SdmOptions small;
  small.grid_res = 8;
  small.random_points = 500;
  const SdmReport margins = sdm_check(skew, 0.5, 11.0, 3, small);
  double worst_gap = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (const SdmFrameRecord &rec : margins.frames) {
    double expected = 2.0;
    if (rec.frame.dimension == 1) {
      const double q = rec.frame.span_generators[0][0].get_d();
      const double p = rec.frame.span_generators[0][1].get_d();
      expected = 2.0 * std::abs(q * q - 2 * p * p) / (q * q + p * p);
    }
    worst_gap = std::max(worst_gap, std::abs(rec.margin - expected));
    min_margin = std::min(min_margin, rec.margin);
  }
  const bool margin_ok = worst_gap <= 1e-10 && std::abs(min_margin - 0.8) <= 1e-10;

  detail = std::string("saddle ") + (saddle_ok ? "refuted" : "NOT refuted") +
           ", elliptic " + (elliptic_ok ? "clean" : "refuted") + ", margin gap " +
           fmt(worst_gap);
  return saddle_ok && elliptic_ok && margin_ok;
}

// 8. Fraction of refuted linear shifts of the saddle: nonincreasing along a
//    decreasing gamma list, below fitted_c * sqrt(gamma) by construction with
//    a sane constant, and reproducible across seeds within 3 sigma.
bool crit_prevalence(std::string &detail) {
  const auto start = std::chrono::steady_clock::now();
  const TrigPoly saddle = saddle_hamiltonian();
  const std::vector<double> gammas = {0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
  const long samples = 10000;
  const PrevalenceReport a = prevalence_mc(saddle, gammas, 11.0, 2, samples, 1);
  const PrevalenceReport b = prevalence_mc(saddle, gammas, 11.0, 2, samples, 2);

  bool monotone = true;
  for (size_t i = 1; i < a.rows.size(); ++i)
    if (a.rows[i].bad_fraction > a.rows[i - 1].bad_fraction + 1e-15)
      monotone = false;

  bool seeds_close = true;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const double pooled =
        static_cast<double>(a.rows[i].bad_count + b.rows[i].bad_count) / (2.0 * samples);
    const double sigma = std::sqrt(std::max(pooled * (1 - pooled) * 2.0 / samples, 0.0));
    const double gap = std::abs(a.rows[i].bad_fraction - b.rows[i].bad_fraction);
    if (gap > 3 * sigma + 1e-12)
      seeds_close = false;
  }

  const double elapsed = seconds_since(start);
  detail = "fraction at gamma 0.5: " + fmt(a.rows[0].bad_fraction) + ", fitted C " +
           fmt(a.fitted_c) + ", " + fmt(elapsed) + " s";
  return monotone && seeds_close && a.fitted_c < 10.0 && elapsed < 300.0;
}

// 9. Exact exponent values for (n, tau) = (2, 2), the binding row at
//    gamma = 1/2, and pass/fail monotone in eps.
bool crit_exponents(std::string &detail) {
  const ExponentPlan plan = exponent_plan(2, 2);
  const bool plan_ok = plan.a_seq == std::vector<Rat>{Rat(1, 144), Rat(1, 12)} &&
                       plan.a == Rat(1, 432) && plan.b == Rat(1, 432) &&
                       plan.headline == Rat(1, 12288);

  LedgerParams params;
  params.gamma = 0.5;
  params.epsilon = 1e-131;
  const ConditionLedger ledger = condition_ledger(params);
  const bool binding_ok = ledger.binding == "(ix')" && ledger.passes &&
                          std::abs(ledger.epsilon0 / std::pow(0.5, 432) - 1.0) < 1e-9;

  bool monotone = true;
  bool previous = false;
  for (double eps : {1e-100, 1e-120, 1e-130, 1e-131, 1e-135, 1e-200}) {
    params.epsilon = eps;
    const bool pass = condition_ledger(params).passes;
    if (previous && !pass)
      monotone = false;
    previous = pass;
  }
  params.epsilon = 1e-130;
  const bool flip_ok = !condition_ledger(params).passes;

  detail = "a = " + rat_text(plan.a) + ", headline = " + rat_text(plan.headline) +
           ", binding " + ledger.binding + ", eps0 " + fmt(ledger.epsilon0);
  return plan_ok && binding_ok && monotone && flip_ok;
}

// 10. Halving dt divides both the final action error and the energy error by
//     4 +- 0.5 on an off-resonance orbit of the forced Hamiltonian.
bool crit_integrator_order(std::string &detail) {
  const TrigPoly H = forced_resonance_hamiltonian().substitute_epsilon(0.05);
  Eigen::VectorXd theta0(2), action0(2);
  theta0 << 0.17, 0.31;
  action0 << 0.4, 0.15;
  const double horizon = 5.0;

  const DriftTrace ref = integrate(H, theta0, action0, 0.000625, horizon);
  const Eigen::VectorXd final_ref = ref.actions.back();

  std::vector<double> action_err, energy_err;
  for (double dt : {0.02, 0.01, 0.005}) {
    const DriftTrace run = integrate(H, theta0, action0, dt, horizon);
    action_err.push_back((run.actions.back() - final_ref).lpNorm<Eigen::Infinity>());
    energy_err.push_back(run.max_energy_error());
  }

  bool ok = true;
  double worst = 0;
  std::ostringstream ratios;
  for (int i = 0; i < 2; ++i) {
    const double ra = action_err[i] / action_err[i + 1];
    const double re = energy_err[i] / energy_err[i + 1];
    ratios << (i ? ", " : "") << fmt(ra) << " / " << fmt(re);
    worst = std::max({worst, std::abs(ra - 4.0), std::abs(re - 4.0)});
    ok = ok && std::abs(ra - 4.0) <= 0.5 && std::abs(re - 4.0) <= 0.5;
  }
  detail = "action/energy ratios " + ratios.str();
  return ok;
}

} // namespace

int main() {
  Checklist list;
  std::string detail;

  detail.clear();
  list.record(1, "dirichlet certificates", crit_dirichlet(detail), detail);
  detail.clear();
  list.record(2, "periodic divisor floor", crit_divisor_floor(detail), detail);
  detail.clear();
  list.record(3, "homological identity", crit_homological(detail), detail);
  detail.clear();
  list.record(4, "commuting average", crit_commuting_average(detail), detail);
  detail.clear();
  list.record(5, "normal-form contraction", crit_contraction(detail), detail);
  detail.clear();
  list.record(6, "fast-drift escape times", crit_fast_drift(detail), detail);
  detail.clear();
  list.record(7, "sdm discrimination", crit_sdm(detail), detail);
  detail.clear();
  list.record(8, "prevalence scaling", crit_prevalence(detail), detail);
  detail.clear();
  list.record(9, "exponent plan", crit_exponents(detail), detail);
  detail.clear();
  list.record(10, "integrator order", crit_integrator_order(detail), detail);

  if (list.failures == 0) {
    std::printf("all 10 checks passed\n");
    return 0;
  }
  std::printf("%d of 10 checks FAILED\n", list.failures);
  return 1;
}
