#include "nekholab/normal_form.hpp"

#include <cmath>
#include <stdexcept>

namespace nekholab {

namespace {

const double kE = std::exp(1.0);

std::vector<double> negated(const std::vector<double> &v) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out[i] = -v[i];
  return out;
}

// Constants are annihilated by every bracket, so they neither feed the series
// nor belong in its tail bound.
TrigPoly without_constants(const TrigPoly &f) {
  TrigPoly out(f.vars());
  for (const auto &[key, c] : f.terms()) {
    bool constant = true;
    for (int x : key.k)
      if (x != 0)
        constant = false;
    for (unsigned a : key.alpha)
      if (a != 0)
        constant = false;
    if (!constant)
      out.add_term(key, c);
  }
  return out;
}

} // namespace

AveragingStep averaging_step(const TrigPoly &h, const TrigPoly &g, const TrigPoly &f,
                             const PeriodicVector &omega, const AnalyticDomain &dom,
                             double next_radius, double next_width, double weight,
                             int depth, const ConstantTable &table) {
  if (depth < 1)
    throw std::invalid_argument("averaging_step: depth must be >= 1");
  if (!(next_radius > 0) || !(next_width > 0))
    throw std::invalid_argument("averaging_step: target domain must stay positive");
  if (!(next_radius < dom.radius) || !(next_width < dom.width))
    throw std::invalid_argument("averaging_step: target domain must shrink strictly");
  if (h.has_angles())
    throw std::invalid_argument("averaging_step: integrable part depends on angles");
  if (omega.dim() != h.vars() || g.vars() != h.vars() || f.vars() != h.vars())
    throw std::invalid_argument("averaging_step: dimension mismatch");

  double gap_r = dom.radius - next_radius;
  double gap_s = dom.width - next_width;

  TrigPoly f_res = f.resonant_part(omega);
  TrigPoly f_nr = f.nonresonant_part(omega);
  TrigPoly chi = homological_solve(f_nr, omega);

  StepRecord rec;
  rec.entry_radius = dom.radius;
  rec.entry_width = dom.width;
  rec.exit_radius = next_radius;
  rec.exit_width = next_width;
  rec.previous_norm = majorant_norm(f, dom.radius, dom.width);
  rec.resonant_norm = majorant_norm(f_res, dom.radius, dom.width);
  rec.chi_norm = majorant_norm(chi, dom.radius, dom.width);
  rec.chi_vf_norm = vector_field_norm(chi, dom.radius, dom.width, weight);

  // A-priori advisory version of the same smallness, phrased in the period
  // and the remainder size alone (the measured ratio below is what gates).
  double period = to_double(omega.period);
  rec.sharp_condition = kE * period * rec.previous_norm *
                        (1.0 / gap_r + 1.0 / (dom.radius * gap_s));
  rec.sharp_ok = rec.sharp_condition <= table.row("step");

  rec.tail_ratio = kE * bracket_step_factor(chi, dom.radius, dom.width, gap_r, gap_s);
  if (!(rec.tail_ratio < 1.0))
    throw StepRejected(rec.tail_ratio);

  // D = {., chi}; the flow of chi transports H by e^D. The identity
  // D(omega.I) = -f_nr replaces the one catastrophic cancellation with
  // structure: every series below is built from f-sized seeds.
  Eigen::VectorXd wd = omega.omega_double();
  std::vector<double> w(wd.data(), wd.data() + omega.dim());
  TrigPoly base = without_constants((h - TrigPoly::action_linear(w)) + g);

  // Bracket iterations accrete high-order terms whose majorant mass is far
  // below one rounding of f; shedding them between brackets keeps the term
  // count tame. Everything shed is charged to the tail bound below.
  double slice_budget = rec.previous_norm * 1e-16 / (3.0 * depth);
  double shed = 0;

  auto next_bracket = [&](TrigPoly &cur) {
    cur = poisson(cur, chi);
    double dropped = 0;
    cur = truncate_small_terms(cur, slice_budget, dom.radius, dom.width, &dropped);
    shed += dropped;
  };

  TrigPoly f_plus(f.vars());
  {
    // sum_{d=1..N} D^d (h - l + g) / d!
    TrigPoly cur = base;
    double inv_fact = 1.0;
    for (int d = 1; d <= depth; ++d) {
      next_bracket(cur);
      inv_fact /= d;
      f_plus += cur * inv_fact;
    }
  }
  {
    // - sum_{d=2..N} D^{d-1} f_nr / d!   (the d=1 term cancelled against f_nr)
    TrigPoly cur = f_nr;
    double inv_fact = 1.0;
    for (int d = 2; d <= depth; ++d) {
      next_bracket(cur);
      inv_fact /= d;
      f_plus -= cur * inv_fact;
    }
  }
  {
    // sum_{d=1..N} D^d f / d!
    TrigPoly cur = f;
    double inv_fact = 1.0;
    for (int d = 1; d <= depth; ++d) {
      next_bracket(cur);
      inv_fact /= d;
      f_plus += cur * inv_fact;
    }
  }

  // Tail of the three series: one D application contracts majorants by at
  // most tail_ratio/e per slice, d applications by (tail_ratio)^d / d! * d^d.
  double rho = rec.tail_ratio;
  double geom = 1.0 - rho;
  double base_norm = majorant_norm(base, dom.radius, dom.width);
  double fnr_norm = majorant_norm(f_nr, dom.radius, dom.width);
  rec.tail_bound = (base_norm + rec.previous_norm) * std::pow(rho, depth + 1) / geom +
                   fnr_norm * std::pow(rho, depth) / geom;
  // A shed term and all its bracket descendants are worth at most its own
  // mass times sum_k rho^k.
  rec.tail_bound += shed / geom;

  rec.remainder_norm = majorant_norm(f_plus, next_radius, next_width) + rec.tail_bound;
  rec.contraction =
      rec.previous_norm > 0 ? rec.remainder_norm / rec.previous_norm : 0.0;

  AveragingStep out;
  out.g_plus = g + f_res;
  out.f_plus = std::move(f_plus);
  out.chi = std::move(chi);
  out.record = rec;
  return out;
}

NormalFormResult normal_form(const TrigPoly &hamiltonian,
                             const std::vector<PeriodicVector> &omegas,
                             const std::vector<AnalyticDomain> &domains,
                             const NormalFormOptions &opts, double epsilon) {
  if (omegas.empty() || omegas.size() != domains.size())
    throw std::invalid_argument("normal_form: need matching omega/domain lists");
  if (opts.steps_per_stage < 1)
    throw std::invalid_argument("normal_form: steps_per_stage must be >= 1");
  if (!(epsilon > 0))
    throw std::invalid_argument("normal_form: epsilon must be positive");
  if (hamiltonian.grade_part(0).has_angles())
    throw std::invalid_argument("normal_form: grade-0 part depends on angles");
  int n = hamiltonian.vars();
  for (size_t j = 0; j < omegas.size(); ++j) {
    if (omegas[j].dim() != n || static_cast<int>(domains[j].center.size()) != n)
      throw std::invalid_argument("normal_form: dimension mismatch at stage " +
                                  std::to_string(j));
    if (!(domains[j].radius > 0) || !(domains[j].width > 0))
      throw std::invalid_argument("normal_form: degenerate domain at stage " +
                                  std::to_string(j));
  }

  double weight = opts.weight > 0 ? opts.weight : domains[0].width / domains[0].radius;
  int m = opts.steps_per_stage;

  NormalFormResult result;
  // Global coordinates throughout the stage loop, grades already valued.
  TrigPoly current = hamiltonian.substitute_epsilon(epsilon);

  for (size_t j = 0; j < omegas.size(); ++j) {
    const AnalyticDomain &dom = domains[j];
    StageReport stage;
    stage.omega = omegas[j];
    stage.entry = dom;

    if (j > 0) {
      // The previous stage ended on 2/3 of its entry domain; the new domain
      // should sit inside that shrunken polydisc.
      const AnalyticDomain &prev = domains[j - 1];
      double shift = 0;
      for (int i = 0; i < n; ++i)
        shift = std::max(shift, std::abs(dom.center[i] - prev.center[i]));
      stage.nested_in_previous = shift + dom.radius <= (2.0 / 3.0) * prev.radius &&
                                 dom.width <= (2.0 / 3.0) * prev.width;
    }

    // Local coordinates: actions measured from the stage center. Everything
    // integrable (angle-free) anchors the stage; the rest is remainder.
    TrigPoly local = current.shift_actions(dom.center);
    TrigPoly h = local.fourier_zero_part();
    TrigPoly g = TrigPoly::zero(n);
    TrigPoly f = local - h;

    Eigen::VectorXd wd = stage.omega.omega_double();
    std::vector<double> zero_pt(n, 0.0);
    for (int i = 0; i < n; ++i)
      stage.anchor_mismatch = std::max(
          stage.anchor_mismatch, std::abs(h.dI(i).eval(zero_pt, zero_pt) - wd[i]));

    for (int step = 1; step <= m; ++step) {
      if (f.is_zero()) {
        stage.emptied = true;
        break;
      }
      AnalyticDomain entry;
      entry.center = std::vector<double>(n, 0.0);
      entry.radius = dom.radius * (1.0 - static_cast<double>(step - 1) / (3.0 * m));
      entry.width = dom.width * (1.0 - static_cast<double>(step - 1) / (3.0 * m));
      double next_radius = dom.radius * (1.0 - static_cast<double>(step) / (3.0 * m));
      double next_width = dom.width * (1.0 - static_cast<double>(step) / (3.0 * m));
      try {
        AveragingStep out = averaging_step(h, g, f, stage.omega, entry, next_radius,
                                           next_width, weight, opts.depth, opts.table);
        out.record.stage = static_cast<int>(j);
        out.record.step = step;
        g = std::move(out.g_plus);
        f = std::move(out.f_plus);
        stage.steps.push_back(out.record);
      } catch (const StepRejected &rej) {
        stage.rejected = true;
        stage.rejected_ratio = rej.ratio;
        break;
      }
    }
    if (!stage.rejected && f.is_zero())
      stage.emptied = true;

    stage.h = h;
    stage.normal_form = g;
    stage.remainder = f;
    current = (h + g + f).shift_actions(negated(dom.center));
    result.stages.push_back(std::move(stage));
  }

  result.transformed = std::move(current);
  return result;
}

} // namespace nekholab
