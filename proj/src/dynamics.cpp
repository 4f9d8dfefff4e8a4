#include "nekholab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nekholab/rational.hpp"

namespace nekholab {
namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double wrap_unit(double x) { return x - std::floor(x); }

bool all_finite(const std::vector<double> &v) {
  for (double x : v)
    if (!std::isfinite(x))
      return false;
  return true;
}

// The splitting H = h(I) + f(theta, I): h is the Fourier-zero part, f the
// rest. Derivatives are differentiated once up front and evaluated per step.
struct Split {
  std::vector<TrigPoly> grad_h;
  std::vector<TrigPoly> f_theta;
  std::vector<TrigPoly> f_i;
  bool f_zero = true;
  bool f_depends_on_actions = false;
};

Split split_hamiltonian(const TrigPoly &H) {
  int n = H.vars();
  TrigPoly h = H.fourier_zero_part();
  TrigPoly f = H - h;
  Split s;
  s.f_zero = f.is_zero();
  s.f_depends_on_actions = f.depends_on_actions();
  s.grad_h.reserve(n);
  s.f_theta.reserve(n);
  s.f_i.reserve(n);
  for (int i = 0; i < n; ++i) {
    s.grad_h.push_back(h.dI(i));
    s.f_theta.push_back(f.dtheta(i));
    s.f_i.push_back(f.dI(i));
  }
  return s;
}

// Exact flow of h over tau: theta advances by nabla h(I), actions freeze.
void flow_h(const Split &s, std::vector<double> &theta, const std::vector<double> &act,
            double tau) {
  int n = static_cast<int>(theta.size());
  std::vector<double> omega(n);
  for (int i = 0; i < n; ++i)
    omega[i] = s.grad_h[i].eval(theta, act);
  for (int i = 0; i < n; ++i)
    theta[i] = wrap_unit(theta[i] + tau * omega[i]);
}

// Perturbation flow over tau. Exact when f is angle-only (actions get the
// full impulse, angles freeze); otherwise one implicit symplectic-Euler
// substep, implicit in the actions. Returns false when the fixed point
// fails to settle.
bool flow_f(const Split &s, const IntegrateOptions &opts, std::vector<double> &theta,
            std::vector<double> &act, double tau) {
  if (s.f_zero)
    return true;
  int n = static_cast<int>(theta.size());
  if (!s.f_depends_on_actions) {
    for (int i = 0; i < n; ++i)
      act[i] -= tau * s.f_theta[i].eval(theta, act);
    return true;
  }
  std::vector<double> next = act, cur = act;
  bool settled = false;
  for (int it = 0; it < opts.max_fixed_point_iters; ++it) {
    double move = 0;
    for (int i = 0; i < n; ++i) {
      next[i] = act[i] - tau * s.f_theta[i].eval(theta, cur);
      move = std::max(move, std::abs(next[i] - cur[i]));
    }
    cur = next;
    if (!all_finite(cur))
      return false;
    if (move <= opts.fixed_point_tol) {
      settled = true;
      break;
    }
  }
  if (!settled)
    return false;
  std::vector<double> push(n);
  for (int i = 0; i < n; ++i)
    push[i] = s.f_i[i].eval(theta, cur);
  for (int i = 0; i < n; ++i)
    theta[i] = wrap_unit(theta[i] + tau * push[i]);
  act = cur;
  return true;
}

bool step_strang(const Split &s, const IntegrateOptions &opts,
                 std::vector<double> &theta, std::vector<double> &act, double dt) {
  flow_h(s, theta, act, 0.5 * dt);
  if (!flow_f(s, opts, theta, act, dt))
    return false;
  flow_h(s, theta, act, 0.5 * dt);
  return true;
}

// First-order symplectic Euler on the full H, implicit in the actions (h is
// angle-free, so only f enters the implicit update).
bool step_euler(const Split &s, const IntegrateOptions &opts,
                std::vector<double> &theta, std::vector<double> &act, double dt) {
  int n = static_cast<int>(theta.size());
  if (!s.f_zero) {
    if (!s.f_depends_on_actions) {
      for (int i = 0; i < n; ++i)
        act[i] -= dt * s.f_theta[i].eval(theta, act);
    } else {
      std::vector<double> next = act, cur = act;
      bool settled = false;
      for (int it = 0; it < opts.max_fixed_point_iters; ++it) {
        double move = 0;
        for (int i = 0; i < n; ++i) {
          next[i] = act[i] - dt * s.f_theta[i].eval(theta, cur);
          move = std::max(move, std::abs(next[i] - cur[i]));
        }
        cur = next;
        if (!all_finite(cur))
          return false;
        if (move <= opts.fixed_point_tol) {
          settled = true;
          break;
        }
      }
      if (!settled)
        return false;
      act = cur;
    }
  }
  std::vector<double> push(n);
  for (int i = 0; i < n; ++i)
    push[i] = s.grad_h[i].eval(theta, act) + s.f_i[i].eval(theta, act);
  for (int i = 0; i < n; ++i)
    theta[i] = wrap_unit(theta[i] + dt * push[i]);
  return true;
}

void validate_common(const TrigPoly &H, const Eigen::VectorXd &theta0,
                     const Eigen::VectorXd &I0, double dt, double horizon,
                     const char *who) {
  std::string head(who);
  if (H.vars() < 1)
    throw std::invalid_argument(head + ": H must have at least one degree of freedom");
  if (!H.is_real())
    throw std::invalid_argument(head + ": H must be a real trig polynomial");
  if (theta0.size() != H.vars() || I0.size() != H.vars())
    throw std::invalid_argument(head + ": initial state dimension does not match H");
  if (!(dt > 0) || !std::isfinite(dt))
    throw std::invalid_argument(head + ": dt must be positive and finite");
  if (!(horizon > 0) || !std::isfinite(horizon))
    throw std::invalid_argument(head + ": horizon must be positive and finite");
}

void validate_step_options(const IntegrateOptions &opts, const char *who) {
  std::string head(who);
  if (opts.stride < 1)
    throw std::invalid_argument(head + ": stride must be at least 1");
  if (!(opts.fixed_point_tol > 0))
    throw std::invalid_argument(head + ": fixed_point_tol must be positive");
  if (opts.max_fixed_point_iters < 1)
    throw std::invalid_argument(head + ": max_fixed_point_iters must be at least 1");
  if (!std::isnan(opts.delta) && !(opts.delta > 0 && std::isfinite(opts.delta)))
    throw std::invalid_argument(head + ": delta must be positive (or NaN to disable)");
}

Eigen::VectorXd to_eigen(const std::vector<double> &v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

} // namespace

int DriftTrace::dimension() const {
  return actions.empty() ? 0 : static_cast<int>(actions.front().size());
}

double DriftTrace::max_energy_error() const {
  double m = 0;
  for (double e : energy_error)
    m = std::max(m, e);
  return m;
}

std::string DriftTrace::to_csv() const {
  std::ostringstream out;
  out << "t";
  for (int i = 1; i <= dimension(); ++i)
    out << ",I" << i;
  out << ",drift,energy_err\n";
  for (size_t s = 0; s < times.size(); ++s) {
    out << fmt17(times[s]);
    for (int i = 0; i < dimension(); ++i)
      out << "," << fmt17(actions[s][i]);
    out << "," << fmt17(drift[s]) << "," << fmt17(energy_error[s]) << "\n";
  }
  return out.str();
}

DriftTrace integrate(const TrigPoly &H, const Eigen::VectorXd &theta0,
                     const Eigen::VectorXd &I0, double dt, double horizon,
                     const IntegrateOptions &opts) {
  validate_common(H, theta0, I0, dt, horizon, "integrate");
  validate_step_options(opts, "integrate");

  int n = H.vars();
  Split split = split_hamiltonian(H);
  std::vector<double> theta(n), act(n);
  for (int i = 0; i < n; ++i) {
    theta[i] = wrap_unit(theta0[i]);
    act[i] = I0[i];
  }
  if (!all_finite(theta) || !all_finite(act))
    throw std::invalid_argument("integrate: initial state must be finite");

  long long steps = static_cast<long long>(std::ceil(horizon / dt - 1e-9));
  steps = std::max<long long>(steps, 1);

  DriftTrace trace;
  trace.delta = opts.delta;
  double h0 = H.eval(theta, act);
  std::vector<double> init_act = act;

  auto record = [&](double t) {
    double d = 0;
    for (int i = 0; i < n; ++i)
      d = std::max(d, std::abs(act[i] - init_act[i]));
    if (!trace.drift.empty())
      d = std::max(d, trace.drift.back());
    trace.times.push_back(t);
    trace.actions.push_back(to_eigen(act));
    trace.angles.push_back(to_eigen(theta));
    trace.drift.push_back(d);
    trace.energy_error.push_back(std::abs(H.eval(theta, act) - h0));
  };
  record(0.0);

  bool watch_escape = !std::isnan(opts.delta);
  for (long long step = 1; step <= steps; ++step) {
    bool ok = opts.scheme == Scheme::strang_split
                  ? step_strang(split, opts, theta, act, dt)
                  : step_euler(split, opts, theta, act, dt);
    if (!ok || !all_finite(theta) || !all_finite(act)) {
      trace.aborted = true;
      break;
    }
    if (step % opts.stride == 0 || step == steps) {
      record(static_cast<double>(step) * dt);
      if (watch_escape && trace.drift.back() >= opts.delta) {
        trace.escaped = true;
        size_t s = trace.times.size() - 1;
        double d1 = trace.drift[s], t1 = trace.times[s];
        double d0 = trace.drift[s - 1], t0 = trace.times[s - 1];
        trace.escape_time =
            d1 > d0 ? t0 + (opts.delta - d0) / (d1 - d0) * (t1 - t0) : t1;
        break;
      }
    }
  }
  if (watch_escape && !trace.escaped && !trace.aborted) {
    trace.censored = true;
    trace.escape_time = static_cast<double>(steps) * dt;
  }
  return trace;
}

std::string ScalingTable::to_csv() const {
  std::ostringstream out;
  out << "epsilon,t_star,censored,aborted\n";
  for (const auto &r : rows)
    out << fmt17(r.epsilon) << "," << fmt17(r.t_star) << "," << (r.censored ? 1 : 0)
        << "," << (r.aborted ? 1 : 0) << "\n";
  return out.str();
}

namespace {
std::string json_number_or_null(double x) {
  return std::isfinite(x) ? fmt17(x) : std::string("null");
}
} // namespace

std::string ScalingTable::to_json() const {
  std::ostringstream out;
  out << "{\n  \"delta\": " << fmt17(delta) << ",\n  \"horizon\": " << fmt17(horizon)
      << ",\n  \"dt\": " << fmt17(dt) << ",\n  \"uncensored\": " << uncensored
      << ",\n  \"slope\": " << json_number_or_null(slope)
      << ",\n  \"intercept\": " << json_number_or_null(intercept)
      << ",\n  \"rows\": [\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto &r = rows[i];
    out << "    {\"epsilon\": " << fmt17(r.epsilon)
        << ", \"t_star\": " << json_number_or_null(r.t_star)
        << ", \"censored\": " << (r.censored ? "true" : "false")
        << ", \"aborted\": " << (r.aborted ? "true" : "false") << "}"
        << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  return out.str();
}

ScalingTable stability_time(const TrigPoly &H, const Eigen::VectorXd &theta0,
                            const Eigen::VectorXd &I0,
                            const std::vector<double> &epsilon_list, double delta,
                            double horizon, const ScalingOptions &opts) {
  validate_common(H, theta0, I0, opts.dt, horizon, "stability_time");
  if (!(delta > 0) || !std::isfinite(delta))
    throw std::invalid_argument("stability_time: delta must be positive");
  if (epsilon_list.empty())
    throw std::invalid_argument("stability_time: epsilon_list must be nonempty");
  for (size_t i = 0; i < epsilon_list.size(); ++i) {
    if (!(epsilon_list[i] > 0) || !std::isfinite(epsilon_list[i]))
      throw std::invalid_argument("stability_time: epsilon values must be positive");
    if (i > 0 && epsilon_list[i] >= epsilon_list[i - 1])
      throw std::invalid_argument(
          "stability_time: epsilon_list must be strictly decreasing");
  }
  if (opts.stride < 1)
    throw std::invalid_argument("stability_time: stride must be at least 1");
  if (opts.jobs < 1)
    throw std::invalid_argument("stability_time: jobs must be at least 1");

  ScalingTable table;
  table.delta = delta;
  table.horizon = horizon;
  table.dt = opts.dt;
  table.rows.resize(epsilon_list.size());

  auto run_one = [&](size_t i) {
    double eps = epsilon_list[i];
    IntegrateOptions io;
    io.scheme = opts.scheme;
    io.stride = opts.stride;
    io.delta = delta;
    DriftTrace trace = integrate(H.substitute_epsilon(eps), theta0, I0, opts.dt,
                                 horizon, io);
    ScalingRow row;
    row.epsilon = eps;
    row.t_star = trace.escape_time;
    row.censored = trace.censored;
    row.aborted = trace.aborted;
    table.rows[i] = row;
  };

  int workers = static_cast<int>(
      std::min<size_t>(static_cast<size_t>(opts.jobs), epsilon_list.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < epsilon_list.size(); ++i)
      run_one(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (size_t i = static_cast<size_t>(w); i < epsilon_list.size();
             i += static_cast<size_t>(workers))
          run_one(i);
      });
    for (auto &t : pool)
      t.join();
  }

  // Least squares for log t* against log eps over rows that actually escaped.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto &r : table.rows) {
    if (r.censored || r.aborted || !std::isfinite(r.t_star) || r.t_star <= 0)
      continue;
    double x = std::log(r.epsilon), y = std::log(r.t_star);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  table.uncensored = m;
  if (m >= 2) {
    double var = sxx - sx * sx / m;
    if (var > 0) {
      table.slope = (sxy - sx * sy / m) / var;
      table.intercept = (sy - table.slope * sx) / m;
    }
  }
  return table;
}

std::string ResonanceTrace::to_csv(const DriftTrace &trace) const {
  if (static_cast<int>(trace.times.size()) < samples())
    throw std::invalid_argument("ResonanceTrace::to_csv: trace is shorter than "
                                "the resonance record");
  std::ostringstream out;
  out << "t,omega,denominator,period,error,error_bound,in_window\n";
  for (int s = 0; s < samples(); ++s) {
    const auto &cert = certificates[s];
    Eigen::VectorXd omega = cert.result.omega_double();
    out << fmt17(trace.times[s]) << ",\"(";
    for (int i = 0; i < omega.size(); ++i)
      out << (i ? ", " : "") << fmt17(omega[i]);
    out << ")\"," << cert.denominator.get_str() << ","
        << fmt17(cert.result.period.get_d()) << ","
        << fmt17(cert.error.get_d()) << "," << fmt17(cert.error_bound()) << ","
        << (in_window[s] ? 1 : 0) << "\n";
  }
  return out.str();
}

ResonanceTrace resonance_trace(const DriftTrace &trace, const TrigPoly &h,
                               double quality, const WindowConstants &wc) {
  if (trace.samples() < 1)
    throw std::invalid_argument("resonance_trace: trace must be nonempty");
  int n = trace.dimension();
  if (h.vars() != n)
    throw std::invalid_argument("resonance_trace: h dimension does not match trace");
  if (h.has_angles())
    throw std::invalid_argument("resonance_trace: h must be angle-free");
  if (!(quality > 1) || !std::isfinite(quality))
    throw std::invalid_argument("resonance_trace: quality must exceed 1");
  if (!(wc.c > 0) || !std::isfinite(wc.c))
    throw std::invalid_argument("resonance_trace: window constant must be positive");

  std::vector<TrigPoly> grad;
  grad.reserve(n);
  for (int i = 0; i < n; ++i)
    grad.push_back(h.dI(i));

  ResonanceTrace rt;
  rt.quality = quality;
  rt.window_constant = wc.c;
  rt.gradients.reserve(trace.samples());
  rt.certificates.reserve(trace.samples());
  rt.in_window.reserve(trace.samples());

  std::vector<double> zero_theta(n, 0.0);
  for (int s = 0; s < trace.samples(); ++s) {
    std::vector<double> act(trace.actions[s].data(), trace.actions[s].data() + n);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
      g[i] = grad[i].eval(zero_theta, act);
    ApproximationCertificate cert = dirichlet_approx(g, quality);
    rt.gradients.push_back(to_eigen(g));
    rt.in_window.push_back(cert.error.get_d() < wc.c * cert.error_bound());
    for (const Int &num : cert.result.numerator)
      rt.l_sup = std::max(rt.l_sup, std::abs(num.get_d()));

    // period * omega is the integer vector cert.result.numerator; dividing
    // out its content leaves the primitive direction of the resonance ray.
    std::vector<Int> direction = cert.result.numerator;
    Int g_dir = content(direction);
    if (g_dir > 1)
      for (Int &c : direction)
        c /= g_dir;
    if (!rt.visits.empty() && rt.visits.back().direction == direction) {
      rt.visits.back().t_exit = trace.times[s];
      rt.visits.back().samples += 1;
    } else {
      VisitRecord v;
      v.direction = std::move(direction);
      v.first_omega = cert.result;
      v.t_enter = trace.times[s];
      v.t_exit = trace.times[s];
      v.samples = 1;
      rt.visits.push_back(v);
    }
    rt.certificates.push_back(std::move(cert));
  }
  return rt;
}

} // namespace nekholab
