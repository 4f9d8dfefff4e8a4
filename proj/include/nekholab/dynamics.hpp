#pragma once
// Symplectic integration of H = h(I) + f(theta, I) on T^n x R^n, drift
// measurement against an escape threshold, stability-time scaling tables,
// and a resonance-trace analyzer that follows the frequency ray nabla h(I(t))
// through its best periodic approximations.
//
// The splitting uses the exact flow of the angle-free part h (theta advances
// by nabla h(I) while I stands still) composed with the perturbation flow.
// When f depends on the angles only both substeps are exact, the Strang
// composition is second order, and integrating -H retraces the steps.
// Action-dependent perturbations fall back to one implicit symplectic-Euler
// substep inside the sandwich; that lone asymmetric substep costs an order,
// so expect first-order convergence in that regime.
//
// Angles live on the unit torus (coordinates mod 1) and every frequency
// picked up from a trig derivative already carries its 2 pi factor, so the
// integrator never multiplies by 2 pi itself.

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nekholab/diophantine.hpp"
#include "nekholab/trig_hamiltonian.hpp"

namespace nekholab {

enum class Scheme {
  strang_split,     // A(dt/2) B(dt) A(dt/2), second order
  symplectic_euler, // one first-order step, implicit in the actions
};

struct IntegrateOptions {
  Scheme scheme = Scheme::strang_split;
  // Record every stride-th step (the initial state is always recorded).
  int stride = 1;
  // Escape threshold on the running drift sup|I(t) - I(0)|; NaN disables
  // escape detection and the run always covers the full horizon.
  double delta = std::numeric_limits<double>::quiet_NaN();
  // Implicit substep fixed-point iteration (only exercised when the
  // perturbation depends on the actions).
  double fixed_point_tol = 1e-14;
  int max_fixed_point_iters = 50;
};

// Sampled trajectory with running drift and energy-error diagnostics. The
// drift column is the running sup-norm distance of the actions from their
// initial value, so it is nondecreasing by construction.
struct DriftTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> actions;
  std::vector<Eigen::VectorXd> angles; // wrapped into [0, 1)
  std::vector<double> drift;
  std::vector<double> energy_error; // |H(z(t)) - H(z(0))|

  double delta = std::numeric_limits<double>::quiet_NaN();
  // First time the drift reaches delta, linearly interpolated between the
  // bracketing samples; the run stops at the crossing sample. Censored runs
  // report the horizon here. NaN when no threshold was set or the run
  // aborted first.
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  bool escaped = false;
  bool censored = false;
  // A non-finite state (or a divergent implicit substep) stops the run; the
  // trace keeps every sample up to the last valid one. Aborted runs report
  // neither escape nor censoring.
  bool aborted = false;

  int dimension() const;
  int samples() const { return static_cast<int>(times.size()); }
  double max_energy_error() const;

  // Columns: t, I1..In, drift, energy_err.
  std::string to_csv() const;
};

// Integrates H from (theta0, I0) for ceil(horizon/dt) steps. H must be a
// real trig polynomial whose epsilon grades are already substituted; its
// angle-free Fourier part is taken as the integrable h and the remainder as
// the perturbation. dt must be positive: to integrate backwards, integrate
// -H (the Strang map of -H is the exact inverse of the map of H).
DriftTrace integrate(const TrigPoly &H, const Eigen::VectorXd &theta0,
                     const Eigen::VectorXd &I0, double dt, double horizon,
                     const IntegrateOptions &opts = {});

struct ScalingRow {
  double epsilon = 0;
  double t_star = std::numeric_limits<double>::quiet_NaN();
  bool censored = false;
  bool aborted = false;
};

// Escape times across a decreasing epsilon list, with a log-log fit over the
// uncensored rows: slope near -1 is the fast-drift signature, censoring or a
// strongly super-polynomial fit indicates the stable regime.
struct ScalingTable {
  double delta = 0;
  double horizon = 0;
  double dt = 0;
  std::vector<ScalingRow> rows;
  int uncensored = 0;
  // Least-squares fit log t* = slope * log eps + intercept over uncensored
  // rows; NaN when fewer than two rows qualify.
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();

  std::string to_csv() const;
  std::string to_json() const;
};

struct ScalingOptions {
  double dt = 1e-2;
  int stride = 1;
  Scheme scheme = Scheme::strang_split;
  int jobs = 1;
};

// Substitutes each epsilon into H, integrates, and tabulates the escape
// times. epsilon_list must be positive and strictly decreasing; delta must
// be positive. Runs are independent and fan out over opts.jobs threads; the
// table does not depend on the thread count.
ScalingTable stability_time(const TrigPoly &H, const Eigen::VectorXd &theta0,
                            const Eigen::VectorXd &I0,
                            const std::vector<double> &epsilon_list, double delta,
                            double horizon, const ScalingOptions &opts = {});

struct WindowConstants {
  // A sample is inside the nearly-periodic window of its certificate when
  // |nabla h(I) - omega|_sup < c * (T^-1 Q^{-1/(n-1)}).
  double c = 1.0;
};

// One maximal run of consecutive samples whose approximants lie on the same
// resonance ray. Certificates pin omega to the input exactly on its leading
// component, so omega itself moves continuously along a drifting trajectory;
// what identifies the resonance is the primitive integer direction of
// period * omega.
struct VisitRecord {
  std::vector<Int> direction; // primitive, shared by every sample in the run
  PeriodicVector first_omega; // approximant at t_enter
  double t_enter = 0;
  double t_exit = 0;
  int samples = 0;
};

// Per-sample frequency diagnostics along a trace: the gradient of h at I(t),
// its best periodic approximation at the given quality, and whether the
// gradient sits inside the certificate's window. l_sup is the largest
// numerator sup-norm |T omega| seen along the trace.
struct ResonanceTrace {
  double quality = 0;
  double window_constant = 1.0;
  std::vector<Eigen::VectorXd> gradients;
  std::vector<ApproximationCertificate> certificates;
  std::vector<bool> in_window;
  std::vector<VisitRecord> visits;
  double l_sup = 0;

  int samples() const { return static_cast<int>(gradients.size()); }

  // Columns: t, omega, denominator, period, error, error_bound, in_window.
  std::string to_csv(const DriftTrace &trace) const;
};

// Runs dirichlet_approx on nabla h(I(t)) at every sample of the trace. h
// must be angle-free and match the trace dimension; the trace must be
// nonempty. Gradients must stay nonzero (the zero vector has no periodic
// approximation) or the underlying approximation rejects the sample.
ResonanceTrace resonance_trace(const DriftTrace &trace, const TrigPoly &h,
                               double quality, const WindowConstants &wc = {});

} // namespace nekholab
