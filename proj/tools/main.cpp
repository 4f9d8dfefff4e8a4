// nekholab: a laboratory for long-time stability of near-integrable
// Hamiltonian systems. Subcommands wrap the library modules:
//
//   approx     simultaneous rational approximation certificate for a vector
//   nf         resonant normal-form stages with size bookkeeping
//   sdm        sampled nondegeneracy check, or a prevalence survey of shifts
//   drift      one trajectory with drift and resonance diagnostics
//   scaling    escape-time scaling across an epsilon list
//   exponents  stability exponent plan and smallness-condition ledger
//   rerun      replay a recorded run from its manifest.json
//
// Artifact-writing commands create <root>/<stamp>-<command>/ (root from
// --out, $NEKHOLAB_RUNS, or ./runs) holding manifest.json plus CSV/JSON
// outputs; rerun replays the manifest and rewrites byte-identical CSVs.
// Exit codes: 0 success, 1 a checked condition was refuted (SDM violation,
// rejected normal-form stage, failing ledger, aborted integration), 2 usage
// or input errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <clocale>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "nekholab/diophantine.hpp"
#include "nekholab/dynamics.hpp"
#include "nekholab/exponents.hpp"
#include "nekholab/normal_form.hpp"
#include "nekholab/runkit.hpp"
#include "nekholab/steepness.hpp"
#include "nekholab/trig_hamiltonian.hpp"

namespace {

using namespace nekholab;

constexpr int kExitOk = 0;
constexpr int kExitRefuted = 1;
constexpr int kExitUsage = 2;

int dispatch(std::vector<std::string> args); // forward, rerun recurses into it

TrigPoly load_hamiltonian(const std::string &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error &e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return parse_hamiltonian(j);
}

Eigen::VectorXd to_eigen(const std::vector<double> &v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

// "--theta" style lists default to the origin when left empty.
Eigen::VectorXd parse_point(const std::string &text, int n, const char *flag) {
  if (text.empty())
    return Eigen::VectorXd::Zero(n);
  std::vector<double> v = parse_double_list(text);
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument(std::string(flag) + " needs " + std::to_string(n) +
                                " components");
  return to_eigen(v);
}

Scheme parse_scheme(const std::string &name) {
  if (name == "strang")
    return Scheme::strang_split;
  if (name == "euler")
    return Scheme::symplectic_euler;
  throw std::invalid_argument("unknown scheme '" + name + "' (strang or euler)");
}

ConstantTable parse_constants(const std::vector<std::string> &entries) {
  ConstantTable table;
  for (const std::string &entry : entries) {
    auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--const wants name=value, got '" + entry + "'");
    std::size_t used = 0;
    double value = std::stod(entry.substr(eq + 1), &used);
    if (used != entry.size() - eq - 1)
      throw std::invalid_argument("--const wants name=value, got '" + entry + "'");
    table.rows[entry.substr(0, eq)] = value;
  }
  return table;
}

nlohmann::json int_strings(const std::vector<Int> &v) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Int &x : v)
    arr.push_back(x.get_str());
  return arr;
}

void write_manifest(const RunDir &dir, Manifest m) {
  m.created_utc = utc_timestamp();
  dir.write("manifest.json", m.to_json().dump(2) + "\n");
}

// approx: certificate straight to stdout, nothing persisted.

struct ApproxArgs {
  std::string v;
  double quality = 0;
  unsigned bits = 53;
};

int run_approx(const ApproxArgs &a) {
  std::vector<double> v = parse_double_list(a.v);
  ApproximationCertificate cert = dirichlet_approx(v, a.quality, a.bits);

  nlohmann::json out;
  out["input"] = nlohmann::json::array();
  for (const Rat &x : cert.input)
    out["input"].push_back(rat_text(x));
  out["omega"] = nlohmann::json::array();
  for (const Rat &w : cert.result.omega())
    out["omega"].push_back(rat_text(w));
  out["numerator"] = int_strings(cert.result.numerator);
  out["period"] = rat_text(cert.result.period);
  out["denominator"] = cert.denominator.get_str();
  out["error"] = rat_text(cert.error);
  out["error_decimal"] = cert.error.get_d();
  out["error_bound"] = cert.error_bound();
  out["error_within_bound"] = cert.error_within_bound();
  out["period_within_bounds"] = cert.period_within_bounds();
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

// nf: stages around one expansion point, radius and width shrinking by 2/3
// per stage, frequencies from the Dirichlet step at the requested qualities.

struct NfArgs {
  std::string h;
  double eps = 1.0;
  std::string center;
  double radius = 1e-3;
  double width = 0.1;
  std::string quality = "10";
  int stages = 1;
  int steps = 1;
  int depth = 4;
  double weight = 0;
  std::vector<std::string> consts;
  std::string root;
};

int run_nf(const NfArgs &a) {
  TrigPoly H = load_hamiltonian(a.h);
  const int n = H.vars();
  Eigen::VectorXd center = parse_point(a.center, n, "--center");
  if (a.stages < 1)
    throw std::invalid_argument("--stages must be at least 1");

  std::vector<double> qualities = parse_double_list(a.quality);
  if (qualities.size() == 1)
    qualities.assign(static_cast<size_t>(a.stages), qualities[0]);
  if (static_cast<int>(qualities.size()) != a.stages)
    throw std::invalid_argument("--Q wants one quality, or one per stage");

  // Frequencies come from the integrable gradient at the expansion point.
  TrigPoly h0 = H.substitute_epsilon(a.eps).fourier_zero_part();
  std::vector<double> center_std(center.data(), center.data() + n);
  std::vector<double> grad(static_cast<size_t>(n));
  const std::vector<double> theta_zero(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    grad[static_cast<size_t>(i)] = h0.dI(i).eval(theta_zero, center_std);

  std::vector<PeriodicVector> omegas;
  std::vector<AnalyticDomain> domains;
  for (int j = 0; j < a.stages; ++j) {
    omegas.push_back(dirichlet_approx(grad, qualities[static_cast<size_t>(j)]).result);
    const double shrink = std::pow(2.0 / 3.0, j);
    domains.push_back(AnalyticDomain{center_std, a.radius * shrink, a.width * shrink});
  }

  NormalFormOptions opts;
  opts.steps_per_stage = a.steps;
  opts.depth = a.depth;
  opts.weight = a.weight;
  opts.table = parse_constants(a.consts);
  NormalFormResult result = normal_form(H, omegas, domains, opts, a.eps);

  std::string csv =
      "stage,step,entry_radius,entry_width,exit_radius,exit_width,previous_norm,"
      "resonant_norm,chi_norm,chi_vf_norm,tail_ratio,tail_bound,remainder_norm,"
      "contraction,sharp_condition,sharp_ok\n";
  nlohmann::json stages = nlohmann::json::array();
  bool any_rejected = false;
  for (const StageReport &stage : result.stages) {
    for (const StepRecord &rec : stage.steps) {
      csv += std::to_string(rec.stage) + "," + std::to_string(rec.step) + "," +
             format_double17(rec.entry_radius) + "," + format_double17(rec.entry_width) +
             "," + format_double17(rec.exit_radius) + "," +
             format_double17(rec.exit_width) + "," + format_double17(rec.previous_norm) +
             "," + format_double17(rec.resonant_norm) + "," +
             format_double17(rec.chi_norm) + "," + format_double17(rec.chi_vf_norm) +
             "," + format_double17(rec.tail_ratio) + "," +
             format_double17(rec.tail_bound) + "," +
             format_double17(rec.remainder_norm) + "," +
             format_double17(rec.contraction) + "," +
             format_double17(rec.sharp_condition) + "," + (rec.sharp_ok ? "1" : "0") +
             "\n";
    }
    nlohmann::json s;
    s["omega_numerator"] = int_strings(stage.omega.numerator);
    s["omega_period"] = rat_text(stage.omega.period);
    s["anchor_mismatch"] = stage.anchor_mismatch;
    s["nested_in_previous"] = stage.nested_in_previous;
    s["rejected"] = stage.rejected;
    s["rejected_ratio"] = stage.rejected_ratio;
    s["emptied"] = stage.emptied;
    s["steps"] = stage.steps.size();
    if (!stage.steps.empty())
      s["final_contraction"] = stage.steps.back().contraction;
    stages.push_back(std::move(s));
    any_rejected = any_rejected || stage.rejected;
  }

  RunDir dir = make_run_dir("nf", a.root);
  Manifest m;
  m.command = "nf";
  m.add("h", a.h);
  m.add("eps", a.eps);
  m.add("center", a.center);
  m.add("radius", a.radius);
  m.add("width", a.width);
  m.add("Q", a.quality);
  m.add("stages", a.stages);
  m.add("steps", a.steps);
  m.add("depth", a.depth);
  m.add("weight", a.weight);
  for (const std::string &entry : a.consts)
    m.add("const", entry);
  write_manifest(dir, std::move(m));
  dir.write("steps.csv", csv);
  dir.write("stages.json", stages.dump(2) + "\n");

  for (const StageReport &stage : result.stages) {
    std::cout << "stage with omega period " << rat_text(stage.omega.period) << ": ";
    if (stage.rejected)
      std::cout << "rejected (tail ratio " << format_double17(stage.rejected_ratio)
                << ")";
    else if (stage.steps.empty())
      std::cout << "no steps";
    else
      std::cout << stage.steps.size() << " steps, last contraction "
                << format_double17(stage.steps.back().contraction);
    std::cout << "\n";
  }
  std::cout << "artifacts: " << dir.path << "\n";
  return any_rejected ? kExitRefuted : kExitOk;
}

// sdm: one gamma checks the alternative; --samples switches to the Monte
// Carlo prevalence survey over linear shifts.

struct SdmArgs {
  std::string h;
  std::string gamma;
  double tau = 0;
  int lmax = 0;
  int grid = 32;
  int random_points = 10000;
  std::uint64_t seed = 0;
  double radius = 1.0;
  long samples = 0;
  int jobs = 1;
  std::string root;
};

int run_sdm(const SdmArgs &a) {
  TrigPoly h = load_hamiltonian(a.h);
  std::vector<double> gammas = parse_double_list(a.gamma);
  SdmOptions opts;
  opts.grid_res = a.grid;
  opts.random_points = a.random_points;
  opts.seed = a.seed;
  opts.ball_radius = a.radius;

  RunDir dir = make_run_dir("sdm", a.root);
  Manifest m;
  m.command = "sdm";
  m.seed = a.seed;
  m.add("h", a.h);
  m.add("gamma", a.gamma);
  m.add("tau", a.tau);
  m.add("Lmax", a.lmax);
  m.add("grid", a.grid);
  m.add("random", a.random_points);
  m.add("seed", a.seed);
  m.add("radius", a.radius);
  m.add("samples", a.samples);
  m.add("jobs", a.jobs);
  write_manifest(dir, std::move(m));

  if (a.samples > 0) {
    PrevalenceReport report = prevalence_mc(h, gammas, a.tau, a.lmax, a.samples,
                                            a.seed, opts, a.jobs);
    dir.write("prevalence.csv", report.to_csv());
    dir.write("prevalence.json", report.to_json().dump(2) + "\n");
    std::cout << "prevalence over " << report.samples
              << " shifts: fitted C = " << format_double17(report.fitted_c) << "\n";
    std::cout << "artifacts: " << dir.path << "\n";
    return kExitOk;
  }

  if (gammas.size() != 1)
    throw std::invalid_argument(
        "sdm check wants a single --gamma; pass --samples for a survey");
  SdmReport report = sdm_check(h, gammas[0], a.tau, a.lmax, opts);
  dir.write("frames.csv", report.to_csv());
  dir.write("report.json", report.to_json().dump(2) + "\n");
  std::cout << "artifacts: " << dir.path << "\n";

  if (!report.passed) {
    const SdmFrameRecord *worst = nullptr;
    for (const SdmFrameRecord &rec : report.frames)
      if (rec.violated && (!worst || rec.margin < worst->margin))
        worst = &rec;
    std::cout << "refuted at gamma = " << format_double17(report.gamma) << ": "
              << worst->frame.describe() << ", margin "
              << format_double17(worst->margin) << "\n";
    return kExitRefuted;
  }
  std::cout << "no violation found at this resolution; gamma_star = "
            << format_double17(report.gamma_star) << "\n";
  return kExitOk;
}

// drift: one trajectory, optional escape radius and resonance diagnostics.

struct DriftArgs {
  std::string h;
  double eps = 1.0;
  std::string theta;
  std::string I;
  double dt = 1e-2;
  double horizon = 100.0;
  double delta = 0;
  int stride = 1;
  std::string scheme = "strang";
  double quality = 0;
  double window = 1.0;
  std::string root;
};

int run_drift(const DriftArgs &a) {
  TrigPoly H = load_hamiltonian(a.h);
  const int n = H.vars();
  Eigen::VectorXd theta0 = parse_point(a.theta, n, "--theta");
  Eigen::VectorXd I0 = parse_point(a.I, n, "--I");

  IntegrateOptions opts;
  opts.scheme = parse_scheme(a.scheme);
  opts.stride = a.stride;
  if (a.delta > 0)
    opts.delta = a.delta;

  DriftTrace trace =
      integrate(H.substitute_epsilon(a.eps), theta0, I0, a.dt, a.horizon, opts);

  RunDir dir = make_run_dir("drift", a.root);
  Manifest m;
  m.command = "drift";
  m.add("h", a.h);
  m.add("eps", a.eps);
  m.add("theta", a.theta);
  m.add("I", a.I);
  m.add("dt", a.dt);
  m.add("horizon", a.horizon);
  m.add("delta", a.delta);
  m.add("stride", a.stride);
  m.add("scheme", a.scheme);
  m.add("Q", a.quality);
  m.add("window", a.window);
  write_manifest(dir, std::move(m));
  dir.write("trace.csv", trace.to_csv());

  nlohmann::json summary;
  summary["samples"] = trace.samples();
  summary["drift"] = trace.drift.empty() ? 0.0 : trace.drift.back();
  summary["max_energy_error"] = trace.max_energy_error();
  summary["escaped"] = trace.escaped;
  summary["censored"] = trace.censored;
  summary["aborted"] = trace.aborted;
  if (std::isfinite(trace.escape_time))
    summary["escape_time"] = trace.escape_time;

  if (a.quality > 1) {
    TrigPoly h0 = H.substitute_epsilon(a.eps).fourier_zero_part();
    ResonanceTrace res = resonance_trace(trace, h0, a.quality, WindowConstants{a.window});
    dir.write("resonance.csv", res.to_csv(trace));
    summary["l_sup"] = res.l_sup;
    summary["visits"] = nlohmann::json::array();
    for (const VisitRecord &visit : res.visits) {
      nlohmann::json v;
      v["direction"] = int_strings(visit.direction);
      v["t_enter"] = visit.t_enter;
      v["t_exit"] = visit.t_exit;
      v["samples"] = visit.samples;
      summary["visits"].push_back(std::move(v));
    }
  }
  dir.write("summary.json", summary.dump(2) + "\n");

  if (trace.aborted)
    std::cout << "integration aborted (non-finite state or unsettled substep)\n";
  else if (trace.escaped)
    std::cout << "escaped delta = " << format_double17(a.delta) << " at t = "
              << format_double17(trace.escape_time) << "\n";
  else
    std::cout << "drift " << format_double17(summary["drift"].get<double>())
              << " over horizon " << format_double17(a.horizon)
              << (trace.censored ? " (censored)" : "") << "\n";
  std::cout << "artifacts: " << dir.path << "\n";
  return trace.aborted ? kExitRefuted : kExitOk;
}

// scaling: escape times across an epsilon list plus the log-log fit.

struct ScalingArgs {
  std::string h;
  std::string eps;
  double delta = 0;
  std::string theta;
  std::string I;
  double dt = 1e-2;
  double horizon = 500.0;
  int stride = 1;
  std::string scheme = "strang";
  int jobs = 1;
  std::string root;
};

int run_scaling(const ScalingArgs &a) {
  TrigPoly H = load_hamiltonian(a.h);
  const int n = H.vars();
  Eigen::VectorXd theta0 = parse_point(a.theta, n, "--theta");
  Eigen::VectorXd I0 = parse_point(a.I, n, "--I");
  std::vector<double> eps_list = parse_double_list(a.eps);

  ScalingOptions opts;
  opts.dt = a.dt;
  opts.stride = a.stride;
  opts.scheme = parse_scheme(a.scheme);
  opts.jobs = a.jobs;
  ScalingTable table = stability_time(H, theta0, I0, eps_list, a.delta, a.horizon, opts);

  RunDir dir = make_run_dir("scaling", a.root);
  Manifest m;
  m.command = "scaling";
  m.add("h", a.h);
  m.add("eps", a.eps);
  m.add("delta", a.delta);
  m.add("theta", a.theta);
  m.add("I", a.I);
  m.add("dt", a.dt);
  m.add("horizon", a.horizon);
  m.add("stride", a.stride);
  m.add("scheme", a.scheme);
  m.add("jobs", a.jobs);
  write_manifest(dir, std::move(m));
  dir.write("scaling.csv", table.to_csv());
  dir.write("scaling.json", table.to_json() + "\n");

  std::cout << "uncensored rows: " << table.uncensored << "/" << table.rows.size()
            << ", log-log slope = " << format_double17(table.slope) << "\n";
  std::cout << "artifacts: " << dir.path << "\n";
  return kExitOk;
}

// exponents: plan plus condition ledger; a failing ledger is the refuted
// verdict, reported through the exit code like the sdm check.

struct ExponentsArgs {
  int n = 2;
  std::string tau = "2";
  double gamma = 1.0;
  double R = 1.0;
  double r = 1.0;
  double s = 1.0;
  double M = 1.0;
  double eps = 1e-6;
  std::vector<std::string> consts;
  std::string root;
};

int run_exponents(const ExponentsArgs &a) {
  LedgerParams params;
  params.n = a.n;
  params.tau = parse_rat(a.tau);
  params.gamma = a.gamma;
  params.R = a.R;
  params.r = a.r;
  params.s = a.s;
  params.M = a.M;
  params.epsilon = a.eps;
  params.constants = parse_constants(a.consts);
  ConditionLedger ledger = condition_ledger(params);

  std::cout << ledger.plan.to_text() << "\n" << ledger.to_text();

  RunDir dir = make_run_dir("exponents", a.root);
  Manifest m;
  m.command = "exponents";
  m.add("n", a.n);
  m.add("tau", a.tau);
  m.add("gamma", a.gamma);
  m.add("R", a.R);
  m.add("r", a.r);
  m.add("s", a.s);
  m.add("M", a.M);
  m.add("eps", a.eps);
  for (const std::string &entry : a.consts)
    m.add("const", entry);
  write_manifest(dir, std::move(m));
  dir.write("plan.json", ledger.plan.to_json() + "\n");
  dir.write("ledger.json", ledger.to_json() + "\n");
  dir.write("ledger.csv", ledger.to_csv());
  std::cout << "artifacts: " << dir.path << "\n";
  return ledger.passes ? kExitOk : kExitRefuted;
}

// rerun: rebuild the argument list from a manifest and dispatch again.

struct RerunArgs {
  std::string manifest;
  std::string root;
};

int run_rerun(const RerunArgs &a) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(a.manifest));
  } catch (const nlohmann::json::parse_error &e) {
    throw std::invalid_argument(a.manifest + ": " + e.what());
  }
  Manifest m = Manifest::from_json(j);
  std::vector<std::string> args = m.replay_args();
  if (args.empty() || args.front() == "rerun")
    throw std::invalid_argument("manifest does not name a replayable command");
  if (!a.root.empty()) {
    args.push_back("--out");
    args.push_back(a.root);
  }
  return dispatch(std::move(args));
}

void add_out_flag(CLI::App *cmd, std::string &root) {
  cmd->add_option("--out", root,
                  "output root for the run directory (default $NEKHOLAB_RUNS or runs)");
}

// The stock help flag is -h,--help, which would collide with the --h
// hamiltonian flag, so every command keeps only the long form.
CLI::App *add_command(CLI::App &app, const std::string &name,
                      const std::string &description) {
  CLI::App *cmd = app.add_subcommand(name, description);
  cmd->set_help_flag("--help", "print this help and exit");
  return cmd;
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"laboratory for long-time stability of near-integrable "
               "Hamiltonian systems"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", kLibraryVersion);
  app.set_config("--config", "",
                 "flat key=value config file with one [section] per command");

  int rc = kExitOk;

  ApproxArgs ax;
  CLI::App *approx = add_command(app,
      "approx", "periodic approximation certificate for a frequency vector");
  approx->add_option("--v", ax.v, "comma-separated components, at least two")
      ->required();
  approx->add_option("--Q", ax.quality, "approximation quality, must exceed 1")
      ->required();
  approx->add_option("--bits", ax.bits, "dyadic rationalization bits (default 53)");
  approx->callback([&] { rc = run_approx(ax); });

  NfArgs nf;
  CLI::App *nf_cmd = add_command(app,
      "nf", "resonant normal-form stages with size bookkeeping");
  nf_cmd->add_option("--h", nf.h, "hamiltonian spec file")->required();
  nf_cmd->add_option("--eps", nf.eps, "perturbation size substituted for grades");
  nf_cmd->add_option("--center", nf.center, "expansion point (default origin)");
  nf_cmd->add_option("--radius", nf.radius, "action radius of the first stage");
  nf_cmd->add_option("--width", nf.width, "angle width of the first stage");
  nf_cmd->add_option("--Q", nf.quality, "Dirichlet quality, one value or one per stage");
  nf_cmd->add_option("--stages", nf.stages, "number of averaging stages");
  nf_cmd->add_option("--steps", nf.steps, "averaging steps per stage");
  nf_cmd->add_option("--depth", nf.depth, "Lie series depth");
  nf_cmd->add_option("--weight", nf.weight, "vector-field weight (0 = width/radius)");
  nf_cmd->add_option("--const", nf.consts, "constant table entry name=value")
      ->take_all();
  add_out_flag(nf_cmd, nf.root);
  nf_cmd->callback([&] { rc = run_nf(nf); });

  SdmArgs sdm;
  CLI::App *sdm_cmd = add_command(app,
      "sdm", "sampled nondegeneracy check or prevalence survey");
  sdm_cmd->add_option("--h", sdm.h, "hamiltonian spec file (angle-free)")->required();
  sdm_cmd->add_option("--gamma", sdm.gamma, "gamma, or a comma list for surveys")
      ->required();
  sdm_cmd->add_option("--tau", sdm.tau, "steepness exponent")->required();
  sdm_cmd->add_option("--Lmax", sdm.lmax, "largest complement l1-norm")->required();
  sdm_cmd->add_option("--grid", sdm.grid, "per-axis lattice resolution (min 8)");
  sdm_cmd->add_option("--random", sdm.random_points, "shared random sample count");
  sdm_cmd->add_option("--seed", sdm.seed, "RNG seed recorded in the manifest");
  sdm_cmd->add_option("--radius", sdm.radius, "action ball radius");
  sdm_cmd->add_option("--samples", sdm.samples,
                      "shift count; > 0 runs the prevalence survey");
  sdm_cmd->add_option("--jobs", sdm.jobs, "worker threads for the survey");
  add_out_flag(sdm_cmd, sdm.root);
  sdm_cmd->callback([&] { rc = run_sdm(sdm); });

  DriftArgs drift;
  CLI::App *drift_cmd = add_command(app,
      "drift", "integrate one trajectory and trace drift diagnostics");
  drift_cmd->add_option("--h", drift.h, "hamiltonian spec file")->required();
  drift_cmd->add_option("--eps", drift.eps, "perturbation size");
  drift_cmd->add_option("--theta", drift.theta, "initial angles (default origin)");
  drift_cmd->add_option("--I", drift.I, "initial actions")->required();
  drift_cmd->add_option("--dt", drift.dt, "step size");
  drift_cmd->add_option("--horizon", drift.horizon, "integration horizon");
  drift_cmd->add_option("--delta", drift.delta, "escape radius (0 = none)");
  drift_cmd->add_option("--stride", drift.stride, "samples every this many steps");
  drift_cmd->add_option("--scheme", drift.scheme, "strang or euler");
  drift_cmd->add_option("--Q", drift.quality,
                        "resonance-trace quality (> 1 enables the trace)");
  drift_cmd->add_option("--window", drift.window, "resonance window constant");
  add_out_flag(drift_cmd, drift.root);
  drift_cmd->callback([&] { rc = run_drift(drift); });

  ScalingArgs scaling;
  CLI::App *scaling_cmd = add_command(app,
      "scaling", "escape-time scaling across an epsilon list");
  scaling_cmd->add_option("--h", scaling.h, "hamiltonian spec file")->required();
  scaling_cmd->add_option("--eps", scaling.eps, "strictly decreasing epsilon list")
      ->required();
  scaling_cmd->add_option("--delta", scaling.delta, "escape radius")->required();
  scaling_cmd->add_option("--theta", scaling.theta, "initial angles (default origin)");
  scaling_cmd->add_option("--I", scaling.I, "initial actions")->required();
  scaling_cmd->add_option("--dt", scaling.dt, "step size");
  scaling_cmd->add_option("--horizon", scaling.horizon, "horizon per run");
  scaling_cmd->add_option("--stride", scaling.stride, "samples every this many steps");
  scaling_cmd->add_option("--scheme", scaling.scheme, "strang or euler");
  scaling_cmd->add_option("--jobs", scaling.jobs, "worker threads");
  add_out_flag(scaling_cmd, scaling.root);
  scaling_cmd->callback([&] { rc = run_scaling(scaling); });

  ExponentsArgs exponents;
  CLI::App *exp_cmd = add_command(app,
      "exponents", "stability exponent plan and condition ledger");
  exp_cmd->add_option("--n", exponents.n, "degrees of freedom (>= 2)")->required();
  exp_cmd->add_option("--tau", exponents.tau, "steepness exponent, rational like 5/2")
      ->required();
  exp_cmd->add_option("--gamma", exponents.gamma, "steepness constant");
  exp_cmd->add_option("--R", exponents.R, "domain radius");
  exp_cmd->add_option("--r", exponents.r, "action analyticity width");
  exp_cmd->add_option("--s", exponents.s, "angle analyticity width");
  exp_cmd->add_option("--M", exponents.M, "perturbation gradient bound");
  exp_cmd->add_option("--eps", exponents.eps, "epsilon the ledger is evaluated at");
  exp_cmd->add_option("--const", exponents.consts, "constant table entry name=value")
      ->take_all();
  add_out_flag(exp_cmd, exponents.root);
  exp_cmd->callback([&] { rc = run_exponents(exponents); });

  RerunArgs rerun;
  CLI::App *rerun_cmd =
      add_command(app, "rerun", "replay a recorded run from its manifest");
  rerun_cmd->add_option("manifest", rerun.manifest, "path to manifest.json")
      ->required();
  rerun_cmd->add_option("--out", rerun.root, "output root for the replayed run");
  rerun_cmd->callback([&] { rc = run_rerun(rerun); });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  return rc;
}

} // namespace

int main(int argc, char **argv) {
  std::setlocale(LC_ALL, "C");
  try {
    return dispatch(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
