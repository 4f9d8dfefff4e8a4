#include "nekholab/steepness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

namespace nekholab {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// splitmix64: the state advances by a fixed odd constant, the output is a
// strong mix of it, so even numerically adjacent states give unrelated words.
std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t &state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

// RNG state for one sample index: mixing the index into the seed first makes
// the streams order-independent, so parallel chunks agree with a serial run.
std::uint64_t stream_state(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t t = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  return splitmix64(t);
}

// First and second action derivatives of an angle-free polynomial, evaluated
// through eval with an all-zero angle argument.
struct Jet {
  int n = 0;
  std::vector<TrigPoly> grad;
  std::vector<TrigPoly> hess; // n*n, row major
  std::vector<double> no_angles;

  explicit Jet(const TrigPoly &h) : n(h.vars()), no_angles(h.vars(), 0.0) {
    grad.reserve(n);
    for (int i = 0; i < n; ++i)
      grad.push_back(h.dI(i));
    hess.reserve(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        hess.push_back(grad[i].dI(j));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd &point) const {
    std::vector<double> a(point.data(), point.data() + n);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i)
      g[i] = grad[i].eval(no_angles, a);
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd &point) const {
    std::vector<double> a(point.data(), point.data() + n);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = hess[static_cast<size_t>(i) * n + j].eval(no_angles, a);
    return m;
  }
};

double smallest_abs_eigenvalue(const Eigen::MatrixXd &sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    best = std::min(best, std::abs(es.eigenvalues()[i]));
  return best;
}

void validate_options(const char *who, const SdmOptions &opts) {
  if (opts.grid_res < 8)
    throw std::invalid_argument(std::string(who) + ": grid_res must be >= 8");
  if (opts.random_points < 0)
    throw std::invalid_argument(std::string(who) + ": random_points must be >= 0");
  if (!(opts.ball_radius > 0))
    throw std::invalid_argument(std::string(who) + ": ball_radius must be positive");
}

void require_angle_free(const char *who, const TrigPoly &h) {
  if (h.vars() < 1)
    throw std::invalid_argument(std::string(who) + ": Hamiltonian has no actions");
  if (h.has_angles())
    throw std::domain_error(std::string(who) + ": Hamiltonian depends on angles");
}

std::vector<double> axis_ticks(int grid_res, double radius) {
  std::vector<double> t(grid_res);
  for (int i = 0; i < grid_res; ++i)
    t[i] = -radius + 2.0 * radius * i / (grid_res - 1);
  return t;
}

// Points of one frame's sampling plan, minus the shared random ones: the
// clipped lattice in (alpha, beta) coordinates, the 2n axis lines, and the
// origin. Coordinates map back to actions through the orthogonal [E F].
std::vector<Eigen::VectorXd> frame_points(const SubspaceFrame &frame, const SdmOptions &opts) {
  int n = frame.ambient();
  Eigen::MatrixXd rot(n, n);
  rot.leftCols(frame.dimension) = frame.basis_e;
  rot.rightCols(n - frame.dimension) = frame.basis_f;

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> ticks = axis_ticks(opts.grid_res, opts.ball_radius);
  std::vector<int> idx(n, 0);
  Eigen::VectorXd x(n);
  double r2 = opts.ball_radius * opts.ball_radius;
  for (;;) {
    for (int i = 0; i < n; ++i)
      x[i] = ticks[idx[i]];
    if (x.squaredNorm() <= r2)
      pts.push_back(rot * x);
    int i = 0;
    while (i < n && ++idx[i] == opts.grid_res) {
      idx[i] = 0;
      ++i;
    }
    if (i == n)
      break;
  }
  if (opts.include_axes) {
    for (int c = 0; c < n; ++c)
      for (double t : ticks)
        pts.push_back(t * rot.col(c));
    pts.push_back(Eigen::VectorXd::Zero(n));
  }
  return pts;
}

// Uniform points of the ball |I| <= radius, by rejection from the cube. The
// stream depends only on the seed, never on the frames, so every caller with
// the same options sees the same points.
std::vector<Eigen::VectorXd> random_ball_points(int n, const SdmOptions &opts) {
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(opts.random_points);
  std::uint64_t state = stream_state(opts.seed, 0x626c6c70ULL); // tag "bllp"
  double r2 = opts.ball_radius * opts.ball_radius;
  Eigen::VectorXd x(n);
  while (static_cast<int>(pts.size()) < opts.random_points) {
    for (int i = 0; i < n; ++i)
      x[i] = (2.0 * uniform01(state) - 1.0) * opts.ball_radius;
    if (x.squaredNorm() <= r2)
      pts.push_back(x);
  }
  return pts;
}

std::vector<SubspaceFrame> all_frames(int n, int l_max) {
  std::vector<SubspaceFrame> frames;
  for (int k = 1; k <= n; ++k) {
    auto part = enumerate_subspaces(n, k, l_max);
    frames.insert(frames.end(), part.begin(), part.end());
  }
  return frames;
}

long l1_norm(const std::vector<long> &v) {
  long s = 0;
  for (long x : v)
    s += std::labs(x);
  return s;
}

std::string lattice_key(const std::vector<std::vector<Int>> &basis) {
  std::string key;
  for (const auto &v : basis) {
    for (const auto &x : v) {
      key += x.get_str();
      key += ',';
    }
    key += ';';
  }
  return key;
}

// Orthonormal basis of the span of the integer vectors, by modified
// Gram-Schmidt with one reorthogonalization pass. Gram-Schmidt rather than a
// Householder QR because plain scaling preserves the exact symmetries of the
// integer input: the direction of (1,1) gets two bit-identical components,
// which keeps exactly degenerate margins at exactly zero downstream. Each
// column is flipped so its largest entry is positive.
Eigen::MatrixXd orthonormal_columns(const std::vector<std::vector<Int>> &vecs, int n) {
  int m = static_cast<int>(vecs.size());
  Eigen::MatrixXd q(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      q(i, j) = vecs[j][i].get_d();
  for (int j = 0; j < m; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i)
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j) /= q.col(j).norm();
    int lead = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(q(i, j)) > std::abs(q(lead, j)))
        lead = i;
    if (q(lead, j) < 0)
      q.col(j) = -q.col(j);
  }
  return q;
}

std::string generator_text(const std::vector<std::vector<Int>> &gens) {
  std::string out = "{";
  for (size_t i = 0; i < gens.size(); ++i) {
    if (i)
      out += ',';
    out += '(';
    for (size_t j = 0; j < gens[i].size(); ++j) {
      if (j)
        out += ',';
      out += gens[i][j].get_str();
    }
    out += ')';
  }
  out += '}';
  return out;
}

nlohmann::json generators_json(const std::vector<std::vector<Int>> &gens) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &v : gens) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto &x : v)
      row.push_back(static_cast<long>(x.get_si()));
    out.push_back(row);
  }
  return out;
}

} // namespace

std::string SubspaceFrame::describe() const {
  return "span" + generator_text(span_generators) + " perp" +
         generator_text(complement_generators) + " L=" + std::to_string(bound);
}

std::vector<SubspaceFrame> enumerate_subspaces(int n, int k, int L) {
  if (n < 1)
    throw std::invalid_argument("enumerate_subspaces: dimension must be positive");
  if (k < 1 || k > n)
    throw std::invalid_argument("enumerate_subspaces: subspace dimension out of range");
  if (L < 1)
    throw std::invalid_argument("enumerate_subspaces: bound must be >= 1");

  int m = n - k;
  if (m == 0) {
    // The whole space: empty complement, spanned by no vectors at all, so the
    // minimal bound is 1. The identity is its canonical orthonormal basis.
    SubspaceFrame frame;
    frame.dimension = n;
    frame.bound = 1;
    for (int i = 0; i < n; ++i) {
      std::vector<Int> e(n, 0);
      e[i] = 1;
      frame.span_generators.push_back(std::move(e));
    }
    frame.basis_e = Eigen::MatrixXd::Identity(n, n);
    frame.basis_f = Eigen::MatrixXd(n, 0);
    return {frame};
  }

  // Primitive vectors of the l1-ball, one per sign pair, sorted by l1-norm
  // then entries so subset scan order is reproducible.
  std::vector<std::vector<long>> pool;
  {
    std::vector<long> v(n, -L);
    for (;;) {
      long l1 = l1_norm(v);
      if (l1 >= 1 && l1 <= L) {
        int first = 0;
        while (v[first] == 0)
          ++first;
        if (v[first] > 0) {
          Int g = 0;
          for (long x : v)
            g = gcd(g, Int(x));
          if (g == 1)
            pool.push_back(v);
        }
      }
      int i = 0;
      while (i < n && ++v[i] > L) {
        v[i] = -L;
        ++i;
      }
      if (i == n)
        break;
    }
    std::sort(pool.begin(), pool.end(), [](const auto &a, const auto &b) {
      long la = l1_norm(a), lb = l1_norm(b);
      return la != lb ? la < lb : a < b;
    });
  }

  struct Entry {
    long set_l = 0;
    std::vector<std::vector<Int>> gens;
    std::vector<std::vector<Int>> kernel;
  };
  std::map<std::string, Entry> seen; // keyed by the saturated complement lattice

  int pool_size = static_cast<int>(pool.size());
  if (pool_size < m)
    return {};
  std::vector<int> pick(m);
  for (int i = 0; i < m; ++i)
    pick[i] = i;
  for (;;) {
    std::vector<std::vector<Int>> gens;
    long set_l = 0;
    for (int i : pick) {
      std::vector<Int> g(pool[i].begin(), pool[i].end());
      set_l = std::max(set_l, l1_norm(pool[i]));
      gens.push_back(std::move(g));
    }
    auto kernel = integer_kernel_basis(gens, n);
    if (static_cast<int>(kernel.size()) == k) {
      // Full-rank set. Two sets span the same subspace exactly when their
      // saturated lattices coincide, and the saturation is the integer kernel
      // of the kernel, already in Hermite normal form.
      auto saturated = integer_kernel_basis(kernel, n);
      std::string key = lattice_key(saturated);
      auto it = seen.find(key);
      if (it == seen.end() || set_l < it->second.set_l)
        seen[key] = Entry{set_l, std::move(gens), std::move(kernel)};
    }
    // next m-combination in index order
    int i = m - 1;
    while (i >= 0 && pick[i] == pool_size - m + i)
      --i;
    if (i < 0)
      break;
    ++pick[i];
    for (int j = i + 1; j < m; ++j)
      pick[j] = pick[j - 1] + 1;
  }

  std::vector<SubspaceFrame> frames;
  frames.reserve(seen.size());
  for (auto &[key, entry] : seen) {
    (void)key;
    SubspaceFrame frame;
    frame.dimension = k;
    frame.bound = static_cast<int>(entry.set_l);
    frame.complement_generators = entry.gens;
    frame.span_generators = entry.kernel;
    frame.basis_e = orthonormal_columns(entry.kernel, n);
    frame.basis_f = orthonormal_columns(entry.gens, n);
    frames.push_back(std::move(frame));
  }
  std::sort(frames.begin(), frames.end(), [](const SubspaceFrame &a, const SubspaceFrame &b) {
    if (a.bound != b.bound)
      return a.bound < b.bound;
    return a.complement_generators < b.complement_generators;
  });
  return frames;
}

double c3_majorant(const TrigPoly &h, double radius) {
  require_angle_free("c3_majorant", h);
  if (!(radius > 0))
    throw std::invalid_argument("c3_majorant: radius must be positive");
  double best = 0;
  for (int d = 0; d <= 3; ++d) {
    double sum = 0;
    for (const auto &[key, c] : h.terms()) {
      long p = 0;
      for (unsigned a : key.alpha)
        p += a;
      if (p < d)
        continue;
      double falling = 1;
      for (int i = 0; i < d; ++i)
        falling *= static_cast<double>(p - i);
      sum += std::abs(c) * falling * std::pow(radius, static_cast<double>(p - d));
    }
    best = std::max(best, sum);
  }
  return best;
}

SdmReport sdm_check(const TrigPoly &h, double gamma, double tau, int l_max,
                    const SdmOptions &opts) {
  require_angle_free("sdm_check", h);
  if (!(gamma > 0))
    throw std::invalid_argument("sdm_check: gamma must be positive");
  if (!(tau >= 0))
    throw std::invalid_argument("sdm_check: tau must be >= 0");
  if (l_max < 1)
    throw std::invalid_argument("sdm_check: l_max must be >= 1");
  validate_options("sdm_check", opts);

  int n = h.vars();
  Jet jet(h);
  auto shared = random_ball_points(n, opts);

  SdmReport report;
  report.gamma = gamma;
  report.tau = tau;
  report.l_max = l_max;
  report.options = opts;
  report.c3_bound = c3_majorant(h, opts.ball_radius);
  report.passed = true;
  report.gamma_star = std::numeric_limits<double>::infinity();

  for (const SubspaceFrame &frame : all_frames(n, l_max)) {
    SdmFrameRecord rec;
    rec.frame = frame;
    rec.margin = std::numeric_limits<double>::infinity();
    auto visit = [&](const Eigen::VectorXd &point) {
      double gn = (frame.basis_e.transpose() * jet.gradient(point)).norm();
      double sigma = smallest_abs_eigenvalue(frame.basis_e.transpose() * jet.hessian(point) *
                                             frame.basis_e);
      double margin = std::max(gn, sigma);
      if (margin < rec.margin) {
        rec.margin = margin;
        rec.worst_point = point;
        rec.gradient_norm = gn;
        rec.sigma_min = sigma;
      }
    };
    for (const auto &p : frame_points(frame, opts))
      visit(p);
    for (const auto &p : shared)
      visit(p);
    double scale = std::pow(static_cast<double>(frame.bound), -tau);
    rec.gamma_star = rec.margin / scale;
    rec.violated = rec.margin <= gamma * scale;
    rec.verdict = rec.violated ? "refuted" : "no violation found at resolution";
    report.passed = report.passed && !rec.violated;
    report.gamma_star = std::min(report.gamma_star, rec.gamma_star);
    report.frames.push_back(std::move(rec));
  }
  return report;
}

nlohmann::json SdmReport::to_json() const {
  nlohmann::json out;
  out["gamma"] = gamma;
  out["tau"] = tau;
  out["l_max"] = l_max;
  out["c3_bound"] = c3_bound;
  out["passed"] = passed;
  out["gamma_star"] = gamma_star;
  out["options"] = {{"grid_res", options.grid_res},
                    {"random_points", options.random_points},
                    {"seed", options.seed},
                    {"include_axes", options.include_axes},
                    {"ball_radius", options.ball_radius}};
  out["frames"] = nlohmann::json::array();
  for (const auto &rec : frames) {
    nlohmann::json f;
    f["dimension"] = rec.frame.dimension;
    f["bound"] = rec.frame.bound;
    f["span"] = generators_json(rec.frame.span_generators);
    f["complement"] = generators_json(rec.frame.complement_generators);
    f["worst_point"] = std::vector<double>(rec.worst_point.data(),
                                           rec.worst_point.data() + rec.worst_point.size());
    f["gradient_norm"] = rec.gradient_norm;
    f["sigma_min"] = rec.sigma_min;
    f["margin"] = rec.margin;
    f["gamma_star"] = rec.gamma_star;
    f["violated"] = rec.violated;
    f["verdict"] = rec.verdict;
    out["frames"].push_back(std::move(f));
  }
  return out;
}

std::string SdmReport::to_csv() const {
  std::string out = "dimension,bound,span,complement,gradient_norm,sigma_min,margin,gamma_star,"
                    "verdict\n";
  for (const auto &rec : frames) {
    out += std::to_string(rec.frame.dimension) + ',' + std::to_string(rec.frame.bound) + ',';
    out += '"' + generator_text(rec.frame.span_generators) + "\",";
    out += '"' + generator_text(rec.frame.complement_generators) + "\",";
    out += fmt17(rec.gradient_norm) + ',' + fmt17(rec.sigma_min) + ',' + fmt17(rec.margin) + ',' +
           fmt17(rec.gamma_star) + ',' + rec.verdict + '\n';
  }
  return out;
}

CurveWitness steep_witness(const TrigPoly &h, const SubspaceFrame &frame, double gamma,
                           double tau, const std::vector<Eigen::VectorXd> &curve, double r,
                           double ball_radius) {
  require_angle_free("steep_witness", h);
  int n = h.vars();
  if (frame.ambient() != n)
    throw std::invalid_argument("steep_witness: frame dimension mismatch");
  if (!(gamma > 0) || !(tau >= 0))
    throw std::invalid_argument("steep_witness: need gamma > 0 and tau >= 0");
  if (!(ball_radius > 0))
    throw std::invalid_argument("steep_witness: ball_radius must be positive");
  if (!(r > 0))
    throw std::invalid_argument("steep_witness: separation must be positive");
  if (curve.size() < 2)
    throw std::invalid_argument("steep_witness: need at least two curve samples");
  for (const auto &p : curve) {
    if (p.size() != n)
      throw std::invalid_argument("steep_witness: curve point dimension mismatch");
    if (p.norm() > ball_radius + 1e-9)
      throw std::invalid_argument("steep_witness: curve leaves the ball");
    // The curve must stay in one affine translate of the subspace, i.e. its
    // component along the complement must be constant.
    if ((frame.basis_f.transpose() * (p - curve.front())).norm() > 1e-8)
      throw std::invalid_argument("steep_witness: curve leaves the subspace");
  }
  double sep = (curve.back() - curve.front()).norm();
  if (std::abs(sep - r) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("steep_witness: endpoint separation " + fmt17(sep) +
                                " does not match r = " + fmt17(r));

  double m_bound = c3_majorant(h, ball_radius);
  double r_bound = 1.0;
  if (m_bound > 0)
    r_bound = std::min(1.0, gamma * std::pow(static_cast<double>(frame.bound), -tau) /
                                (2.0 * m_bound));
  if (!(r < r_bound))
    throw std::domain_error("steep_witness: separation r = " + fmt17(r) +
                            " must stay below min(1, gamma L^-tau / (2M)) = " + fmt17(r_bound));

  Jet jet(h);
  CurveWitness witness;
  witness.curve = curve;
  witness.r = r;
  double admissible = r + 1e-12 * std::max(1.0, r);
  double largest = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    if ((curve[i] - curve.front()).norm() > admissible)
      break; // later samples cannot satisfy the stay-within-r condition
    double pg = (frame.basis_e.transpose() * jet.gradient(curve[i])).norm();
    largest = std::max(largest, pg);
    if (pg > 0.5 * r * r) {
      witness.found = true;
      witness.index = static_cast<int>(i);
      witness.t_star = static_cast<double>(i) / (curve.size() - 1);
      witness.projected_gradient = pg;
      return witness;
    }
  }
  witness.note = "no admissible sample has projected gradient above r^2/2 = " +
                 fmt17(0.5 * r * r) + "; largest seen " + fmt17(largest);
  return witness;
}

PrevalenceReport prevalence_mc(const TrigPoly &h, const std::vector<double> &gamma_list,
                               double tau, int l_max, long samples, std::uint64_t seed,
                               const SdmOptions &opts, int jobs) {
  require_angle_free("prevalence_mc", h);
  int n = h.vars();
  double tau_floor = 2.0 * (static_cast<double>(n) * n + 1);
  if (!(tau > tau_floor))
    throw std::invalid_argument("prevalence_mc: needs tau > 2(n^2+1) = " + fmt17(tau_floor));
  if (samples < 1000)
    throw std::invalid_argument("prevalence_mc: needs at least 1000 samples");
  if (gamma_list.empty())
    throw std::invalid_argument("prevalence_mc: empty gamma list");
  for (double g : gamma_list)
    if (!(g > 0))
      throw std::invalid_argument("prevalence_mc: gammas must be positive");
  if (l_max < 1)
    throw std::invalid_argument("prevalence_mc: l_max must be >= 1");
  if (jobs < 1)
    throw std::invalid_argument("prevalence_mc: jobs must be >= 1");
  validate_options("prevalence_mc", opts);

  double gamma_max = *std::max_element(gamma_list.begin(), gamma_list.end());

  // The shift moves the restricted gradient by E^T xi and nothing else, so
  // everything that depends on the point alone is computed once. Points whose
  // Hessian margin already clears the largest tested threshold can never be
  // part of a violation and are dropped up front.
  struct FramePre {
    int k = 0;
    double scale = 0; // bound^-tau
    Eigen::MatrixXd e_t;
    std::vector<double> grad;   // per kept point, k entries each
    std::vector<double> sigma2; // per kept point
  };
  Jet jet(h);
  auto shared = random_ball_points(n, opts);
  std::vector<FramePre> pres;
  for (const SubspaceFrame &frame : all_frames(n, l_max)) {
    FramePre pre;
    pre.k = frame.dimension;
    pre.scale = std::pow(static_cast<double>(frame.bound), -tau);
    pre.e_t = frame.basis_e.transpose();
    double cutoff = gamma_max * pre.scale;
    double cutoff2 = cutoff * cutoff;
    auto visit = [&](const Eigen::VectorXd &point) {
      double sigma = smallest_abs_eigenvalue(pre.e_t * jet.hessian(point) * frame.basis_e);
      if (sigma * sigma > cutoff2)
        return;
      Eigen::VectorXd g = pre.e_t * jet.gradient(point);
      for (int j = 0; j < pre.k; ++j)
        pre.grad.push_back(g[j]);
      pre.sigma2.push_back(sigma * sigma);
    };
    for (const auto &p : frame_points(frame, opts))
      visit(p);
    for (const auto &p : shared)
      visit(p);
    if (!pre.sigma2.empty())
      pres.push_back(std::move(pre));
  }

  size_t rows = gamma_list.size();
  std::vector<double> thr2(rows * pres.size());
  for (size_t r = 0; r < rows; ++r)
    for (size_t f = 0; f < pres.size(); ++f) {
      double t = gamma_list[r] * pres[f].scale;
      thr2[r * pres.size() + f] = t * t;
    }

  std::vector<long> counts(rows, 0);
  if (!pres.empty()) {
    auto sweep = [&](long lo, long hi, std::vector<long> &local) {
      Eigen::VectorXd xi(n);
      std::vector<double> min2(pres.size());
      for (long s = lo; s < hi; ++s) {
        std::uint64_t state = stream_state(seed, static_cast<std::uint64_t>(s));
        for (int i = 0; i < n; ++i)
          xi[i] = 2.0 * uniform01(state) - 1.0;
        for (size_t f = 0; f < pres.size(); ++f) {
          const FramePre &pre = pres[f];
          Eigen::VectorXd u = pre.e_t * xi;
          double best = std::numeric_limits<double>::infinity();
          const double *g = pre.grad.data();
          for (size_t p = 0; p < pre.sigma2.size(); ++p, g += pre.k) {
            double d2 = 0;
            for (int j = 0; j < pre.k; ++j) {
              double d = g[j] - u[j];
              d2 += d * d;
            }
            best = std::min(best, std::max(d2, pre.sigma2[p]));
          }
          min2[f] = best;
        }
        for (size_t r = 0; r < rows; ++r)
          for (size_t f = 0; f < pres.size(); ++f)
            if (min2[f] <= thr2[r * pres.size() + f]) {
              ++local[r];
              break;
            }
      }
    };
    int workers = static_cast<int>(std::min<long>(jobs, samples));
    if (workers <= 1) {
      sweep(0, samples, counts);
    } else {
      std::vector<std::vector<long>> partial(workers, std::vector<long>(rows, 0));
      std::vector<std::thread> threads;
      long chunk = (samples + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        long lo = w * chunk;
        long hi = std::min(samples, lo + chunk);
        threads.emplace_back([&, lo, hi, w] { sweep(lo, hi, partial[w]); });
      }
      for (auto &t : threads)
        t.join();
      for (int w = 0; w < workers; ++w)
        for (size_t r = 0; r < rows; ++r)
          counts[r] += partial[w][r];
    }
  }

  PrevalenceReport report;
  report.tau = tau;
  report.l_max = l_max;
  report.samples = samples;
  report.seed = seed;
  for (size_t r = 0; r < rows; ++r) {
    PrevalenceRow row;
    row.gamma = gamma_list[r];
    row.bad_count = counts[r];
    row.bad_fraction = static_cast<double>(counts[r]) / static_cast<double>(samples);
    report.fitted_c = std::max(report.fitted_c, row.bad_fraction / std::sqrt(row.gamma));
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json PrevalenceReport::to_json() const {
  nlohmann::json out;
  out["tau"] = tau;
  out["l_max"] = l_max;
  out["samples"] = samples;
  out["seed"] = seed;
  out["fitted_c"] = fitted_c;
  out["rows"] = nlohmann::json::array();
  for (const auto &row : rows)
    out["rows"].push_back({{"gamma", row.gamma},
                           {"bad_count", row.bad_count},
                           {"bad_fraction", row.bad_fraction}});
  return out;
}

std::string PrevalenceReport::to_csv() const {
  std::string out = "gamma,bad_count,bad_fraction\n";
  for (const auto &row : rows)
    out += fmt17(row.gamma) + ',' + std::to_string(row.bad_count) + ',' +
           fmt17(row.bad_fraction) + '\n';
  return out;
}

} // namespace nekholab
