#include "doctest.h"

#include "nekholab/steepness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace nekholab;

namespace {

// 1/2 |I|^2 on two actions.
TrigPoly elliptic2() {
  TrigPoly h = TrigPoly::action_monomial(2, {2, 0}, 0.5);
  h += TrigPoly::action_monomial(2, {0, 2}, 0.5);
  return h;
}

// I1^2 - I2^2, the classic non-steep quadratic.
TrigPoly saddle2() {
  TrigPoly h = TrigPoly::action_monomial(2, {2, 0}, 1.0);
  h += TrigPoly::action_monomial(2, {0, 2}, -1.0);
  return h;
}

// I1^2 - 2 I2^2: degenerate directions need q^2 = 2 p^2, impossible over Z.
TrigPoly irrational_saddle2() {
  TrigPoly h = TrigPoly::action_monomial(2, {2, 0}, 1.0);
  h += TrigPoly::action_monomial(2, {0, 2}, -2.0);
  return h;
}

std::vector<long> as_longs(const std::vector<Int> &v) {
  std::vector<long> out;
  for (const auto &x : v)
    out.push_back(x.get_si());
  return out;
}

// Returns a copy: callers often pass a freshly enumerated temporary vector.
SubspaceFrame frame_with_complement(const std::vector<SubspaceFrame> &frames,
                                    const std::vector<long> &gen) {
  for (const auto &f : frames)
    if (f.complement_generators.size() == 1 && as_longs(f.complement_generators[0]) == gen)
      return f;
  REQUIRE(false);
  return frames.front();
}

const SdmFrameRecord &record_with_complement(const SdmReport &report,
                                             const std::vector<long> &gen) {
  for (const auto &rec : report.frames)
    if (rec.frame.complement_generators.size() == 1 &&
        as_longs(rec.frame.complement_generators[0]) == gen)
      return rec;
  REQUIRE(false);
  return report.frames.front();
}

std::vector<Eigen::VectorXd> segment(const Eigen::VectorXd &from, const Eigen::VectorXd &to,
                                     int samples) {
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < samples; ++i) {
    double t = static_cast<double>(i) / (samples - 1);
    pts.push_back(from + t * (to - from));
  }
  return pts;
}

} // namespace

TEST_CASE("subspace enumeration counts and bounds") {
  REQUIRE(enumerate_subspaces(2, 1, 1).size() == 2);
  REQUIRE(enumerate_subspaces(2, 1, 2).size() == 4);
  REQUIRE(enumerate_subspaces(2, 1, 3).size() == 8);
  REQUIRE(enumerate_subspaces(2, 2, 1).size() == 1);
  REQUIRE(enumerate_subspaces(2, 2, 5).size() == 1);
  REQUIRE(enumerate_subspaces(3, 1, 1).size() == 3);
  REQUIRE(enumerate_subspaces(3, 2, 1).size() == 3);
  REQUIRE(enumerate_subspaces(3, 3, 1).size() == 1);

  // Minimal bound per subspace: the axes qualify already at L=1, the
  // diagonals first at L=2, the (1,2)-type complements first at L=3.
  std::vector<int> bounds;
  for (const auto &f : enumerate_subspaces(2, 1, 3))
    bounds.push_back(f.bound);
  REQUIRE(bounds == std::vector<int>{1, 1, 2, 2, 3, 3, 3, 3});

  // The crude cardinality estimate L^(n^2) holds from L = 2 on. At L = 1 it
  // cannot: the coordinate complements alone already number n choose n-k.
  for (int L = 2; L <= 3; ++L)
    for (int k = 1; k <= 2; ++k)
      REQUIRE(static_cast<double>(enumerate_subspaces(2, k, L).size()) <=
              std::pow(static_cast<double>(L), 4.0));
  REQUIRE(enumerate_subspaces(2, 1, 1).size() == 2); // exceeds 1^4

  REQUIRE_THROWS_AS(enumerate_subspaces(2, 0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(enumerate_subspaces(2, 3, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(enumerate_subspaces(2, 1, 0), std::invalid_argument);
}

TEST_CASE("frames carry orthonormal bases and valid generators") {
  for (int n = 2; n <= 3; ++n)
    for (int k = 1; k <= n; ++k)
      for (const auto &f : enumerate_subspaces(n, k, 2)) {
        REQUIRE(f.dimension == k);
        REQUIRE(f.ambient() == n);
        REQUIRE(static_cast<int>(f.complement_generators.size()) == n - k);
        REQUIRE(static_cast<int>(f.span_generators.size()) == k);
        for (const auto &g : f.complement_generators) {
          long l1 = 0;
          for (const auto &x : g)
            l1 += std::labs(x.get_si());
          REQUIRE(l1 <= f.bound);
        }
        // complement generators annihilate the span generators exactly
        for (const auto &g : f.complement_generators)
          for (const auto &s : f.span_generators) {
            Int dot = 0;
            for (int i = 0; i < n; ++i)
              dot += g[i] * s[i];
            REQUIRE(dot == 0);
          }
        Eigen::MatrixXd ee = f.basis_e.transpose() * f.basis_e;
        Eigen::MatrixXd ff = f.basis_f.transpose() * f.basis_f;
        Eigen::MatrixXd ef = f.basis_e.transpose() * f.basis_f;
        REQUIRE((ee - Eigen::MatrixXd::Identity(k, k)).norm() <= 1e-12);
        REQUIRE((ff - Eigen::MatrixXd::Identity(n - k, n - k)).norm() <= 1e-12);
        REQUIRE(ef.norm() <= 1e-12);
        // basis_f really spans the complement generators
        for (const auto &g : f.complement_generators) {
          Eigen::VectorXd gv(n);
          for (int i = 0; i < n; ++i)
            gv[i] = g[i].get_d();
          REQUIRE((f.basis_f * (f.basis_f.transpose() * gv) - gv).norm() <= 1e-10 * gv.norm());
        }
        REQUIRE(f.describe().find("L=") != std::string::npos);
      }
}

TEST_CASE("enumeration deduplicates generator sets spanning the same subspace") {
  // Test-local brute force: saturate every full-rank pair from the l1-ball
  // and count distinct lattices; the pair {(1,1,0),(1,-1,0)} must land on the
  // same subspace as {(1,0,0),(0,1,0)}.
  int n = 3, L = 2;
  std::vector<std::vector<Int>> pool;
  for (int a = -L; a <= L; ++a)
    for (int b = -L; b <= L; ++b)
      for (int c = -L; c <= L; ++c) {
        long l1 = std::labs(a) + std::labs(b) + std::labs(c);
        if (l1 < 1 || l1 > L)
          continue;
        std::vector<long> v{a, b, c};
        int first = 0;
        while (v[first] == 0)
          ++first;
        if (v[first] < 0)
          continue;
        Int g = gcd(gcd(Int(a), Int(b)), Int(c));
        if (g != 1)
          continue;
        pool.push_back({Int(a), Int(b), Int(c)});
      }
  std::set<std::string> keys;
  for (size_t i = 0; i < pool.size(); ++i)
    for (size_t j = i + 1; j < pool.size(); ++j) {
      auto kernel = integer_kernel_basis({pool[i], pool[j]}, n);
      if (kernel.size() != 1)
        continue;
      auto sat = integer_kernel_basis(kernel, n);
      std::string key;
      for (const auto &v : sat)
        for (const auto &x : v)
          key += x.get_str() + ",";
      keys.insert(key);
    }
  REQUIRE(enumerate_subspaces(n, 1, L).size() == keys.size());
}

TEST_CASE("c3 majorant pins exact values for quadratics and cubics") {
  REQUIRE(c3_majorant(elliptic2(), 1.0) == 2.0);
  REQUIRE(c3_majorant(saddle2(), 1.0) == 4.0);
  TrigPoly cubic = TrigPoly::action_monomial(2, {3, 0}, 1.0);
  REQUIRE(c3_majorant(cubic, 1.0) == 6.0);
  REQUIRE(c3_majorant(cubic, 0.5) == 6.0); // third derivative does not decay
  REQUIRE_THROWS_AS(c3_majorant(TrigPoly::cosine(2, {1, 0}, 1.0), 1.0), std::domain_error);
}

TEST_CASE("sdm check accepts the elliptic quadratic") {
  SdmReport report = sdm_check(elliptic2(), 0.5, 11.0, 3);
  REQUIRE(report.passed);
  REQUIRE(report.c3_bound == 2.0);
  for (const auto &rec : report.frames) {
    REQUIRE(!rec.violated);
    REQUIRE(rec.verdict == "no violation found at resolution");
    // identity Hessian in every orthonormal frame
    REQUIRE(rec.sigma_min == doctest::Approx(1.0).epsilon(1e-12));
  }
  // The margin is 1 wherever the gradient is small, so the supremum of
  // passing gammas is 1, reached on the L=1 frames.
  REQUIRE(report.gamma_star == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sdm check refutes the saddle on the diagonal at every gamma") {
  TrigPoly h = saddle2();
  for (double gamma : {1e-6, 0.5, 100.0}) {
    SdmReport report = sdm_check(h, gamma, 2.0, 2);
    REQUIRE(!report.passed);
    REQUIRE(report.gamma_star == 0.0);
    const auto &diag = record_with_complement(report, {1, -1});
    REQUIRE(diag.violated);
    REQUIRE(diag.verdict == "refuted");
    REQUIRE(diag.margin == 0.0); // exact: the whole diagonal is degenerate
    REQUIRE(diag.sigma_min == 0.0);
    const auto &anti = record_with_complement(report, {1, 1});
    REQUIRE(anti.violated);
    // the axis frames see a Hessian of size 2 and survive small gammas
    const auto &axis = record_with_complement(report, {0, 1});
    REQUIRE(axis.sigma_min == doctest::Approx(2.0));
    if (gamma < 2.0)
      REQUIRE(!axis.violated);
  }
}

TEST_CASE("sdm margins match the closed form for the irrational saddle") {
  // Hessian diag(2,-4) restricted to the line spanned by (p,q) has the single
  // eigenvalue 2(p^2 - 2 q^2)/(p^2 + q^2); the gradient vanishes at the
  // sampled origin, so each line frame's margin is exactly that magnitude.
  SdmReport report = sdm_check(irrational_saddle2(), 0.5, 2.0, 3);
  REQUIRE(report.passed);
  double min_line_margin = std::numeric_limits<double>::infinity();
  for (const auto &rec : report.frames) {
    if (rec.frame.dimension != 1)
      continue;
    double p = rec.frame.span_generators[0][0].get_d();
    double q = rec.frame.span_generators[0][1].get_d();
    double expected = 2.0 * std::abs(p * p - 2.0 * q * q) / (p * p + q * q);
    REQUIRE(rec.margin == doctest::Approx(expected).epsilon(1e-10));
    min_line_margin = std::min(min_line_margin, rec.margin);
  }
  REQUIRE(min_line_margin == doctest::Approx(0.8).epsilon(1e-10));
  // and the full-space frame is controlled by the smaller Hessian eigenvalue
  bool saw_full = false;
  for (const auto &rec : report.frames)
    if (rec.frame.dimension == 2) {
      saw_full = true;
      REQUIRE(rec.margin == doctest::Approx(2.0).epsilon(1e-12));
    }
  REQUIRE(saw_full);
}

TEST_CASE("sdm verdicts are monotone in gamma and in the bound") {
  TrigPoly h = irrational_saddle2();
  // pass set is downward closed in gamma
  std::vector<double> gammas{0.1, 0.5, 1.9, 2.0, 2.5};
  std::vector<bool> passed;
  for (double g : gammas)
    passed.push_back(sdm_check(h, g, 2.0, 3).passed);
  for (size_t i = 0; i + 1 < gammas.size(); ++i)
    if (!passed[i])
      REQUIRE(!passed[i + 1]);
  REQUIRE(passed.front());
  REQUIRE(!passed.back()); // the full-space frame has margin 2 <= 2.5
  // refutation at a small bound persists at larger bounds
  REQUIRE(!sdm_check(h, 4.0, 2.0, 1).passed);
  REQUIRE(!sdm_check(h, 4.0, 2.0, 3).passed);
  REQUIRE(sdm_check(h, 1.0, 2.0, 3).passed);
  REQUIRE(sdm_check(h, 1.0, 2.0, 1).passed);
}

TEST_CASE("sdm check validates its inputs") {
  REQUIRE_THROWS_AS(sdm_check(TrigPoly::cosine(2, {1, 0}, 1.0), 0.5, 2.0, 2),
                    std::domain_error);
  REQUIRE_THROWS_AS(sdm_check(elliptic2(), 0.0, 2.0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(sdm_check(elliptic2(), 0.5, -1.0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(sdm_check(elliptic2(), 0.5, 2.0, 0), std::invalid_argument);
  SdmOptions opts;
  opts.grid_res = 4;
  REQUIRE_THROWS_AS(sdm_check(elliptic2(), 0.5, 2.0, 2, opts), std::invalid_argument);
}

TEST_CASE("sdm report serializes to json and csv") {
  SdmReport report = sdm_check(saddle2(), 0.5, 2.0, 2);
  auto j = report.to_json();
  REQUIRE(j["passed"] == false);
  REQUIRE(j["frames"].size() == report.frames.size());
  REQUIRE(j["options"]["grid_res"] == 32);
  std::string csv = report.to_csv();
  REQUIRE(csv.rfind("dimension,bound,span,complement", 0) == 0);
  REQUIRE(csv.find("refuted") != std::string::npos);
  REQUIRE(csv.find("(1,-1)") != std::string::npos);
}

TEST_CASE("steep witness finds the first crossing on a radial curve") {
  TrigPoly h = elliptic2();
  auto frames = enumerate_subspaces(2, 1, 1);
  const SubspaceFrame &axis = frame_with_complement(frames, {0, 1}); // span e1
  double r = 0.02;
  int samples = 1000;
  Eigen::VectorXd from = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd to(2);
  to << r, 0.0;
  CurveWitness w = steep_witness(h, axis, 0.5, 2.0, segment(from, to, samples), r);
  REQUIRE(w.found);
  // gradient of h is I itself, so the projected gradient r*t first exceeds
  // r^2/2 just above t = r/2
  REQUIRE(w.t_star > r / 2.0);
  REQUIRE(w.t_star <= r / 2.0 + 2.0 / (samples - 1));
  REQUIRE(w.projected_gradient > 0.5 * r * r);
  REQUIRE(w.projected_gradient == doctest::Approx(r * w.t_star).epsilon(1e-12));
  REQUIRE((w.curve[w.index] - w.curve.front()).norm() <= r);
}

TEST_CASE("steep witness returns t star zero when the start already qualifies") {
  TrigPoly h = elliptic2();
  const SubspaceFrame &axis = frame_with_complement(enumerate_subspaces(2, 1, 1), {0, 1});
  double r = 0.02;
  Eigen::VectorXd from(2), to(2);
  from << 0.5, 0.0;
  to << 0.5 + r, 0.0;
  CurveWitness w = steep_witness(h, axis, 0.5, 2.0, segment(from, to, 100), r);
  REQUIRE(w.found);
  REQUIRE(w.index == 0);
  REQUIRE(w.t_star == 0.0);
  REQUIRE(w.projected_gradient == doctest::Approx(0.5));
}

TEST_CASE("steep witness reports the saddle diagonal as a counterexample") {
  TrigPoly h = saddle2();
  const SubspaceFrame &diag = frame_with_complement(enumerate_subspaces(2, 1, 2), {1, -1});
  double r = 0.01;
  Eigen::VectorXd from = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd to = r * diag.basis_e.col(0);
  CurveWitness w = steep_witness(h, diag, 0.5, 2.0, segment(from, to, 200), r);
  REQUIRE(!w.found);
  REQUIRE(w.note.find("largest seen 0") != std::string::npos);
}

TEST_CASE("steep witness enforces the separation precondition") {
  TrigPoly h = saddle2();
  const SubspaceFrame &diag = frame_with_complement(enumerate_subspaces(2, 1, 2), {1, -1});
  // gamma L^-tau / (2M) = 0.5 * 2^-2 / 8 = 0.015625
  double r = 0.1;
  Eigen::VectorXd from = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd to = r * diag.basis_e.col(0);
  try {
    steep_witness(h, diag, 0.5, 2.0, segment(from, to, 50), r);
    REQUIRE(false);
  } catch (const std::domain_error &e) {
    REQUIRE(std::string(e.what()).find("0.015625") != std::string::npos);
  }
}

TEST_CASE("steep witness rejects malformed curves") {
  TrigPoly h = elliptic2();
  const SubspaceFrame &axis = frame_with_complement(enumerate_subspaces(2, 1, 1), {0, 1});
  double r = 0.02;
  Eigen::VectorXd from = Eigen::VectorXd::Zero(2);
  // endpoint separation right, but the curve drifts out of span{e1}
  Eigen::VectorXd skew(2);
  skew << r / std::sqrt(2.0), r / std::sqrt(2.0);
  REQUIRE_THROWS_AS(steep_witness(h, axis, 0.5, 2.0, segment(from, skew, 50), r),
                    std::invalid_argument);
  // leaves the unit ball
  Eigen::VectorXd far_from(2), far_to(2);
  far_from << 1.5, 0.0;
  far_to << 1.5 + r, 0.0;
  REQUIRE_THROWS_AS(steep_witness(h, axis, 0.5, 2.0, segment(far_from, far_to, 50), r),
                    std::invalid_argument);
  // endpoint separation mismatch
  Eigen::VectorXd near(2);
  near << r / 2.0, 0.0;
  REQUIRE_THROWS_AS(steep_witness(h, axis, 0.5, 2.0, segment(from, near, 50), r),
                    std::invalid_argument);
  // single sample
  REQUIRE_THROWS_AS(steep_witness(h, axis, 0.5, 2.0, {from}, r), std::invalid_argument);
}

TEST_CASE("prevalence of the elliptic quadratic never degrades") {
  PrevalenceReport report =
      prevalence_mc(elliptic2(), {0.1, 0.5, 0.9}, 11.0, 2, 1000, 42);
  for (const auto &row : report.rows) {
    REQUIRE(row.bad_count == 0);
    REQUIRE(row.bad_fraction == 0.0);
  }
  REQUIRE(report.fitted_c == 0.0);
}

TEST_CASE("prevalence is deterministic and independent of the job count") {
  TrigPoly h = saddle2();
  PrevalenceReport a = prevalence_mc(h, {0.1, 0.2}, 11.0, 2, 1000, 7);
  PrevalenceReport b = prevalence_mc(h, {0.1, 0.2}, 11.0, 2, 1000, 7);
  PrevalenceReport c = prevalence_mc(h, {0.1, 0.2}, 11.0, 2, 1000, 7, {}, 3);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].bad_count == b.rows[i].bad_count);
    REQUIRE(a.rows[i].bad_count == c.rows[i].bad_count);
  }
}

TEST_CASE("prevalence bad fraction grows with gamma and halving obeys the square root law") {
  TrigPoly h = saddle2();
  long samples = 4000;
  PrevalenceReport report =
      prevalence_mc(h, {0.05, 0.1, 0.2, 0.4}, 11.0, 2, samples, 11, {}, 2);
  for (size_t i = 0; i + 1 < report.rows.size(); ++i)
    REQUIRE(report.rows[i].bad_count <= report.rows[i + 1].bad_count);
  // fitted constant reproduces every row by construction, and stays finite
  for (const auto &row : report.rows)
    REQUIRE(row.bad_fraction <= report.fitted_c * std::sqrt(row.gamma) + 1e-15);

  double p_half = report.rows[1].bad_fraction; // gamma = 0.1
  double p_full = report.rows[2].bad_fraction; // gamma = 0.2
  REQUIRE(p_full > 0.05); // the shifted saddle is refuted often enough to measure
  double ratio = p_half / p_full;
  double sigma = ratio * std::sqrt((1.0 - p_half) / (samples * p_half) +
                                   (1.0 - p_full) / (samples * p_full));
  REQUIRE(ratio <= 1.0 / std::sqrt(2.0) + 3.0 * sigma);
}

TEST_CASE("prevalence is consistent across seeds within binomial error") {
  TrigPoly h = saddle2();
  long samples = 2000;
  double gamma = 0.2;
  PrevalenceReport a = prevalence_mc(h, {gamma}, 11.0, 2, samples, 1, {}, 2);
  PrevalenceReport b = prevalence_mc(h, {gamma}, 11.0, 2, samples, 2, {}, 2);
  double pa = a.rows[0].bad_fraction, pb = b.rows[0].bad_fraction;
  double pooled = 0.5 * (pa + pb);
  REQUIRE(pooled > 0.0);
  double sigma = std::sqrt(pooled * (1.0 - pooled) * 2.0 / samples);
  REQUIRE(std::abs(pa - pb) <= 3.0 * sigma);
}

TEST_CASE("prevalence validates its inputs") {
  REQUIRE_THROWS_AS(prevalence_mc(elliptic2(), {0.5}, 10.0, 2, 1000, 0),
                    std::invalid_argument); // tau must exceed 2(n^2+1) = 10
  REQUIRE_THROWS_AS(prevalence_mc(elliptic2(), {0.5}, 11.0, 2, 999, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(prevalence_mc(elliptic2(), {}, 11.0, 2, 1000, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(prevalence_mc(elliptic2(), {-0.5}, 11.0, 2, 1000, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(prevalence_mc(TrigPoly::cosine(2, {1, 0}, 1.0), {0.5}, 11.0, 2, 1000, 0),
                    std::domain_error);
  REQUIRE_THROWS_AS(prevalence_mc(elliptic2(), {0.5}, 11.0, 2, 1000, 0, {}, 0),
                    std::invalid_argument);
}

TEST_CASE("prevalence report serializes to json and csv") {
  PrevalenceReport report = prevalence_mc(saddle2(), {0.1, 0.2}, 11.0, 2, 1000, 3, {}, 2);
  auto j = report.to_json();
  REQUIRE(j["samples"] == 1000);
  REQUIRE(j["rows"].size() == 2);
  std::string csv = report.to_csv();
  REQUIRE(csv.rfind("gamma,bad_count,bad_fraction", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);
}
