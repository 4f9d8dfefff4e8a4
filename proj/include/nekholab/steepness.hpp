// Rational-complement subspace frames and sampled checks of the simultaneous
// Diophantine Morse alternative for integrable Hamiltonians: wherever the
// gradient of h restricted to such a subspace stays below gamma * L^-tau, the
// restricted Hessian must act with margin above gamma * L^-tau. The condition
// quantifies over a continuum, so sampling can only refute it or report that
// no violation was found at the chosen resolution; it never proves it.
//
// Also here: witness search along curves for the quantitative steepness
// consequence of that alternative (the projected gradient must exceed r^2/2
// before the curve strays farther than r from its start), and Monte Carlo
// estimates of how rare refuted linear shifts h - xi . I are.
#pragma once

#include "nekholab/diophantine.hpp"
#include "nekholab/trig_hamiltonian.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace nekholab {

// A k-dimensional subspace Lambda of R^n whose orthogonal complement is
// spanned by integer vectors of l1-norm at most `bound`, together with
// orthonormal bases of both factors. `bound` is minimal: no generating set of
// the complement from the enumeration radius does better.
struct SubspaceFrame {
  int dimension = 0;                                   // k
  int bound = 0;                                       // L
  std::vector<std::vector<Int>> complement_generators; // n-k vectors, |.|_1 <= L
  std::vector<std::vector<Int>> span_generators;       // integer basis of Lambda
  Eigen::MatrixXd basis_e; // n x k, orthonormal columns spanning Lambda
  Eigen::MatrixXd basis_f; // n x (n-k), orthonormal columns spanning Lambda^perp

  int ambient() const { return static_cast<int>(basis_e.rows()); }
  // "span{(1,1)} perp{(1,-1)} L=2" with integer generator lists.
  std::string describe() const;
};

// One frame per distinct k-dimensional subspace whose complement lattice has
// a generating set of l1-norm <= L, canonicalized by the Hermite normal form
// of the saturated complement lattice. Generators kept are the first minimal
// set in the scan order (vectors sorted by l1-norm then entries, subsets in
// index order), so the output is deterministic. k = n yields the single frame
// with trivial complement and the identity basis. Cost grows like the number
// of (n-k)-subsets of the primitive l1-ball, which is fine for small n.
std::vector<SubspaceFrame> enumerate_subspaces(int n, int k, int L);

// Upper bound for the C^3 norm of an angle-free h on the ball |I| <= radius:
// max over derivative orders 0..3 of sum_terms |c| p!/(p-k)! radius^(p-k).
// Overestimates only, which is the safe side for every use below.
// Throws std::domain_error when h has angular modes.
double c3_majorant(const TrigPoly &h, double radius);

// Sampling plan for sdm_check and prevalence_mc. Points per frame: a
// grid_res^n lattice over the cube in (alpha, beta) coordinates clipped to
// the ball, plus axis lines through the origin of the frame (these catch
// degeneracies that sit exactly on coordinate subspaces), plus shared
// uniformly random ball points. The random stream depends only on the seed.
struct SdmOptions {
  int grid_res = 32;        // per-axis lattice resolution, at least 8
  int random_points = 10000;
  std::uint64_t seed = 0;
  bool include_axes = true;
  double ball_radius = 1.0; // radius of the action ball B
};

// Worst sampled point of one frame. margin = max(gradient_norm, sigma_min)
// there; the frame is refuted at gamma iff margin <= gamma * bound^-tau.
// gamma_star scales the margin back: the frame survives exactly the gammas
// below it, so the bisection limit is available in closed form.
struct SdmFrameRecord {
  SubspaceFrame frame;
  Eigen::VectorXd worst_point; // action coordinates
  double gradient_norm = 0;    // |E^T grad h| at the worst point
  double sigma_min = 0;        // smallest |eigenvalue| of E^T Hess h E there
  double margin = 0;
  double gamma_star = 0;       // margin / bound^-tau
  bool violated = false;
  std::string verdict;         // "refuted" or "no violation found at resolution"
};

struct SdmReport {
  double gamma = 0;
  double tau = 0;
  int l_max = 0;
  SdmOptions options;
  double c3_bound = 0; // cached majorant M for |h|_C3 on B
  std::vector<SdmFrameRecord> frames;
  bool passed = false;
  double gamma_star = 0; // min over frames, 0 when some frame is exactly degenerate

  nlohmann::json to_json() const;
  std::string to_csv() const; // one row per frame
};

// Samples the alternative for every subspace with bound <= l_max and every
// dimension 1..n at the points described by opts. h must be angle-free
// (std::domain_error otherwise); gamma > 0, tau >= 0, l_max >= 1 and
// opts.grid_res >= 8 are caller errors (std::invalid_argument).
SdmReport sdm_check(const TrigPoly &h, double gamma, double tau, int l_max,
                    const SdmOptions &opts = {});

// Search result along a sampled curve in frame's subspace. The witness index
// is the first sample whose projected gradient exceeds r^2/2 while the curve
// has not yet strayed farther than r from its start; both properties hold as
// literal numeric facts about the returned sample.
struct CurveWitness {
  std::vector<Eigen::VectorXd> curve;
  double r = 0;
  bool found = false;
  int index = -1;
  double t_star = 0;            // index / (samples - 1)
  double projected_gradient = 0; // |E^T grad h| at the witness
  std::string note;              // counterexample detail when nothing was found
};

// Scans the curve in order. Preconditions: the curve lies in the frame's
// subspace and inside the ball, its endpoints are r apart, and r is small
// enough for the curvature argument to apply: r < min(1, gamma * L^-tau /
// (2 M)) with M = c3_majorant(h, ball_radius). Violating the r bound is a
// std::domain_error quoting the numeric bound; malformed curves are
// std::invalid_argument.
CurveWitness steep_witness(const TrigPoly &h, const SubspaceFrame &frame,
                           double gamma, double tau,
                           const std::vector<Eigen::VectorXd> &curve, double r,
                           double ball_radius = 1.0);

struct PrevalenceRow {
  double gamma = 0;
  long bad_count = 0;
  double bad_fraction = 0;
};

struct PrevalenceReport {
  double tau = 0;
  int l_max = 0;
  long samples = 0;
  std::uint64_t seed = 0;
  std::vector<PrevalenceRow> rows; // one per requested gamma, input order
  double fitted_c = 0;             // max over rows of bad_fraction / sqrt(gamma)

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Draws `samples` shifts xi uniformly from [-1,1]^n and counts, per gamma,
// how many shifted Hamiltonians h - xi . I the sampled check refutes. The
// shift moves only the gradient, so per-frame point data is computed once and
// every sample reuses it; the verdicts match running sdm_check on each
// shifted Hamiltonian with the same options. Each sample owns a mixed RNG
// stream keyed on its index, so results are independent of thread count.
// Preconditions (std::invalid_argument): tau > 2(n^2+1), samples >= 1000,
// nonempty positive gamma list, jobs >= 1; angle-free h (std::domain_error).
PrevalenceReport prevalence_mc(const TrigPoly &h, const std::vector<double> &gamma_list,
                               double tau, int l_max, long samples, std::uint64_t seed,
                               const SdmOptions &opts = {}, int jobs = 1);

} // namespace nekholab
