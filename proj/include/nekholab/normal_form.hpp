// Resonant normal form along periodic frequency vectors. One averaging step
// splits the perturbation at an exact resonance, solves the homological
// equation for the nonresonant half, and pushes the Hamiltonian through the
// truncated Lie transform; the driver chains steps across shrinking domains
// and stages. Every step carries a certificate-grade record: majorant sizes,
// the geometric tail bound for the truncated series, and the contraction
// actually achieved.
#pragma once

#include "nekholab/constants.hpp"
#include "nekholab/diophantine.hpp"
#include "nekholab/trig_hamiltonian.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace nekholab {

// Raised when the Lie-series tail ratio reaches 1 and no amount of depth
// would make the transform converge on the requested domains.
struct StepRejected : std::runtime_error {
  double ratio;
  explicit StepRejected(double r)
      : std::runtime_error("averaging step rejected: tail ratio " +
                           std::to_string(r) + " >= 1"),
        ratio(r) {}
};

struct StepRecord {
  int stage = 0;
  int step = 0;
  double entry_radius = 0, entry_width = 0;
  double exit_radius = 0, exit_width = 0;
  double previous_norm = 0;   // majorant of f on the entry domain
  double resonant_norm = 0;   // majorant of the part moved into the normal form
  double chi_norm = 0;        // majorant of the generating function
  double chi_vf_norm = 0;     // weighted vector-field size of chi
  double tail_ratio = 0;      // e * bracket_step_factor; step valid iff < 1
  double tail_bound = 0;      // geometric bound on the dropped series tail
  double remainder_norm = 0;  // majorant of the new remainder on exit + tail
  double contraction = 0;     // remainder_norm / previous_norm
  double sharp_condition = 0; // a-priori e*T*eps*(1/gap_r + 1/(r*gap_s)), advisory
  bool sharp_ok = true;
};

struct AveragingStep {
  TrigPoly g_plus;
  TrigPoly f_plus;
  TrigPoly chi;
  StepRecord record;
};

// One step of resonant averaging for H = h + g + f on dom (local coordinates,
// actions measured from dom.center): h is the grade-0 angle-free part, g the
// normal form accumulated so far, f the remainder with grade >= 1. Returns
// g + resonant(f), the transformed remainder valid on the shrunken domain
// (next_radius, next_width), and the generator. The remainder is assembled
// from the structurally cancelled series, so its size tracks f rather than h.
// Throws StepRejected when the tail ratio reaches 1.
AveragingStep averaging_step(const TrigPoly &h, const TrigPoly &g, const TrigPoly &f,
                             const PeriodicVector &omega, const AnalyticDomain &dom,
                             double next_radius, double next_width, double weight,
                             int depth, const ConstantTable &table = {});

struct NormalFormOptions {
  int steps_per_stage = 1;
  int depth = 4;
  // Weight for vector-field norms; 0 means width/radius of the first domain.
  double weight = 0;
  ConstantTable table;
};

struct StageReport {
  PeriodicVector omega;
  AnalyticDomain entry;           // stage domain, global coordinates
  double anchor_mismatch = 0;     // |grad h(center) - omega|_sup
  bool nested_in_previous = true; // domain fits in the previous stage's exit
  bool rejected = false;
  double rejected_ratio = 0;
  bool emptied = false;           // remainder vanished before the last step
  std::vector<StepRecord> steps;
  TrigPoly h;           // local coordinates at stage end
  TrigPoly normal_form; // resonant terms accumulated this stage
  TrigPoly remainder;
};

struct NormalFormResult {
  TrigPoly transformed; // full Hamiltonian after all stages, global coordinates
  std::vector<StageReport> stages;
};

// Runs steps_per_stage averaging steps on each (omega, domain) pair in turn,
// recentering the Hamiltonian on the stage's domain and shrinking radius and
// width linearly to 2/3 of their entry values across the stage. A rejected
// step ends its stage (recorded, not fatal); later stages still run. The
// perturbation grades of the input are substituted with the numeric epsilon
// up front; the grade labels survive for the integrable/remainder split.
NormalFormResult normal_form(const TrigPoly &hamiltonian,
                             const std::vector<PeriodicVector> &omegas,
                             const std::vector<AnalyticDomain> &domains,
                             const NormalFormOptions &opts, double epsilon = 1.0);

} // namespace nekholab
