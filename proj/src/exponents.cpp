#include "nekholab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nekholab {

namespace {

constexpr double qnan = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string json_number_or_null(double x) {
  return std::isfinite(x) ? fmt17(x) : std::string("null");
}

std::string json_escape(const std::string &s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\')
      out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

// "1/432 (~0.00231481)"
std::string rat_with_decimal(const Rat &x) {
  return rat_text(x) + " (~" + fmt6(x.get_d()) + ")";
}

void check_positive(double x, const char *what) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::invalid_argument(std::string("condition_ledger: ") + what +
                                " must be positive and finite");
}

// Constant-table entries are looked up by the family token, the part of the
// row name before the first space: "(vi') j=2" shares its constant with every
// other (vi') instance.
std::string family_token(const std::string &name) {
  auto pos = name.find(' ');
  return pos == std::string::npos ? name : name.substr(0, pos);
}

} // namespace

ExponentPlan exponent_plan(int n, const Rat &tau) {
  if (n < 2)
    throw std::domain_error("exponent_plan: need n >= 2 degrees of freedom");
  if (tau < 2)
    throw std::domain_error("exponent_plan: need steepness exponent tau >= 2");

  ExponentPlan plan;
  plan.n = n;
  plan.tau = tau;

  // a_j = base^(j-n-1) with base = 2 tau (n+1); the largest is a_n = 1/base.
  const Rat base = 2 * tau * Rat(n + 1);
  plan.a_seq.reserve(static_cast<size_t>(n));
  for (int j = 1; j <= n; ++j)
    plan.a_seq.push_back(1 / pow_rat(base, static_cast<unsigned long>(n + 1 - j)));
  plan.a = plan.a_seq.front() / 3;
  plan.b = plan.a;
  plan.headline = Rat(1, 3) / pow_rat(Rat(2 * n), static_cast<unsigned long>(3 * n));
  return plan;
}

namespace {

void check_stage(const ExponentPlan &plan, int j, const char *who) {
  if (j < 1 || j > plan.n)
    throw std::invalid_argument(std::string(who) + ": stage index out of range");
}

} // namespace

std::string ExponentPlan::r_form(int j) const {
  check_stage(*this, j, "ExponentPlan::r_form");
  std::ostringstream out;
  out << "r_" << j << " = C T_" << j << "^-1 eps^(" << rat_text(a_seq[j - 1]) << ")";
  return out.str();
}

std::string ExponentPlan::rho_form(int j) const {
  check_stage(*this, j, "ExponentPlan::rho_form");
  std::ostringstream out;
  out << "rho_" << j << " = r_1";
  if (j == 2)
    out << " + r_2";
  else if (j > 2)
    out << " + ... + r_" << j;
  return out.str();
}

std::string ExponentPlan::m_form() const {
  return "m = ceil(C eps^-(" + rat_text(a) + "))";
}

std::string ExponentPlan::r0_form() const {
  return "r0 = eps^(" + rat_text(b) + ")";
}

std::string ExponentPlan::to_text() const {
  std::ostringstream out;
  out << "exponent plan: n = " << n << ", tau = " << rat_text(tau) << "\n";
  out << "  a = b = " << rat_with_decimal(a) << "\n";
  for (int j = 1; j <= n; ++j)
    out << "  a_" << j << " = " << rat_with_decimal(a_seq[j - 1]) << "\n";
  out << "  dimension-only composite (fixed tau): " << rat_with_decimal(headline)
      << "\n";
  out << "  " << r0_form() << ", " << m_form() << "\n";
  for (int j = 1; j <= n; ++j)
    out << "  " << r_form(j) << "\n";
  out << "  " << rho_form(n) << "\n";
  return out.str();
}

std::string ExponentPlan::to_json() const {
  std::ostringstream out;
  out << "{\n  \"n\": " << n << ",\n  \"tau\": \"" << rat_text(tau) << "\",\n";
  out << "  \"a\": \"" << rat_text(a) << "\",\n  \"a_decimal\": " << fmt17(a.get_d())
      << ",\n";
  out << "  \"b\": \"" << rat_text(b) << "\",\n  \"b_decimal\": " << fmt17(b.get_d())
      << ",\n";
  out << "  \"a_seq\": [";
  for (int j = 1; j <= n; ++j)
    out << (j > 1 ? ", " : "") << "\"" << rat_text(a_seq[j - 1]) << "\"";
  out << "],\n  \"a_seq_decimal\": [";
  for (int j = 1; j <= n; ++j)
    out << (j > 1 ? ", " : "") << fmt17(a_seq[j - 1].get_d());
  out << "],\n";
  out << "  \"headline\": \"" << rat_text(headline)
      << "\",\n  \"headline_decimal\": " << fmt17(headline.get_d()) << ",\n";
  out << "  \"forms\": [";
  out << "\"" << json_escape(r0_form()) << "\", \"" << json_escape(m_form()) << "\"";
  for (int j = 1; j <= n; ++j)
    out << ", \"" << json_escape(r_form(j)) << "\"";
  out << ", \"" << json_escape(rho_form(n)) << "\"]\n}";
  return out.str();
}

namespace {

// Builds rows and keeps the shared bits (eps, table, plan) in one place.
struct RowBuilder {
  const LedgerParams &params;
  const ExponentPlan &plan;
  double log10_eps;
  std::vector<LedgerRow> rows;

  void margin_row(std::string name, std::string formula, const Rat &margin,
                  double k_value, bool eps_explicit, std::string note = "") {
    if (!(margin > 0))
      throw std::logic_error("condition_ledger: nonpositive margin for " + name);
    const double c = params.constants.row(family_token(name));
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::invalid_argument(
          "condition_ledger: constant table entry for " + family_token(name) +
          " must be positive and finite");
    LedgerRow row;
    row.name = std::move(name);
    row.formula = std::move(formula);
    row.kind = RowKind::margin;
    row.margin = margin;
    row.k_value = k_value;
    row.constant = c;
    // Everything stays in log10 space: eps^margin underflows any double long
    // before the interesting thresholds (0.5^432 is already ~1e-131).
    row.rhs_log10 = std::log10(c) + std::log10(k_value);
    row.lhs_log10 = margin.get_d() * log10_eps;
    row.log10_threshold = row.rhs_log10 / margin.get_d();
    row.pass = row.lhs_log10 < row.rhs_log10;
    row.eps_explicit = eps_explicit;
    row.note = std::move(note);
    rows.push_back(std::move(row));
  }

  void shape_row(std::string name, std::string formula, std::string note) {
    LedgerRow row;
    row.name = std::move(name);
    row.formula = std::move(formula);
    row.kind = RowKind::shape;
    row.margin = 0;
    row.k_value = qnan;
    row.constant = params.constants.row(family_token(row.name));
    row.lhs_log10 = qnan;
    row.rhs_log10 = qnan;
    row.log10_threshold = qnan;
    row.pass = true;
    row.note = std::move(note);
    rows.push_back(std::move(row));
  }
};

std::string stage_name(const char *family, int j) {
  std::ostringstream out;
  out << family << " j=" << j;
  return out.str();
}

} // namespace

ConditionLedger condition_ledger(const LedgerParams &params) {
  check_positive(params.gamma, "gamma");
  check_positive(params.R, "R");
  check_positive(params.r, "r");
  check_positive(params.s, "s");
  check_positive(params.M, "M");
  if (!(params.epsilon > 0.0) || !(params.epsilon < 1.0))
    throw std::invalid_argument("condition_ledger: eps must lie in (0, 1)");

  ConditionLedger ledger;
  ledger.params = params;
  ledger.plan = exponent_plan(params.n, params.tau);
  const ExponentPlan &plan = ledger.plan;
  const int n = params.n;
  const Rat &tau = plan.tau;
  const Rat &a = plan.a;
  const Rat &b = plan.b;
  auto aj = [&plan](int j) -> const Rat & { return plan.a_seq[j - 1]; };

  RowBuilder build{params, plan, std::log10(params.epsilon), {}};

  // Stage conditions, one block per averaging stage. Periods and radii are
  // replaced by their worst admissible values from the simultaneous
  // approximation step: T_j <= eps^(-(n-1) a_j) r0^-2 and hence
  // eps^(n a_j + 2b) <= r_j <= eps^(a_j), while T_j r_j = eps^(a_j) exactly.
  const std::string per_solution =
      "per-solution condition along a traced orbit; checked empirically by "
      "resonance_trace, not by exponent bookkeeping";
  for (int j = 1; j <= n; ++j) {
    const std::string fam = "(A_" + std::to_string(j) + ")";
    {
      std::ostringstream formula;
      if (j == 1)
        formula << "m T_1 eps << r_1^2";
      else
        formula << "m T_" << j << " eps << r_1 r_" << j;
      // m T_j eps at the largest period against the smallest radii.
      Rat margin = 1 - a - (2 * n - 1) * aj(j) - n * aj(1) - 6 * b;
      build.margin_row(fam + " impulse", formula.str(), margin, 1.0, false,
                       "matches the (vi') margin; the impulse a stage absorbs "
                       "over its horizon");
    }
    {
      std::ostringstream formula;
      formula << "m T_" << j << " r_" << j << " << 1";
      build.margin_row(fam + " width", formula.str(), aj(j) - a, 1.0, false,
                       "T_j r_j = eps^(a_j) exactly, the period drops out");
    }
    {
      std::ostringstream formula;
      formula << "r_" << j << " << s";
      build.margin_row(fam + " radius", formula.str(), aj(j), params.s, false,
                       "stage radius stays inside the analyticity width");
    }
    {
      std::ostringstream formula;
      formula << "some T_" << j << "-periodic omega_" << j
              << " lies within r_" << j << " of grad h(I(t_" << j << "))";
      build.shape_row(fam + " anchor", formula.str(),
                      "existence is the simultaneous approximation guarantee; "
                      "see dirichlet_approx");
    }
    if (j >= 2) {
      std::ostringstream formula;
      formula << "r_" << j << " << r_" << j - 1;
      build.margin_row(fam + " nesting", formula.str(),
                       aj(j) - n * aj(j - 1) - 2 * b, 1.0, false,
                       "stage domains shrink: largest r_j against smallest "
                       "r_(j-1)");
    }
  }

  // Orbit-shape conditions between consecutive stage switches.
  for (int j = 0; j < n; ++j) {
    const std::string fam = "(B_" + std::to_string(j) + ")";
    {
      std::ostringstream formula;
      formula << "|I(t) - I(t_" << j << ")| < r_" << j << " for t in [t_" << j
              << ", t_" << j + 1 << ")";
      build.shape_row(fam + " confinement", formula.str(), per_solution);
    }
    {
      std::ostringstream formula;
      formula << "|grad h(I(t_" << j + 1 << ")) - omega_" << j + 1 << "| < r_"
              << j + 1;
      build.shape_row(fam + " approach", formula.str(), per_solution);
    }
  }

  // The primed list: the closed-form inequalities on the exponents alone
  // ((i')-(vii')) and the explicit smallness thresholds ((viii')-(xi')),
  // reproduced with their published margins. (ii'), (vi') and (vii') come
  // from conditions that bound eps itself, so they win ties for the binding
  // row.
  for (int j = 1; j + 1 <= n; ++j) {
    std::ostringstream formula;
    formula << "a_" << j + 1 << " - 2 n tau a_" << j << " - 4 tau b > 0";
    build.margin_row(stage_name("(i')", j), formula.str(),
                     aj(j + 1) - 2 * n * tau * aj(j) - 4 * tau * b, 1.0, false);
  }
  for (int j = 1; j + 1 <= n; ++j) {
    std::ostringstream formula;
    formula << "1 - 2 n tau a_" << j << " - 4 tau b > 0";
    build.margin_row(stage_name("(ii')", j), formula.str(),
                     1 - 2 * n * tau * aj(j) - 4 * tau * b, 1.0, true);
  }
  for (int j = 1; j + 1 <= n; ++j) {
    std::ostringstream formula;
    formula << "(tau - 1) a_" << j << " - 2 b > 0";
    build.margin_row(stage_name("(iii')", j), formula.str(),
                     (tau - 1) * aj(j) - 2 * b, 1.0, false);
  }
  for (int j = 1; j <= n; ++j) {
    std::ostringstream formula;
    formula << "a_" << j << " - a > 0";
    build.margin_row(stage_name("(iv')", j), formula.str(), aj(j) - a, 1.0,
                     false);
  }
  build.margin_row("(v')", "a_1 - 2 b > 0", aj(1) - 2 * b, 1.0, false);
  for (int j = 1; j <= n; ++j) {
    std::ostringstream formula;
    formula << "1 - a - (2n-1) a_" << j << " - n a_1 - 6 b > 0";
    build.margin_row(stage_name("(vi')", j), formula.str(),
                     1 - a - (2 * n - 1) * aj(j) - n * aj(1) - 6 * b, 1.0,
                     true);
  }
  build.margin_row("(vii')", "1 - n a_n - 2 b > 0", 1 - n * aj(n) - 2 * b, 1.0,
                   true);
  for (int j = 1; j + 1 <= n; ++j) {
    std::ostringstream formula;
    formula << "eps^(tau a_" << j << ") < C gamma";
    build.margin_row(stage_name("(viii')", j), formula.str(), tau * aj(j),
                     params.gamma, false);
  }
  build.margin_row("(ix')", "eps^b < C gamma", b, params.gamma, false);
  build.margin_row("(x')", "eps^b < C R", b, params.R, false);
  for (int j = 1; j <= n; ++j) {
    std::ostringstream formula;
    formula << "eps^(n a_" << j << " + 2 b) < C min(r, s)";
    build.margin_row(stage_name("(xi')", j), formula.str(),
                     n * aj(j) + 2 * b, std::min(params.r, params.s), false);
  }

  ledger.rows = std::move(build.rows);

  // Binding row: the margin row with the smallest eps threshold. Ties go to
  // the eps-explicit families, then to the smallest exact margin, then to row
  // order. The all-ones parameter point puts every threshold at exactly 0, so
  // the tie-break is what singles out a binding row there.
  ledger.passes = true;
  for (size_t i = 0; i < ledger.rows.size(); ++i) {
    const LedgerRow &row = ledger.rows[i];
    ledger.passes = ledger.passes && row.pass;
    if (row.kind != RowKind::margin)
      continue;
    if (ledger.binding_index < 0) {
      ledger.binding_index = static_cast<int>(i);
      continue;
    }
    const LedgerRow &best = ledger.rows[static_cast<size_t>(ledger.binding_index)];
    if (row.log10_threshold < best.log10_threshold) {
      ledger.binding_index = static_cast<int>(i);
    } else if (row.log10_threshold == best.log10_threshold) {
      if (row.eps_explicit != best.eps_explicit) {
        if (row.eps_explicit)
          ledger.binding_index = static_cast<int>(i);
      } else if (row.margin < best.margin) {
        ledger.binding_index = static_cast<int>(i);
      }
    }
  }
  if (ledger.binding_index >= 0)
    ledger.binding = ledger.rows[static_cast<size_t>(ledger.binding_index)].name;

  // Largest eps passing every row, by bisection on log10(eps). Every margin
  // is positive, so each row passes on a half-line and the predicate is
  // monotone; the bisection tightens the bracket to one ulp.
  auto all_pass_at = [&ledger](double log10_eps) {
    for (const LedgerRow &row : ledger.rows) {
      if (row.kind != RowKind::margin)
        continue;
      if (!(row.margin.get_d() * log10_eps < row.rhs_log10))
        return false;
    }
    return true;
  };
  if (all_pass_at(0.0)) {
    // Every threshold sits at eps >= 1; the ledger only speaks for eps < 1.
    ledger.log10_epsilon0 = 0.0;
    ledger.epsilon0 = 1.0;
  } else {
    double lo = -1.0;
    while (!all_pass_at(lo) && lo > -1e18)
      lo *= 2;
    if (!all_pass_at(lo)) {
      ledger.log10_epsilon0 = -std::numeric_limits<double>::infinity();
      ledger.epsilon0 = 0.0;
    } else {
      double hi = 0.0;
      while (std::nextafter(lo, hi) < hi) {
        const double mid = lo / 2 + hi / 2;
        if (!(mid > lo) || !(mid < hi))
          break;
        (all_pass_at(mid) ? lo : hi) = mid;
      }
      ledger.log10_epsilon0 = lo;
      ledger.epsilon0 = std::pow(10.0, lo);
    }
  }

  return ledger;
}

std::string ConditionLedger::to_text() const {
  std::ostringstream out;
  out << "condition ledger: n = " << params.n << ", tau = "
      << rat_text(params.tau) << ", gamma = " << fmt6(params.gamma)
      << ", R = " << fmt6(params.R) << ", r = " << fmt6(params.r)
      << ", s = " << fmt6(params.s) << ", M = " << fmt6(params.M)
      << ", eps = " << fmt6(params.epsilon) << "\n";
  out << "exponents: a = b = " << rat_text(plan.a) << ", a_j =";
  for (int j = 1; j <= params.n; ++j)
    out << (j > 1 ? ", " : " ") << rat_text(plan.a_seq[j - 1]);
  out << "\n\n";

  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-52s %-16s %14s  %s\n", "row",
                "condition", "margin", "log10 eps <", "pass");
  out << line;
  for (const LedgerRow &row : rows) {
    const bool margin_kind = row.kind == RowKind::margin;
    std::string margin_text = margin_kind ? rat_text(row.margin) : "-";
    std::string threshold_text = margin_kind ? fmt6(row.log10_threshold) : "-";
    const char *verdict = margin_kind ? (row.pass ? "yes" : "NO") : "ref";
    std::snprintf(line, sizeof(line), "%-18s %-52s %-16s %14s  %s\n",
                  row.name.c_str(), row.formula.c_str(), margin_text.c_str(),
                  threshold_text.c_str(), verdict);
    out << line;
  }

  out << "\nbinding: " << (binding.empty() ? "none" : binding)
      << "   log10 eps0 = " << fmt6(log10_epsilon0);
  if (epsilon0 > 0.0)
    out << "   eps0 ~ " << fmt6(epsilon0);
  else
    out << "   eps0 ~ 10^(" << fmt6(log10_epsilon0) << ")";
  out << "\n";
  int failing = 0;
  for (const LedgerRow &row : rows)
    failing += row.pass ? 0 : 1;
  if (passes)
    out << "ledger passes at eps = " << fmt6(params.epsilon) << "\n";
  else
    out << "ledger fails at eps = " << fmt6(params.epsilon) << " (" << failing
        << " failing row" << (failing == 1 ? "" : "s") << ")\n";
  return out.str();
}

std::string ConditionLedger::to_csv() const {
  std::ostringstream out;
  out << "name,kind,formula,margin,margin_decimal,k,constant,log10_threshold,pass\n";
  for (const LedgerRow &row : rows) {
    const bool margin_kind = row.kind == RowKind::margin;
    // Names and formulas contain commas and parentheses, so both ride quoted.
    out << "\"" << row.name << "\"," << (margin_kind ? "margin" : "shape")
        << ",\"" << row.formula << "\",";
    if (margin_kind)
      out << rat_text(row.margin) << "," << fmt17(row.margin.get_d()) << ","
          << fmt17(row.k_value) << "," << fmt17(row.constant) << ","
          << fmt17(row.log10_threshold);
    else
      out << ",,,,";
    out << "," << (row.pass ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string ConditionLedger::to_json() const {
  std::ostringstream out;
  out << "{\n  \"params\": {\"n\": " << params.n << ", \"tau\": \""
      << rat_text(params.tau) << "\", \"gamma\": " << fmt17(params.gamma)
      << ", \"R\": " << fmt17(params.R) << ", \"r\": " << fmt17(params.r)
      << ", \"s\": " << fmt17(params.s) << ", \"M\": " << fmt17(params.M)
      << ", \"epsilon\": " << fmt17(params.epsilon) << "},\n";
  out << "  \"plan\": {\"a\": \"" << rat_text(plan.a) << "\", \"b\": \""
      << rat_text(plan.b) << "\", \"a_seq\": [";
  for (int j = 1; j <= params.n; ++j)
    out << (j > 1 ? ", " : "") << "\"" << rat_text(plan.a_seq[j - 1]) << "\"";
  out << "], \"headline\": \"" << rat_text(plan.headline) << "\"},\n";
  out << "  \"rows\": [\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const LedgerRow &row = rows[i];
    const bool margin_kind = row.kind == RowKind::margin;
    out << "    {\"name\": \"" << json_escape(row.name) << "\", \"formula\": \""
        << json_escape(row.formula) << "\", \"kind\": \""
        << (margin_kind ? "margin" : "shape") << "\", ";
    if (margin_kind) {
      out << "\"margin\": \"" << rat_text(row.margin)
          << "\", \"margin_decimal\": " << fmt17(row.margin.get_d())
          << ", \"k\": " << fmt17(row.k_value)
          << ", \"constant\": " << fmt17(row.constant)
          << ", \"lhs_log10\": " << json_number_or_null(row.lhs_log10)
          << ", \"rhs_log10\": " << json_number_or_null(row.rhs_log10)
          << ", \"log10_threshold\": " << json_number_or_null(row.log10_threshold)
          << ", ";
    } else {
      out << "\"margin\": null, ";
    }
    out << "\"pass\": " << (row.pass ? "true" : "false")
        << ", \"eps_explicit\": " << (row.eps_explicit ? "true" : "false");
    if (!row.note.empty())
      out << ", \"note\": \"" << json_escape(row.note) << "\"";
    out << "}" << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"passes\": " << (passes ? "true" : "false") << ",\n";
  out << "  \"binding\": \"" << json_escape(binding) << "\",\n";
  out << "  \"binding_index\": " << binding_index << ",\n";
  out << "  \"log10_epsilon0\": " << json_number_or_null(log10_epsilon0)
      << ",\n";
  out << "  \"epsilon0\": " << fmt17(epsilon0) << "\n}";
  return out.str();
}

} // namespace nekholab
