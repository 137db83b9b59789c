#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lab.hpp"
#include "stopping.hpp"
#include "walk_dp.hpp"

namespace martlab {

// ---------------------------------------------------------------------------
// Verdicts

struct WitnessInfo {
  std::optional<StoppingSpec> spec;
  std::optional<Rational> time;
  std::optional<ExpectationResult> lhs;  // checked quantity
  std::optional<ExpectationResult> rhs;  // reference (usually E[X_0])
  std::string note;
};

struct StatementVerdict {
  Statement statement = Statement::V;
  Verdict verdict = Verdict::undecidable;
  std::optional<WitnessInfo> witness;
  std::string suite;  // what was actually quantified over
};

// ---------------------------------------------------------------------------
// Random variables over a path process (exact-engine adapters). The process
// is captured by value; handles stay valid independently of the caller.

RandomVariable rv_value_at(PathProcess p, Rational t, bool absolute = false);
RandomVariable rv_trunc_abs_at(PathProcess p, Rational t, Rational K);
RandomVariable rv_abs_limit(PathProcess p);
RandomVariable rv_stopped(PathProcess p, StoppingSpec spec, bool absolute);

// ---------------------------------------------------------------------------
// Stopping-time family generation

struct FamilyConfig {
  int tree_depth = 3;
  std::vector<Rational> levels = {rat(1, 2), rat(1), rat(4), rat(9)};
  std::vector<Rational> grid;  // defaults to integers+midpoints up to grid_max
  Rational grid_max = rat(50);
  bool include_two_point = true;
  bool include_randomized = false;
  std::size_t max_specs = 1500;
  int working_depth = 60;
  // policy for suite-member L^1 checks
  int l1_max_depth = 10000;
  Rational l1_threshold = rat(100);
  // refinement schedule threshold for the randomized route
  Rational refinement_threshold = rat(3);
  long walk_horizon = 1000;
};

std::vector<Rational> default_time_grid(const Rational& up_to);

struct GeneratedFamily {
  std::vector<StoppingSpec> specs;     // adapted, deduplicated, deterministic order
  std::size_t rejected_not_adapted = 0;
  int working_depth = 0;
};

GeneratedFamily generate_family(const Lab& lab, const FamilyConfig& config);

// Family plus finiteness certificates, computed once and shared by the
// (II)/(III)/(IV) checkers within one suite run.
struct CertifiedFamily {
  GeneratedFamily family;
  std::vector<FinitenessCertificate> certs;  // parallel to family.specs
};

CertifiedFamily certify_family(const Lab& lab, const FamilyConfig& config);

// ---------------------------------------------------------------------------
// Statement checkers

// Event times of the process up to T: {0} + jump epochs + midpoints.
std::vector<Rational> event_grid(const Lab& lab, const Rational& up_to);

// (V): E[X_t] = E[X_0] at every grid time, exact.
StatementVerdict check_statement_V(const Lab& lab, const std::vector<Rational>& grid);

// (IV) falsifier: searches adapted finite stopping times for E[X_tau] != E[X_0]
// or X_tau outside L^1. "holds_on_suite" never claims more than the suite.
StatementVerdict falsify_statement_IV(const Lab& lab, const FamilyConfig& config);
StatementVerdict falsify_statement_IV(const Lab& lab, const FamilyConfig& config,
                                      const CertifiedFamily& family);

// (II) falsifier: as (IV) but quantifies over possibly-infinite stopping times
// (limits exist for terminating processes), plus the limit-existence check.
// A precomputed (IV) verdict covers the bounded members: a finite violation
// of (IV) violates (II) outright.
StatementVerdict falsify_statement_II(const Lab& lab, const FamilyConfig& config);
StatementVerdict falsify_statement_II(const Lab& lab, const FamilyConfig& config,
                                      const CertifiedFamily& family, const StatementVerdict* iv);

// E[liminf |X_t|] with certificate semantics.
ExpectationResult check_liminf_integrability(const Lab& lab, const ExpectationPolicy& policy);

StatementVerdict check_statement_III(const Lab& lab, const FamilyConfig& config);
// variant reusing an already-computed (IV) verdict for its stopping suite
StatementVerdict check_statement_III(const Lab& lab, const FamilyConfig& config,
                                     const StatementVerdict& iv);

// liminf existence per atom (statement II's limit clause).
StatementVerdict limit_existence_check(const Lab& lab);

// Uniform integrability on the event grid.
struct UIDiagnostic {
  struct Entry {
    Rational K;
    bool diverges_in_t = false;
    std::optional<DivergenceCertificate> certificate;  // over event times
    Rational sup_on_grid;
  };
  std::vector<Entry> entries;
  enum class Outcome { uniformly_integrable_on_grid, not_ui_certified } outcome =
      Outcome::uniformly_integrable_on_grid;
};

UIDiagnostic check_ui(const Lab& lab, const std::vector<Rational>& k_schedule,
                      const std::vector<Rational>& grid, const Rational& divergence_threshold);

// Two-point martingale identity E[X_t 1_A] = E[X_s 1_A] over observational
// blocks A at s.
StatementVerdict martingale_check(const Lab& lab,
                                  const std::vector<std::pair<Rational, Rational>>& pairs,
                                  int depth);

StatementVerdict check_statement_I(const Lab& lab, const FamilyConfig& config);

// ---------------------------------------------------------------------------
// Excursion-gap construction: sigma_1 hits the excursion level, sigma_2
// waits for |M| to settle near zero; a martingale satisfying the stopping
// identity cannot keep both expectations apart.

struct GapReport {
  Rational epsilon;
  long horizon = 0;
  StoppingSpec sigma1, sigma2, tau;
  ExpectationResult e_tau;     // E[M_tau] within horizon, with tail bound
  ExpectationResult e_sigma2;  // E[M_sigma2] likewise
  Rational excursion_prob;     // P(sup_{[0,1/eps)} M > eps)
  Rational band_visit_prob;    // liminf proxy (generative route)
  Rational gap_lower;          // certified lower bound on E[M_tau] - E[M_sigma2]
  bool success = false;
};

GapReport witness_gap(const Lab& lab, const Rational& epsilon, long horizon);

// ---------------------------------------------------------------------------
// Randomized blow-up

struct BlowupPoint {
  long m;
  Rational value;  // exact E[|X_{1/U}|] at m levels
};

struct BlowupCurve {
  std::vector<BlowupPoint> points;
  double slope_vs_log = 0.0;  // fitted d value / d ln(m) over the sampled points
};

BlowupCurve randomized_blowup_curve(const Lab& lab, const std::vector<long>& m_list);

// ---------------------------------------------------------------------------
// Whole-suite runner

struct SuiteParams {
  FamilyConfig family;
  Rational v_grid_max = rat(50);
};

struct SuiteReport {
  std::map<Statement, StatementVerdict> verdicts;
  std::vector<std::pair<Statement, Verdict>> expected;
  bool matches_expected = false;
  bool hierarchy_consistent = false;
};

SuiteReport run_suite(const Lab& lab, const SuiteParams& params);

// No upstream pass may sit above a downstream violation in (I)=>(II)=>...=>(V).
bool hierarchy_consistent(const std::map<Statement, StatementVerdict>& verdicts);

}  // namespace martlab
