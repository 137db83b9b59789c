#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "path.hpp"

namespace martlab {

// Event argument of a two-point stopping time: a block of an observational
// partition at time `time`. member_ids contains enumerated atom ids plus the
// rep ids of tail components inside the event.
struct ObsEvent {
  Rational time;
  std::set<std::uint64_t> member_ids;
  std::string label;
};

// Declarative stopping-time expression, evaluated per atom against the
// atom's path (and its uniform level where present).
//
// liminf_band is the T_n device from the (I)-(III) equivalence proof: first
// time ||X_t| - liminf_s |X_s|| <= tol. It anticipates the terminal value, so
// it is generally *not* a stopping time; it exists here to feed the
// adaptedness checker, and the stop/idempotence guarantees exclude it.
struct StoppingSpec {
  enum class Op {
    constant,
    hit_above,      // first t with X_t >= level (strict: > level)
    hit_abs_above,  // first t with |X_t| >= level
    hit_abs_below,  // first t >= after with |X_t| <= level
    liminf_band,    // first t with ||X_t| - liminf|X|| <= level
    two_point,      // s on the event's complement, t on the event
    min_of,
    max_of,
    reciprocal_u,   // 1/U on a uniformly extended space
  };

  Op op = Op::constant;
  ExtTime when;        // constant
  Rational level;      // hit_* level / liminf_band tolerance
  bool strict = false; // hit_above
  Rational after;      // hit_abs_below
  Rational s, t;       // two_point times, s < t
  std::shared_ptr<const ObsEvent> event;  // two_point
  std::vector<StoppingSpec> args;         // min_of / max_of

  static StoppingSpec constant(ExtTime at);
  static StoppingSpec hit_above(Rational level, bool strict = false);
  static StoppingSpec hit_abs_above(Rational level);
  static StoppingSpec hit_abs_below(Rational level, Rational after);
  static StoppingSpec liminf_band(Rational tol);
  static StoppingSpec two_point(std::shared_ptr<const ObsEvent> event, Rational s, Rational t);
  static StoppingSpec min_of(std::vector<StoppingSpec> args);
  static StoppingSpec max_of(std::vector<StoppingSpec> args);
  static StoppingSpec reciprocal_u();

  bool uses_uniform() const;
  bool uses_liminf() const;
  // Pathwise upper bound derivable from the expression alone (min with a
  // constant, two-point, 1/U on an m-level grid), independent of any path.
  std::optional<ExtTime> structural_bound(const CountableSpace* space) const;

  std::string str() const;  // canonical form; doubles as a deterministic sort key
};

// Evaluation --------------------------------------------------------------

ExtTime evaluate(const StoppingSpec& spec, const PiecewiseConstantPath& path, const Atom& atom,
                 bool terminating);
ExtTime evaluate(const StoppingSpec& spec, const PathProcess& process, const Atom& atom);

// X_{tau(omega)}(omega); uses the terminal value when tau = inf (terminating
// processes only).
Rational stopped_value(const PathProcess& process, const StoppingSpec& spec, const Atom& atom);

// Y^tau: pathwise-stopped process.
PathProcess stop(const PathProcess& process, const StoppingSpec& spec);

// Adaptedness --------------------------------------------------------------

struct AdaptednessWitness {
  Atom a;
  Atom b;
  Rational time;  // paths (and revealed U) agree on [0, time], {tau<=time} differs
};

struct AdaptednessReport {
  bool adapted = true;
  std::optional<AdaptednessWitness> witness;
  int working_depth = 0;
  std::size_t pairs_checked = 0;
};

// Observational-equivalence checking over all enumerated atom pairs (tail
// reps included) and all grid times: sound and complete on that domain. A
// witness is replayable via replay_witness. The checker precomputes paths and
// pairwise disagreement times once, so a whole generated family can be
// screened against the same structure.
class AdaptednessChecker {
 public:
  AdaptednessChecker(const PathProcess& process, std::vector<Rational> grid, int depth);
  AdaptednessReport check(const StoppingSpec& spec) const;

  const PathProcess& process() const { return *process_; }
  int depth() const { return depth_; }

 private:
  struct Rec {
    Atom atom;
    PiecewiseConstantPath path;
    ExtTime cap;  // conclusions valid for grid times <= cap (tail agreement)
  };
  const PathProcess* process_;
  std::vector<Rational> grid_;
  int depth_;
  std::vector<Rec> recs_;
  std::vector<ExtTime> disagree_;  // row-major upper triangle, pair (i,j), i<j
  std::size_t pair_index(std::size_t i, std::size_t j) const;
};

AdaptednessReport adaptedness_check(const StoppingSpec& spec, const PathProcess& process,
                                    const std::vector<Rational>& grid, int depth);

bool replay_witness(const StoppingSpec& spec, const PathProcess& process,
                    const AdaptednessWitness& w);

// Finiteness ---------------------------------------------------------------

struct FinitenessCertificate {
  enum class Level { bounded, exact_finite, exact_not_finite, horizon_limited };
  Level level = Level::exact_finite;
  Rational bound;                // bounded: tau <= bound everywhere
  RatInterval mass_at_infinity;  // exact_not_finite
  Rational p_within_horizon;     // horizon_limited
  long horizon = 0;
  int working_depth = 0;

  bool finite_for_suite() const {
    return level == Level::bounded || level == Level::horizon_limited;
  }
  std::string str() const;
};

// Exact-space finiteness certification; requires the spec to be adapted
// (run adaptedness_check first). Generative processes get their
// horizon_limited certificates from the walk DP in the analysis module.
FinitenessCertificate finiteness_check(const StoppingSpec& spec, const PathProcess& process,
                                       int depth);

// Observation machinery ------------------------------------------------------

// Serialized observation of an atom on [0, time]: path prefix plus the
// uniform level when revealed. Equal strings == observationally equivalent.
std::string observation_signature(const PathProcess& process, const Atom& atom,
                                  const Rational& time);

// Partition of the depth-d enumeration (tail components included) into
// observational equivalence classes at `time`.
Partition observational_partition(const PathProcess& process, const Rational& time, int depth);

// An ObsEvent for one block of an observational partition.
std::shared_ptr<const ObsEvent> event_from_block(const Partition& partition, std::size_t block,
                                                 Rational time);

// Uniform randomization -------------------------------------------------------

// Extends the process's space with an independent m-level uniform revealed at
// the constant time eta (assumption (R) at desk scale). Returns the extended
// space and the same path process rebound to it.
std::pair<SpacePtr, PathProcess> extend_with_uniform(const PathProcess& process, Rational eta,
                                                     int levels);

}  // namespace martlab
