#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rational.hpp"

namespace martlab {

// One outcome of a countable probability space. The payload is fixed at
// construction; spaces hand out copies, never references into mutable state.
struct Atom {
  std::uint64_t id = 0;
  ExtTime sigma = ExtTime::inf();   // jump-time label (cherny-style outcomes)
  int sign = 0;                     // D in {-1,+1}; 0 when absent
  std::optional<Rational> u;        // uniform level, present on extended spaces
  int u_index = -1;                 // grid index of u (0-based)
  std::uint64_t base_id = 0;        // id in the base space when extended
  bool is_tail_rep = false;
  std::string label;
};

struct WeightedAtom {
  Atom atom;
  Rational weight;
  int depth = 1;  // enumeration depth at which this atom appears
};

// The unenumerated remainder of a space at a given depth. All outcomes in a
// component are observationally identical to `rep` on [0, agree_until]; the
// component mass is exact even when individual outcome masses are not
// (cherny's sigma = inf outcomes have irrational mass, their total with the
// deep finite-sigma outcomes is rational). Mass is lazy: at large depths the
// exact residual is an expensive rational and most queries never touch it
// (their tail values are identically zero).
struct TailComponent {
  Atom rep;
  ExtTime agree_until;
  std::function<Rational()> mass_fn;

  Rational mass() const { return mass_fn(); }
};

class CountableSpace {
 public:
  virtual ~CountableSpace() = default;
  virtual std::string name() const = 0;

  // Streams the deterministic enumeration prefix (atom, exact weight, depth);
  // the callback returns false to stop early.
  virtual void scan(int depth,
                    const std::function<bool(const Atom&, const Rational&, int)>& fn) const = 0;

  // Exact tail mass: sum of enumerated weights + residual == 1 identically.
  virtual Rational residual(int depth) const = 0;

  virtual std::vector<TailComponent> tail(int depth) const = 0;

  // Rational bracket on the mass of tail outcomes that stay observationally
  // identical to their component rep forever (sigma = inf outcomes).
  virtual RatInterval forever_tail_mass(int depth) const = 0;

  // Uniform randomization (assumption (R)).
  virtual bool has_uniform() const { return false; }
  virtual int uniform_levels() const { return 0; }
  // Time from which U is observable, per atom (constant for the lab's spaces).
  virtual ExtTime reveal_time(const Atom&) const { return ExtTime::inf(); }

  // Depth beyond which enumeration cannot grow (finite spaces).
  virtual int depth_cap() const { return std::numeric_limits<int>::max(); }

  std::vector<WeightedAtom> enumerate(int depth) const;
};

using SpacePtr = std::shared_ptr<const CountableSpace>;

// ---------------------------------------------------------------------------
// Concrete spaces

// Explicit finite space: atoms listed outright, residual 0.
class FiniteSpace : public CountableSpace {
 public:
  FiniteSpace(std::string name, std::vector<WeightedAtom> atoms);
  std::string name() const override { return name_; }
  void scan(int depth,
            const std::function<bool(const Atom&, const Rational&, int)>& fn) const override;
  Rational residual(int depth) const override;
  std::vector<TailComponent> tail(int) const override { return {}; }
  RatInterval forever_tail_mass(int) const override { return {Rational(0), Rational(0)}; }
  int depth_cap() const override { return cap_; }
  const std::vector<WeightedAtom>& atoms() const { return atoms_; }

 private:
  std::string name_;
  std::vector<WeightedAtom> atoms_;
  int cap_ = 1;
};

// Cherny's counterexample space: outcomes (n, i) with P = 1/(4 n^2), the
// sigma = inf outcomes held in the residual (their individual mass is
// irrational; only totals are ever reported).
class ChernySpace : public CountableSpace {
 public:
  std::string name() const override { return "cherny"; }
  void scan(int depth,
            const std::function<bool(const Atom&, const Rational&, int)>& fn) const override;
  Rational residual(int depth) const override;
  std::vector<TailComponent> tail(int depth) const override;
  RatInterval forever_tail_mass(int depth) const override;

  static Atom make_atom(long n, int sign);
  static Atom infinity_atom();  // sigma = inf outcome, for path inspection

 private:
  // incremental cache for the enumerated-mass sum
  mutable std::mutex mu_;
  mutable long cached_depth_ = 0;
  mutable Rational cached_mass_ = Rational(0);
};

// Product extension of a base space with an independent uniform level
// U in {(2k-1)/(2m)}, revealed from time eta on.
class UniformExtensionSpace : public CountableSpace {
 public:
  UniformExtensionSpace(SpacePtr base, int levels, Rational reveal_eta);
  std::string name() const override { return base_->name() + "+U"; }
  void scan(int depth,
            const std::function<bool(const Atom&, const Rational&, int)>& fn) const override;
  Rational residual(int depth) const override { return base_->residual(depth); }
  std::vector<TailComponent> tail(int depth) const override;
  RatInterval forever_tail_mass(int depth) const override {
    return base_->forever_tail_mass(depth);
  }
  bool has_uniform() const override { return true; }
  int uniform_levels() const override { return levels_; }
  ExtTime reveal_time(const Atom&) const override { return ExtTime::at(eta_); }
  int depth_cap() const override { return base_->depth_cap(); }

  const SpacePtr& base() const { return base_; }
  Rational level_value(int k) const;  // k is 0-based
  Atom extend_atom(const Atom& base_atom, int k) const;

 private:
  SpacePtr base_;
  int levels_;
  Rational eta_;
};

// ---------------------------------------------------------------------------
// Random variables and expectations

struct TailEval {
  enum class Kind { exact, abs_bound, unknown };
  Kind kind = Kind::unknown;
  Rational v;

  static TailEval exact(Rational x) { return {Kind::exact, std::move(x)}; }
  static TailEval abs_bound(Rational x) { return {Kind::abs_bound, std::move(x)}; }
  static TailEval unknown() { return {Kind::unknown, Rational(0)}; }
};

struct RandomVariable {
  std::string name;
  bool nonnegative = false;
  std::function<Rational(const Atom&)> eval;
  std::function<TailEval(const TailComponent&)> tail_eval =
      [](const TailComponent&) { return TailEval::unknown(); };
  // Depth at which the tail becomes exactly evaluable (query-adaptive
  // enumeration); unset means "as deep as the policy allows".
  std::optional<int> sufficient_depth;
};

struct GrowthSample {
  long depth;
  Rational partial_sum;
};

struct ExactResult {
  Rational value;
};
struct TruncatedResult {
  Rational value;
  Rational tail_bound;  // |true - value| <= tail_bound
};
struct DivergenceCertificate {
  Rational threshold;
  long depth;           // first depth whose partial sum exceeds the threshold
  Rational partial_sum;
  std::vector<GrowthSample> growth_samples;
};

using ExpectationResult = std::variant<ExactResult, TruncatedResult, DivergenceCertificate>;

Rational result_value(const ExpectationResult& r);       // Exact/Truncated value
bool result_is_exact_zero(const ExpectationResult& r);
std::string result_str(const ExpectationResult& r);

struct ExpectationPolicy {
  int max_depth = 10000;
  Rational divergence_threshold = rat(1000000);
  // Stop scanning once the threshold is crossed (for certificate-seeking
  // queries); otherwise the scan runs to max_depth and records growth samples
  // along the way.
  bool stop_at_threshold = false;
};

// The exact expectation engine. Streams the enumeration, resolves the tail
// through the component evaluator, and refuses queries it cannot decide
// (IndeterminateTail) instead of truncating silently.
ExpectationResult expectation(const CountableSpace& space, const RandomVariable& rv,
                              const ExpectationPolicy& policy = {});

// ---------------------------------------------------------------------------
// Partitions (observational sigma-algebras at desk scale)

struct Partition {
  struct Block {
    std::string label;
    std::vector<std::uint64_t> atom_ids;      // enumerated members
    std::vector<std::uint64_t> tail_rep_ids;  // tail components owned by this block
  };
  std::vector<Block> blocks;
  int depth = 1;  // enumeration depth the blocks cover
};

// Block-conditional mean, exact. The returned rv is constant on each block;
// tail components inherit the value of the (unique) block that includes them.
RandomVariable conditional_expectation(const CountableSpace& space, const RandomVariable& rv,
                                       const Partition& partition);

}  // namespace martlab
