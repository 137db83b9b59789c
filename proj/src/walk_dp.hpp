#pragma once

#include <optional>

#include "stopping.hpp"

namespace martlab::walk_dp {

// Absorbing-chain rule for the simple symmetric walk (start 0, +-1 jumps at
// integer times). Mirrors the stopping specs the walk experiments use; paths
// are piecewise constant, so an |X| <= level condition with an `after`
// threshold can trigger mid-interval at max(j, after).
struct StopRule {
  std::optional<Rational> above_level;
  bool above_strict = false;
  std::optional<Rational> abs_above_level;
  std::optional<Rational> abs_below_level;
  Rational abs_below_after;
  std::optional<long> const_cap;  // min with a constant (integer) time

  bool trivial() const { return !above_level && !abs_above_level && !abs_below_level && !const_cap; }
};

struct DpResult {
  Rational p_stopped;          // P(tau <= horizon), exact
  Rational stopped_value_sum;  // E[X_tau ; tau <= horizon], exact
  Rational capped_expectation; // E[X_{tau ^ horizon}], exact
  // Pathwise window for the eventual stop value on {tau > horizon} paths
  // (conditional on tau < inf); meaningful only when p_stopped < 1.
  Rational window_lo;
  Rational window_hi;
  long horizon = 0;
};

// Exact big-integer forward recursion: masses are path counts over 2^t.
DpResult run(const StopRule& rule, long horizon);

// E[X_t] of the free walk, exact.
Rational marginal_expectation(long t);

// P(max_{0<=j<=steps} X_j >= level) (or > with strict), exact.
Rational hit_max_prob(const Rational& level, bool strict, long steps);

// Maps a stopping spec onto a StopRule when its shape is DP-supported:
// hit_above / hit_abs_above / hit_abs_below / integer const, and min-combinations
// of those. Returns nullopt otherwise.
std::optional<StopRule> compile_rule(const StoppingSpec& spec);

}  // namespace martlab::walk_dp
