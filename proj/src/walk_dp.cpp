#include "walk_dp.hpp"

#include <algorithm>
#include <vector>

namespace martlab::walk_dp {

namespace {

struct IntRule {
  bool has_above = false;
  long above_at = 0;  // absorb when s >= above_at
  bool has_abs_above = false;
  long abs_above_at = 0;  // absorb when |s| >= abs_above_at
  bool has_abs_below = false;
  long abs_below_at = 0;  // absorb when |s| <= abs_below_at, window permitting
  Rational abs_below_after;
  std::optional<long> cap;
};

IntRule lower_rule(const StopRule& rule) {
  IntRule r;
  if (rule.above_level) {
    r.has_above = true;
    // integer states: s >= L  <=>  s >= ceil(L);  s > L  <=>  s >= floor(L)+1
    r.above_at = rule.above_strict ? rat_floor(*rule.above_level) + 1
                                   : rat_ceil(*rule.above_level);
  }
  if (rule.abs_above_level) {
    r.has_abs_above = true;
    r.abs_above_at = rat_ceil(*rule.abs_above_level);
  }
  if (rule.abs_below_level) {
    if (*rule.abs_below_level < 0)
      fail(Errc::invalid_argument, "abs-below level must be nonnegative");
    r.has_abs_below = true;
    r.abs_below_at = rat_floor(*rule.abs_below_level);
    r.abs_below_after = rule.abs_below_after;
  }
  r.cap = rule.const_cap;
  return r;
}

}  // namespace

DpResult run(const StopRule& rule, long horizon) {
  if (horizon < 0) fail(Errc::invalid_argument, "horizon must be >= 0");
  IntRule r = lower_rule(rule);

  long T = horizon;
  bool capped = false;
  if (r.cap) {
    if (*r.cap < 0) fail(Errc::invalid_argument, "const cap must be >= 0");
    if (*r.cap <= horizon) {
      T = *r.cap;
      capped = true;
    }
  }

  const long offset = T;
  std::vector<mpz_class> cur(static_cast<std::size_t>(2 * T + 1));
  std::vector<mpz_class> nxt(static_cast<std::size_t>(2 * T + 1));
  cur[static_cast<std::size_t>(offset)] = 1;
  long lo = 0, hi = 0;  // active state range

  mpz_class absorbed_p = 0;   // in units of 2^-t at time t
  mpz_class absorbed_v = 0;

  auto absorb_at = [&](long t) {
    for (long s = lo; s <= hi; ++s) {
      mpz_class& c = cur[static_cast<std::size_t>(s + offset)];
      if (c == 0) continue;
      bool take = false;
      if (r.has_above && s >= r.above_at) take = true;
      if (!take && r.has_abs_above && (s >= r.abs_above_at || -s >= r.abs_above_at)) take = true;
      if (!take && r.has_abs_below && (s <= r.abs_below_at && -s <= r.abs_below_at)) {
        // |X| stays at s on [t, t+1); the rule triggers at max(t, after)
        if (r.abs_below_after < t + 1 && r.abs_below_after <= horizon) take = true;
      }
      if (take) {
        absorbed_p += c;
        absorbed_v += c * s;
        c = 0;
      }
    }
    while (lo <= hi && cur[static_cast<std::size_t>(lo + offset)] == 0) ++lo;
    while (hi >= lo && cur[static_cast<std::size_t>(hi + offset)] == 0) --hi;
  };

  absorb_at(0);
  for (long t = 1; t <= T && lo <= hi; ++t) {
    absorbed_p <<= 1;
    absorbed_v <<= 1;
    long nlo = lo - 1, nhi = hi + 1;
    for (long s = nlo; s <= nhi; ++s) {
      mpz_class& dst = nxt[static_cast<std::size_t>(s + offset)];
      dst = 0;
      if (s - 1 >= lo && s - 1 <= hi) dst += cur[static_cast<std::size_t>(s - 1 + offset)];
      if (s + 1 >= lo && s + 1 <= hi) dst += cur[static_cast<std::size_t>(s + 1 + offset)];
    }
    std::swap(cur, nxt);
    lo = nlo;
    hi = nhi;
    while (lo <= hi && cur[static_cast<std::size_t>(lo + offset)] == 0) ++lo;
    while (hi >= lo && cur[static_cast<std::size_t>(hi + offset)] == 0) --hi;
    absorb_at(t);
  }

  DpResult out;
  out.horizon = horizon;

  // Counts and absorbed accumulators share the denominator 2^t_exit (one
  // doubling per executed step; an early exit only skips steps that would
  // scale numerator and denominator alike). Mass conservation recovers it.
  mpz_class remaining = 0;
  mpz_class value_weighted = 0;
  for (long s = lo; s <= hi; ++s) {
    const mpz_class& c = cur[static_cast<std::size_t>(s + offset)];
    if (c == 0) continue;
    remaining += c;
    value_weighted += c * s;
  }
  mpz_class total = remaining + absorbed_p;

  if (capped) {
    // absorb everything left at time T = cap
    absorbed_p += remaining;
    absorbed_v += value_weighted;
    remaining = 0;
    value_weighted = 0;
  }

  Rational denom(total);
  if (denom == 0) fail(Errc::internal, "walk DP lost all mass");
  out.p_stopped = Rational(absorbed_p) / denom;
  out.stopped_value_sum = Rational(absorbed_v) / denom;
  out.capped_expectation = Rational(absorbed_v + value_weighted) / denom;

  // eventual-stop window for mass beyond the horizon
  bool have = false;
  Rational wlo(0), whi(0);
  auto add_point = [&](long v) {
    Rational q = rat(v);
    if (!have) {
      wlo = whi = q;
      have = true;
    } else {
      wlo = rat_min(wlo, q);
      whi = rat_max(whi, q);
    }
  };
  if (r.has_above) add_point(r.above_at);
  if (r.has_abs_above) {
    add_point(r.abs_above_at);
    add_point(-r.abs_above_at);
  }
  if (r.has_abs_below) {
    add_point(r.abs_below_at);
    add_point(-r.abs_below_at);
  }
  out.window_lo = wlo;
  out.window_hi = whi;
  return out;
}

Rational marginal_expectation(long t) {
  StopRule free;
  DpResult res = run(free, t);
  return res.capped_expectation;
}

Rational hit_max_prob(const Rational& level, bool strict, long steps) {
  StopRule rule;
  rule.above_level = level;
  rule.above_strict = strict;
  return run(rule, steps).p_stopped;
}

std::optional<StopRule> compile_rule(const StoppingSpec& spec) {
  using Op = StoppingSpec::Op;
  StopRule rule;
  bool ok = true;

  std::function<void(const StoppingSpec&)> absorb = [&](const StoppingSpec& s) {
    if (!ok) return;
    switch (s.op) {
      case Op::constant:
        if (!s.when.is_finite()) return;  // min with inf is a no-op
        {
          // integer caps only: mid-interval caps interleave with other rules
          Rational c = s.when.t;
          if (c.get_den() != 1) {
            ok = false;
            return;
          }
          long v = rat_floor(c);
          if (!rule.const_cap || v < *rule.const_cap) rule.const_cap = v;
        }
        return;
      case Op::hit_above:
        if (rule.above_level) ok = false;
        rule.above_level = s.level;
        rule.above_strict = s.strict;
        return;
      case Op::hit_abs_above:
        if (rule.abs_above_level) ok = false;
        rule.abs_above_level = s.level;
        return;
      case Op::hit_abs_below:
        if (rule.abs_below_level) ok = false;
        rule.abs_below_level = s.level;
        rule.abs_below_after = s.after;
        return;
      case Op::min_of:
        for (const auto& a : s.args) absorb(a);
        return;
      default:
        ok = false;
    }
  };
  absorb(spec);
  if (!ok || rule.trivial()) return std::nullopt;
  return rule;
}

}  // namespace martlab::walk_dp
