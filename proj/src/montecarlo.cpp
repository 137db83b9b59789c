#include "montecarlo.hpp"

#include "walk_dp.hpp"

#include <algorithm>
#include <cmath>

namespace martlab {

namespace {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t CounterRng::at(std::uint64_t counter) const {
  std::uint64_t k = splitmix64(seed_ ^ 0x8f2f73a1b2c5d47eull);
  k = splitmix64(k ^ stream_);
  return splitmix64(k ^ counter);
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Estimate summarize(std::span<const double> values, std::uint64_t seed) {
  Estimate e;
  e.n = values.size();
  e.seed = seed;
  if (values.empty()) return e;
  double n = static_cast<double>(values.size());
  e.mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double d = values[i] - e.mean;
    sq[i] = d * d;
  }
  double var = values.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  e.half_width = 3.0 * std::sqrt(var / n);
  return e;
}

std::size_t SampledAtoms::draw(double unit) const {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), unit);
  return static_cast<std::size_t>(it - cumulative.begin());
}

SampledAtoms prepare_sampler(const CountableSpace& space, int depth) {
  SampledAtoms s;
  s.atoms = space.enumerate(depth);
  s.cumulative.reserve(s.atoms.size());
  double acc = 0.0;
  for (const auto& wa : s.atoms) {
    acc += rat_double(wa.weight);
    s.cumulative.push_back(acc);
  }
  s.tail_prob = std::max(0.0, 1.0 - acc);
  return s;
}

Estimate estimate_expectation(const CountableSpace& space, const RandomVariable& rv, int depth,
                              std::size_t n, std::uint64_t seed) {
  depth = std::min(depth, space.depth_cap());
  SampledAtoms sampler = prepare_sampler(space, depth);

  // the tail category needs one exact value; refuse mixed tails
  auto comps = space.tail(depth);
  bool have_tail_value = true;
  bool uniform_value = true;
  std::optional<Rational> common;
  for (const auto& c : comps) {
    TailEval te = rv.tail_eval ? rv.tail_eval(c) : TailEval::unknown();
    if (te.kind != TailEval::Kind::exact) {
      have_tail_value = false;
      break;
    }
    if (!common)
      common = te.v;
    else if (*common != te.v)
      uniform_value = false;
  }
  if (!have_tail_value)
    fail(Errc::indeterminate_tail,
         "sampling '" + rv.name + "': tail category has no exact value");
  double tail_value = 0.0;
  if (common && uniform_value) {
    tail_value = rat_double(*common);
  } else if (common) {
    // mixed exact values: mass-weighted mean (small depths only; masses are
    // exact rationals)
    Rational acc(0), mass(0);
    for (const auto& c : comps) {
      TailEval te = rv.tail_eval(c);
      acc += te.v * c.mass();
      mass += c.mass();
    }
    if (mass > 0) tail_value = rat_double(acc / mass);
  }

  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    std::size_t idx = sampler.draw(rng.next_unit());
    vals[i] = idx < sampler.atoms.size() ? rat_double(rv.eval(sampler.atoms[idx].atom))
                                         : tail_value;
  }
  return summarize(vals, seed);
}

namespace {

// Streams one walk path and evaluates X_{tau ^ horizon}; integer-state fast
// path of the generic evaluator (the unit tests tie the two together).
struct WalkStopper {
  bool has_above = false;
  long above_at = 0;
  bool has_abs_above = false;
  long abs_above_at = 0;
  bool has_abs_below = false;
  long abs_below_at = 0;
  double abs_below_after = 0.0;
  std::optional<long> cap;

  static WalkStopper compile(const StoppingSpec& spec, long horizon) {
    auto rule = walk_dp::compile_rule(spec);
    if (!rule)
      fail(Errc::invalid_argument,
           "stopping spec '" + spec.str() + "' is not supported on the generative walk");
    WalkStopper w;
    if (rule->above_level) {
      w.has_above = true;
      w.above_at = rule->above_strict ? rat_floor(*rule->above_level) + 1
                                      : rat_ceil(*rule->above_level);
    }
    if (rule->abs_above_level) {
      w.has_abs_above = true;
      w.abs_above_at = rat_ceil(*rule->abs_above_level);
    }
    if (rule->abs_below_level) {
      w.has_abs_below = true;
      w.abs_below_at = rat_floor(*rule->abs_below_level);
      w.abs_below_after = rat_double(rule->abs_below_after);
    }
    w.cap = rule->const_cap;
    if (w.cap && *w.cap > horizon) w.cap.reset();
    return w;
  }

  // absorbed at state s seen from time t?
  bool absorbs(long s, long t, long horizon) const {
    if (has_above && s >= above_at) return true;
    if (has_abs_above && std::labs(s) >= abs_above_at) return true;
    if (has_abs_below && std::labs(s) <= abs_below_at && abs_below_after < t + 1 &&
        abs_below_after <= static_cast<double>(horizon))
      return true;
    return false;
  }
};

}  // namespace

StoppedEstimate estimate_stopped_walk(const GenerativeWalk& walk, const StoppingSpec& spec,
                                      std::size_t n, long horizon, std::uint64_t seed) {
  if (horizon < 0) fail(Errc::invalid_argument, "horizon must be >= 0");
  WalkStopper stopper = WalkStopper::compile(spec, horizon);

  std::vector<double> vals(n);
  std::vector<double> stopped_vals(n, 0.0);
  std::size_t stopped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    long s = walk.start;
    long stop_at = stopper.cap ? *stopper.cap : horizon;
    bool done = stopper.absorbs(s, 0, horizon);
    long t = 0;
    while (!done && t < stop_at) {
      ++t;
      s += (rng.next_u64() & 1) ? 1 : -1;
      done = stopper.absorbs(s, t, horizon);
    }
    if (done || stopper.cap) {
      ++stopped;
      stopped_vals[i] = static_cast<double>(s);
    }
    vals[i] = static_cast<double>(s);
  }
  StoppedEstimate out;
  out.value = summarize(vals, seed);
  out.stopped_value_mean = pairwise_sum(stopped_vals) / static_cast<double>(n ? n : 1);
  out.stop_rate = static_cast<double>(stopped) / static_cast<double>(n ? n : 1);
  return out;
}

StoppedEstimate estimate_stopped_exact(const PathProcess& process, const StoppingSpec& spec,
                                       int depth, std::size_t n, long horizon,
                                       std::uint64_t seed) {
  if (!process.terminating)
    fail(Errc::not_terminating, "exact stopped estimates need a terminating process");
  depth = std::min(depth, process.space->depth_cap());
  SampledAtoms sampler = prepare_sampler(*process.space, depth);
  ExtTime cap = ExtTime::at(rat(horizon));

  // tail category resolves through the rep when tau settles inside the
  // agreement window (the cap keeps it there for bounded queries)
  auto comps = process.space->tail(depth);
  std::optional<double> tail_value;
  std::optional<bool> tail_stopped;
  bool tail_uniform = true;
  for (const auto& comp : comps) {
    PiecewiseConstantPath path = process.path_of(comp.rep);
    ExtTime tau = evaluate(spec, path, comp.rep, true);
    ExtTime at = min(tau, cap);
    if (at > comp.agree_until) {
      tail_uniform = false;
      break;
    }
    double v = rat_double(path.value_at(at.t));
    bool st = tau <= cap;
    if (!tail_value) {
      tail_value = v;
      tail_stopped = st;
    } else if (*tail_value != v || *tail_stopped != st) {
      tail_uniform = false;
      break;
    }
  }
  if (!comps.empty() && !tail_uniform)
    fail(Errc::indeterminate_tail, "stopped estimate: tail category is not resolvable");

  std::vector<double> vals(n);
  std::vector<double> stopped_vals(n, 0.0);
  std::size_t stopped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    std::size_t idx = sampler.draw(rng.next_unit());
    if (idx >= sampler.atoms.size()) {
      vals[i] = tail_value.value_or(0.0);
      if (tail_stopped.value_or(false)) {
        ++stopped;
        stopped_vals[i] = vals[i];
      }
      continue;
    }
    const Atom& a = sampler.atoms[idx].atom;
    PiecewiseConstantPath path = process.path_of(a);
    ExtTime tau = evaluate(spec, path, a, true);
    ExtTime at = min(tau, cap);
    vals[i] = rat_double(path.value_at(at.t));
    if (tau <= cap) {
      ++stopped;
      stopped_vals[i] = vals[i];
    }
  }
  StoppedEstimate out;
  out.value = summarize(vals, seed);
  out.stopped_value_mean = pairwise_sum(stopped_vals) / static_cast<double>(n ? n : 1);
  out.stop_rate = static_cast<double>(stopped) / static_cast<double>(n ? n : 1);
  return out;
}

Estimate estimate_cherny_reciprocal_u_abs(std::size_t n, double u_floor, std::uint64_t seed) {
  if (!(u_floor > 0.0) || u_floor >= 1.0)
    fail(Errc::invalid_argument, "u_floor must be in (0,1)");
  // P(sigma = n) = 1/(2 n^2); sample sigma by inverse CDF, tail = sigma = inf
  // effectively (X stays 0). |X_{1/U}| = sigma^2 when sigma <= 1/U.
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    double u = std::max(rng.next_unit(), u_floor);
    double tau = 1.0 / u;
    double r = rng.next_unit();  // selects sigma
    double acc = 0.0;
    double value = 0.0;
    for (long m = 1; m <= static_cast<long>(tau); ++m) {
      acc += 1.0 / (2.0 * static_cast<double>(m) * static_cast<double>(m));
      if (r < acc) {
        value = static_cast<double>(m) * static_cast<double>(m);
        break;
      }
    }
    vals[i] = value;  // 0 when sigma > tau (including the sigma = inf mass)
  }
  return summarize(vals, seed);
}

}  // namespace martlab
