#include "path.hpp"

#include <algorithm>

namespace martlab {

void PiecewiseConstantPath::validate() const {
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    if (jumps[i].first < 0) fail(Errc::invalid_argument, "jump time must be nonnegative");
    if (i > 0 && !(jumps[i - 1].first < jumps[i].first))
      fail(Errc::invalid_argument, "jump times must be strictly increasing");
  }
}

const Rational& PiecewiseConstantPath::value_at(const Rational& t) const {
  if (t < 0) fail(Errc::invalid_argument, "path evaluated at negative time");
  const Rational* v = &initial;
  for (const auto& [time, val] : jumps) {
    if (time <= t)
      v = &val;
    else
      break;
  }
  return *v;
}

const Rational& PiecewiseConstantPath::terminal() const {
  return jumps.empty() ? initial : jumps.back().second;
}

ExtTime PiecewiseConstantPath::first_difference(const PiecewiseConstantPath& other) const {
  if (initial != other.initial) return ExtTime::at(Rational(0));
  std::size_t i = 0, j = 0;
  Rational cur_a = initial, cur_b = other.initial;
  while (i < jumps.size() || j < other.jumps.size()) {
    // next event time across both paths
    const Rational* ta = i < jumps.size() ? &jumps[i].first : nullptr;
    const Rational* tb = j < other.jumps.size() ? &other.jumps[j].first : nullptr;
    Rational t = ta && tb ? rat_min(*ta, *tb) : (ta ? *ta : *tb);
    if (ta && *ta == t) cur_a = jumps[i++].second;
    if (tb && *tb == t) cur_b = other.jumps[j++].second;
    if (cur_a != cur_b) return ExtTime::at(t);
  }
  return ExtTime::inf();
}

Rational value_at(const PathProcess& p, const Atom& atom, const Rational& t) {
  return p.path_of(atom).value_at(t);
}

Rational limit_at_infinity(const PathProcess& p, const Atom& atom) {
  if (!p.terminating)
    fail(Errc::not_terminating, "limit at infinity requires a terminating process");
  return p.path_of(atom).terminal();
}

Rational liminf_abs(const PathProcess& p, const Atom& atom) {
  // paths are eventually constant, so liminf |X_t| = |terminal value|
  return rat_abs(limit_at_infinity(p, atom));
}

Rational initial_value(const PathProcess& p) {
  RandomVariable rv;
  rv.name = "X_0";
  rv.eval = [&p](const Atom& a) { return p.path_of(a).value_at(Rational(0)); };
  rv.tail_eval = [&p](const TailComponent& c) {
    if (c.agree_until >= ExtTime::at(Rational(0)))
      return TailEval::exact(p.path_of(c.rep).value_at(Rational(0)));
    return TailEval::unknown();
  };
  rv.sufficient_depth = 1;
  return result_value(expectation(*p.space, rv));
}

PiecewiseConstantPath walk_path(const std::vector<int>& steps, int start) {
  PiecewiseConstantPath path;
  path.initial = rat(start);
  long pos = start;
  path.jumps.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    pos += steps[i];
    path.jumps.emplace_back(rat(static_cast<long>(i) + 1), rat(pos));
  }
  return path;
}

std::pair<SpacePtr, PathProcess> materialize_walk(int steps) {
  if (steps < 1 || steps > 20)
    fail(Errc::invalid_argument, "materialized walk supports 1..20 steps");
  const std::uint64_t count = 1ull << steps;
  std::vector<WeightedAtom> atoms;
  atoms.reserve(count);
  Rational w(1, static_cast<unsigned long>(count));
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    Atom a;
    a.id = bits;
    a.sigma = ExtTime::inf();
    a.label = "walk#" + std::to_string(bits);
    atoms.push_back({a, w, 1});
  }
  auto space = std::make_shared<FiniteSpace>("walk" + std::to_string(steps), std::move(atoms));

  const int n = steps;
  PathProcess proc;
  proc.space = space;
  proc.name = "walk" + std::to_string(steps);
  proc.terminating = true;
  proc.path_of = [n](const Atom& a) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = (a.id >> i) & 1 ? 1 : -1;
    return walk_path(s);
  };
  return {space, proc};
}

}  // namespace martlab
