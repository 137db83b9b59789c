#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "space.hpp"

namespace martlab {

// Right-continuous piecewise-constant path: value at t is the value set by
// the last jump at or before t.
struct PiecewiseConstantPath {
  Rational initial = Rational(0);
  std::vector<std::pair<Rational, Rational>> jumps;  // (time, new value), times strictly increasing

  void validate() const;
  const Rational& value_at(const Rational& t) const;
  const Rational& terminal() const;  // value after the last jump
  bool operator==(const PiecewiseConstantPath&) const = default;

  // First disagreement time with another path: both evaluate equal on [0, t)
  // for every t <= the returned time, and differ at it (inf = identical).
  ExtTime first_difference(const PiecewiseConstantPath& other) const;
};

// Exact path process over a countable space. Paths are produced per atom from
// the immutable payload, so the same process serves a space and its uniform
// extension.
struct PathProcess {
  SpacePtr space;
  std::function<PiecewiseConstantPath(const Atom&)> path_of;
  bool terminating = true;
  std::string name;
};

Rational value_at(const PathProcess& p, const Atom& atom, const Rational& t);
Rational limit_at_infinity(const PathProcess& p, const Atom& atom);
Rational liminf_abs(const PathProcess& p, const Atom& atom);
Rational initial_value(const PathProcess& p);  // E[X_0] as exact expectation

// Simple symmetric random walk, +-1 jumps at integer times, started at 0.
// Generative: asymptotic claims about it are horizon-limited by construction.
struct GenerativeWalk {
  long horizon = 1000;
  int start = 0;
};

// Materializes the walk's first `steps` steps as an explicit finite space
// (2^steps equally weighted atoms) plus the matching path process. Desk-scale
// device for exact cross-checks; steps is capped accordingly.
std::pair<SpacePtr, PathProcess> materialize_walk(int steps);

PiecewiseConstantPath walk_path(const std::vector<int>& steps, int start = 0);

}  // namespace martlab
