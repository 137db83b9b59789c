#pragma once

#include <doctest.h>

#include "examples.hpp"
#include "montecarlo.hpp"

namespace martlab::testing {

inline Lab lab_from(std::pair<SpacePtr, PathProcess> sp, std::string name = "custom") {
  Lab lab;
  lab.example = std::move(name);
  lab.space = sp.first;
  lab.base_space = sp.first;
  lab.process = std::move(sp.second);
  return lab;
}

// |X| of an exact lab, as its own process (a nonnegative non-martingale
// whenever X jumps through zero).
inline Lab abs_lab(const Lab& src) {
  REQUIRE(src.exact());
  Lab lab = src;
  lab.example = "custom";
  PathProcess& p = *lab.process;
  p.name = "|" + p.name + "|";
  p.path_of = [inner = src.process->path_of](const Atom& a) {
    PiecewiseConstantPath path = inner(a);
    path.initial = rat_abs(path.initial);
    for (auto& [t, v] : path.jumps) v = rat_abs(v);
    return path;
  };
  return lab;
}

// Two-atom martingale with a returning excursion: +1 then back to 0, or -1
// then back to 0. M_0 = 0, liminf |M| = 0, and P(sup M > 2/5) = 1/2.
inline Lab excursion_lab() {
  std::vector<WeightedAtom> atoms(2);
  atoms[0].atom.id = 0;
  atoms[0].atom.label = "up";
  atoms[0].weight = Rational(1, 2);
  atoms[1].atom.id = 1;
  atoms[1].atom.label = "down";
  atoms[1].weight = Rational(1, 2);
  auto space = std::make_shared<FiniteSpace>("excursion", std::move(atoms));
  PathProcess p;
  p.space = space;
  p.name = "excursion_M";
  p.terminating = true;
  p.path_of = [](const Atom& a) {
    PiecewiseConstantPath path;
    Rational peak = a.base_id == 0 ? Rational(1) : Rational(-1);
    path.jumps.emplace_back(Rational(1), peak);
    path.jumps.emplace_back(Rational(2), Rational(0));
    return path;
  };
  return lab_from({space, p}, "custom");
}

// Constant-zero process on a single atom.
inline Lab zero_lab() {
  std::vector<WeightedAtom> atoms(1);
  atoms[0].atom.id = 0;
  atoms[0].atom.label = "omega";
  atoms[0].weight = Rational(1);
  auto space = std::make_shared<FiniteSpace>("zero", std::move(atoms));
  PathProcess p;
  p.space = space;
  p.name = "zero";
  p.terminating = true;
  p.path_of = [](const Atom&) { return PiecewiseConstantPath{}; };
  return lab_from({space, p}, "custom");
}

inline Rational Q(const char* s) { return rat_parse(s); }

}  // namespace martlab::testing
