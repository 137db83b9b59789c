#include "examples.hpp"

#include <algorithm>

#include "stopping.hpp"

namespace martlab {

std::string statement_name(Statement s) {
  switch (s) {
    case Statement::I: return "I";
    case Statement::II: return "II";
    case Statement::III: return "III";
    case Statement::IV: return "IV";
    case Statement::V: return "V";
  }
  return "?";
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::holds_on_suite: return "holds_on_suite";
    case Verdict::violated: return "violated";
    case Verdict::undecidable: return "undecidable";
  }
  return "?";
}

std::vector<std::string> example_names() {
  return {"cherny", "cherny_randomized", "random_walk", "two_atom_nonadapted",
          "nonnegative_control"};
}

bool is_example_name(const std::string& name) {
  auto names = example_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

PathProcess cherny_process(SpacePtr space) {
  PathProcess p;
  p.space = std::move(space);
  p.name = "cherny_X";
  p.terminating = true;
  p.path_of = [](const Atom& a) {
    PiecewiseConstantPath path;
    path.initial = Rational(0);
    if (a.sigma.is_finite()) {
      Rational v = a.sigma.t * a.sigma.t;
      if (a.sign < 0) v = -v;
      path.jumps.emplace_back(a.sigma.t, std::move(v));
    }
    return path;
  };
  return p;
}

namespace {

Lab build_two_atom() {
  // paths agree on [0,1), terminal values 5 and 0: the T_n witness pair
  std::vector<WeightedAtom> atoms(2);
  atoms[0].atom.id = 0;
  atoms[0].atom.label = "jump5";
  atoms[0].weight = Rational(1, 2);
  atoms[1].atom.id = 1;
  atoms[1].atom.label = "flat0";
  atoms[1].weight = Rational(1, 2);
  auto space = std::make_shared<FiniteSpace>("two_atom", std::move(atoms));

  PathProcess p;
  p.space = space;
  p.name = "two_atom_X";
  p.terminating = true;
  p.path_of = [](const Atom& a) {
    PiecewiseConstantPath path;
    if (a.base_id == 0) path.jumps.emplace_back(Rational(1), Rational(5));
    return path;
  };

  Lab lab;
  lab.example = "two_atom_nonadapted";
  lab.process = std::move(p);
  lab.space = space;
  lab.base_space = space;
  return lab;
}

Lab build_constant_one() {
  std::vector<WeightedAtom> atoms(1);
  atoms[0].atom.id = 0;
  atoms[0].atom.label = "omega";
  atoms[0].weight = Rational(1);
  auto space = std::make_shared<FiniteSpace>("point", std::move(atoms));

  PathProcess p;
  p.space = space;
  p.name = "const_1";
  p.terminating = true;
  p.path_of = [](const Atom&) {
    PiecewiseConstantPath path;
    path.initial = Rational(1);
    return path;
  };

  Lab lab;
  lab.example = "nonnegative_control";
  lab.process = std::move(p);
  lab.space = space;
  lab.base_space = space;
  return lab;
}

}  // namespace

Lab build_example(const std::string& name, const ExampleParams& params) {
  if (name == "cherny") {
    Lab lab;
    lab.example = name;
    auto space = std::make_shared<ChernySpace>();
    lab.process = cherny_process(space);
    lab.space = space;
    lab.base_space = space;
    return lab;
  }
  if (name == "cherny_randomized") {
    if (params.levels < 1) fail(Errc::invalid_argument, "levels must be >= 1");
    Lab lab;
    lab.example = name;
    auto base = std::make_shared<ChernySpace>();
    auto [ext, proc] = extend_with_uniform(cherny_process(base), params.eta, params.levels);
    lab.process = std::move(proc);
    lab.space = ext;
    lab.base_space = base;
    lab.levels = params.levels;
    lab.eta = params.eta;
    return lab;
  }
  if (name == "random_walk") {
    if (params.horizon < 1) fail(Errc::invalid_argument, "horizon must be >= 1");
    Lab lab;
    lab.example = name;
    lab.walk = GenerativeWalk{params.horizon, 0};
    return lab;
  }
  if (name == "two_atom_nonadapted") return build_two_atom();
  if (name == "nonnegative_control") return build_constant_one();
  fail(Errc::invalid_argument, "unknown example '" + name + "'");
}

std::vector<std::pair<Statement, Verdict>> expected_properties(const std::string& name) {
  using S = Statement;
  using V = Verdict;
  if (name == "cherny")
    return {{S::I, V::violated},
            {S::II, V::violated},
            {S::III, V::violated},
            {S::IV, V::holds_on_suite},
            {S::V, V::holds_on_suite}};
  if (name == "cherny_randomized")
    return {{S::I, V::violated},
            {S::II, V::violated},
            {S::III, V::violated},
            {S::IV, V::violated},
            {S::V, V::holds_on_suite}};
  if (name == "random_walk")
    return {{S::I, V::undecidable},
            {S::II, V::undecidable},
            {S::III, V::undecidable},
            {S::IV, V::violated},
            {S::V, V::holds_on_suite}};
  if (name == "two_atom_nonadapted")
    return {{S::I, V::violated},
            {S::II, V::violated},
            {S::III, V::violated},
            {S::IV, V::violated},
            {S::V, V::violated}};
  if (name == "nonnegative_control")
    return {{S::I, V::holds_on_suite},
            {S::II, V::holds_on_suite},
            {S::III, V::holds_on_suite},
            {S::IV, V::holds_on_suite},
            {S::V, V::holds_on_suite}};
  fail(Errc::invalid_argument, "unknown example '" + name + "'");
}

}  // namespace martlab
