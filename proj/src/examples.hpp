#pragma once

#include <vector>

#include "lab.hpp"

namespace martlab {

// Canonical constructions: the counterexample space, its randomized
// extension, the generative walk, the non-adapted two-atom witness, and the
// nonnegative control.
struct ExampleParams {
  int depth = 50;        // working enumeration depth for exact checks
  int levels = 1000;     // uniform levels (cherny_randomized)
  Rational eta = Rational(0);
  long horizon = 1000;   // walk horizon
};

bool is_example_name(const std::string& name);
std::vector<std::string> example_names();

Lab build_example(const std::string& name, const ExampleParams& params = {});

// Ground-truth verdict table reproduced by the checker suite.
std::vector<std::pair<Statement, Verdict>> expected_properties(const std::string& name);

// The counterexample path process over an arbitrary cherny-shaped space
// (base or extension): X = D sigma^2 1_{[sigma, inf)}.
PathProcess cherny_process(SpacePtr space);

}  // namespace martlab
