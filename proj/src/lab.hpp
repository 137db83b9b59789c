#pragma once

#include <map>
#include <optional>
#include <string>

#include "path.hpp"

namespace martlab {

enum class Statement { I, II, III, IV, V };
enum class Verdict { holds_on_suite, violated, undecidable };

std::string statement_name(Statement s);
std::string verdict_name(Verdict v);

// A loaded experiment: either an exact path process over a countable space
// (possibly uniformly extended), or a generative walk.
struct Lab {
  std::string example;  // descriptor name, or "custom"
  std::optional<PathProcess> process;
  SpacePtr space;        // process->space (the extension when randomized)
  SpacePtr base_space;   // pre-extension space (== space when not extended)
  std::optional<GenerativeWalk> walk;
  int levels = 0;        // uniform levels when extended
  Rational eta;          // U reveal time when extended

  bool exact() const { return process.has_value(); }
  bool randomized() const { return levels > 0; }
};

}  // namespace martlab
