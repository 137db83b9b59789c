#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "path.hpp"
#include "stopping.hpp"

namespace martlab {

// Counter-based generator: draw j of replication i under seed s is a pure
// function of (s, i, j), so results are independent of scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return at(counter_++); }

  // uniform on (0,1): 53 random bits, offset off 0
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t at(std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

// Order-independent reduction: fixed binary tree over the index range.
double pairwise_sum(std::span<const double> xs);

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;  // 3 standard errors
  std::size_t n = 0;
  std::uint64_t seed = 0;

  bool covers(double x) const { return mean - half_width <= x && x <= mean + half_width; }
};

Estimate summarize(std::span<const double> values, std::uint64_t seed);

// Inverse-CDF draw over the depth-d enumeration prefix; index >= atoms.size()
// encodes the explicit tail category.
struct SampledAtoms {
  std::vector<WeightedAtom> atoms;   // prefix
  std::vector<double> cumulative;    // cumulative weights (double precision)
  double tail_prob = 0.0;

  // returns atom index, or atoms.size() for the tail category
  std::size_t draw(double unit) const;
};

SampledAtoms prepare_sampler(const CountableSpace& space, int depth);

// Sample mean of rv over n replications. The rv must be exactly evaluable on
// the tail category (tail_eval exact on every component).
Estimate estimate_expectation(const CountableSpace& space, const RandomVariable& rv, int depth,
                              std::size_t n, std::uint64_t seed);

// Stopped-value estimates: `value` estimates E[X_{tau ^ horizon}];
// `stopped_value_mean` estimates E[X_tau ; tau <= horizon] (zeros for paths
// that outlive the horizon); stop_rate is the stopped fraction.
struct StoppedEstimate {
  Estimate value;
  double stopped_value_mean = 0.0;
  double stop_rate = 0.0;
};

StoppedEstimate estimate_stopped_walk(const GenerativeWalk& walk, const StoppingSpec& spec,
                                      std::size_t n, long horizon, std::uint64_t seed);

// Same estimate over an exact terminating process: atoms are sampled by
// weight, tau evaluated pathwise.
StoppedEstimate estimate_stopped_exact(const PathProcess& process, const StoppingSpec& spec,
                                       int depth, std::size_t n, long horizon,
                                       std::uint64_t seed);

// |X_{1/U}| on cherny with U sampled continuously (clamped to >= u_floor so
// a single replication stays finite); the exact engine's discretized U is the
// other half of this dual view.
Estimate estimate_cherny_reciprocal_u_abs(std::size_t n, double u_floor, std::uint64_t seed);

}  // namespace martlab
