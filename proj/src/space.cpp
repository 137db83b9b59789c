#include "space.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace martlab {

std::vector<WeightedAtom> CountableSpace::enumerate(int depth) const {
  std::vector<WeightedAtom> out;
  scan(depth, [&](const Atom& a, const Rational& w, int d) {
    out.push_back({a, w, d});
    return true;
  });
  return out;
}

// ---------------------------------------------------------------------------
// FiniteSpace

FiniteSpace::FiniteSpace(std::string name, std::vector<WeightedAtom> atoms)
    : name_(std::move(name)), atoms_(std::move(atoms)) {
  Rational total(0);
  for (auto& wa : atoms_) {
    if (wa.weight <= 0) fail(Errc::invalid_argument, "atom weight must be positive");
    wa.depth = 1;
    wa.atom.base_id = wa.atom.id;
    total += wa.weight;
  }
  if (total != 1) fail(Errc::invalid_argument, "finite space weights must sum to 1");
}

void FiniteSpace::scan(int depth,
                       const std::function<bool(const Atom&, const Rational&, int)>& fn) const {
  if (depth < 1) fail(Errc::invalid_argument, "depth must be >= 1");
  for (const auto& wa : atoms_)
    if (!fn(wa.atom, wa.weight, wa.depth)) return;
}

Rational FiniteSpace::residual(int depth) const {
  if (depth < 1) fail(Errc::invalid_argument, "depth must be >= 1");
  return Rational(0);
}

// ---------------------------------------------------------------------------
// ChernySpace
//
// P((n,i)) = 1/(4 n^2); enumeration order (1,+1), (1,-1), (2,+1), ...
// The sigma = inf outcomes are never enumerated: they live in the residual
// together with the not-yet-enumerated finite-sigma outcomes.

Atom ChernySpace::make_atom(long n, int sign) {
  Atom a;
  a.id = static_cast<std::uint64_t>(2 * (n - 1) + (sign > 0 ? 0 : 1));
  a.base_id = a.id;
  a.sigma = ExtTime::at(rat(n));
  a.sign = sign;
  a.label = "(" + std::to_string(n) + "," + (sign > 0 ? "+1" : "-1") + ")";
  return a;
}

Atom ChernySpace::infinity_atom() {
  Atom a;
  a.id = std::numeric_limits<std::uint64_t>::max();
  a.base_id = a.id;
  a.sigma = ExtTime::inf();
  a.sign = 0;
  a.is_tail_rep = true;
  a.label = "(inf,.)";
  return a;
}

void ChernySpace::scan(int depth,
                       const std::function<bool(const Atom&, const Rational&, int)>& fn) const {
  if (depth < 1) fail(Errc::invalid_argument, "depth must be >= 1");
  for (long n = 1; n <= depth; ++n) {
    Rational w(1, 4 * static_cast<unsigned long>(n) * static_cast<unsigned long>(n));
    if (!fn(make_atom(n, +1), w, static_cast<int>(n))) return;
    if (!fn(make_atom(n, -1), w, static_cast<int>(n))) return;
  }
}

Rational ChernySpace::residual(int depth) const {
  if (depth < 1) fail(Errc::invalid_argument, "depth must be >= 1");
  // Incremental: sum_{n<=N} 1/(2 n^2) extends the cached prefix.
  std::lock_guard<std::mutex> lock(mu_);
  if (cached_depth_ > depth) {
    cached_depth_ = 0;
    cached_mass_ = Rational(0);
  }
  for (long n = cached_depth_ + 1; n <= depth; ++n)
    cached_mass_ += Rational(1, 2 * static_cast<unsigned long>(n) * static_cast<unsigned long>(n));
  cached_depth_ = depth;
  return Rational(1) - cached_mass_;
}

std::vector<TailComponent> ChernySpace::tail(int depth) const {
  // One component: everything with sigma > depth (finite or infinite) looks
  // like the zero path through time `depth`.
  TailComponent c;
  c.rep = infinity_atom();
  c.agree_until = ExtTime::at(rat(depth));
  c.mass_fn = [this, depth]() { return residual(depth); };
  return {c};
}

RatInterval ChernySpace::forever_tail_mass(int depth) const {
  // mass(sigma = inf) = residual(N) - sum_{n>N} 1/(2n^2), and the remainder
  // sum is bracketed by the integral bounds [1/(2(N+1)), 1/(2N)].
  Rational res = residual(depth);
  Rational lo = res - Rational(1, 2 * static_cast<unsigned long>(depth));
  Rational hi = res - Rational(1, 2 * (static_cast<unsigned long>(depth) + 1));
  if (lo < 0) lo = 0;
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// UniformExtensionSpace

UniformExtensionSpace::UniformExtensionSpace(SpacePtr base, int levels, Rational reveal_eta)
    : base_(std::move(base)), levels_(levels), eta_(std::move(reveal_eta)) {
  if (!base_) fail(Errc::invalid_argument, "extension requires a base space");
  if (levels_ < 1) fail(Errc::invalid_argument, "uniform extension needs m >= 1");
  if (eta_ < 0) fail(Errc::invalid_argument, "reveal time must be nonnegative");
  if (base_->has_uniform()) fail(Errc::invalid_argument, "base space already carries a uniform");
}

Rational UniformExtensionSpace::level_value(int k) const {
  if (k < 0 || k >= levels_) fail(Errc::invalid_argument, "level index out of range");
  return Rational(2 * static_cast<long>(k) + 1, 2 * static_cast<long>(levels_));
}

Atom UniformExtensionSpace::extend_atom(const Atom& base_atom, int k) const {
  Atom a = base_atom;
  a.base_id = base_atom.base_id;
  a.id = base_atom.is_tail_rep
             ? std::numeric_limits<std::uint64_t>::max() - static_cast<std::uint64_t>(k)
             : base_atom.id * static_cast<std::uint64_t>(levels_) + static_cast<std::uint64_t>(k);
  a.u = level_value(k);
  a.u_index = k;
  a.label = base_atom.label + "&u=" + rat_str(*a.u);
  return a;
}

void UniformExtensionSpace::scan(
    int depth, const std::function<bool(const Atom&, const Rational&, int)>& fn) const {
  Rational inv_m(1, static_cast<unsigned long>(levels_));
  base_->scan(depth, [&](const Atom& b, const Rational& w, int d) {
    Rational w_ext = w * inv_m;
    for (int k = 0; k < levels_; ++k)
      if (!fn(extend_atom(b, k), w_ext, d)) return false;
    return true;
  });
}

std::vector<TailComponent> UniformExtensionSpace::tail(int depth) const {
  // Per-level components: within a level the U observation agrees, so the
  // base rep still represents the component.
  std::vector<TailComponent> out;
  Rational inv_m(1, static_cast<unsigned long>(levels_));
  for (const auto& base_comp : base_->tail(depth)) {
    for (int k = 0; k < levels_; ++k) {
      TailComponent c;
      c.rep = extend_atom(base_comp.rep, k);
      c.rep.is_tail_rep = true;
      c.agree_until = base_comp.agree_until;
      c.mass_fn = [base_mass = base_comp.mass_fn, inv_m]() { return base_mass() * inv_m; };
      out.push_back(std::move(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expectation engine

Rational result_value(const ExpectationResult& r) {
  if (const auto* e = std::get_if<ExactResult>(&r)) return e->value;
  if (const auto* t = std::get_if<TruncatedResult>(&r)) return t->value;
  fail(Errc::invalid_argument, "divergence certificate has no finite value");
}

bool result_is_exact_zero(const ExpectationResult& r) {
  const auto* e = std::get_if<ExactResult>(&r);
  return e && e->value == 0;
}

std::string result_str(const ExpectationResult& r) {
  std::ostringstream os;
  if (const auto* e = std::get_if<ExactResult>(&r)) {
    os << "Exact(" << rat_str(e->value) << ")";
  } else if (const auto* t = std::get_if<TruncatedResult>(&r)) {
    os << "Truncated(" << rat_str(t->value) << " +- " << rat_str(t->tail_bound) << ")";
  } else {
    const auto& c = std::get<DivergenceCertificate>(r);
    os << "Diverges(S_" << c.depth << " = " << rat_str(c.partial_sum) << " > "
       << rat_str(c.threshold) << ")";
  }
  return os.str();
}

ExpectationResult expectation(const CountableSpace& space, const RandomVariable& rv,
                              const ExpectationPolicy& policy) {
  if (policy.max_depth < 1) fail(Errc::invalid_argument, "max_depth must be >= 1");
  if (!rv.eval) fail(Errc::invalid_argument, "random variable has no evaluator");

  int depth = policy.max_depth;
  if (rv.sufficient_depth) depth = std::min(depth, std::max(1, *rv.sufficient_depth));
  depth = std::min(depth, space.depth_cap());

  // an early exit at the threshold is only sound when no exact tail
  // resolution was promised at a specific depth
  const bool may_stop_early =
      policy.stop_at_threshold && rv.nonnegative && !rv.sufficient_depth;

  Rational sum(0);
  std::vector<GrowthSample> samples;
  long next_sample = 1;
  long crossing_depth = -1;
  Rational crossing_sum(0);
  int completed = 0;

  auto close_depth = [&](int d) {
    // every atom of depth <= d has been accumulated
    while (next_sample <= d) {
      samples.push_back({next_sample, sum});
      if (next_sample > std::numeric_limits<long>::max() / 10) break;
      next_sample *= 10;
    }
    if (crossing_depth < 0 && rv.nonnegative && sum > policy.divergence_threshold) {
      crossing_depth = d;
      crossing_sum = sum;
    }
  };

  space.scan(depth, [&](const Atom& a, const Rational& w, int d) {
    while (completed < d - 1) {
      close_depth(++completed);
      if (may_stop_early && crossing_depth > 0) return false;
    }
    Rational v = rv.eval(a);
    if (rv.nonnegative && v < 0)
      fail(Errc::internal, "rv '" + rv.name + "' declared nonnegative but evaluates negative");
    sum += v * w;
    return true;
  });
  if (!(may_stop_early && crossing_depth > 0))
    while (completed < depth) {
      close_depth(++completed);
      if (may_stop_early && crossing_depth > 0) break;
    }

  if (may_stop_early && crossing_depth > 0) {
    DivergenceCertificate cert;
    cert.threshold = policy.divergence_threshold;
    cert.depth = crossing_depth;
    cert.partial_sum = crossing_sum;
    cert.growth_samples = std::move(samples);
    if (cert.growth_samples.empty() || cert.growth_samples.back().depth != crossing_depth)
      cert.growth_samples.push_back({crossing_depth, crossing_sum});
    return cert;
  }

  // Tail resolution. Component masses are only materialized when a nonzero
  // exact value or a bound actually needs them.
  bool any_bound = false;
  bool any_unknown = false;
  Rational bound_total(0);
  for (const auto& comp : space.tail(depth)) {
    TailEval te = rv.tail_eval ? rv.tail_eval(comp) : TailEval::unknown();
    switch (te.kind) {
      case TailEval::Kind::exact:
        if (te.v != 0) sum += te.v * comp.mass();
        break;
      case TailEval::Kind::abs_bound:
        if (te.v != 0) {
          any_bound = true;
          bound_total += rat_abs(te.v) * comp.mass();
        }
        break;
      case TailEval::Kind::unknown:
        any_unknown = true;
        break;
    }
  }

  if (!any_unknown) {
    if (!any_bound || bound_total == 0) return ExactResult{sum};
    return TruncatedResult{sum, bound_total};
  }

  if (rv.nonnegative && crossing_depth > 0) {
    DivergenceCertificate cert;
    cert.threshold = policy.divergence_threshold;
    cert.depth = crossing_depth;
    cert.partial_sum = crossing_sum;
    cert.growth_samples = std::move(samples);
    if (cert.growth_samples.empty() || cert.growth_samples.back().depth != depth)
      cert.growth_samples.push_back({depth, sum});
    return cert;
  }

  fail(Errc::indeterminate_tail,
       "expectation of '" + rv.name + "' is not decidable under the policy (depth " +
           std::to_string(depth) + ", unresolved tail)");
}

// ---------------------------------------------------------------------------
// Conditional expectation

RandomVariable conditional_expectation(const CountableSpace& space, const RandomVariable& rv,
                                       const Partition& partition) {
  auto atoms = space.enumerate(partition.depth);

  std::map<std::uint64_t, std::size_t> block_of;       // enumerated atom -> block
  std::map<std::uint64_t, std::size_t> tail_block_of;  // tail rep -> block
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    for (auto id : partition.blocks[b].atom_ids)
      if (!block_of.emplace(id, b).second)
        fail(Errc::invalid_argument, "partition blocks are not disjoint");
    for (auto id : partition.blocks[b].tail_rep_ids)
      if (!tail_block_of.emplace(id, b).second)
        fail(Errc::invalid_argument, "tail component assigned to two blocks");
  }
  if (block_of.size() != atoms.size())
    fail(Errc::invalid_argument, "partition does not cover the enumerated space");

  std::vector<Rational> mass(partition.blocks.size(), Rational(0));
  std::vector<Rational> val(partition.blocks.size(), Rational(0));
  for (const auto& wa : atoms) {
    auto it = block_of.find(wa.atom.id);
    if (it == block_of.end())
      fail(Errc::invalid_argument, "enumerated atom missing from partition");
    mass[it->second] += wa.weight;
    val[it->second] += wa.weight * rv.eval(wa.atom);
  }

  for (const auto& comp : space.tail(partition.depth)) {
    auto it = tail_block_of.find(comp.rep.id);
    if (it == tail_block_of.end()) continue;  // uncovered tail; output tail stays unknown
    TailEval te = rv.tail_eval ? rv.tail_eval(comp) : TailEval::unknown();
    if (te.kind != TailEval::Kind::exact)
      fail(Errc::indeterminate_tail,
           "conditional expectation: rv not exactly evaluable on a tail block");
    mass[it->second] += comp.mass();
    val[it->second] += comp.mass() * te.v;
  }

  auto means = std::make_shared<std::vector<Rational>>();
  means->reserve(partition.blocks.size());
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    if (mass[b] == 0)
      fail(Errc::zero_mass_block,
           "partition block '" + partition.blocks[b].label + "' has zero mass");
    means->push_back(val[b] / mass[b]);
  }

  auto enum_lookup = std::make_shared<std::map<std::uint64_t, std::size_t>>(std::move(block_of));
  auto tail_lookup =
      std::make_shared<std::map<std::uint64_t, std::size_t>>(std::move(tail_block_of));
  RandomVariable out;
  out.name = "E[" + rv.name + "|partition]";
  out.sufficient_depth = partition.depth;
  out.eval = [enum_lookup, tail_lookup, means](const Atom& a) -> Rational {
    auto it = enum_lookup->find(a.id);
    if (it == enum_lookup->end()) {
      it = tail_lookup->find(a.id);
      if (it == tail_lookup->end())
        fail(Errc::invalid_argument, "conditional expectation queried outside the partition");
    }
    return (*means)[it->second];
  };
  out.tail_eval = [tail_lookup, means](const TailComponent& c) {
    auto it = tail_lookup->find(c.rep.id);
    if (it == tail_lookup->end()) return TailEval::unknown();
    return TailEval::exact((*means)[it->second]);
  };
  return out;
}

}  // namespace martlab
