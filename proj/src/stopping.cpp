#include "stopping.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace martlab {

// ---------------------------------------------------------------------------
// Builders

StoppingSpec StoppingSpec::constant(ExtTime at) {
  StoppingSpec s;
  s.op = Op::constant;
  if (at.is_finite() && at.t < 0) fail(Errc::invalid_argument, "stopping time must be >= 0");
  s.when = std::move(at);
  return s;
}

StoppingSpec StoppingSpec::hit_above(Rational level, bool strict) {
  StoppingSpec s;
  s.op = Op::hit_above;
  s.level = std::move(level);
  s.strict = strict;
  return s;
}

StoppingSpec StoppingSpec::hit_abs_above(Rational level) {
  StoppingSpec s;
  s.op = Op::hit_abs_above;
  s.level = std::move(level);
  return s;
}

StoppingSpec StoppingSpec::hit_abs_below(Rational level, Rational after) {
  StoppingSpec s;
  s.op = Op::hit_abs_below;
  if (after < 0) fail(Errc::invalid_argument, "'after' must be >= 0");
  s.level = std::move(level);
  s.after = std::move(after);
  return s;
}

StoppingSpec StoppingSpec::liminf_band(Rational tol) {
  StoppingSpec s;
  s.op = Op::liminf_band;
  if (tol < 0) fail(Errc::invalid_argument, "band tolerance must be >= 0");
  s.level = std::move(tol);
  return s;
}

StoppingSpec StoppingSpec::two_point(std::shared_ptr<const ObsEvent> event, Rational s_,
                                     Rational t_) {
  StoppingSpec s;
  s.op = Op::two_point;
  if (!event) fail(Errc::invalid_argument, "two_point needs an event");
  if (!(s_ < t_)) fail(Errc::invalid_argument, "two_point requires s < t");
  if (s_ < 0) fail(Errc::invalid_argument, "two_point requires s >= 0");
  s.event = std::move(event);
  s.s = std::move(s_);
  s.t = std::move(t_);
  return s;
}

StoppingSpec StoppingSpec::min_of(std::vector<StoppingSpec> args) {
  if (args.size() < 2) fail(Errc::invalid_argument, "min needs at least two arguments");
  StoppingSpec s;
  s.op = Op::min_of;
  s.args = std::move(args);
  return s;
}

StoppingSpec StoppingSpec::max_of(std::vector<StoppingSpec> args) {
  if (args.size() < 2) fail(Errc::invalid_argument, "max needs at least two arguments");
  StoppingSpec s;
  s.op = Op::max_of;
  s.args = std::move(args);
  return s;
}

StoppingSpec StoppingSpec::reciprocal_u() {
  StoppingSpec s;
  s.op = Op::reciprocal_u;
  return s;
}

bool StoppingSpec::uses_uniform() const {
  if (op == Op::reciprocal_u) return true;
  for (const auto& a : args)
    if (a.uses_uniform()) return true;
  return false;
}

bool StoppingSpec::uses_liminf() const {
  if (op == Op::liminf_band) return true;
  for (const auto& a : args)
    if (a.uses_liminf()) return true;
  return false;
}

std::optional<ExtTime> StoppingSpec::structural_bound(const CountableSpace* space) const {
  switch (op) {
    case Op::constant:
      return when.is_finite() ? std::optional<ExtTime>(when) : std::nullopt;
    case Op::two_point:
      return ExtTime::at(t);
    case Op::reciprocal_u:
      if (space && space->has_uniform()) {
        // smallest level is 1/(2m), so 1/U <= 2m
        return ExtTime::at(rat(2L * space->uniform_levels()));
      }
      return std::nullopt;
    case Op::min_of: {
      std::optional<ExtTime> best;
      for (const auto& a : args)
        if (auto b = a.structural_bound(space))
          if (!best || *b < *best) best = b;
      return best;
    }
    case Op::max_of: {
      std::optional<ExtTime> worst;
      for (const auto& a : args) {
        auto b = a.structural_bound(space);
        if (!b) return std::nullopt;
        if (!worst || *worst < *b) worst = b;
      }
      return worst;
    }
    default:
      return std::nullopt;
  }
}

std::string StoppingSpec::str() const {
  std::ostringstream os;
  switch (op) {
    case Op::constant:
      os << "const(" << when.str() << ")";
      break;
    case Op::hit_above:
      os << (strict ? "hit_above!(" : "hit_above(") << rat_str(level) << ")";
      break;
    case Op::hit_abs_above:
      os << "hit_abs_above(" << rat_str(level) << ")";
      break;
    case Op::hit_abs_below:
      os << "hit_abs_below(" << rat_str(level) << ";after=" << rat_str(after) << ")";
      break;
    case Op::liminf_band:
      os << "liminf_band(" << rat_str(level) << ")";
      break;
    case Op::two_point:
      os << "two_point(" << event->label << ";s=" << rat_str(s) << ";t=" << rat_str(t) << ")";
      break;
    case Op::min_of:
    case Op::max_of: {
      os << (op == Op::min_of ? "min(" : "max(");
      for (std::size_t i = 0; i < args.size(); ++i) os << (i ? "," : "") << args[i].str();
      os << ")";
      break;
    }
    case Op::reciprocal_u:
      os << "1/U";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

ExtTime evaluate(const StoppingSpec& spec, const PiecewiseConstantPath& path, const Atom& atom,
                 bool terminating) {
  using Op = StoppingSpec::Op;
  switch (spec.op) {
    case Op::constant:
      return spec.when;
    case Op::hit_above: {
      auto hits = [&](const Rational& v) { return spec.strict ? v > spec.level : v >= spec.level; };
      if (hits(path.initial)) return ExtTime::at(Rational(0));
      for (const auto& [time, v] : path.jumps)
        if (hits(v)) return ExtTime::at(time);
      return ExtTime::inf();
    }
    case Op::hit_abs_above: {
      if (rat_abs(path.initial) >= spec.level) return ExtTime::at(Rational(0));
      for (const auto& [time, v] : path.jumps)
        if (rat_abs(v) >= spec.level) return ExtTime::at(time);
      return ExtTime::inf();
    }
    case Op::hit_abs_below: {
      // value is constant between jumps, so the first eligible instant is
      // either `after` itself or a later jump epoch
      if (rat_abs(path.value_at(spec.after)) <= spec.level) return ExtTime::at(spec.after);
      for (const auto& [time, v] : path.jumps)
        if (time > spec.after && rat_abs(v) <= spec.level) return ExtTime::at(time);
      return ExtTime::inf();
    }
    case Op::liminf_band: {
      if (!terminating)
        fail(Errc::not_terminating, "liminf band needs a terminating process");
      Rational target = rat_abs(path.terminal());
      if (rat_abs(rat_abs(path.initial) - target) <= spec.level) return ExtTime::at(Rational(0));
      for (const auto& [time, v] : path.jumps)
        if (rat_abs(rat_abs(v) - target) <= spec.level) return ExtTime::at(time);
      return ExtTime::inf();  // unreachable: the terminal jump always qualifies
    }
    case Op::two_point:
      return ExtTime::at(spec.event->member_ids.count(atom.id) ? spec.t : spec.s);
    case Op::min_of: {
      ExtTime best = evaluate(spec.args[0], path, atom, terminating);
      for (std::size_t i = 1; i < spec.args.size(); ++i)
        best = min(best, evaluate(spec.args[i], path, atom, terminating));
      return best;
    }
    case Op::max_of: {
      ExtTime worst = evaluate(spec.args[0], path, atom, terminating);
      for (std::size_t i = 1; i < spec.args.size(); ++i)
        worst = max(worst, evaluate(spec.args[i], path, atom, terminating));
      return worst;
    }
    case Op::reciprocal_u: {
      if (!atom.u)
        fail(Errc::missing_uniform, "1/U requires a uniformly extended space");
      if (*atom.u <= 0) fail(Errc::invalid_argument, "uniform level must be positive");
      return ExtTime::at(Rational(1) / *atom.u);
    }
  }
  fail(Errc::internal, "unhandled stopping op");
}

ExtTime evaluate(const StoppingSpec& spec, const PathProcess& process, const Atom& atom) {
  return evaluate(spec, process.path_of(atom), atom, process.terminating);
}

Rational stopped_value(const PathProcess& process, const StoppingSpec& spec, const Atom& atom) {
  PiecewiseConstantPath path = process.path_of(atom);
  ExtTime tau = evaluate(spec, path, atom, process.terminating);
  if (tau.is_finite()) return path.value_at(tau.t);
  if (!process.terminating)
    fail(Errc::not_terminating, "tau = inf on a non-terminating process");
  return path.terminal();
}

PathProcess stop(const PathProcess& process, const StoppingSpec& spec) {
  auto spec_copy = std::make_shared<const StoppingSpec>(spec);
  auto bound = spec.structural_bound(process.space.get());
  PathProcess out;
  out.space = process.space;
  out.name = process.name + "^" + spec.str();
  out.terminating = process.terminating || (bound && bound->is_finite());
  out.path_of = [inner = process.path_of, spec_copy,
                 terminating = process.terminating](const Atom& a) {
    PiecewiseConstantPath path = inner(a);
    ExtTime tau = evaluate(*spec_copy, path, a, terminating);
    if (!tau.is_finite()) return path;
    while (!path.jumps.empty() && path.jumps.back().first > tau.t) path.jumps.pop_back();
    return path;
  };
  return out;
}

// ---------------------------------------------------------------------------
// Observations

std::string observation_signature(const PathProcess& process, const Atom& atom,
                                  const Rational& time) {
  PiecewiseConstantPath path = process.path_of(atom);
  std::ostringstream os;
  os << rat_str(path.initial);
  for (const auto& [jt, v] : path.jumps) {
    if (jt > time) break;
    os << ";" << rat_str(jt) << "->" << rat_str(v);
  }
  if (atom.u) {
    ExtTime reveal = process.space->reveal_time(atom);
    if (reveal <= ExtTime::at(time)) os << "|u=" << rat_str(*atom.u);
  }
  return os.str();
}

Partition observational_partition(const PathProcess& process, const Rational& time, int depth) {
  Partition part;
  part.depth = depth;
  std::map<std::string, std::size_t> index;

  auto block_for = [&](const std::string& sig) -> Partition::Block& {
    auto [it, fresh] = index.emplace(sig, part.blocks.size());
    if (fresh) {
      Partition::Block b;
      b.label = sig;
      part.blocks.push_back(std::move(b));
    }
    return part.blocks[it->second];
  };

  process.space->scan(depth, [&](const Atom& a, const Rational&, int) {
    block_for(observation_signature(process, a, time)).atom_ids.push_back(a.id);
    return true;
  });
  for (const auto& comp : process.space->tail(depth)) {
    if (ExtTime::at(time) > comp.agree_until)
      fail(Errc::invalid_argument,
           "observation time exceeds the tail agreement horizon; enumerate deeper");
    block_for(observation_signature(process, comp.rep, time)).tail_rep_ids.push_back(comp.rep.id);
  }
  return part;
}

std::shared_ptr<const ObsEvent> event_from_block(const Partition& partition, std::size_t block,
                                                 Rational time) {
  if (block >= partition.blocks.size()) fail(Errc::invalid_argument, "block index out of range");
  auto ev = std::make_shared<ObsEvent>();
  ev->time = std::move(time);
  const auto& b = partition.blocks[block];
  ev->member_ids.insert(b.atom_ids.begin(), b.atom_ids.end());
  ev->member_ids.insert(b.tail_rep_ids.begin(), b.tail_rep_ids.end());
  ev->label = "obs@" + rat_str(ev->time) + "#" + std::to_string(block);
  return ev;
}

// ---------------------------------------------------------------------------
// Adaptedness

std::size_t AdaptednessChecker::pair_index(std::size_t i, std::size_t j) const {
  // upper triangle of an n x n matrix, i < j
  std::size_t n = recs_.size();
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

AdaptednessChecker::AdaptednessChecker(const PathProcess& process, std::vector<Rational> grid,
                                       int depth)
    : process_(&process), grid_(std::move(grid)), depth_(depth) {
  if (grid_.empty()) fail(Errc::invalid_argument, "adaptedness check needs a nonempty grid");
  std::sort(grid_.begin(), grid_.end());
  grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
  if (grid_.front() < 0) fail(Errc::invalid_argument, "grid times must be nonnegative");

  process.space->scan(depth, [&](const Atom& a, const Rational&, int) {
    recs_.push_back({a, process.path_of(a), ExtTime::inf()});
    return true;
  });
  for (const auto& comp : process.space->tail(depth))
    recs_.push_back({comp.rep, process.path_of(comp.rep), comp.agree_until});

  std::size_t n = recs_.size();
  disagree_.resize(n * (n - 1) / 2, ExtTime::inf());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ExtTime d = recs_[i].path.first_difference(recs_[j].path);
      const Atom& a = recs_[i].atom;
      const Atom& b = recs_[j].atom;
      if (a.u && b.u && *a.u != *b.u) {
        ExtTime reveal = min(process.space->reveal_time(a), process.space->reveal_time(b));
        d = min(d, reveal);
      }
      disagree_[pair_index(i, j)] = d;
    }
  }
}

AdaptednessReport AdaptednessChecker::check(const StoppingSpec& spec) const {
  AdaptednessReport report;
  report.working_depth = depth_;

  std::vector<ExtTime> tau(recs_.size());
  for (std::size_t i = 0; i < recs_.size(); ++i)
    tau[i] = evaluate(spec, recs_[i].path, recs_[i].atom, process_->terminating);

  for (std::size_t i = 0; i < recs_.size(); ++i) {
    for (std::size_t j = i + 1; j < recs_.size(); ++j) {
      ++report.pairs_checked;
      ExtTime lo = min(tau[i], tau[j]);
      if (!lo.is_finite()) continue;
      ExtTime ub = min(disagree_[pair_index(i, j)], max(tau[i], tau[j]));
      ExtTime cap = min(recs_[i].cap, recs_[j].cap);

      // first grid time in [lo, ub) that also respects the tail cap
      auto it = std::lower_bound(grid_.begin(), grid_.end(), lo.t);
      if (it == grid_.end()) continue;
      ExtTime cand = ExtTime::at(*it);
      if (cand < ub && cand <= cap) {
        report.adapted = false;
        report.witness = AdaptednessWitness{recs_[i].atom, recs_[j].atom, *it};
        return report;
      }
    }
  }
  return report;
}

AdaptednessReport adaptedness_check(const StoppingSpec& spec, const PathProcess& process,
                                    const std::vector<Rational>& grid, int depth) {
  return AdaptednessChecker(process, grid, depth).check(spec);
}

bool replay_witness(const StoppingSpec& spec, const PathProcess& process,
                    const AdaptednessWitness& w) {
  std::string sa = observation_signature(process, w.a, w.time);
  std::string sb = observation_signature(process, w.b, w.time);
  if (sa != sb) return false;
  ExtTime ta = evaluate(spec, process, w.a);
  ExtTime tb = evaluate(spec, process, w.b);
  bool ia = ta <= ExtTime::at(w.time);
  bool ib = tb <= ExtTime::at(w.time);
  return ia != ib;
}

// ---------------------------------------------------------------------------
// Finiteness

std::string FinitenessCertificate::str() const {
  std::ostringstream os;
  switch (level) {
    case Level::bounded:
      os << "bounded(" << rat_str(bound) << ")";
      break;
    case Level::exact_finite:
      os << "exact_finite";
      break;
    case Level::exact_not_finite:
      os << "exact_not_finite(mass_at_infinity in " << mass_at_infinity.str() << ")";
      break;
    case Level::horizon_limited:
      os << "horizon_limited(P(tau<=" << horizon << ") = " << rat_str(p_within_horizon) << ")";
      break;
  }
  return os.str();
}

FinitenessCertificate finiteness_check(const StoppingSpec& spec, const PathProcess& process,
                                       int depth) {
  const CountableSpace& space = *process.space;
  auto structural = spec.structural_bound(&space);

  for (int attempt = 0; attempt < 4; ++attempt, depth *= 2) {
    int d = std::min(depth, space.depth_cap());
    Rational enum_inf_mass(0);
    Rational max_finite(0);
    bool any_finite = false;
    space.scan(d, [&](const Atom& a, const Rational& w, int) {
      ExtTime tau = evaluate(spec, process, a);
      if (tau.is_finite()) {
        any_finite = true;
        if (tau.t > max_finite) max_finite = tau.t;
      } else {
        enum_inf_mass += w;
      }
      return true;
    });

    bool rep_infinite = false;
    bool rep_unresolved = false;
    for (const auto& comp : space.tail(d)) {
      ExtTime tau = evaluate(spec, process, comp.rep);
      if (!tau.is_finite()) {
        rep_infinite = true;
      } else if (tau <= comp.agree_until) {
        any_finite = true;
        if (tau.t > max_finite) max_finite = tau.t;
      } else if (structural && structural->is_finite()) {
        if (structural->t > max_finite) max_finite = structural->t;
      } else {
        rep_unresolved = true;
      }
    }

    FinitenessCertificate cert;
    cert.working_depth = d;
    if (enum_inf_mass == 0 && !rep_infinite) {
      if (rep_unresolved) {
        if (d < space.depth_cap() && attempt + 1 < 4) continue;  // deepen
        cert.level = FinitenessCertificate::Level::exact_finite;
        return cert;
      }
      cert.level = FinitenessCertificate::Level::bounded;
      cert.bound = any_finite ? max_finite : Rational(0);
      return cert;
    }

    // some mass stops at infinity; bracket it
    Rational lo = enum_inf_mass;
    if (rep_infinite) lo += space.forever_tail_mass(d).lo;
    Rational hi = enum_inf_mass + space.residual(d);
    if (lo == 0) {
      if (d < space.depth_cap() && attempt + 1 < 4) continue;  // deepen for a positive bracket
      fail(Errc::indeterminate_tail, "cannot certify finiteness of " + spec.str() +
                                         " at depth " + std::to_string(d));
    }
    cert.level = FinitenessCertificate::Level::exact_not_finite;
    cert.mass_at_infinity = {lo, hi};
    return cert;
  }
  fail(Errc::internal, "finiteness_check loop exhausted");
}

// ---------------------------------------------------------------------------
// Uniform randomization

std::pair<SpacePtr, PathProcess> extend_with_uniform(const PathProcess& process, Rational eta,
                                                     int levels) {
  auto ext = std::make_shared<UniformExtensionSpace>(process.space, levels, std::move(eta));
  PathProcess rebound = process;
  rebound.space = ext;
  rebound.name = process.name + "+U";
  return {ext, rebound};
}

}  // namespace martlab
