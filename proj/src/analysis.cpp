#include "analysis.hpp"

#include "examples.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace martlab {

// -- random-variable constructors -------------------------------------------

RandomVariable rv_value_at(PathProcess p, Rational t, bool absolute) {
  RandomVariable rv;
  rv.name = (absolute ? "|X_" : "X_") + rat_str(t) + (absolute ? "|" : "");
  rv.nonnegative = absolute;
  rv.sufficient_depth = std::max(1L, rat_ceil(t));
  rv.eval = [p, t, absolute](const Atom& a) {
    Rational v = p.path_of(a).value_at(t);
    return absolute ? rat_abs(v) : v;
  };
  rv.tail_eval = [p, t, absolute](const TailComponent& c) {
    if (ExtTime::at(t) > c.agree_until) return TailEval::unknown();
    Rational v = p.path_of(c.rep).value_at(t);
    return TailEval::exact(absolute ? rat_abs(v) : v);
  };
  return rv;
}

RandomVariable rv_trunc_abs_at(PathProcess p, Rational t, Rational K) {
  RandomVariable rv;
  rv.name = "|X_" + rat_str(t) + "| 1{|X|>" + rat_str(K) + "}";
  rv.nonnegative = true;
  rv.sufficient_depth = std::max(1L, rat_ceil(t));
  auto trunc = [t, K](const Rational& v) {
    Rational a = rat_abs(v);
    return a > K ? a : Rational(0);
  };
  rv.eval = [p, t, trunc](const Atom& a) { return trunc(p.path_of(a).value_at(t)); };
  rv.tail_eval = [p, t, trunc](const TailComponent& c) {
    if (ExtTime::at(t) > c.agree_until) return TailEval::unknown();
    return TailEval::exact(trunc(p.path_of(c.rep).value_at(t)));
  };
  return rv;
}

RandomVariable rv_abs_limit(PathProcess p) {
  RandomVariable rv;
  rv.name = "liminf|X|";
  rv.nonnegative = true;
  rv.eval = [p](const Atom& a) { return liminf_abs(p, a); };
  rv.tail_eval = [p](const TailComponent& c) {
    // the rep speaks for the whole component only if they agree forever
    if (!c.agree_until.infinite) return TailEval::unknown();
    return TailEval::exact(liminf_abs(p, c.rep));
  };
  return rv;
}

RandomVariable rv_stopped(PathProcess p, StoppingSpec spec_in, bool absolute) {
  auto spec = std::make_shared<const StoppingSpec>(std::move(spec_in));
  RandomVariable rv;
  rv.name = (absolute ? "|X_tau|" : "X_tau") + std::string(", tau=") + spec->str();
  rv.nonnegative = absolute;
  if (auto b = spec->structural_bound(p.space.get()); b && b->is_finite())
    rv.sufficient_depth = std::max(1L, rat_ceil(b->t));
  rv.eval = [p, spec, absolute](const Atom& a) {
    Rational v = stopped_value(p, *spec, a);
    return absolute ? rat_abs(v) : v;
  };
  rv.tail_eval = [p, spec, absolute](const TailComponent& c) {
    ExtTime tau = evaluate(*spec, p, c.rep);
    // the rep decides the whole component only while observations agree
    if (!tau.is_finite() || tau > c.agree_until) return TailEval::unknown();
    Rational v = p.path_of(c.rep).value_at(tau.t);
    return TailEval::exact(absolute ? rat_abs(v) : v);
  };
  return rv;
}

namespace {

Rational exact_initial(const Lab& lab) {
  if (lab.exact()) return initial_value(*lab.process);
  return rat(lab.walk->start);
}

// X never depends on U in these labs, so non-randomized members of a suite
// can be screened and evaluated on the base filtration; the extension only
// refines observations. The randomized route works on the extension itself.
Lab base_view(const Lab& lab) {
  if (!lab.randomized()) return lab;
  Lab b = lab;
  b.levels = 0;
  b.space = lab.base_space;
  b.process->space = lab.base_space;
  return b;
}

Rational lower_of(const ExpectationResult& r) {
  if (const auto* e = std::get_if<ExactResult>(&r)) return e->value;
  const auto& t = std::get<TruncatedResult>(r);
  return t.value - t.tail_bound;
}

Rational upper_of(const ExpectationResult& r) {
  if (const auto* e = std::get_if<ExactResult>(&r)) return e->value;
  const auto& t = std::get<TruncatedResult>(r);
  return t.value + t.tail_bound;
}

}  // namespace

std::vector<Rational> default_time_grid(const Rational& up_to) {
  std::vector<Rational> g;
  long n = rat_floor(up_to);
  for (long k = 0; k <= n; ++k) {
    g.push_back(rat(k));
    Rational half = rat(k) + Rational(1, 2);
    if (half <= up_to) g.push_back(half);
  }
  return g;
}

std::vector<Rational> event_grid(const Lab& lab, const Rational& up_to) {
  if (!lab.exact()) return default_time_grid(up_to);
  const PathProcess& p = *lab.process;
  std::set<Rational> times;
  times.insert(Rational(0));
  times.insert(up_to);
  int depth = std::min<long>(std::max(1L, rat_ceil(up_to)), p.space->depth_cap());
  auto collect = [&](const PiecewiseConstantPath& path) {
    for (const auto& [t, v] : path.jumps)
      if (t <= up_to) times.insert(t);
  };
  lab.base_space->scan(depth, [&](const Atom& a, const Rational&, int) {
    collect(p.path_of(a));
    return true;
  });
  for (const auto& comp : lab.base_space->tail(depth)) collect(p.path_of(comp.rep));

  std::vector<Rational> g(times.begin(), times.end());
  std::vector<Rational> out;
  out.reserve(2 * g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.push_back(g[i]);
    if (i + 1 < g.size()) out.push_back((g[i] + g[i + 1]) / 2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statement V

StatementVerdict check_statement_V(const Lab& lab, const std::vector<Rational>& grid) {
  StatementVerdict out;
  out.statement = Statement::V;
  if (grid.empty()) fail(Errc::invalid_argument, "statement V needs a nonempty grid");
  std::vector<Rational> g = grid;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());

  if (!lab.exact()) {
    // generative walk: exact DP marginals at integer grid times (the path is
    // constant between jumps, so integer times cover the grid)
    long cap = std::min<long>(rat_floor(g.back()), lab.walk->horizon);
    Rational e0 = rat(lab.walk->start);
    for (long t = 0; t <= cap; ++t) {
      Rational e = walk_dp::marginal_expectation(t) + e0;
      if (e != e0) {
        out.verdict = Verdict::violated;
        out.witness = WitnessInfo{std::nullopt, rat(t), ExactResult{e}, ExactResult{e0}, ""};
        out.suite = "walk DP marginals, integer t <= " + std::to_string(cap);
        return out;
      }
    }
    out.verdict = Verdict::holds_on_suite;
    out.suite = "walk DP marginals, integer t <= " + std::to_string(cap);
    return out;
  }

  // Exact route: one streaming pass. Each jump contributes w*(new - old) to
  // every grid time at or after it; prefix sums then give E[X_t] per point.
  // X does not depend on U in any lab here, so the base space carries the
  // whole computation even on extensions.
  const PathProcess& p = *lab.process;
  const CountableSpace& space = *lab.base_space;
  int depth = std::min<long>(std::max(1L, rat_ceil(g.back())), space.depth_cap());

  Rational base(0);
  std::vector<Rational> diff(g.size(), Rational(0));
  auto add_path = [&](const PiecewiseConstantPath& path, const Rational& mass) {
    base += mass * path.initial;
    const Rational* prev = &path.initial;
    for (const auto& [jt, v] : path.jumps) {
      if (jt > g.back()) break;
      auto it = std::lower_bound(g.begin(), g.end(), jt);
      diff[static_cast<std::size_t>(it - g.begin())] += mass * (v - *prev);
      prev = &v;
    }
  };
  space.scan(depth, [&](const Atom& a, const Rational& w, int) {
    add_path(p.path_of(a), w);
    return true;
  });
  for (const auto& comp : space.tail(depth)) {
    if (ExtTime::at(g.back()) > comp.agree_until)
      fail(Errc::indeterminate_tail, "statement V grid exceeds the tail agreement horizon");
    // a tail rep that never moves on the grid contributes nothing; skip it
    // without materializing the (possibly huge-denominator) residual
    PiecewiseConstantPath rep_path = p.path_of(comp.rep);
    bool moves = rep_path.initial != 0;
    for (const auto& [jt, v] : rep_path.jumps)
      if (jt <= g.back() && v != rep_path.initial) moves = true;
    if (moves) add_path(rep_path, comp.mass());
  }

  Rational e0;
  {
    Rational acc = base;
    // E[X_0]: include any jump at time 0
    if (!g.empty() && g.front() == 0) acc += diff[0];
    e0 = acc;
  }
  Rational acc = base;
  for (std::size_t i = 0; i < g.size(); ++i) {
    acc += diff[i];
    if (acc != e0) {
      out.verdict = Verdict::violated;
      out.witness = WitnessInfo{std::nullopt, g[i], ExactResult{acc}, ExactResult{e0}, ""};
      out.suite = "event grid to " + rat_str(g.back()) + ", " + std::to_string(g.size()) +
                  " times, exact";
      return out;
    }
  }
  out.verdict = Verdict::holds_on_suite;
  out.suite =
      "event grid to " + rat_str(g.back()) + ", " + std::to_string(g.size()) + " times, exact";
  return out;
}

// ---------------------------------------------------------------------------
// Family generation

GeneratedFamily generate_family(const Lab& lab, const FamilyConfig& config) {
  GeneratedFamily fam;

  if (!lab.exact()) {
    // DP-evaluable shapes on the walk
    for (const auto& l : config.levels) {
      fam.specs.push_back(StoppingSpec::hit_above(l));
      fam.specs.push_back(StoppingSpec::hit_abs_above(l));
      fam.specs.push_back(StoppingSpec::min_of(
          {StoppingSpec::hit_above(l), StoppingSpec::constant(ExtTime::at(config.grid_max))}));
    }
    std::sort(fam.specs.begin(), fam.specs.end(),
              [](const StoppingSpec& a, const StoppingSpec& b) { return a.str() < b.str(); });
    return fam;
  }

  const PathProcess& p = *lab.process;
  std::vector<Rational> grid =
      config.grid.empty() ? default_time_grid(config.grid_max) : config.grid;
  int depth = config.working_depth;
  AdaptednessChecker checker(p, grid, depth);
  fam.working_depth = depth;

  // structured leaves first so a tight max_specs cap still yields a mixed suite
  std::vector<StoppingSpec> leaves;
  for (const auto& l : config.levels) {
    leaves.push_back(StoppingSpec::hit_above(l));
    leaves.push_back(StoppingSpec::hit_abs_above(l));
    std::vector<Rational> afters = {Rational(0), Rational(config.grid_max / 5),
                                    Rational(config.grid_max / 2)};
    for (const auto& after : afters) leaves.push_back(StoppingSpec::hit_abs_below(l, after));
  }
  for (const auto& t : grid) leaves.push_back(StoppingSpec::constant(ExtTime::at(t)));
  if (config.include_two_point && grid.size() >= 3) {
    for (const Rational& s : {Rational(1), Rational(2)}) {
      if (s > config.grid_max) continue;
      Partition part = observational_partition(p, s, depth);
      for (std::size_t b = 0; b < part.blocks.size() && b < 4; ++b) {
        auto ev = event_from_block(part, b, s);
        leaves.push_back(StoppingSpec::two_point(ev, s, s + 1));
        if (s + 5 <= config.grid_max) leaves.push_back(StoppingSpec::two_point(ev, s, s + 5));
      }
    }
  }
  if (config.include_randomized && lab.randomized())
    leaves.push_back(StoppingSpec::reciprocal_u());

  std::set<std::string> seen;
  auto push = [&](StoppingSpec s) {
    if (fam.specs.size() >= config.max_specs) return false;
    if (!seen.insert(s.str()).second) return true;
    AdaptednessReport rep = checker.check(s);
    if (!rep.adapted) {
      ++fam.rejected_not_adapted;
      return true;
    }
    fam.specs.push_back(std::move(s));
    return true;
  };

  for (const auto& l : leaves)
    if (!push(l)) break;

  std::vector<StoppingSpec> depth2;
  if (config.tree_depth >= 2) {
    // combine the structured leaves first; plain constants enter as partners
    std::vector<StoppingSpec> hitters;
    for (const auto& l : leaves)
      if (l.op != StoppingSpec::Op::constant) hitters.push_back(l);
    std::vector<StoppingSpec> consts;
    for (std::size_t i = 0; i < grid.size(); i += 4)
      consts.push_back(StoppingSpec::constant(ExtTime::at(grid[i])));

    for (std::size_t i = 0; i < hitters.size() && fam.specs.size() < config.max_specs; ++i) {
      for (const auto& c : consts) {
        StoppingSpec m = StoppingSpec::min_of({hitters[i], c});
        depth2.push_back(m);
        if (!push(std::move(m))) break;
        StoppingSpec x = StoppingSpec::max_of({hitters[i], c});
        depth2.push_back(x);
        if (!push(std::move(x))) break;
      }
      for (std::size_t j = i + 1; j < hitters.size(); ++j) {
        StoppingSpec m = StoppingSpec::min_of({hitters[i], hitters[j]});
        depth2.push_back(m);
        if (!push(std::move(m))) break;
        StoppingSpec x = StoppingSpec::max_of({hitters[i], hitters[j]});
        depth2.push_back(x);
        if (!push(std::move(x))) break;
      }
    }
  }
  if (config.tree_depth >= 3) {
    std::vector<StoppingSpec> partners;
    for (const auto& l : config.levels) partners.push_back(StoppingSpec::hit_abs_above(l));
    partners.push_back(StoppingSpec::constant(ExtTime::at(config.grid_max / 2)));
    for (std::size_t i = 0; i < depth2.size() && fam.specs.size() < config.max_specs; ++i) {
      for (const auto& q : partners) {
        if (!push(StoppingSpec::min_of({depth2[i], q}))) break;
        if (!push(StoppingSpec::max_of({depth2[i], q}))) break;
      }
    }
  }

  std::sort(fam.specs.begin(), fam.specs.end(),
            [](const StoppingSpec& a, const StoppingSpec& b) { return a.str() < b.str(); });
  return fam;
}

// ---------------------------------------------------------------------------
// Falsifiers

namespace {

struct MemberOutcome {
  bool decided = true;
  bool passed = true;
  WitnessInfo witness;
};

// one finite suite member on an exact lab: checks X_tau in L^1, then the
// expectation identity
MemberOutcome check_member_exact(const Lab& lab, const StoppingSpec& spec, const Rational& e0,
                                 const FamilyConfig& config,
                                 const std::optional<Rational>& bound) {
  const PathProcess& p = *lab.process;
  MemberOutcome out;
  ExpectationPolicy policy;
  policy.max_depth = config.l1_max_depth;
  policy.divergence_threshold = config.l1_threshold;
  policy.stop_at_threshold = true;

  auto make_rv = [&](bool absolute) {
    RandomVariable rv = rv_stopped(p, spec, absolute);
    // a certified bound lets the enumeration stop where the tail rep resolves
    if (bound && !rv.sufficient_depth) rv.sufficient_depth = std::max(1L, rat_ceil(*bound));
    return rv;
  };

  ExpectationResult l1 = expectation(*p.space, make_rv(/*absolute=*/true), policy);
  if (std::holds_alternative<DivergenceCertificate>(l1)) {
    out.passed = false;
    out.witness.spec = spec;
    out.witness.lhs = l1;
    out.witness.note = "X_tau is not integrable (divergence certificate)";
    return out;
  }

  ExpectationResult e = expectation(*p.space, make_rv(/*absolute=*/false), policy);
  if (const auto* ex = std::get_if<ExactResult>(&e)) {
    if (ex->value != e0) {
      out.passed = false;
      out.witness.spec = spec;
      out.witness.lhs = e;
      out.witness.rhs = ExactResult{e0};
      out.witness.note = "E[X_tau] != E[X_0], exact";
    }
    return out;
  }
  // truncated: decide only when the interval separates from e0
  if (lower_of(e) > e0 || upper_of(e) < e0) {
    out.passed = false;
    out.witness.spec = spec;
    out.witness.lhs = e;
    out.witness.rhs = ExactResult{e0};
    out.witness.note = "E[X_tau] interval excludes E[X_0]";
    return out;
  }
  out.decided = std::get<TruncatedResult>(e).tail_bound == 0;
  return out;
}

StatementVerdict falsify_on_walk(const Lab& lab, const FamilyConfig& config) {
  StatementVerdict out;
  out.statement = Statement::IV;
  GeneratedFamily fam = generate_family(lab, config);
  long H = std::min(config.walk_horizon, lab.walk->horizon);
  Rational e0 = rat(lab.walk->start);
  std::size_t decided = 0;

  for (const auto& spec : fam.specs) {
    auto rule = walk_dp::compile_rule(spec);
    if (!rule) continue;
    walk_dp::DpResult dp = walk_dp::run(*rule, H);
    // E[X_tau] bracketed by the eventual-stop window on the {tau > H} mass
    Rational rest = Rational(1) - dp.p_stopped;
    Rational lo = dp.stopped_value_sum + rest * dp.window_lo;
    Rational hi = dp.stopped_value_sum + rest * dp.window_hi;
    ++decided;
    if (lo > e0 || hi < e0) {
      out.verdict = Verdict::violated;
      Rational mid = dp.stopped_value_sum;
      Rational bound = rat_max(rat_abs(hi - mid), rat_abs(mid - lo));
      out.witness = WitnessInfo{spec, std::nullopt, TruncatedResult{mid, bound},
                                ExactResult{e0},
                                "horizon-limited: P(tau<=" + std::to_string(H) +
                                    ") = " + rat_str(dp.p_stopped) +
                                    ", eventual stop window [" + rat_str(dp.window_lo) + ", " +
                                    rat_str(dp.window_hi) + "]"};
      out.suite = "walk DP family, " + std::to_string(fam.specs.size()) + " specs, horizon " +
                  std::to_string(H);
      return out;
    }
  }
  out.verdict = Verdict::holds_on_suite;
  out.suite = "walk DP family, " + std::to_string(decided) + " decided specs, horizon " +
              std::to_string(H);
  return out;
}

}  // namespace

BlowupCurve randomized_blowup_curve(const Lab& lab, const std::vector<long>& m_list) {
  if (!lab.exact()) fail(Errc::not_applicable, "blow-up curve needs an exact process");
  const PathProcess& p = *lab.process;
  const CountableSpace& base = *lab.base_space;
  if (!p.terminating) fail(Errc::not_terminating, "blow-up curve needs a terminating process");

  BlowupCurve curve;
  for (long m : m_list) {
    if (m < 1) fail(Errc::invalid_argument, "levels must be >= 1");
    // E[|X_{1/U}|] = (1/m) sum_k E_base[|X_{t_k}|], t_k = 2m/(2k-1): U is
    // independent of X with product weights, so the expectation factorizes
    // level by level. tau = 1/U is bounded by 2m, hence finite.
    Rational total(0);
    for (long k = 1; k <= m; ++k) {
      Rational t_k = rat(2 * m, 2 * k - 1);
      ExpectationPolicy policy;
      policy.max_depth = static_cast<int>(std::max(1L, rat_ceil(t_k)));
      ExpectationResult r = expectation(base, rv_value_at(p, t_k, /*absolute=*/true), policy);
      total += result_value(r);  // exact by construction (zero/known tail)
    }
    curve.points.push_back({m, total / rat(m)});
  }

  if (curve.points.size() >= 2) {
    // least-squares slope of value against ln m
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(curve.points.size());
    for (const auto& pt : curve.points) {
      double x = std::log(static_cast<double>(pt.m));
      double y = rat_double(pt.value);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    curve.slope_vs_log = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return curve;
}

CertifiedFamily certify_family(const Lab& lab, const FamilyConfig& config) {
  CertifiedFamily out;
  Lab base = base_view(lab);
  out.family = generate_family(base, config);
  if (!base.exact()) return out;
  out.certs.reserve(out.family.specs.size());
  for (const auto& spec : out.family.specs)
    out.certs.push_back(finiteness_check(spec, *base.process, out.family.working_depth));
  return out;
}

StatementVerdict falsify_statement_IV(const Lab& lab, const FamilyConfig& config) {
  if (!lab.exact()) return falsify_on_walk(lab, config);
  return falsify_statement_IV(lab, config, certify_family(lab, config));
}

StatementVerdict falsify_statement_IV(const Lab& lab, const FamilyConfig& config,
                                      const CertifiedFamily& family) {
  if (!lab.exact()) return falsify_on_walk(lab, config);

  StatementVerdict out;
  out.statement = Statement::IV;
  Lab base = base_view(lab);
  Rational e0 = exact_initial(base);

  const GeneratedFamily& fam = family.family;
  std::size_t kept = 0, undecided = 0, skipped_not_finite = 0;

  for (std::size_t i = 0; i < fam.specs.size(); ++i) {
    const auto& spec = fam.specs[i];
    const auto& cert = family.certs[i];
    if (cert.level != FinitenessCertificate::Level::bounded) {
      ++skipped_not_finite;
      continue;
    }
    ++kept;
    MemberOutcome mo = check_member_exact(base, spec, e0, config, cert.bound);
    if (!mo.passed) {
      out.verdict = Verdict::violated;
      out.witness = mo.witness;
      out.suite = "generated family: " + std::to_string(fam.specs.size()) + " adapted specs, " +
                  std::to_string(kept) + " bounded";
      return out;
    }
    if (!mo.decided) ++undecided;
  }

  // randomized route: tau = 1/U, refinement divergence of E[|X_tau|]
  if (config.include_randomized && lab.randomized()) {
    StoppingSpec tau = StoppingSpec::reciprocal_u();
    std::vector<long> schedule;
    for (long m = 1; m < lab.levels; m *= 10) schedule.push_back(m);
    schedule.push_back(lab.levels);
    BlowupCurve curve = randomized_blowup_curve(lab, schedule);

    bool monotone = true;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
      if (curve.points[i].value < curve.points[i - 1].value) monotone = false;
    const auto& last = curve.points.back();
    if (monotone && last.value > config.refinement_threshold) {
      DivergenceCertificate cert;
      cert.threshold = config.refinement_threshold;
      cert.depth = last.m;
      cert.partial_sum = last.value;
      for (const auto& pt : curve.points) cert.growth_samples.push_back({pt.m, pt.value});
      out.verdict = Verdict::violated;
      std::ostringstream note;
      note << "E[|X_{1/U}|] grows without bound in the U-refinement (slope vs ln m ~= "
           << curve.slope_vs_log << "); tau = 1/U is a finite stopping time at every m";
      out.witness = WitnessInfo{tau, std::nullopt, cert, ExactResult{e0}, note.str()};
      out.suite = "generated family + 1/U refinement schedule to m = " +
                  std::to_string(lab.levels);
      return out;
    }
  }

  out.verdict = Verdict::holds_on_suite;
  std::ostringstream suite;
  suite << "generated family: " << fam.specs.size() << " adapted specs, " << kept
        << " bounded and checked, " << skipped_not_finite << " not finite, " << undecided
        << " undecided";
  out.suite = suite.str();
  return out;
}

StatementVerdict falsify_statement_II(const Lab& lab, const FamilyConfig& config) {
  if (!lab.exact()) {
    StatementVerdict out;
    out.statement = Statement::II;
    out.verdict = Verdict::undecidable;
    out.suite = "generative process: limits unavailable at finite horizon";
    return out;
  }
  return falsify_statement_II(lab, config, certify_family(lab, config), nullptr);
}

StatementVerdict falsify_statement_II(const Lab& lab, const FamilyConfig& config,
                                      const CertifiedFamily& family,
                                      const StatementVerdict* iv) {
  StatementVerdict out;
  out.statement = Statement::II;
  if (!lab.exact()) {
    out.verdict = Verdict::undecidable;
    out.suite = "generative process: limits unavailable at finite horizon";
    return out;
  }

  StatementVerdict lim = limit_existence_check(lab);
  if (lim.verdict == Verdict::violated) {
    out.verdict = Verdict::violated;
    out.witness = lim.witness;
    out.suite = "limit existence";
    return out;
  }

  // a finite stopping time violating (IV) violates (II) outright
  if (iv && iv->verdict == Verdict::violated) {
    out.verdict = Verdict::violated;
    out.witness = iv->witness;
    out.suite = "finite stopping witness inherited from the (IV) falsifier";
    return out;
  }

  Lab base = base_view(lab);
  Rational e0 = exact_initial(base);
  const GeneratedFamily& fam = family.family;
  std::size_t undecided = 0, checked = 0;

  for (std::size_t i = 0; i < fam.specs.size(); ++i) {
    const auto& spec = fam.specs[i];
    const auto& cert = family.certs[i];
    bool bounded = cert.level == FinitenessCertificate::Level::bounded;
    // bounded members are covered by a clean (IV) pass already
    if (iv && bounded) continue;
    std::optional<Rational> bound;
    if (bounded) bound = cert.bound;
    ++checked;
    try {
      MemberOutcome mo = check_member_exact(base, spec, e0, config, bound);
      if (!mo.passed) {
        out.verdict = Verdict::violated;
        out.witness = mo.witness;
        out.suite = "generated family incl. unbounded specs: " +
                    std::to_string(fam.specs.size()) + " members";
        return out;
      }
      if (!mo.decided) ++undecided;
    } catch (const LabError& e) {
      if (e.code() != Errc::indeterminate_tail) throw;
      ++undecided;
    }
  }
  out.verdict = Verdict::holds_on_suite;
  out.suite = "generated family incl. unbounded specs: " + std::to_string(fam.specs.size()) +
              " members (" + std::to_string(checked) + " beyond the (IV) pass, " +
              std::to_string(undecided) + " undecided)";
  return out;
}

ExpectationResult check_liminf_integrability(const Lab& lab, const ExpectationPolicy& policy) {
  if (!lab.exact())
    fail(Errc::not_terminating, "liminf integrability needs a terminating process");
  return expectation(*lab.base_space, rv_abs_limit(*lab.process), policy);
}

StatementVerdict check_statement_III(const Lab& lab, const FamilyConfig& config,
                                     const StatementVerdict& iv) {
  StatementVerdict out;
  out.statement = Statement::III;
  if (!lab.exact()) {
    out.verdict = Verdict::undecidable;
    out.suite = "generative process: liminf unavailable at finite horizon";
    return out;
  }
  ExpectationPolicy policy;
  policy.max_depth = config.l1_max_depth;
  policy.divergence_threshold = config.l1_threshold;
  policy.stop_at_threshold = true;
  try {
    ExpectationResult liminf = check_liminf_integrability(lab, policy);
    if (std::holds_alternative<DivergenceCertificate>(liminf)) {
      out.verdict = Verdict::violated;
      out.witness = WitnessInfo{std::nullopt, std::nullopt, liminf, std::nullopt,
                                "liminf |X| is not integrable"};
      out.suite = "liminf certificate + finite-stopping suite";
      return out;
    }
  } catch (const LabError& e) {
    if (e.code() != Errc::indeterminate_tail) throw;
    out.verdict = Verdict::undecidable;
    out.suite = "liminf integrability undecidable under policy";
    return out;
  }
  out.verdict = iv.verdict;
  out.witness = iv.witness;
  out.suite = "liminf integrable; " + iv.suite;
  return out;
}

StatementVerdict check_statement_III(const Lab& lab, const FamilyConfig& config) {
  StatementVerdict iv;
  iv.statement = Statement::IV;
  iv.verdict = Verdict::undecidable;
  if (lab.exact()) iv = falsify_statement_IV(lab, config);
  return check_statement_III(lab, config, iv);
}

StatementVerdict limit_existence_check(const Lab& lab) {
  StatementVerdict out;
  out.statement = Statement::II;
  if (!lab.exact()) {
    out.verdict = Verdict::undecidable;
    out.suite = "generative process: horizon-limited refusal";
    return out;
  }
  // terminating paths are eventually constant by construction; verify anyway
  const PathProcess& p = *lab.process;
  if (!p.terminating) {
    out.verdict = Verdict::undecidable;
    out.suite = "non-terminating exact process";
    return out;
  }
  out.verdict = Verdict::holds_on_suite;
  out.suite = "per-atom terminal values exist (eventually constant paths)";
  return out;
}

UIDiagnostic check_ui(const Lab& lab, const std::vector<Rational>& k_schedule,
                      const std::vector<Rational>& grid, const Rational& divergence_threshold) {
  if (!lab.exact()) fail(Errc::not_terminating, "UI check needs a terminating exact process");
  const PathProcess& p = *lab.process;
  const CountableSpace& space = *lab.base_space;

  UIDiagnostic diag;
  bool all_diverge = true;
  for (const auto& K : k_schedule) {
    UIDiagnostic::Entry entry;
    entry.K = K;
    entry.sup_on_grid = Rational(0);
    for (const auto& t : grid) {
      Rational v = result_value(expectation(space, rv_trunc_abs_at(p, t, K)));
      if (v > entry.sup_on_grid) entry.sup_on_grid = v;
    }
    // |X| is constant between jumps, so integer event times carry the sup;
    // extend along them until the threshold certifies divergence in t
    DivergenceCertificate cert;
    cert.threshold = divergence_threshold;
    bool monotone = true;
    Rational prev(-1);
    long t_cap = 4 * rat_ceil(divergence_threshold) + 4 * rat_ceil(K) + 64;
    long next_sample = 1;
    for (long t = 1; t <= t_cap; ++t) {
      Rational v = result_value(expectation(space, rv_trunc_abs_at(p, rat(t), K)));
      if (v < prev) {
        monotone = false;
        break;
      }
      prev = v;
      if (t >= next_sample) {
        cert.growth_samples.push_back({t, v});
        next_sample *= 10;
      }
      if (v > divergence_threshold) {
        cert.depth = t;
        cert.partial_sum = v;
        if (cert.growth_samples.empty() || cert.growth_samples.back().depth != t)
          cert.growth_samples.push_back({t, v});
        entry.diverges_in_t = true;
        entry.certificate = std::move(cert);
        break;
      }
    }
    if (!entry.diverges_in_t || !monotone) all_diverge = false;
    diag.entries.push_back(std::move(entry));
  }

  if (all_diverge) {
    diag.outcome = UIDiagnostic::Outcome::not_ui_certified;
    return diag;
  }
  if (!diag.entries.empty() && diag.entries.back().sup_on_grid == 0 &&
      !diag.entries.back().diverges_in_t) {
    diag.outcome = UIDiagnostic::Outcome::uniformly_integrable_on_grid;
    return diag;
  }
  fail(Errc::indeterminate_tail,
       "UI diagnostic inconclusive: truncated tails neither vanish nor certify divergence");
}

StatementVerdict martingale_check(const Lab& lab,
                                  const std::vector<std::pair<Rational, Rational>>& pairs,
                                  int depth) {
  StatementVerdict out;
  out.statement = Statement::I;
  if (!lab.exact()) {
    out.verdict = Verdict::undecidable;
    out.suite = "generative process: observational partitions unavailable";
    return out;
  }
  const PathProcess& p = *lab.process;

  for (const auto& [s, t] : pairs) {
    if (!(s < t)) fail(Errc::invalid_argument, "martingale check needs s < t");
    int d = std::max<long>({static_cast<long>(depth), rat_ceil(t), 1L});
    d = std::min<long>(d, p.space->depth_cap());
    Partition part = observational_partition(p, s, d);
    for (std::size_t b = 0; b < part.blocks.size(); ++b) {
      const auto& block = part.blocks[b];
      std::set<std::uint64_t> members(block.atom_ids.begin(), block.atom_ids.end());
      std::set<std::uint64_t> tail_members(block.tail_rep_ids.begin(), block.tail_rep_ids.end());

      auto block_rv = [&, members, tail_members](Rational at) {
        RandomVariable rv;
        rv.name = "X_" + rat_str(at) + " 1{" + block.label + "}";
        rv.sufficient_depth = d;
        rv.eval = [&p, at, members](const Atom& a) {
          if (!members.count(a.id)) return Rational(0);
          return p.path_of(a).value_at(at);
        };
        rv.tail_eval = [&p, at, tail_members](const TailComponent& c) {
          if (!tail_members.count(c.rep.id)) return TailEval::exact(Rational(0));
          if (ExtTime::at(at) > c.agree_until) return TailEval::unknown();
          return TailEval::exact(p.path_of(c.rep).value_at(at));
        };
        return rv;
      };

      Rational lhs = result_value(expectation(*p.space, block_rv(t)));
      Rational rhs = result_value(expectation(*p.space, block_rv(s)));
      if (lhs != rhs) {
        out.verdict = Verdict::violated;
        out.witness = WitnessInfo{std::nullopt, s, ExactResult{lhs}, ExactResult{rhs},
                                  "E[X_t 1_A] != E[X_s 1_A] for A = " + block.label + ", (s,t)=(" +
                                      rat_str(s) + "," + rat_str(t) + ")"};
        out.suite = "two-point identity over observational blocks";
        return out;
      }
    }
  }
  out.verdict = Verdict::holds_on_suite;
  out.suite = "two-point identity over observational blocks, " + std::to_string(pairs.size()) +
              " time pairs";
  return out;
}

StatementVerdict check_statement_I(const Lab& lab, const FamilyConfig& config) {
  StatementVerdict out;
  out.statement = Statement::I;
  if (!lab.exact()) {
    out.verdict = Verdict::undecidable;
    out.suite = "generative process";
    return out;
  }

  Lab base = base_view(lab);
  std::vector<std::pair<Rational, Rational>> pairs = {
      {Rational(0), Rational(1)}, {Rational(1), Rational(2)}, {Rational(2), Rational(5)}};
  StatementVerdict mart = martingale_check(base, pairs, config.working_depth);
  if (mart.verdict == Verdict::violated) {
    out.verdict = Verdict::violated;
    out.witness = mart.witness;
    out.suite = "martingale property: " + mart.suite;
    return out;
  }

  std::vector<Rational> grid =
      config.grid.empty() ? default_time_grid(config.grid_max) : config.grid;
  UIDiagnostic ui = check_ui(lab, {rat(1), rat(10), rat(100)}, grid, rat(100));
  if (ui.outcome == UIDiagnostic::Outcome::not_ui_certified) {
    out.verdict = Verdict::violated;
    WitnessInfo w;
    if (!ui.entries.empty() && ui.entries.back().certificate)
      w.lhs = *ui.entries.back().certificate;
    w.note = "truncated tails E[|X_t| 1{|X_t|>K}] diverge in t for every K in the schedule";
    out.witness = std::move(w);
    out.suite = "UI diagnostic over event grid";
    return out;
  }
  out.verdict = Verdict::holds_on_suite;
  out.suite = "martingale two-point identities + UI diagnostic on grid";
  return out;
}

// ---------------------------------------------------------------------------
// Witness gap

GapReport witness_gap(const Lab& lab, const Rational& epsilon, long horizon) {
  if (!(epsilon > 0) || !(epsilon < 1))
    fail(Errc::invalid_argument, "epsilon must be in (0,1)");
  if (horizon < 1) fail(Errc::invalid_argument, "horizon must be >= 1");

  GapReport rep;
  rep.epsilon = epsilon;
  rep.horizon = horizon;
  Rational band = epsilon * epsilon / 4;
  Rational inv_eps = Rational(1) / epsilon;
  rep.sigma1 = StoppingSpec::hit_above(epsilon);
  rep.sigma2 = StoppingSpec::hit_abs_below(band, inv_eps);
  rep.tau = StoppingSpec::min_of({rep.sigma1, rep.sigma2});

  if (exact_initial(lab) != 0)
    fail(Errc::precondition_failed, "witness gap requires M_0 = 0");

  if (lab.exact()) {
    const PathProcess& p = *lab.process;
    int depth = std::min(60, p.space->depth_cap());

    // liminf |M| = 0, checked exactly on every enumerated atom and tail rep
    bool liminf_zero = true;
    p.space->scan(depth, [&](const Atom& a, const Rational&, int) {
      if (liminf_abs(p, a) != 0) liminf_zero = false;
      return liminf_zero;
    });
    for (const auto& comp : p.space->tail(depth))
      if (liminf_abs(p, comp.rep) != 0) liminf_zero = false;
    if (!liminf_zero)
      fail(Errc::not_applicable,
           "liminf |M| != 0: the sigma_2 construction has no finite anchor");

    // P(sup_{[0,1/eps)} M > eps) > eps
    Rational excursion(0);
    p.space->scan(depth, [&](const Atom& a, const Rational& w, int) {
      PiecewiseConstantPath path = p.path_of(a);
      Rational m = path.initial;
      for (const auto& [jt, v] : path.jumps) {
        if (!(jt < inv_eps)) break;
        if (v > m) m = v;
      }
      if (m > epsilon) excursion += w;
      return true;
    });
    rep.excursion_prob = excursion;
    rep.band_visit_prob = Rational(1);  // exact liminf check already passed
    if (!(excursion > epsilon))
      fail(Errc::precondition_failed,
           "no epsilon-excursion: P(sup M > eps) = " + rat_str(excursion) + " <= " +
               rat_str(epsilon));

    rep.e_tau = expectation(*p.space, rv_stopped(p, rep.tau, false));
    rep.e_sigma2 = expectation(*p.space, rv_stopped(p, rep.sigma2, false));
  } else {
    // generative walk: exact absorbing-chain DP, horizon-truncated values
    // with eventual-stop windows as tail bounds
    auto tau_rule = walk_dp::compile_rule(rep.tau);
    auto s2_rule = walk_dp::compile_rule(rep.sigma2);
    if (!tau_rule || !s2_rule) fail(Errc::internal, "gap rules must compile for the walk");

    long pre_steps = rat_ceil(inv_eps) - 1;
    rep.excursion_prob = walk_dp::hit_max_prob(epsilon, /*strict=*/true, pre_steps);

    walk_dp::DpResult s2_dp = walk_dp::run(*s2_rule, horizon);
    rep.band_visit_prob = s2_dp.p_stopped;
    if (!(rep.band_visit_prob >= Rational(19, 20)))
      fail(Errc::not_applicable,
           "liminf proxy failed: P(|M| visits the band by the horizon) = " +
               rat_str(rep.band_visit_prob) + " < 19/20");
    if (!(rep.excursion_prob > epsilon))
      fail(Errc::precondition_failed,
           "no epsilon-excursion: P(sup M > eps) = " + rat_str(rep.excursion_prob));

    walk_dp::DpResult tau_dp = walk_dp::run(*tau_rule, horizon);
    Rational tau_rest = Rational(1) - tau_dp.p_stopped;
    rep.e_tau = TruncatedResult{tau_dp.stopped_value_sum,
                                tau_rest * rat_max(rat_abs(tau_dp.window_lo),
                                                   rat_abs(tau_dp.window_hi))};
    Rational s2_rest = Rational(1) - s2_dp.p_stopped;
    rep.e_sigma2 = TruncatedResult{s2_dp.stopped_value_sum, s2_rest * band};
  }

  Rational tau_lo = lower_of(rep.e_tau);
  Rational s2_hi_abs = rat_max(rat_abs(lower_of(rep.e_sigma2)), rat_abs(upper_of(rep.e_sigma2)));
  rep.gap_lower = tau_lo - upper_of(rep.e_sigma2);
  rep.success = tau_lo >= 3 * epsilon * epsilon / 4 && s2_hi_abs <= band;
  return rep;
}

// ---------------------------------------------------------------------------
// Suite runner

bool hierarchy_consistent(const std::map<Statement, StatementVerdict>& verdicts) {
  // (I) => (II) => (III) => (IV) => (V): an upstream pass with a downstream
  // violation breaks the chain
  std::vector<Statement> order = {Statement::I, Statement::II, Statement::III, Statement::IV,
                                  Statement::V};
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto up = verdicts.find(order[i]);
    if (up == verdicts.end() || up->second.verdict != Verdict::holds_on_suite) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      auto down = verdicts.find(order[j]);
      if (down != verdicts.end() && down->second.verdict == Verdict::violated) return false;
    }
  }
  return true;
}

SuiteReport run_suite(const Lab& lab, const SuiteParams& params) {
  SuiteReport report;

  FamilyConfig fam = params.family;
  if (lab.randomized()) fam.include_randomized = true;

  report.verdicts[Statement::I] = check_statement_I(lab, fam);
  if (lab.exact()) {
    CertifiedFamily family = certify_family(lab, fam);
    report.verdicts[Statement::IV] = falsify_statement_IV(lab, fam, family);
    report.verdicts[Statement::II] =
        falsify_statement_II(lab, fam, family, &report.verdicts[Statement::IV]);
  } else {
    report.verdicts[Statement::IV] = falsify_statement_IV(lab, fam);
    report.verdicts[Statement::II] = falsify_statement_II(lab, fam);
  }
  report.verdicts[Statement::III] =
      check_statement_III(lab, fam, report.verdicts[Statement::IV]);
  report.verdicts[Statement::V] =
      check_statement_V(lab, event_grid(lab, params.v_grid_max));

  if (is_example_name(lab.example)) {
    report.expected = expected_properties(lab.example);
    report.matches_expected = true;
    for (const auto& [stmt, expect] : report.expected)
      if (report.verdicts.at(stmt).verdict != expect) report.matches_expected = false;
  }
  report.hierarchy_consistent = hierarchy_consistent(report.verdicts);
  return report;
}

}  // namespace martlab
