#include <doctest.h>

#include <atomic>
#include <thread>

#include "helpers.hpp"

using namespace martlab;
using martlab::testing::Q;

TEST_CASE("rational parsing and formatting") {
  CHECK(rat_str(Q("2/4")) == "1/2");
  CHECK(rat_str(Q("-6/4")) == "-3/2");
  CHECK(rat_str(Q("7")) == "7");
  CHECK(rat_double(Q("1/2")) == 0.5);
  CHECK(rat_floor(Q("7/2")) == 3);
  CHECK(rat_ceil(Q("7/2")) == 4);
  CHECK(rat_floor(Q("4")) == 4);
  CHECK_THROWS_AS((void)rat_parse("abc"), LabError);
  CHECK_THROWS_AS((void)rat_parse("1/0"), LabError);
}

TEST_CASE("extended time ordering") {
  ExtTime a = ExtTime::at(Q("3/2"));
  ExtTime b = ExtTime::at(Q("2"));
  ExtTime inf = ExtTime::inf();
  CHECK(a < b);
  CHECK(b < inf);
  CHECK(min(a, inf) == a);
  CHECK(max(b, inf) == inf);
  CHECK(inf == ExtTime::inf());
  CHECK(ext_parse("inf") == inf);
  CHECK(ext_parse("5/2") == ExtTime::at(Q("5/2")));
}

TEST_CASE("cherny enumeration: atoms, weights, residual") {
  ChernySpace space;
  auto atoms = space.enumerate(2);
  REQUIRE(atoms.size() == 4);
  CHECK(atoms[0].atom.label == "(1,+1)");
  CHECK(atoms[0].weight == Q("1/4"));
  CHECK(atoms[1].weight == Q("1/4"));
  CHECK(atoms[2].atom.label == "(2,+1)");
  CHECK(atoms[2].weight == Q("1/16"));
  CHECK(atoms[3].weight == Q("1/16"));

  // finite-sum oracle: residual(3) = 1 - sum_{n<=3} 1/(2n^2) = 23/72
  Rational oracle(1);
  for (long n = 1; n <= 3; ++n) oracle -= Rational(1, 2 * n * n);
  CHECK(oracle == Q("23/72"));
  CHECK(space.residual(3) == Q("23/72"));
}

TEST_CASE("single-atom space enumerates with zero residual") {
  std::vector<WeightedAtom> atoms(1);
  atoms[0].atom.id = 0;
  atoms[0].weight = Rational(1);
  FiniteSpace space("point", std::move(atoms));
  CHECK(space.enumerate(1).size() == 1);
  CHECK(space.residual(1) == 0);
}

TEST_CASE("mass conservation and monotone residual") {
  ChernySpace space;
  Rational prev(-1);
  for (int depth : {1, 2, 3, 5, 17, 60, 200}) {
    Rational sum(0);
    space.scan(depth, [&](const Atom&, const Rational& w, int) {
      sum += w;
      return true;
    });
    Rational res = space.residual(depth);
    CHECK(sum + res == 1);
    if (prev >= 0) CHECK(res <= prev);
    prev = res;
  }
}

TEST_CASE("forever tail mass brackets 1 - pi^2/12") {
  ChernySpace space;
  for (int depth : {2, 5, 20, 100}) {
    RatInterval iv = space.forever_tail_mass(depth);
    CHECK(iv.lo > 0);
    CHECK(iv.lo <= iv.hi);
    // 1 - pi^2/12 = 0.1775329665...
    CHECK(rat_double(iv.lo) <= 0.1775330);
    CHECK(rat_double(iv.hi) >= 0.1775329);
  }
}

namespace {

RandomVariable constant_rv(Rational c) {
  RandomVariable rv;
  rv.name = "const";
  rv.eval = [c](const Atom&) { return c; };
  rv.tail_eval = [c](const TailComponent&) { return TailEval::exact(c); };
  if (c >= 0) rv.nonnegative = true;
  return rv;
}

RandomVariable sign_rv() {
  // D on cherny atoms; tail hides both signs
  RandomVariable rv;
  rv.name = "D";
  rv.eval = [](const Atom& a) { return rat(a.sign); };
  rv.tail_eval = [](const TailComponent&) { return TailEval::abs_bound(Rational(1)); };
  return rv;
}

}  // namespace

TEST_CASE("expectation: exact constants, bounded tails, certificates") {
  ChernySpace space;

  SUBCASE("constant is exact including the tail") {
    auto r = expectation(space, constant_rv(Q("3/7")));
    CHECK(result_str(r) == "Exact(3/7)");
  }

  SUBCASE("bounded-tail rv is truncated with the residual bound") {
    RandomVariable rv = sign_rv();
    rv.sufficient_depth = 10;
    auto r = expectation(space, rv);
    const auto& t = std::get<TruncatedResult>(r);
    CHECK(t.value == 0);  // signs cancel on the enumerated prefix
    CHECK(t.tail_bound == space.residual(10));
  }

  SUBCASE("nonnegative divergent rv yields a certificate with exact partial sums") {
    RandomVariable rv;
    rv.name = "sigma^2";
    rv.nonnegative = true;
    rv.eval = [](const Atom& a) { return a.sigma.t * a.sigma.t; };
    ExpectationPolicy policy;
    policy.max_depth = 1000000;
    policy.divergence_threshold = rat(1000);
    auto r = expectation(space, rv, policy);
    const auto& cert = std::get<DivergenceCertificate>(r);
    CHECK(cert.depth == 2001);
    CHECK(cert.partial_sum == Q("2001/2"));
    // growth samples at powers of ten are exactly N/2
    for (const auto& s : cert.growth_samples) CHECK(s.partial_sum == rat(s.depth, 2));

    // early-exit variant stops at the crossing
    policy.stop_at_threshold = true;
    auto r2 = expectation(space, rv, policy);
    const auto& cert2 = std::get<DivergenceCertificate>(r2);
    CHECK(cert2.depth == 2001);
    CHECK(cert2.partial_sum == Q("2001/2"));
  }

  SUBCASE("sign-indefinite unbounded tail is refused") {
    RandomVariable rv;
    rv.name = "D sigma^2";
    rv.eval = [](const Atom& a) { return Rational(rat(a.sign) * a.sigma.t * a.sigma.t); };
    CHECK_THROWS_AS((void)expectation(space, rv), LabError);
    try {
      (void)expectation(space, rv);
    } catch (const LabError& e) {
      CHECK(e.code() == Errc::indeterminate_tail);
    }
  }
}

TEST_CASE("expectation linearity on exact results") {
  ChernySpace space;
  CounterRng rng(2026, 7);
  for (int trial = 0; trial < 20; ++trial) {
    Rational a = rat(static_cast<long>(rng.next_u64() % 19) - 9,
                     static_cast<long>(1 + rng.next_u64() % 7));
    Rational b = rat(static_cast<long>(rng.next_u64() % 19) - 9,
                     static_cast<long>(1 + rng.next_u64() % 7));
    Rational c1 = rat(static_cast<long>(rng.next_u64() % 11) - 5,
                      static_cast<long>(1 + rng.next_u64() % 5));
    Rational c2 = rat(static_cast<long>(rng.next_u64() % 11) - 5,
                      static_cast<long>(1 + rng.next_u64() % 5));

    RandomVariable combo;
    combo.name = "a f + b g";
    combo.eval = [=](const Atom&) { return Rational(a * c1 + b * c2); };
    combo.tail_eval = [=](const TailComponent&) { return TailEval::exact(Rational(a * c1 + b * c2)); };
    Rational lhs = result_value(expectation(space, combo));
    Rational rhs = a * result_value(expectation(space, constant_rv(c1))) +
                   b * result_value(expectation(space, constant_rv(c2)));
    CHECK(lhs == rhs);
  }
}

TEST_CASE("conditional expectation") {
  ChernySpace space;
  auto atoms = space.enumerate(5);

  RandomVariable d_pos;
  d_pos.name = "1{D=1}";
  d_pos.nonnegative = true;
  d_pos.eval = [](const Atom& a) { return rat(a.sign > 0 ? 1 : 0); };
  d_pos.tail_eval = [](const TailComponent&) { return TailEval::unknown(); };
  d_pos.sufficient_depth = 5;

  SUBCASE("sigma-value blocks at depth 5: constant 1/2 on every block") {
    Partition part;
    part.depth = 5;
    for (long n = 1; n <= 5; ++n) {
      Partition::Block b;
      b.label = "sigma=" + std::to_string(n);
      b.atom_ids = {ChernySpace::make_atom(n, +1).id, ChernySpace::make_atom(n, -1).id};
      part.blocks.push_back(std::move(b));
    }
    RandomVariable ce = conditional_expectation(space, d_pos, part);
    for (const auto& wa : atoms) CHECK(ce.eval(wa.atom) == Q("1/2"));
  }

  SUBCASE("trivial partition gives the expectation; tower holds exactly") {
    // X_5-style rv: zero on the tail, so everything is exact
    RandomVariable x5;
    x5.name = "X_5";
    x5.sufficient_depth = 5;
    x5.eval = [](const Atom& a) {
      if (a.sigma.is_finite() && a.sigma.t <= 5) return Rational(rat(a.sign) * a.sigma.t * a.sigma.t);
      return Rational(0);
    };
    x5.tail_eval = [](const TailComponent&) { return TailEval::exact(Rational(0)); };

    Partition trivial;
    trivial.depth = 5;
    Partition::Block all;
    all.label = "Omega";
    for (const auto& wa : atoms) all.atom_ids.push_back(wa.atom.id);
    for (const auto& comp : space.tail(5)) all.tail_rep_ids.push_back(comp.rep.id);
    trivial.blocks.push_back(std::move(all));

    RandomVariable ce = conditional_expectation(space, x5, trivial);
    Rational direct = result_value(expectation(space, x5));
    CHECK(ce.eval(atoms[0].atom) == direct);
    // tower: E[E[rv | P]] = E[rv]
    CHECK(result_value(expectation(space, ce)) == direct);

    // finest partition reproduces the rv on every atom
    Partition finest;
    finest.depth = 5;
    for (const auto& wa : atoms) {
      Partition::Block b;
      b.label = wa.atom.label;
      b.atom_ids = {wa.atom.id};
      finest.blocks.push_back(std::move(b));
    }
    RandomVariable fine = conditional_expectation(space, x5, finest);
    for (const auto& wa : atoms) CHECK(fine.eval(wa.atom) == x5.eval(wa.atom));
  }

  SUBCASE("tower property on sigma-blocks with tail") {
    RandomVariable x3;
    x3.name = "X_3";
    x3.sufficient_depth = 6;
    x3.eval = [](const Atom& a) {
      if (a.sigma.is_finite() && a.sigma.t <= 3) return Rational(rat(a.sign) * a.sigma.t * a.sigma.t);
      return Rational(0);
    };
    x3.tail_eval = [](const TailComponent&) { return TailEval::exact(Rational(0)); };

    auto atoms6 = space.enumerate(6);
    Partition part;
    part.depth = 6;
    Partition::Block small, large;
    small.label = "sigma<=2";
    large.label = "sigma>2";
    for (const auto& wa : atoms6)
      (wa.atom.sigma.t <= 2 ? small : large).atom_ids.push_back(wa.atom.id);
    for (const auto& comp : space.tail(6)) large.tail_rep_ids.push_back(comp.rep.id);
    part.blocks.push_back(std::move(small));
    part.blocks.push_back(std::move(large));

    RandomVariable ce = conditional_expectation(space, x3, part);
    CHECK(result_value(expectation(space, ce)) == result_value(expectation(space, x3)));
  }

  SUBCASE("zero-mass block is rejected") {
    Partition part;
    part.depth = 2;
    Partition::Block all, empty;
    all.label = "all";
    for (const auto& wa : space.enumerate(2)) all.atom_ids.push_back(wa.atom.id);
    empty.label = "empty";
    part.blocks.push_back(std::move(all));
    part.blocks.push_back(std::move(empty));
    RandomVariable one = constant_rv(Rational(1));
    one.sufficient_depth = 2;
    CHECK_THROWS_AS((void)conditional_expectation(space, one, part), LabError);
  }
}

TEST_CASE("expectation queries are safe to run concurrently") {
  ChernySpace space;
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      for (int round = 0; round < 20; ++round) {
        int depth = 5 + ((w + round) % 40);
        RandomVariable rv;
        rv.name = "abs";
        rv.nonnegative = true;
        rv.sufficient_depth = depth;
        rv.eval = [](const Atom& a) { return Rational(a.sigma.t * a.sigma.t); };
        rv.tail_eval = [](const TailComponent&) { return TailEval::abs_bound(Rational(0)); };
        // sum_{n<=depth} 2 * n^2/(4 n^2) = depth/2
        Rational got = result_value(expectation(space, rv));
        if (got != rat(depth, 2)) ++failures;
        if (space.residual(depth) + (Rational(1) - space.residual(depth)) != 1) ++failures;
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(failures == 0);
}

TEST_CASE("uniform extension: levels, weights, marginal preservation") {
  auto base = std::make_shared<ChernySpace>();
  auto ext = std::make_shared<UniformExtensionSpace>(base, 4, Rational(0));

  SUBCASE("m = 4 levels are the mid-quantiles") {
    CHECK(ext->level_value(0) == Q("1/8"));
    CHECK(ext->level_value(1) == Q("3/8"));
    CHECK(ext->level_value(2) == Q("5/8"));
    CHECK(ext->level_value(3) == Q("7/8"));
  }

  SUBCASE("product weights and exact marginal preservation") {
    // E[1{sigma=2} 1{U<=1/2}] = (1/8)(1/2) = 1/16
    RandomVariable rv;
    rv.name = "1{sigma=2} 1{U<=1/2}";
    rv.nonnegative = true;
    rv.sufficient_depth = 4;
    rv.eval = [](const Atom& a) {
      bool hit = a.sigma.is_finite() && a.sigma.t == 2 && a.u && *a.u <= Q("1/2");
      return rat(hit ? 1 : 0);
    };
    rv.tail_eval = [](const TailComponent&) { return TailEval::exact(Rational(0)); };
    CHECK(result_value(expectation(*ext, rv)) == Q("1/16"));

    // any base rv keeps its expectation exactly
    RandomVariable x2;
    x2.name = "X_2";
    x2.sufficient_depth = 2;
    x2.eval = [](const Atom& a) {
      if (a.sigma.is_finite() && a.sigma.t <= 2) return Rational(rat(a.sign) * a.sigma.t * a.sigma.t);
      return Rational(0);
    };
    x2.tail_eval = [](const TailComponent&) { return TailEval::exact(Rational(0)); };
    CHECK(result_value(expectation(*ext, x2)) == result_value(expectation(*base, x2)));

    // mass conservation on the extension
    Rational sum(0);
    ext->scan(3, [&](const Atom&, const Rational& w, int) {
      sum += w;
      return true;
    });
    CHECK(sum + ext->residual(3) == 1);
  }
}
