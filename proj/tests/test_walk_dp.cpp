#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "walk_dp.hpp"

using namespace martlab;
using martlab::testing::Q;

namespace {

// Brute-force oracle: enumerate every +-1 step sequence of length H and apply
// the stopping semantics by hand (independent of the DP code path).
struct BruteResult {
  Rational p_stopped;
  Rational stopped_value_sum;
  Rational capped_expectation;
};

BruteResult brute_force(const std::optional<Rational>& above,
                        const std::optional<Rational>& below_level,
                        const Rational& below_after, int H) {
  REQUIRE(H <= 14);
  long total = 1L << H;
  Rational p(0), v(0), cap(0);
  for (long bits = 0; bits < total; ++bits) {
    long s = 0;
    bool done = false;
    long stop_val = 0;
    for (int t = 0; t <= H && !done; ++t) {
      if (t > 0) s += (bits >> (t - 1)) & 1 ? 1 : -1;
      if (above && Rational(s) >= *above) {
        done = true;
        stop_val = s;
        break;
      }
      if (below_level && rat_abs(Rational(s)) <= *below_level && below_after < t + 1 &&
          below_after <= H) {
        done = true;
        stop_val = s;
        break;
      }
    }
    Rational w(1, static_cast<unsigned long>(total));
    if (done) {
      p += w;
      v += w * stop_val;
      cap += w * stop_val;
    } else {
      cap += w * s;
    }
  }
  return {p, v, cap};
}

}  // namespace

TEST_CASE("walk DP agrees with brute-force path enumeration") {
  for (int H : {1, 4, 9, 12}) {
    SUBCASE(("hit(+1), H=" + std::to_string(H)).c_str()) {
      walk_dp::StopRule rule;
      rule.above_level = Q("1");
      auto dp = walk_dp::run(rule, H);
      auto bf = brute_force(Q("1"), std::nullopt, Q("0"), H);
      CHECK(dp.p_stopped == bf.p_stopped);
      CHECK(dp.stopped_value_sum == bf.stopped_value_sum);
      CHECK(dp.capped_expectation == bf.capped_expectation);
    }
    SUBCASE(("gap pair eps=2/5, H=" + std::to_string(H)).c_str()) {
      walk_dp::StopRule rule;
      rule.above_level = Q("2/5");
      rule.abs_below_level = Q("1/25");
      rule.abs_below_after = Q("5/2");
      auto dp = walk_dp::run(rule, H);
      auto bf = brute_force(Q("2/5"), Q("1/25"), Q("5/2"), H);
      CHECK(dp.p_stopped == bf.p_stopped);
      CHECK(dp.stopped_value_sum == bf.stopped_value_sum);
      CHECK(dp.capped_expectation == bf.capped_expectation);
    }
    SUBCASE(("sigma2 only, H=" + std::to_string(H)).c_str()) {
      walk_dp::StopRule rule;
      rule.abs_below_level = Q("1/25");
      rule.abs_below_after = Q("5/2");
      auto dp = walk_dp::run(rule, H);
      auto bf = brute_force(std::nullopt, Q("1/25"), Q("5/2"), H);
      CHECK(dp.p_stopped == bf.p_stopped);
      CHECK(dp.stopped_value_sum == bf.stopped_value_sum);
    }
  }
}

TEST_CASE("first passage to +1: exact tail formula") {
  // P(tau_1 > n) = C(n, floor(n/2)) / 2^n
  walk_dp::StopRule rule;
  rule.above_level = Q("1");
  for (long n : {1L, 2L, 3L, 10L, 25L}) {
    auto dp = walk_dp::run(rule, n);
    mpz_class binom;
    mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(n),
                 static_cast<unsigned long>(n / 2));
    mpz_class denom = 1;
    denom <<= n;
    Rational expect = Rational(1) - Rational(binom) / Rational(denom);
    CHECK(dp.p_stopped == expect);
  }
  CHECK(walk_dp::run(rule, 10).p_stopped == Q("193/256"));
}

TEST_CASE("optional sampling at a capped hitting time is exactly zero") {
  walk_dp::StopRule rule;
  rule.above_level = Q("1");
  for (long H : {10L, 100L, 1000L}) {
    auto dp = walk_dp::run(rule, H);
    CHECK(dp.capped_expectation == 0);
    CHECK(dp.stopped_value_sum == dp.p_stopped);  // X_tau = 1 whenever stopped
  }
}

TEST_CASE("free-walk marginals vanish exactly") {
  for (long t : {0L, 1L, 7L, 50L, 200L}) CHECK(walk_dp::marginal_expectation(t) == 0);
}

TEST_CASE("excursion probability before 1/eps") {
  // sup over t in [0, 5/2) covers integer times 0,1,2
  CHECK(walk_dp::hit_max_prob(Q("2/5"), true, 2) == Q("1/2"));
  CHECK(walk_dp::hit_max_prob(Q("3/2"), true, 2) == Q("1/4"));  // ++ only
  CHECK(walk_dp::hit_max_prob(Q("0"), false, 0) == 1);          // starts there
}

TEST_CASE("double-precision forward recursion cross-check at H = 1000") {
  // independent float DP for P(tau_1 <= H)
  const int H = 1000;
  std::vector<double> cur(2 * H + 3, 0.0), nxt(2 * H + 3, 0.0);
  const int off = H + 1;
  cur[off] = 1.0;
  double absorbed = 0.0;
  for (int t = 1; t <= H; ++t) {
    absorbed += 0.5 * cur[0 + off];  // the half of the mass at 0 that steps up
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int s = -t; s <= 0; ++s)
      nxt[s + off] = 0.5 * (cur[s - 1 + off] + cur[s + 1 + off]);
    std::swap(cur, nxt);
  }
  walk_dp::StopRule rule;
  rule.above_level = Q("1");
  auto dp = walk_dp::run(rule, H);
  CHECK(std::abs(rat_double(dp.p_stopped) - absorbed) < 1e-9);
  CHECK(rat_double(dp.p_stopped) == doctest::Approx(0.97477).epsilon(1e-4));
}

TEST_CASE("rule compilation from stopping specs") {
  auto r1 = walk_dp::compile_rule(StoppingSpec::hit_above(Q("1")));
  REQUIRE(r1.has_value());
  CHECK(r1->above_level == Q("1"));

  auto r2 = walk_dp::compile_rule(StoppingSpec::min_of(
      {StoppingSpec::hit_above(Q("2/5")), StoppingSpec::hit_abs_below(Q("1/25"), Q("5/2"))}));
  REQUIRE(r2.has_value());
  CHECK(r2->above_level == Q("2/5"));
  CHECK(r2->abs_below_level == Q("1/25"));

  auto r3 = walk_dp::compile_rule(StoppingSpec::min_of(
      {StoppingSpec::hit_above(Q("4")), StoppingSpec::constant(ExtTime::at(Q("50")))}));
  REQUIRE(r3.has_value());
  CHECK(r3->const_cap == 50);

  CHECK(!walk_dp::compile_rule(StoppingSpec::liminf_band(Q("1"))).has_value());
  CHECK(!walk_dp::compile_rule(StoppingSpec::constant(ExtTime::at(Q("1/2")))).has_value());
}

TEST_CASE("capped rules stop everything by the cap") {
  walk_dp::StopRule rule;
  rule.above_level = Q("4");
  rule.const_cap = 20;
  auto dp = walk_dp::run(rule, 100);
  CHECK(dp.p_stopped == 1);
  CHECK(dp.capped_expectation == 0);  // bounded optional sampling
  CHECK(dp.stopped_value_sum == 0);
}
