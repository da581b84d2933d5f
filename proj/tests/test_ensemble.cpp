#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "algothermo/ensemble.hpp"

using namespace algothermo;
using doctest::Approx;

namespace {

constexpr double kLn2 = std::numbers::ln2;

const CorpusSnapshot& corpus6() {
  static const CorpusSnapshot snap = dovetail_enumerate(6, 10);
  return snap;
}

const CorpusSnapshot& corpus12() {
  static const CorpusSnapshot snap = dovetail_enumerate(12, 4096);
  return snap;
}

HaltingRecord rec(const char* bits, uint64_t t, uint64_t n) {
  return {BitString::from_string(bits), t, n};
}

}  // namespace

TEST_CASE("weight matches hand-evaluated Gibbs factors") {
  CHECK(weight(rec("1111", 1, 0), {1.0, kLn2, 0.0}) == Approx(0.0625).epsilon(1e-14));
  CHECK(weight(rec("1111", 1, 0), {0.0, 0.0, 0.0}) == 1.0);
  CHECK(weight(rec("001111", 2, 1), {kLn2, kLn2, kLn2}) ==
        Approx(std::ldexp(1.0, -8)).epsilon(1e-14));
}

TEST_CASE("partition enclosure on an empty corpus is the unit interval") {
  CorpusSnapshot empty;
  empty.max_len = 0;
  empty.max_steps = 1;
  empty.live_prefixes.push_back(BitString{});
  const auto enc = partition_enclosure(empty, {0.0, kLn2, 0.0});
  CHECK(enc.z_lo == 0.0);
  CHECK(enc.z_hi == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("float partition sum agrees with exact dyadic arithmetic") {
  // At (0, ln2, 0) every weight is exactly 2^-V, so the truncated sum has an
  // exact dyadic value to hold the compensated float path against.
  const auto& snap = corpus12();
  unsigned __int128 units = 0;
  for (const auto& r : snap.records)
    units += static_cast<unsigned __int128>(1) << (64 - r.bits.size());
  const double exact = static_cast<double>(units) / 18446744073709551616.0;

  const GibbsCalculator calc(snap);
  const double z = calc.z_trunc({0.0, kLn2, 0.0});
  CHECK(std::abs(z - exact) <= 1e-13 * exact);
}

TEST_CASE("partition enclosure at the halting-probability point, L=6") {
  const auto enc = partition_enclosure(corpus6(), {0.0, kLn2, 0.0});
  CHECK(enc.z_lo == Approx(0.09375).epsilon(1e-13));
  double live_mass = 0;
  for (const auto& p : corpus6().live_prefixes) live_mass += std::ldexp(1.0, -p.size());
  CHECK(enc.tail_running == 0.0);  // all three programs halt within 10 steps
  CHECK(enc.tail_unexplored == Approx(live_mass).epsilon(1e-12));
  CHECK(enc.z_hi == Approx(enc.z_lo + live_mass).epsilon(1e-12));
}

TEST_CASE("enclosure width shrinks as parameters grow") {
  const auto wide = partition_enclosure(corpus6(), {0.0, kLn2, 0.0});
  const auto narrow = partition_enclosure(corpus6(), {1.0, 2.0, 1.0});
  CHECK(narrow.z_hi - narrow.z_lo < wide.z_hi - wide.z_lo);
}

TEST_CASE("uncertified parameters are refused, lower bound still offered") {
  CHECK_THROWS_AS(partition_enclosure(corpus6(), {0.0, 0.0, 0.0}), RegionError);
  CHECK_THROWS_AS(partition_enclosure(corpus6(), {1.0, 0.5, 0.0}), RegionError);
  CHECK_THROWS_AS(partition_enclosure(corpus6(), {-0.1, 1.0, 0.0}), RegionError);
  CHECK_THROWS_AS(partition_enclosure(corpus6(), {1.0, 1.0, -0.1}), RegionError);

  const GibbsCalculator calc(corpus6());
  CHECK(calc.uncertified_lower_bound({0.0, 0.0, 0.0}) == Approx(3.0));  // 3 records
}

TEST_CASE("gibbs stats on the L=6 corpus") {
  const auto st = gibbs_stats(corpus6(), {0.0, kLn2, 0.0});
  // Weighted mean of V over records {4:2^-4, 6:2^-6, 6:2^-6} = 28/6 = 14/3.
  CHECK(st.mean_V == Approx(14.0 / 3.0).epsilon(1e-12));
  CHECK(st.z_trunc == Approx(0.09375).epsilon(1e-13));
}

TEST_CASE("degenerate single-record ensemble") {
  CorpusSnapshot one;
  one.max_len = 4;
  one.max_steps = 10;
  one.records.push_back(rec("1111", 1, 0));
  const auto st = gibbs_stats(one, {0.7, 1.1, 0.3});
  CHECK(std::abs(st.entropy) <= 1e-12);
  CHECK(st.var_E == 0.0);
  CHECK(st.var_V == 0.0);
  CHECK(st.var_N == 0.0);

  // Fully decided corpus: an unwitnessed output has the exact interval [0,0].
  const auto q7 = pushforward_measure(one, {0.0, kLn2, 0.0}, 7);
  CHECK(q7.lo == 0.0);
  CHECK(q7.hi == 0.0);

  CorpusSnapshot empty;
  CHECK_THROWS_AS(gibbs_stats(empty, {0.0, kLn2, 0.0}), Error);
}

TEST_CASE("entropy identity holds to 1e-9 relative at assorted points") {
  const GibbsCalculator calc(corpus12());
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> ub(0.0, 2.0), ug(kLn2, 2.5), ud(0.0, 1.5);
  for (int i = 0; i < 20; ++i) {
    const EnsembleParams p{ub(rng), ug(rng), ud(rng)};
    const auto st = calc.stats(p);  // stats itself asserts the identity
    const double rhs = std::log(st.z_trunc) + p.beta * st.mean_E +
                       p.gamma * st.mean_V + p.delta * st.mean_N;
    CHECK(std::abs(st.entropy - rhs) <=
          1e-9 * std::max(1.0, std::abs(st.entropy)));
  }
}

TEST_CASE("moment invariants: nonnegative variances, Cauchy-Schwarz") {
  const GibbsCalculator calc(corpus12());
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ub(0.0, 1.5), ug(kLn2, 2.0), ud(0.0, 0.5);
  for (int i = 0; i < 20; ++i) {
    const auto st = calc.stats({ub(rng), ug(rng), ud(rng)});
    CHECK(st.var_E >= 0.0);
    CHECK(st.var_V >= 0.0);
    CHECK(st.var_N >= 0.0);
    const double slack = 1e-12;
    CHECK(std::abs(st.cov_EV) <= std::sqrt(st.var_E * st.var_V) + slack);
    CHECK(std::abs(st.cov_EN) <= std::sqrt(st.var_E * st.var_N) + slack);
    CHECK(std::abs(st.cov_VN) <= std::sqrt(st.var_V * st.var_N) + slack);
    CHECK(st.entropy >= 0.0);
  }
}

TEST_CASE("pushforward interval at L=6") {
  const GibbsCalculator calc(corpus6());
  const EnsembleParams p{0.0, kLn2, 0.0};
  const auto q0 = pushforward_measure(corpus6(), p, 0);
  const double num_lo = std::ldexp(1.0, -4) + std::ldexp(1.0, -6);
  CHECK(num_lo == 0.078125);
  const auto enc = calc.enclosure(p);
  CHECK(q0.lo == Approx(num_lo / enc.z_hi).epsilon(1e-12));
  CHECK(q0.hi <= 1.0);
  CHECK(q0.lo <= q0.hi);

  // Subprobability: lower bounds over all witnessed outputs sum below one.
  double total_lo = 0;
  for (uint64_t n : calc.witnessed_outputs()) total_lo += calc.pushforward(p, n).lo;
  CHECK(total_lo <= 1.0);
}

TEST_CASE("point mass against the renormalized pushforward lower bounds") {
  const GibbsCalculator calc(corpus6());
  const EnsembleParams p{0.0, kLn2, 0.0};
  FiniteMeasure q_lower;
  for (uint64_t n : calc.witnessed_outputs())
    q_lower.set(n, calc.pushforward(p, n).lo);
  const FiniteMeasure q = q_lower.normalized();
  const double s = relative_entropy(FiniteMeasure::point_mass(1), q);
  CHECK(s == Approx(std::log(q.mass(1))).epsilon(1e-12));
  CHECK(s <= 0.0);
}

TEST_CASE("algorithmic entropy intervals at L=6") {
  const GibbsCalculator calc(corpus6());

  const auto h1 = calc.algorithmic_entropy(kLn2, 1);
  REQUIRE(h1.has_witness);
  CHECK(h1.nats.hi == Approx(6 * kLn2).epsilon(1e-12));
  CHECK(h1.bits.hi == Approx(6.0).epsilon(1e-12));
  CHECK(h1.nats.lo <= h1.nats.hi);

  const auto h0 = calc.algorithmic_entropy(kLn2, 0);
  REQUIRE(h0.has_witness);
  CHECK(h0.nats.hi ==
        Approx(-std::log(std::ldexp(1.0, -4) + std::ldexp(1.0, -6))).epsilon(1e-12));

  // Raising gamma strictly increases the witnessed entropy.
  const auto h1_hot = calc.algorithmic_entropy(2 * kLn2, 1);
  CHECK(h1_hot.nats.hi > h1.nats.hi);

  // Unwitnessed output: lower endpoint only, flagged.
  const auto h9 = calc.algorithmic_entropy(kLn2, 999);
  CHECK_FALSE(h9.has_witness);
  CHECK(std::isinf(h9.nats.hi));
  CHECK(std::isfinite(h9.nats.lo));

  CHECK_THROWS_AS(calc.algorithmic_entropy(0.5, 0), RegionError);
}

TEST_CASE("complexity proxies at L=6") {
  const GibbsCalculator calc(corpus6());
  CHECK(complexity_proxies(corpus6(), 1).has_value());  // free-function route
  const auto p1 = calc.complexity_proxies(1);
  REQUIRE(p1.has_value());
  CHECK(p1->k_proxy == 6);
  CHECK(p1->levin_proxy == Approx(7.0).epsilon(1e-12));

  const auto p0 = calc.complexity_proxies(0);
  REQUIRE(p0.has_value());
  CHECK(p0->k_proxy == 4);
  CHECK(p0->levin_proxy == Approx(4.0).epsilon(1e-12));

  CHECK_FALSE(calc.complexity_proxies(424242).has_value());
}

TEST_CASE("coding bound: witnessed entropy in bits never exceeds k_proxy") {
  const GibbsCalculator calc(corpus12());
  for (uint64_t n : calc.witnessed_outputs()) {
    const auto h = calc.algorithmic_entropy(kLn2, n);
    const auto proxies = calc.complexity_proxies(n);
    REQUIRE(proxies.has_value());
    CHECK(h.bits.hi <= proxies->k_proxy + 1e-9);
    CHECK(proxies->k_proxy <= proxies->levin_proxy + 1e-12);
  }
}

TEST_CASE("relative entropy: sign, equality case, worked example") {
  FiniteMeasure uniform;
  uniform.set(0, 0.5);
  uniform.set(1, 0.5);
  FiniteMeasure skew;
  skew.set(0, 0.25);
  skew.set(1, 0.75);

  CHECK(relative_entropy(uniform, uniform) == 0.0);
  CHECK(relative_entropy(skew, skew) == 0.0);

  const double expected = -(0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75));
  CHECK(relative_entropy(uniform, skew) == Approx(expected).epsilon(1e-12));
  CHECK(relative_entropy(uniform, skew) == Approx(-0.14384103622589045).epsilon(1e-9));

  // Point mass against q: collapses to -ln q(n).
  const auto q = skew;
  CHECK(relative_entropy(FiniteMeasure::point_mass(1), q) ==
        Approx(std::log(0.75)).epsilon(1e-12));

  // Random pairs: always <= 0.
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    FiniteMeasure p2, q2;
    double pt = 0, qt = 0;
    double pm[4], qm[4];
    for (int i = 0; i < 4; ++i) {
      pm[i] = u(rng);
      qm[i] = u(rng);
      pt += pm[i];
      qt += qm[i];
    }
    for (int i = 0; i < 4; ++i) {
      p2.set(i, pm[i] / pt);
      q2.set(i, qm[i] / qt);
    }
    CHECK(relative_entropy(p2, q2) <= 1e-12);
  }
}

TEST_CASE("relative entropy input validation") {
  FiniteMeasure not_prob;
  not_prob.set(0, 0.4);
  CHECK_THROWS_AS(relative_entropy(not_prob, not_prob), std::invalid_argument);

  FiniteMeasure p = FiniteMeasure::point_mass(3);
  FiniteMeasure q = FiniteMeasure::point_mass(4);
  CHECK_THROWS_AS(relative_entropy(p, q), Error);
}

TEST_CASE("enclosures nest as the corpus grows") {
  const auto c8 = dovetail_enumerate(8, 4096);
  const auto c12 = corpus12();
  for (const EnsembleParams p : {EnsembleParams{0.0, kLn2, 0.0},
                                 EnsembleParams{1.0, 1.0, 0.5}}) {
    const auto e8 = partition_enclosure(c8, p);
    const auto e12 = partition_enclosure(c12, p);
    CHECK(e12.z_lo >= e8.z_lo);
    CHECK(e12.z_hi <= e8.z_hi);
  }

  // Nesting in the step budget: more budget decides more, never less.
  const auto t_small = dovetail_enumerate(12, 16);
  const auto t_big = dovetail_enumerate(12, 4096);
  for (const EnsembleParams p : {EnsembleParams{0.0, kLn2, 0.0},
                                 EnsembleParams{0.5, 0.9, 0.25}}) {
    const auto e_small = partition_enclosure(t_small, p);
    const auto e_big = partition_enclosure(t_big, p);
    CHECK(e_big.z_lo >= e_small.z_lo);
    CHECK(e_big.z_hi <= e_small.z_hi);
  }
}
