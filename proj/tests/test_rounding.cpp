#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "isingbound/entropy.hpp"
#include "isingbound/exact.hpp"
#include "isingbound/model.hpp"
#include "isingbound/pseudomarginals.hpp"
#include "isingbound/rounding.hpp"
#include "isingbound/solver.hpp"

namespace ib = isingbound;

namespace {

constexpr double kLog2 = 0.6931471805599453;

ib::PseudoMarginals gibbs_pm(const ib::IsingModel& m, int level) {
  return ib::project(ib::exact_distribution(m), level);
}

// Brute-force expansion of the product-conditional form into a full 2^n
// table; the reference against which the closed-form routines are tested.
ib::DenseDistribution expand(const ib::RoundedDistribution& rd) {
  ib::DenseDistribution d;
  d.n = rd.n;
  d.p.assign(std::size_t{1} << rd.n, 0.0);
  for (ib::mask_t x = 0; x < d.p.size(); ++x) {
    std::uint32_t a = 0;
    for (int v = 0; v < rd.n; ++v)
      if ((rd.seed >> v) & 1)
        a |= static_cast<std::uint32_t>((x >> v) & 1) << ib::rank_in(rd.seed, v);
    double p = rd.seed_table[a];
    for (std::size_t k = 0; k < rd.outside.size(); ++k) {
      const double q = rd.plus_prob[a][k];
      p *= ((x >> rd.outside[k]) & 1) ? q : 1.0 - q;
    }
    d.p[x] = p;
  }
  return d;
}

ib::DenseDistribution product_distribution(const std::vector<double>& plus) {
  ib::DenseDistribution d;
  d.n = static_cast<int>(plus.size());
  d.p.assign(std::size_t{1} << d.n, 1.0);
  for (ib::mask_t x = 0; x < d.p.size(); ++x)
    for (int v = 0; v < d.n; ++v)
      d.p[x] *= ((x >> v) & 1) ? plus[static_cast<std::size_t>(v)]
                               : 1.0 - plus[static_cast<std::size_t>(v)];
  return d;
}

}  // namespace

TEST_CASE("product distributions need no seed", "[rounding]") {
  const auto dist = product_distribution({0.3, 0.8, 0.55, 0.1});
  ib::IsingModel m(4);
  m.set_coupling(0, 1, 0.7);
  m.set_coupling(1, 2, -0.4);
  m.set_coupling(2, 3, 0.2);
  const auto pm = ib::project(dist, 4);  // deep enough for a budget of two

  const auto choice = ib::best_seed(m, pm, 1);
  CHECK(choice.seed == 0);
  CHECK(choice.residual <= 1e-9);
  // Larger budgets cannot beat an exact factorization.
  CHECK(ib::best_seed(m, pm, 2).residual <= 1e-9);
}

TEST_CASE("conditioning on a correlated pair removes its residual", "[rounding]") {
  // Vertices 0 and 1 perfectly correlated, vertex 2 independent.
  ib::DenseDistribution dist;
  dist.n = 3;
  dist.p = {0.25, 0.0, 0.0, 0.25, 0.25, 0.0, 0.0, 0.25};
  ib::IsingModel m(3);
  m.set_coupling(0, 1, 1.0);
  const auto pm = ib::project(dist, 3);

  const double r0 = ib::seed_residual(m, pm, 0);
  CHECK(r0 == Catch::Approx(2.0).margin(1e-12));  // 2|J| * |1 - 0*0|

  const auto choice = ib::best_seed(m, pm, 1);
  CHECK(choice.seed == 0b001);  // {0} and {1} tie at zero; scan order keeps {0}
  CHECK(choice.residual <= 1e-12);
}

TEST_CASE("seed residual never rises with a bigger budget", "[rounding]") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto m = ib::generate(ib::DenseRandom{6, 0.6}, seed);
    const auto pm = gibbs_pm(m, 4);
    double prev = ib::best_seed(m, pm, 0).residual;
    for (int t = 1; t <= 2; ++t) {
      const double cur = ib::best_seed(m, pm, t).residual;
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("seed scoring validates its inputs", "[rounding]") {
  const auto m = ib::generate(ib::DenseRandom{4, 0.5}, 3);
  const auto pm = gibbs_pm(m, 2);
  CHECK_THROWS_AS(ib::best_seed(m, pm, 1), std::invalid_argument);   // needs level 3
  CHECK_THROWS_AS(ib::best_seed(m, pm, -1), std::invalid_argument);
  CHECK_THROWS_AS(ib::seed_residual(m, pm, 0b10000), std::invalid_argument);
  CHECK_NOTHROW(ib::best_seed(m, pm, 0));

  // Seeds that leave at most one vertex outside score zero without needing
  // any deeper tables.
  ib::IsingModel m2(2);
  m2.set_coupling(0, 1, 0.5);
  const auto pm2 = gibbs_pm(m2, 2);
  CHECK(ib::seed_residual(m2, pm2, 0b01) == 0.0);
  CHECK(ib::best_seed(m2, pm2, 1).residual <= 1e-12);
}

TEST_CASE("rounded distribution reproduces seed table and conditionals",
          "[rounding]") {
  const auto m = ib::generate(ib::DenseRandom{6, 0.8}, 21);
  const auto pm = gibbs_pm(m, 3);
  const ib::mask_t seed = 0b001010;  // {1, 3}
  const auto rd = ib::round_to_distribution(pm, seed);

  REQUIRE(rd.seed_table.size() == 4);
  REQUIRE(rd.outside == std::vector<int>{0, 2, 4, 5});

  const auto exp = expand(rd);
  exp.validate();
  const auto seed_marg = ib::exact_marginal(exp, {1, 3});
  for (std::size_t a = 0; a < 4; ++a)
    CHECK(seed_marg[a] == Catch::Approx(rd.seed_table[a]).margin(1e-12));

  // Conditional singleton probabilities of the expansion match the stored
  // tables.
  for (std::uint32_t a = 0; a < 4; ++a) {
    for (std::size_t k = 0; k < rd.outside.size(); ++k) {
      // P(x_i = +1, x_S = a) accumulated directly from the expansion.
      double pa = 0.0, pia = 0.0;
      for (ib::mask_t x = 0; x < exp.p.size(); ++x) {
        const bool match = (((x >> 1) & 1) == ((a >> 0) & 1)) &&
                           (((x >> 3) & 1) == ((a >> 1) & 1));
        if (!match) continue;
        pa += exp.p[x];
        if ((x >> rd.outside[k]) & 1) pia += exp.p[x];
      }
      if (pa > 1e-12)
        CHECK(pia / pa == Catch::Approx(rd.plus_prob[a][k]).margin(1e-12));
    }
  }
}

TEST_CASE("zero-probability seed assignments fall back to uniform",
          "[rounding]") {
  // Vertex 0 is deterministically +1, so the a = 0 row of the seed table
  // vanishes and its conditionals must default to 1/2.
  const auto dist = product_distribution({1.0, 0.25, 0.6});
  const auto pm = ib::project(dist, 2);
  const auto rd = ib::round_to_distribution(pm, 0b001);
  REQUIRE(rd.seed_table.size() == 2);
  CHECK(rd.seed_table[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(rd.plus_prob[0][0] == 0.5);
  CHECK(rd.plus_prob[0][1] == 0.5);
  CHECK(rd.plus_prob[1][0] == Catch::Approx(0.25).margin(1e-12));
  CHECK(rd.plus_prob[1][1] == Catch::Approx(0.6).margin(1e-12));

  CHECK_THROWS_AS(ib::round_to_distribution(pm, 0b111), std::invalid_argument);
  CHECK_THROWS_AS(ib::round_to_distribution(pm, 0b1000), std::invalid_argument);
}

TEST_CASE("closed-form objective equals the expanded free energy", "[rounding]") {
  for (std::uint64_t seed : {31u, 32u}) {
    const auto m = ib::generate(ib::DenseRandom{8, 0.5}, seed);
    const auto pm = gibbs_pm(m, 3);
    for (ib::mask_t s : {ib::mask_t{0}, ib::mask_t{0b100}, ib::mask_t{0b10001}}) {
      const auto rd = ib::round_to_distribution(pm, s);
      const auto exp = expand(rd);
      const double closed = ib::lower_bound(m, rd);
      const double brute = ib::free_energy(exp, m);
      CHECK(closed == Catch::Approx(brute).margin(1e-9));
      // Genuine distribution, so the variational inequality is strict.
      CHECK(closed <= ib::exact_log_z(m) + 1e-9);
    }
  }
}

TEST_CASE("rounded entropy splits into seed plus conditional terms",
          "[rounding]") {
  // Against the all-zero model the objective is pure entropy, so the closed
  // form must equal the entropy of the expanded table.
  const ib::IsingModel zero(6);
  const auto m = ib::generate(ib::DenseRandom{6, 0.9}, 77);
  const auto pm = gibbs_pm(m, 3);
  for (ib::mask_t s : {ib::mask_t{0b000011}, ib::mask_t{0b100100}}) {
    const auto rd = ib::round_to_distribution(pm, s);
    const auto exp = expand(rd);
    double h = 0.0;
    for (const double p : exp.p)
      if (p > 0.0) h -= p * std::log(p);
    CHECK(ib::lower_bound(zero, rd) == Catch::Approx(h).margin(1e-9));
  }
}

TEST_CASE("degenerate rounded distributions have exact closed forms",
          "[rounding]") {
  // Uniform: no energy, full entropy.
  const ib::IsingModel zero(5);
  const auto uniform_pm = gibbs_pm(zero, 2);
  const auto uniform_rd = ib::round_to_distribution(uniform_pm, 0);
  CHECK(ib::lower_bound(zero, uniform_rd) ==
        Catch::Approx(5 * kLog2).margin(1e-12));

  // Point mass on the all-plus state: full energy, no entropy.
  ib::IsingModel ferro(4);
  ferro.set_coupling(0, 1, 0.5);
  ferro.set_coupling(1, 2, 0.25);
  ferro.set_coupling(0, 3, 1.5);
  ib::DenseDistribution point;
  point.n = 4;
  point.p.assign(16, 0.0);
  point.p[15] = 1.0;
  const auto rd = ib::round_to_distribution(ib::project(point, 2), 0);
  CHECK(ib::lower_bound(ferro, rd) ==
        Catch::Approx(2.0 * (0.5 + 0.25 + 1.5)).margin(1e-12));

  ib::IsingModel wrong(5);
  CHECK_THROWS_AS(ib::lower_bound(wrong, rd), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and matches the distribution",
          "[rounding]") {
  // Correlated pair plus one free vertex.
  ib::DenseDistribution dist;
  dist.n = 3;
  dist.p = {0.20, 0.0, 0.0, 0.30, 0.20, 0.0, 0.0, 0.30};
  const auto pm = ib::project(dist, 2);
  const auto rd = ib::round_to_distribution(pm, 0b001);

  CHECK(ib::sample(rd, std::uint64_t{42}) == ib::sample(rd, std::uint64_t{42}));

  ib::SplitMix64 rng(1234);
  const int draws = 100000;
  std::vector<int> plus(3, 0);
  double pair = 0.0;
  for (int d = 0; d < draws; ++d) {
    const ib::mask_t x = ib::sample(rd, rng);
    for (int v = 0; v < 3; ++v) plus[v] += (x >> v) & 1;
    pair += ib::spin_at(static_cast<std::uint32_t>(x), 0) *
            ib::spin_at(static_cast<std::uint32_t>(x), 1);
  }
  // True singleton +1 probabilities: 0.6, 0.6, 0.5; true E[x0 x1] = 1.
  CHECK(std::abs(plus[0] / double(draws) - 0.6) <= 0.01);
  CHECK(std::abs(plus[1] / double(draws) - 0.6) <= 0.01);
  CHECK(std::abs(plus[2] / double(draws) - 0.5) <= 0.01);
  CHECK(std::abs(pair / draws - 1.0) <= 0.02);

  // A point-mass seed table always yields the same configuration.
  ib::DenseDistribution pt;
  pt.n = 2;
  pt.p = {0.0, 0.0, 0.0, 1.0};
  const auto rd2 = ib::round_to_distribution(ib::project(pt, 2), 0b11);
  for (std::uint64_t s = 0; s < 10; ++s)
    CHECK(ib::sample(rd2, s) == 0b11);
}

TEST_CASE("bound report on the all-zero model", "[rounding]") {
  const ib::IsingModel m(4);
  ib::RelaxationOptions opt;
  opt.seed_size = 1;
  const auto rep = ib::bound_report(m, opt);
  CHECK(rep.lower == Catch::Approx(4 * kLog2).margin(1e-7));
  CHECK(rep.upper == Catch::Approx(4 * kLog2).margin(1e-6));
  CHECK(rep.gap >= -1e-9);
  CHECK_FALSE(rep.delta.has_value());
  CHECK_FALSE(rep.guarantee.has_value());
  CHECK(rep.j_total == 0.0);
  CHECK(rep.seed_set == 0);
  CHECK(rep.residual <= 1e-12);
}

TEST_CASE("bound report closes the gap on a single coupling", "[rounding]") {
  ib::IsingModel m(2);
  m.set_coupling(0, 1, 0.5);
  ib::RelaxationOptions opt;
  opt.seed_size = 1;
  opt.tol = 1e-7;
  opt.max_iters = 200;
  const auto rep = ib::bound_report(m, opt);
  const double exact = ib::exact_log_z(m);
  CHECK(rep.solver.converged);
  CHECK(rep.lower <= exact + 1e-9);
  CHECK(rep.upper >= exact - 1e-9);
  CHECK(rep.gap <= opt.tol + 1e-6);
  CHECK(rep.guarantee.has_value());
}

TEST_CASE("bound report sandwiches the truth on random models", "[rounding]") {
  for (std::uint64_t seed : {51u, 52u, 53u}) {
    const auto m = ib::generate(ib::DenseRandom{6, 0.4}, seed);
    ib::RelaxationOptions opt;
    opt.seed_size = 1;
    opt.max_iters = 60;
    const auto rep = ib::bound_report(m, opt);
    const double exact = ib::exact_log_z(m);
    CHECK(rep.lower <= exact + 1e-7);
    CHECK(rep.upper >= exact - 1e-6);
    REQUIRE(rep.delta.has_value());
    REQUIRE(rep.guarantee.has_value());
    CHECK(*rep.guarantee ==
          Catch::Approx(100.0 / *rep.delta * m.j_total()).margin(1e-9));
    CHECK(rep.gap <= *rep.guarantee + opt.tol);
    CHECK(rep.residual <= *rep.guarantee + 1e-9);
    CHECK(rep.wall_ms > 0.0);
  }
}

TEST_CASE("bound report on a dense regular model", "[rounding]") {
  const auto m = ib::generate(ib::RegularPm{8, 6, 0.25}, 99);
  ib::RelaxationOptions opt;
  opt.seed_size = 1;
  opt.max_iters = 40;
  const auto rep = ib::bound_report(m, opt);
  const double exact = ib::exact_log_z(m);
  CHECK(rep.lower <= exact + 1e-7);
  CHECK(rep.upper >= exact - 1e-6);
  REQUIRE(rep.j_regular.has_value());
  CHECK(*rep.j_regular == Catch::Approx(6 * 0.25).margin(1e-12));
  REQUIRE(rep.delta.has_value());
  CHECK(*rep.delta == Catch::Approx(6.0 / 8.0).margin(1e-12));
}
