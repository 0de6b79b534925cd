#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "isingbound/entropy.hpp"
#include "isingbound/model.hpp"
#include "isingbound/prng.hpp"
#include "isingbound/pseudomarginals.hpp"
#include "isingbound/solver.hpp"
#include "isingbound/subsets.hpp"

// Correlation rounding: turn relaxation pseudo-marginals into an actual
// distribution by conditioning on a small seed set and treating the remaining
// vertices as independent given the seed assignment.  Being a genuine
// distribution, its free energy is a certified lower bound on log Z.

namespace isingbound {

// mu~(x) = mu_S(x_S) * prod over i not in S of mu(x_i | x_S):
// an explicit product-conditional distribution.
struct RoundedDistribution {
  int n = 0;
  mask_t seed = 0;
  std::vector<double> seed_table;      // 2^|seed| probabilities ({1} for S = {})
  std::vector<int> outside;            // vertices not in the seed, ascending
  // plus_prob[a][k] = P(x_outside[k] = +1 | seed assignment a)
  std::vector<std::vector<double>> plus_prob;
};

namespace detail {

// Assignment of S u {i} obtained by splicing bit `bi` for vertex i into the
// seed assignment `a`.
inline std::uint32_t splice1(std::uint32_t a, mask_t joint, int i, std::uint32_t bi) {
  return insert_bit(a, rank_in(joint, i), bi);
}

inline std::uint32_t splice2(std::uint32_t a, mask_t joint, int i, std::uint32_t bi,
                             int j, std::uint32_t bj) {
  // i < j, so inserting at i's (lower) position first keeps j's rank valid.
  return insert_bit(insert_bit(a, rank_in(joint, i), bi), rank_in(joint, j), bj);
}

}  // namespace detail

// Scores a candidate seed: the |J|-weighted total conditional covariance of
// all vertex pairs outside S, averaged over seed assignments.  Zero exactly
// when conditioning on S makes the remaining pair moments factorize.
inline double seed_residual(const IsingModel& m, const PseudoMarginals& pm,
                            mask_t seed) {
  const int n = pm.n();
  if ((seed >> n) != 0)
    throw std::invalid_argument("seed_residual: seed has vertices out of range");
  const int s = popcount(seed);
  if (n - s < 2) return 0.0;  // no outside pairs
  if (s + 2 > pm.level())
    throw std::invalid_argument("seed_residual: level insufficient for this seed");

  const auto couplings = m.coupling_list();
  double total = 0.0;
  const std::uint32_t assignments = 1u << s;
  for (std::uint32_t a = 0; a < assignments; ++a) {
    const double pa = s == 0 ? 1.0 : pm.table(seed)[a];
    if (pa <= 1e-12) continue;
    double r = 0.0;
    for (const auto& [i, j, v] : couplings) {
      if (((seed >> i) & 1) || ((seed >> j) & 1)) continue;  // factorizes exactly
      const mask_t ji = seed | (mask_t{1} << i);
      const mask_t jj = seed | (mask_t{1} << j);
      const mask_t jij = ji | jj;
      const auto ti = pm.table(ji);
      const auto tj = pm.table(jj);
      const auto tij = pm.table(jij);
      const double mi = (ti[detail::splice1(a, ji, i, 1)] -
                         ti[detail::splice1(a, ji, i, 0)]) / pa;
      const double mj = (tj[detail::splice1(a, jj, j, 1)] -
                         tj[detail::splice1(a, jj, j, 0)]) / pa;
      const double eij = (tij[detail::splice2(a, jij, i, 1, j, 1)] +
                          tij[detail::splice2(a, jij, i, 0, j, 0)] -
                          tij[detail::splice2(a, jij, i, 1, j, 0)] -
                          tij[detail::splice2(a, jij, i, 0, j, 1)]) / pa;
      r += 2.0 * std::abs(v) * std::abs(eij - mi * mj);
    }
    total += pa * r;
  }
  return total;
}

struct SeedChoice {
  mask_t seed = 0;
  double residual = 0.0;
};

// Exhaustively scores every seed with |S| <= t (the empty set included) and
// returns the first minimizer in size-then-lex scan order.  Scores within
// 1e-12 of the incumbent count as ties, so rounding dust cannot displace a
// smaller seed.
inline SeedChoice best_seed(const IsingModel& m, const PseudoMarginals& pm,
                            int t) {
  const int n = pm.n();
  if (t < 0) throw std::invalid_argument("best_seed: seed budget must be >= 0");
  const int cap = std::min(t, n);
  if (std::min(cap, n - 2) + 2 > pm.level())
    throw std::invalid_argument("best_seed: level insufficient for this budget");
  SeedChoice best{0, seed_residual(m, pm, 0)};
  if (cap > 0)
    for (const mask_t s : subsets_by_size(n, cap)) {
      const double r = seed_residual(m, pm, s);
      if (r < best.residual - 1e-12) best = {s, r};
    }
  return best;
}

// Copies the seed table and all singleton conditionals out of pm.
// Zero-probability seed assignments get uniform conditionals (they carry no
// weight in the rounded distribution).
inline RoundedDistribution round_to_distribution(const PseudoMarginals& pm,
                                                 mask_t seed) {
  const int n = pm.n();
  if ((seed >> n) != 0)
    throw std::invalid_argument("round_to_distribution: seed out of range");
  const int s = popcount(seed);
  const int needed = s + (s < n ? 1 : 0);
  if (needed > pm.level())
    throw std::invalid_argument("round_to_distribution: level insufficient");

  RoundedDistribution rd;
  rd.n = n;
  rd.seed = seed;
  if (s == 0) {
    rd.seed_table = {1.0};
  } else {
    const auto st = pm.table(seed);
    rd.seed_table.assign(st.begin(), st.end());
  }
  for (int i = 0; i < n; ++i)
    if (((seed >> i) & 1) == 0) rd.outside.push_back(i);

  rd.plus_prob.resize(rd.seed_table.size());
  for (std::uint32_t a = 0; a < rd.seed_table.size(); ++a) {
    auto& row = rd.plus_prob[a];
    row.resize(rd.outside.size());
    const double pa = rd.seed_table[a];
    for (std::size_t k = 0; k < rd.outside.size(); ++k) {
      const int i = rd.outside[k];
      if (pa <= 1e-12) {
        row[k] = 0.5;
        continue;
      }
      const mask_t joint = seed | (mask_t{1} << i);
      const double q =
          pm.table(joint)[detail::splice1(a, joint, i, 1)] / pa;
      row[k] = std::clamp(q, 0.0, 1.0);
    }
  }
  return rd;
}

// E[energy] + H for the rounded distribution, in closed form: pair
// expectations factor across the conditional product, and the entropy is the
// seed entropy plus conditional singleton entropies.  Never expands 2^n
// states.  Always a valid lower bound on log Z.
inline double lower_bound(const IsingModel& m, const RoundedDistribution& rd) {
  if (m.n() != rd.n)
    throw std::invalid_argument("lower_bound: model and distribution sizes differ");
  const auto couplings = m.coupling_list();
  std::vector<double> mean(static_cast<std::size_t>(rd.n));
  double energy = 0.0;
  double entropy = 0.0;
  for (const double p : rd.seed_table)
    if (p > 0.0) entropy -= p * std::log(p);

  for (std::uint32_t a = 0; a < rd.seed_table.size(); ++a) {
    const double pa = rd.seed_table[a];
    if (pa <= 0.0) continue;
    for (int v = 0; v < rd.n; ++v)
      if ((rd.seed >> v) & 1)
        mean[static_cast<std::size_t>(v)] =
            static_cast<double>(spin_at(a, rank_in(rd.seed, v)));
    double h_cond = 0.0;
    for (std::size_t k = 0; k < rd.outside.size(); ++k) {
      const double q = rd.plus_prob[a][k];
      mean[static_cast<std::size_t>(rd.outside[k])] = 2.0 * q - 1.0;
      h_cond += binary_entropy(q);
    }
    double e = 0.0;
    for (const auto& [i, j, v] : couplings)
      e += 2.0 * v * mean[static_cast<std::size_t>(i)] *
           mean[static_cast<std::size_t>(j)];
    energy += pa * e;
    entropy += pa * h_cond;
  }
  return energy + entropy;
}

// One configuration: the seed assignment by inverse-CDF over the seed table,
// then each outside vertex independently from its conditional.
inline mask_t sample(const RoundedDistribution& rd, SplitMix64& rng) {
  std::uint32_t a = 0;
  if (rd.seed_table.size() > 1) {
    const double u = rng.uniform01();
    double acc = 0.0;
    a = static_cast<std::uint32_t>(rd.seed_table.size()) - 1;
    for (std::uint32_t c = 0; c < rd.seed_table.size(); ++c) {
      acc += rd.seed_table[c];
      if (u < acc) {
        a = c;
        break;
      }
    }
  }
  mask_t state = 0;
  for (int v = 0; v < rd.n; ++v)
    if ((rd.seed >> v) & 1)
      state |= static_cast<mask_t>((a >> rank_in(rd.seed, v)) & 1) << v;
  for (std::size_t k = 0; k < rd.outside.size(); ++k)
    if (rng.uniform01() < rd.plus_prob[a][k])
      state |= mask_t{1} << rd.outside[k];
  return state;
}

inline mask_t sample(const RoundedDistribution& rd, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return sample(rd, rng);
}

// Summary of a full run: certified bounds, their gap, and model diagnostics.
// `guarantee` and `delta` are absent when undefined (all-zero couplings, or
// a seedless run for the guarantee).
struct BoundReport {
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  std::optional<double> guarantee;  // (100 / (delta * t)) * j_total, t >= 1
  std::optional<double> delta;      // coupling density
  double j_total = 0.0;
  std::optional<double> j_regular;  // per-row |J| weight if (near-)regular
  mask_t seed_set = 0;
  double residual = 0.0;            // conditional-covariance score of seed_set
  double wall_ms = 0.0;             // not part of the serialized report
  BoundCertificate solver;
};

inline BoundReport bound_report(const IsingModel& m,
                                const RelaxationOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  RelaxationSolution sol = solve_relaxation(m, opt);
  const SeedChoice sc = best_seed(m, sol.pseudo_marginals, opt.seed_size);
  const RoundedDistribution rd =
      round_to_distribution(sol.pseudo_marginals, sc.seed);

  BoundReport rep;
  rep.lower = lower_bound(m, rd);
  rep.upper = sol.certificate.upper_bound;
  rep.gap = rep.upper - rep.lower;
  rep.j_total = m.j_total();
  try {
    rep.delta = density(m);
  } catch (const std::domain_error&) {
    rep.delta = std::nullopt;
  }
  if (rep.delta && opt.seed_size >= 1)
    rep.guarantee = 100.0 / (*rep.delta * opt.seed_size) * rep.j_total;
  rep.j_regular = regularity(m, 1e-9);
  rep.seed_set = sc.seed;
  rep.residual = sc.residual;
  rep.solver = std::move(sol.certificate);
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

}  // namespace isingbound
