#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "isingbound/pseudomarginals.hpp"
#include "isingbound/subsets.hpp"

// Entropy surrogates over pseudo-marginals.  All entropies are in nats and
// use the convention 0 log 0 = 0.
//
// The seeded surrogate for a vertex subset S is
//
//   f_S(mu) = H(mu_S) + sum over i not in S of H(mu_i | mu_S),
//
// with f_empty = sum_i H(mu_i) (plain mean-field).  Each f_S is concave in
// the table entries and, by the chain rule, upper-bounds the entropy of any
// true distribution with these marginals.  The augmented surrogate takes the
// min of f_S over all seeds up to a size budget, which keeps the bound while
// letting small seeds soak up local correlations.
//
// Kelley cuts: linearizing a concave f_S at a point gives an affine
// overestimator of f_S everywhere.  Probabilities are floored before logs so
// gradients stay finite on the boundary; the flooring diagnostic is recorded
// on the cut.

namespace isingbound {

// H_b(q) = -q log q - (1-q) log(1-q) in nats, zero at the endpoints.
inline double binary_entropy(double q) {
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
  return h;
}

// -sum_k p_k log p_k.  The table must be a distribution: entries >= 0 and
// summing to 1 within 1e-9.
inline double local_entropy(std::span<const double> table) {
  double sum = 0.0;
  double h = 0.0;
  for (const double p : table) {
    if (p < 0.0) throw std::invalid_argument("local_entropy: negative entry");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("local_entropy: table must sum to 1");
  return h;
}

inline double local_entropy(const std::vector<double>& table) {
  return local_entropy(std::span<const double>(table));
}

// H(mu_i | mu_S) = -sum_x mu_{S u i}(x) log( mu_{S u i}(x) / mu_S(x_S) ),
// the entropy of vertex i's conditional averaged over seed assignments.
// Zero-probability seed assignments contribute nothing.  Lies in [0, log 2].
inline double conditional_entropy(const PseudoMarginals& pm, int i, mask_t seed) {
  if (i < 0 || i >= pm.n())
    throw std::invalid_argument("conditional_entropy: vertex out of range");
  if ((seed >> i) & 1)
    throw std::invalid_argument("conditional_entropy: vertex may not be in the seed");
  const int ssz = popcount(seed);
  if (ssz + 1 > pm.level())
    throw std::invalid_argument("conditional_entropy: seed too large for this level");
  if (seed == 0) return local_entropy(pm.table(mask_t{1} << i));

  const mask_t joint = seed | (mask_t{1} << i);
  const int p = rank_in(joint, i);
  const auto jt = pm.table(joint);
  const auto st = pm.table(seed);
  double h = 0.0;
  for (std::uint32_t x = 0; x < jt.size(); ++x) {
    const double pj = jt[x];
    if (pj <= 0.0) continue;
    const double ps = st[remove_bit(x, p)];
    if (ps <= 0.0) continue;  // inconsistent dust; the weight is negligible
    h -= pj * std::log(pj / ps);
  }
  return std::max(h, 0.0);
}

// f_S as defined above.  Requires |S| + 1 <= level when S != full vertex set.
inline double seeded_entropy(const PseudoMarginals& pm, mask_t seed) {
  double h = seed == 0 ? 0.0 : local_entropy(pm.table(seed));
  for (int i = 0; i < pm.n(); ++i)
    if (((seed >> i) & 1) == 0) h += conditional_entropy(pm, i, seed);
  return h;
}

struct SurrogateValue {
  double value = 0.0;
  mask_t witness = 0;  // minimizing seed; empty set for plain mean-field
};

// f_S for every candidate seed with |S| <= seed_size, the empty seed first,
// then size-then-lex order.
inline std::vector<SurrogateValue> seeded_entropies(const PseudoMarginals& pm,
                                                    int seed_size) {
  if (seed_size < 0)
    throw std::invalid_argument("surrogate_entropy: seed_size must be >= 0");
  if (seed_size + 1 > pm.level())
    throw std::invalid_argument("surrogate_entropy: seed_size + 1 exceeds level");
  std::vector<SurrogateValue> out;
  out.push_back({seeded_entropy(pm, 0), 0});
  if (seed_size > 0)
    for (const mask_t s : subsets_by_size(pm.n(), seed_size))
      out.push_back({seeded_entropy(pm, s), s});
  return out;
}

// Augmented mean-field surrogate: min of f_S over all seeds with
// |S| <= seed_size, the empty seed included.  seed_size = 0 is plain
// mean-field.  Seeds are scanned in size-then-lex order and only strict
// improvements move the witness, so ties resolve to the first candidate.
inline SurrogateValue surrogate_entropy(const PseudoMarginals& pm, int seed_size) {
  SurrogateValue best{std::numeric_limits<double>::infinity(), 0};
  for (const SurrogateValue& sv : seeded_entropies(pm, seed_size))
    if (sv.value < best.value) best = sv;
  return best;
}

// ---------------------------------------------------------------------------
// Tangent cuts.

// Affine overestimator of f_S obtained by linearizing at a generating point:
// evaluates to  constant + sum coef * mu  over the table columns of the
// generating index.  By concavity the cut dominates f_S at every valid
// pseudo-marginal set (up to flooring effects near the boundary).
struct EntropyCut {
  mask_t seed = 0;
  double constant = 0.0;
  std::vector<std::pair<int, double>> coef;  // (column, coefficient)
  double value_at_generation = 0.0;          // f_S at the generating point
  double floor_error = 0.0;  // clamped entries * floor * |log floor|
};

inline double evaluate_cut(const EntropyCut& cut, const PseudoMarginals& pm) {
  double v = cut.constant;
  for (const auto& [col, c] : cut.coef)
    v += c * pm.values()[static_cast<std::size_t>(col)];
  return v;
}

// Linearizes f_S at `pm`.  Probabilities are clamped below at `floor`
// before logs.  Exact partials, floored:
//
//   d f_S / d mu_S(a)      = -(1 + log mu_S(a)) + (n - |S|)
//   d f_S / d mu_{S u i}(x) = -(1 + log( mu_{S u i}(x) / mu_S(x_S) ))
//
// (the +1 per conditioned vertex folds the derivative of the conditional
// terms with respect to the seed table, which equals 1 at consistent
// points).  For the empty seed only the singleton terms remain.  The
// constant is chosen so the cut equals f_S(pm) at pm exactly.
inline EntropyCut entropy_cut(const PseudoMarginals& pm, mask_t seed,
                              double floor = 1e-9) {
  if (floor <= 0.0 || floor >= 0.5)
    throw std::invalid_argument("entropy_cut: floor must lie in (0, 0.5)");
  if ((seed >> pm.n()) != 0)
    throw std::invalid_argument("entropy_cut: seed has vertices out of range");
  if (popcount(seed) + 1 > pm.level())
    throw std::invalid_argument("entropy_cut: seed too large for this level");

  const SaIndex& idx = pm.index();
  EntropyCut cut;
  cut.seed = seed;
  cut.value_at_generation = seeded_entropy(pm, seed);
  int clamped = 0;
  const auto floored = [&](double p) {
    if (p < floor) {
      ++clamped;
      return floor;
    }
    return p;
  };

  if (seed == 0) {
    for (int i = 0; i < pm.n(); ++i) {
      const mask_t vm = mask_t{1} << i;
      for (std::uint32_t a = 0; a < 2; ++a)
        cut.coef.emplace_back(idx.column(vm, a),
                              -(1.0 + std::log(floored(pm.prob(vm, a)))));
    }
  } else {
    const int ssz = popcount(seed);
    const double fold = static_cast<double>(pm.n() - ssz);
    const auto st = pm.table(seed);
    for (std::uint32_t a = 0; a < st.size(); ++a)
      cut.coef.emplace_back(idx.column(seed, a),
                            -(1.0 + std::log(floored(st[a]))) + fold);
    for (int i = 0; i < pm.n(); ++i) {
      if ((seed >> i) & 1) continue;
      const mask_t joint = seed | (mask_t{1} << i);
      const int p = rank_in(joint, i);
      const auto jt = pm.table(joint);
      for (std::uint32_t x = 0; x < jt.size(); ++x) {
        const double ratio = floored(jt[x]) / floored(st[remove_bit(x, p)]);
        cut.coef.emplace_back(idx.column(joint, x), -(1.0 + std::log(ratio)));
      }
    }
  }

  double at_point = 0.0;
  for (const auto& [col, c] : cut.coef)
    at_point += c * pm.values()[static_cast<std::size_t>(col)];
  cut.constant = cut.value_at_generation - at_point;
  cut.floor_error = static_cast<double>(clamped) * floor * std::abs(std::log(floor));
  return cut;
}

}  // namespace isingbound
