#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isingbound/exact.hpp"
#include "isingbound/subsets.hpp"

// Level-k pseudo-marginals: one probability table per vertex subset of size
// 1..k, tied together by marginalization consistency.  True distributions
// project into this set; the relaxation optimizes over it.
//
// Tables follow the conventions in subsets.hpp.  Within the flat value
// vector, tables appear in size-then-lex subset order, and within a table
// the entries appear in assignment order.  That layout doubles as the LP
// column order, so (subset, assignment) <-> column is a fixed bijection.

namespace isingbound {

// Column layout for all subsets of {0..n-1} with 1 <= |S| <= level.
struct SaIndex {
  int n = 0;
  int level = 0;
  std::vector<mask_t> subsets;               // size-then-lex order
  std::unordered_map<mask_t, int> position;  // subset -> index into `subsets`
  std::vector<int> offset;                   // subset -> first column
  int columns = 0;

  static std::shared_ptr<const SaIndex> make(int n, int level) {
    if (n < 1) throw std::invalid_argument("SaIndex: n must be >= 1");
    if (level < 1 || level > n)
      throw std::invalid_argument("SaIndex: level must be in [1, n]");
    auto idx = std::make_shared<SaIndex>();
    idx->n = n;
    idx->level = level;
    idx->subsets = subsets_by_size(n, level);
    idx->offset.reserve(idx->subsets.size());
    int col = 0;
    for (std::size_t i = 0; i < idx->subsets.size(); ++i) {
      idx->position.emplace(idx->subsets[i], static_cast<int>(i));
      idx->offset.push_back(col);
      col += 1 << popcount(idx->subsets[i]);
    }
    idx->columns = col;
    return idx;
  }

  int position_of(mask_t s) const {
    const auto it = position.find(s);
    if (it == position.end())
      throw std::invalid_argument("SaIndex: subset has no table at this level");
    return it->second;
  }

  int column(mask_t s, std::uint32_t assignment) const {
    return offset[static_cast<std::size_t>(position_of(s))] +
           static_cast<int>(assignment);
  }

  // Inverse of `column`; linear scan is fine at the sizes used here.
  std::pair<mask_t, std::uint32_t> decode(int col) const {
    for (std::size_t i = subsets.size(); i-- > 0;) {
      if (offset[i] <= col)
        return {subsets[i], static_cast<std::uint32_t>(col - offset[i])};
    }
    throw std::invalid_argument("SaIndex: column out of range");
  }
};

class PseudoMarginals {
 public:
  // Takes ownership of a full value vector laid out per SaIndex(n, level).
  // Validity is not enforced here; check_valid reports it.
  PseudoMarginals(int n, int level, std::vector<double> values, double max_clamp = 0.0)
      : index_(SaIndex::make(n, level)), values_(std::move(values)), max_clamp_(max_clamp) {
    if (static_cast<int>(values_.size()) != index_->columns)
      throw std::invalid_argument("PseudoMarginals: value vector has wrong size");
  }

  // The uniform pseudo-distribution: every table is flat.
  static PseudoMarginals uniform(int n, int level) {
    auto idx = SaIndex::make(n, level);
    std::vector<double> v(static_cast<std::size_t>(idx->columns));
    for (std::size_t i = 0; i < idx->subsets.size(); ++i) {
      const int sz = 1 << popcount(idx->subsets[i]);
      const double p = 1.0 / static_cast<double>(sz);
      for (int a = 0; a < sz; ++a)
        v[static_cast<std::size_t>(idx->offset[i] + a)] = p;
    }
    return PseudoMarginals(n, level, std::move(v));
  }

  // Rebuilds every table from a joint moment vector (one entry per subset in
  // index order; the empty-set moment is implicitly 1):
  //
  //   mu_S(a) = 2^-|S| * sum over U subseteq S of m_U chi_U(a).
  //
  // Consistency and normalization hold by construction.  Tiny negative
  // entries (LP round-off) are clamped to zero and the largest clamp is
  // recorded — never silently dropped.
  static PseudoMarginals from_moments(int n, int level, const std::vector<double>& moments) {
    auto idx = SaIndex::make(n, level);
    if (moments.size() != idx->subsets.size())
      throw std::invalid_argument("from_moments: moment vector has wrong size");
    std::vector<double> v(static_cast<std::size_t>(idx->columns));
    double max_clamp = 0.0;
    for (std::size_t i = 0; i < idx->subsets.size(); ++i) {
      const mask_t s = idx->subsets[i];
      const auto verts = vertices_of(s);
      const int m = static_cast<int>(verts.size());
      const std::uint32_t full = (1u << m) - 1u;
      const double scale = 1.0 / static_cast<double>(1 << m);
      for (std::uint32_t a = 0; a <= full; ++a) {
        double acc = 1.0;  // U = empty set
        for (std::uint32_t up = full; up != 0; up = (up - 1) & full) {
          mask_t vmask = 0;
          std::uint32_t rest = up;
          while (rest != 0) {
            const int p = std::countr_zero(rest);
            vmask |= mask_t{1} << verts[static_cast<std::size_t>(p)];
            rest &= rest - 1;
          }
          acc += character(up, a) *
                 moments[static_cast<std::size_t>(idx->position_of(vmask))];
        }
        double val = acc * scale;
        if (val < 0.0) {
          max_clamp = std::max(max_clamp, -val);
          val = 0.0;
        }
        v[static_cast<std::size_t>(idx->offset[i] + a)] = val;
      }
    }
    return PseudoMarginals(n, level, std::move(v), max_clamp);
  }

  int n() const { return index_->n; }
  int level() const { return index_->level; }
  const SaIndex& index() const { return *index_; }
  std::shared_ptr<const SaIndex> index_ptr() const { return index_; }
  const std::vector<double>& values() const { return values_; }

  // Largest negative entry zeroed out at construction (0 when none were).
  double max_clamp() const { return max_clamp_; }

  std::span<const double> table(mask_t s) const {
    const std::size_t i = static_cast<std::size_t>(index_->position_of(s));
    return {values_.data() + index_->offset[i],
            std::size_t{1} << popcount(index_->subsets[i])};
  }

  double prob(mask_t s, std::uint32_t assignment) const {
    return values_[static_cast<std::size_t>(index_->column(s, assignment))];
  }

 private:
  std::shared_ptr<const SaIndex> index_;
  std::vector<double> values_;
  double max_clamp_ = 0.0;
};

// Moment vector of a pseudo-marginal set: m_U = sum_a mu_U(a) chi_U(a),
// aligned with index().subsets.  Inverse of from_moments on valid input.
inline std::vector<double> moments_of(const PseudoMarginals& pm) {
  const SaIndex& idx = pm.index();
  std::vector<double> out(idx.subsets.size());
  for (std::size_t i = 0; i < idx.subsets.size(); ++i) {
    const int m = popcount(idx.subsets[i]);
    const std::uint32_t full = (1u << m) - 1u;
    const auto tab = pm.table(idx.subsets[i]);
    double acc = 0.0;
    for (std::uint32_t a = 0; a <= full; ++a) acc += tab[a] * character(full, a);
    out[i] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validity report.

struct ValidityReport {
  double max_normalization = 0.0;  // max |sum mu_S - 1|
  double max_negativity = 0.0;     // max(0, -min entry)
  double max_consistency = 0.0;    // worst nested-marginalization mismatch

  bool ok(double tol) const {
    return max_normalization <= tol && max_negativity <= tol && max_consistency <= tol;
  }
};

// Checks normalization of every table, nonnegativity of every entry, and
// consistency of every nested pair: for all S subset T with tables present,
// marginalizing mu_T onto S must reproduce mu_S.
inline ValidityReport check_valid(const PseudoMarginals& pm) {
  ValidityReport rep;
  const SaIndex& idx = pm.index();
  for (const mask_t t : idx.subsets) {
    const int m = popcount(t);
    const std::uint32_t full = (1u << m) - 1u;
    const auto tab = pm.table(t);
    double sum = 0.0;
    for (std::uint32_t a = 0; a <= full; ++a) {
      sum += tab[a];
      rep.max_negativity = std::max(rep.max_negativity, -tab[a]);
    }
    rep.max_normalization = std::max(rep.max_normalization, std::abs(sum - 1.0));
    if (m < 2) continue;
    const auto verts = vertices_of(t);
    // Proper nonempty position-submasks of T pick out the nested subsets.
    for (std::uint32_t up = (full - 1) & full; up != 0; up = (up - 1) & full) {
      mask_t smask = 0;
      for (std::uint32_t rest = up; rest != 0; rest &= rest - 1)
        smask |= mask_t{1} << verts[static_cast<std::size_t>(std::countr_zero(rest))];
      const int ssz = popcount(smask);
      std::vector<double> marg(std::size_t{1} << ssz, 0.0);
      for (std::uint32_t a = 0; a <= full; ++a)
        marg[extract_bits(a, up)] += tab[a];
      const auto stab = pm.table(smask);
      for (std::size_t a = 0; a < marg.size(); ++a)
        rep.max_consistency =
            std::max(rep.max_consistency, std::abs(marg[a] - stab[a]));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Equality constraints of the level-k relaxation, in table coordinates.

struct LinearRow {
  std::vector<std::pair<int, double>> coef;  // (column, coefficient)
  double rhs = 0.0;
};

struct ConstraintSystem {
  std::shared_ptr<const SaIndex> index;
  std::vector<LinearRow> rows;  // normalization rows first, then marginalization
  int normalization_rows = 0;
};

// Normalization (sum mu_S = 1, one row per subset) plus one-step
// marginalization rows: for every T with |T| >= 2, every v in T, and every
// assignment a over T \ {v},
//
//   sum_s mu_T(a with v = s) - mu_{T\v}(a) = 0.
//
// Dropping one vertex at a time is enough; multi-step consistency follows
// transitively, which keeps the row count O(k C(n,k) 2^(k-1)).
inline ConstraintSystem sa_constraints(int n, int level) {
  ConstraintSystem cs;
  cs.index = SaIndex::make(n, level);
  const SaIndex& idx = *cs.index;
  for (const mask_t s : idx.subsets) {
    LinearRow row;
    const int sz = 1 << popcount(s);
    row.coef.reserve(static_cast<std::size_t>(sz));
    for (int a = 0; a < sz; ++a)
      row.coef.emplace_back(idx.column(s, static_cast<std::uint32_t>(a)), 1.0);
    row.rhs = 1.0;
    cs.rows.push_back(std::move(row));
  }
  cs.normalization_rows = static_cast<int>(cs.rows.size());
  for (const mask_t t : idx.subsets) {
    const int m = popcount(t);
    if (m < 2) continue;
    for (const int v : vertices_of(t)) {
      const mask_t s = t & ~(mask_t{1} << v);
      const int p = rank_in(t, v);
      const std::uint32_t ssz = 1u << (m - 1);
      for (std::uint32_t a = 0; a < ssz; ++a) {
        LinearRow row;
        row.coef.emplace_back(idx.column(t, insert_bit(a, p, 0)), 1.0);
        row.coef.emplace_back(idx.column(t, insert_bit(a, p, 1)), 1.0);
        row.coef.emplace_back(idx.column(s, a), -1.0);
        row.rhs = 0.0;
        cs.rows.push_back(std::move(row));
      }
    }
  }
  return cs;
}

// ---------------------------------------------------------------------------
// Projection, conditioning, pair expectations.

// True marginals of an explicit distribution for every subset of size <= k.
inline PseudoMarginals project(const DenseDistribution& dist, int level) {
  dist.validate();
  auto idx = SaIndex::make(dist.n, level);
  std::vector<double> v(static_cast<std::size_t>(idx->columns));
  for (std::size_t i = 0; i < idx->subsets.size(); ++i) {
    const auto tab = exact_marginal(dist, vertices_of(idx->subsets[i]));
    for (std::size_t a = 0; a < tab.size(); ++a)
      v[static_cast<std::size_t>(idx->offset[i]) + a] = tab[a];
  }
  return PseudoMarginals(dist.n, level, std::move(v));
}

// Conditions on vertex v carrying spin `spin` (+1 or -1) and drops one
// level.  For subsets without v the new table is
// mu_{S u v}(x_S, v = spin) / mu_v(spin); subsets containing v keep their
// table restricted to the chosen spin (so v becomes deterministic and every
// subset of size <= level-1 still has a table).
inline PseudoMarginals condition(const PseudoMarginals& pm, int v, int spin) {
  if (pm.level() < 2)
    throw std::invalid_argument("condition: needs level >= 2");
  if (v < 0 || v >= pm.n())
    throw std::invalid_argument("condition: vertex out of range");
  if (spin != 1 && spin != -1)
    throw std::invalid_argument("condition: spin must be +1 or -1");
  const int bit = spin == 1 ? 1 : 0;
  const mask_t vmask = mask_t{1} << v;
  const double pv = pm.prob(vmask, static_cast<std::uint32_t>(bit));
  if (pv <= 0.0)
    throw std::domain_error("condition: conditioning on zero-probability spin");

  auto idx = SaIndex::make(pm.n(), pm.level() - 1);
  std::vector<double> out(static_cast<std::size_t>(idx->columns));
  for (std::size_t i = 0; i < idx->subsets.size(); ++i) {
    const mask_t s = idx->subsets[i];
    const int m = popcount(s);
    const std::uint32_t full = (1u << m) - 1u;
    if ((s & vmask) == 0) {
      const mask_t t = s | vmask;
      const int p = rank_in(t, v);
      for (std::uint32_t a = 0; a <= full; ++a)
        out[static_cast<std::size_t>(idx->offset[i] + static_cast<int>(a))] =
            pm.prob(t, insert_bit(a, p, bit)) / pv;
    } else {
      const int p = rank_in(s, v);
      for (std::uint32_t a = 0; a <= full; ++a)
        out[static_cast<std::size_t>(idx->offset[i] + static_cast<int>(a))] =
            (static_cast<int>((a >> p) & 1u) == bit) ? pm.prob(s, a) / pv : 0.0;
    }
  }
  return PseudoMarginals(pm.n(), pm.level() - 1, std::move(out));
}

// E[x_i x_j] under the pair table of {i, j}.
inline double pair_expectation(const PseudoMarginals& pm, int i, int j) {
  if (i == j) throw std::invalid_argument("pair_expectation: i != j required");
  if (i < 0 || j < 0 || i >= pm.n() || j >= pm.n())
    throw std::invalid_argument("pair_expectation: vertex out of range");
  if (pm.level() < 2)
    throw std::invalid_argument("pair_expectation: needs level >= 2");
  const mask_t s = (mask_t{1} << i) | (mask_t{1} << j);
  const auto tab = pm.table(s);
  return tab[0b00] + tab[0b11] - tab[0b01] - tab[0b10];
}

}  // namespace isingbound
