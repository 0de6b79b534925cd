#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Dense revised simplex for small/medium linear programs.
//
//   maximize    c'x
//   subject to  Aeq x  = beq
//               Ale x <= ble
//               x >= 0
//
// Two phases: artificial variables establish feasibility, then the real
// objective is optimized.  The basis inverse is kept explicitly and updated
// by pivots with periodic refactorization.  Pricing is steepest-coefficient
// (Dantzig); after a long run of degenerate pivots it switches to Bland's
// rule and lifts the basic values by a tiny deterministic right-hand-side
// shift, which breaks the ties that let rounding noise cycle.  The shift is
// removed before optimality is reported, so results refer to the original
// problem.
//
// Equality systems with linearly dependent rows are handled: after phase one,
// rows whose artificial cannot be driven out are dropped as redundant (their
// reported dual multiplier is zero).
//
// The reported duals y satisfy the certificate identities for a maximization:
// value = beq'y_eq + ble'y_le, y_le >= 0, and A'y >= c componentwise.

namespace isingbound {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit, Stall };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iteration-limit";
    case LpStatus::Stall: return "stall";
  }
  return "unknown";
}

struct LpProblem {
  int vars = 0;
  std::vector<double> c;                 // objective, size vars
  std::vector<std::vector<double>> aeq;  // equality rows, each of size vars
  std::vector<double> beq;
  std::vector<std::vector<double>> ale;  // <= rows, each of size vars
  std::vector<double> ble;
};

struct LpOptions {
  int max_iters = 50000;
  double pivot_tol = 1e-9;
  double feas_tol = 1e-9;
  int refactor_every = 100;  // pivots between basis refactorizations
  int bland_after = 500;     // stalled pivots before switching to Bland
  int stall_after = 20000;   // stalled Bland pivots before giving up
  // Basis to resume from: one internal column index per row, as returned in
  // LpResult::basis.  Adding columns to a problem keeps an old basis valid;
  // if the basis is singular or infeasible the solve falls back to phase one.
  std::optional<std::vector<int>> warm_basis;
};

struct LpResult {
  LpStatus status = LpStatus::Stall;
  double value = 0.0;
  std::vector<double> x;     // structural variables only
  std::vector<double> dual;  // per input row: eq rows then <= rows
  // Basic column per surviving row; columns [0, vars) are structural and
  // [vars, vars + #le) are slacks.  Suitable for LpOptions::warm_basis.
  std::vector<int> basis;
  int iterations = 0;
  int dropped_rows = 0;  // redundant equality rows eliminated after phase one
};

namespace detail {

class SimplexSolver {
 public:
  SimplexSolver(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) {
    validate();
    build();
  }

  LpResult run() {
    res_.x.assign(static_cast<std::size_t>(p_.vars), 0.0);
    res_.dual.assign(rows_total_, 0.0);
    if (m_ == 0) {  // no constraints: x = 0 unless some objective coefficient pays
      for (int j = 0; j < p_.vars; ++j)
        if (p_.c[static_cast<std::size_t>(j)] > opt_.feas_tol) {
          res_.status = LpStatus::Unbounded;
          return res_;
        }
      res_.status = LpStatus::Optimal;
      return res_;
    }

    bool warm = try_warm_start();
    if (!warm) {
      cold_basis();
      if (has_artificials()) {
        const LpStatus ph1 = iterate(/*phase1=*/true);
        if (ph1 != LpStatus::Optimal) return finish(ph1);
        if (artificial_mass() > 1e-7) return finish(LpStatus::Infeasible);
        if (!expel_artificials()) return finish(LpStatus::Stall);
      }
    }
    return finish(iterate(/*phase1=*/false));
  }

 private:
  static constexpr double kImprove = 1e-12;

  const LpProblem& p_;
  const LpOptions& opt_;
  LpResult res_;

  int m_ = 0;             // surviving rows
  int ncols_ = 0;         // structural + slack columns
  std::vector<double> a_;  // row-major m_ x ncols_
  std::vector<double> b_;  // normalized to b >= 0 for the cold start
  std::vector<bool> neg_;       // row sign was flipped during normalization
  std::vector<int> rowmap_;     // surviving row -> original row index
  std::size_t rows_total_ = 0;  // original row count

  std::vector<int> basis_;      // per row; >= ncols_ means artificial for that row
  std::vector<char> in_basis_;  // per real column
  std::vector<double> binv_;    // m_ x m_
  std::vector<double> xb_;      // basic variable values
  int pivots_since_factor_ = 0;
  std::vector<double> b_true_;  // original rhs while a degeneracy shift is active
  bool perturbed_ = false;

  void validate() const {
    const auto sz = static_cast<std::size_t>(p_.vars);
    if (p_.vars < 0 || p_.c.size() != sz)
      throw std::invalid_argument("lp_solve: objective size mismatch");
    if (p_.aeq.size() != p_.beq.size() || p_.ale.size() != p_.ble.size())
      throw std::invalid_argument("lp_solve: row/rhs count mismatch");
    for (const auto& r : p_.aeq)
      if (r.size() != sz) throw std::invalid_argument("lp_solve: eq row size mismatch");
    for (const auto& r : p_.ale)
      if (r.size() != sz) throw std::invalid_argument("lp_solve: le row size mismatch");
  }

  void build() {
    const int neq = static_cast<int>(p_.aeq.size());
    const int nle = static_cast<int>(p_.ale.size());
    rows_total_ = static_cast<std::size_t>(neq + nle);
    m_ = neq + nle;
    ncols_ = p_.vars + nle;
    a_.assign(static_cast<std::size_t>(m_) * ncols_, 0.0);
    b_.resize(static_cast<std::size_t>(m_));
    neg_.resize(static_cast<std::size_t>(m_));
    rowmap_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const bool is_eq = i < neq;
      const auto& src = is_eq ? p_.aeq[static_cast<std::size_t>(i)]
                              : p_.ale[static_cast<std::size_t>(i - neq)];
      double rhs = is_eq ? p_.beq[static_cast<std::size_t>(i)]
                         : p_.ble[static_cast<std::size_t>(i - neq)];
      const bool flip = rhs < 0.0;
      const double s = flip ? -1.0 : 1.0;
      double* row = &a_[static_cast<std::size_t>(i) * ncols_];
      for (int j = 0; j < p_.vars; ++j) row[j] = s * src[static_cast<std::size_t>(j)];
      if (!is_eq) row[p_.vars + (i - neq)] = s;  // slack
      b_[static_cast<std::size_t>(i)] = s * rhs;
      neg_[static_cast<std::size_t>(i)] = flip;
      rowmap_[static_cast<std::size_t>(i)] = i;
    }
  }

  double col_entry(int row, int col) const {
    return a_[static_cast<std::size_t>(row) * ncols_ + col];
  }

  bool is_artificial(int col) const { return col >= ncols_; }

  bool has_artificials() const {
    for (const int c : basis_)
      if (is_artificial(c)) return true;
    return false;
  }

  void cold_basis() {
    basis_.resize(static_cast<std::size_t>(m_));
    in_basis_.assign(static_cast<std::size_t>(ncols_), 0);
    for (int i = 0; i < m_; ++i) {
      const int slack = slack_column_of_row(i);
      if (slack >= 0 && !neg_[static_cast<std::size_t>(i)]) {
        basis_[static_cast<std::size_t>(i)] = slack;  // slack serves directly
        in_basis_[static_cast<std::size_t>(slack)] = 1;
      } else {
        basis_[static_cast<std::size_t>(i)] = ncols_ + i;  // artificial
      }
    }
    factor_identity_start();
  }

  int slack_column_of_row(int row) const {
    const int neq = static_cast<int>(p_.aeq.size());
    return row < neq ? -1 : p_.vars + (row - neq);
  }

  // The cold basis matrix is the identity by construction (slacks on
  // non-negated rows, artificials elsewhere), so no inversion is needed.
  void factor_identity_start() {
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
    xb_ = b_;
    pivots_since_factor_ = 0;
  }

  bool try_warm_start() {
    if (!opt_.warm_basis) return false;
    const auto& wb = *opt_.warm_basis;
    if (static_cast<int>(wb.size()) != m_) return false;
    std::vector<char> seen(static_cast<std::size_t>(ncols_), 0);
    for (const int c : wb) {
      if (c < 0 || c >= ncols_ || seen[static_cast<std::size_t>(c)]) return false;
      seen[static_cast<std::size_t>(c)] = 1;
    }
    basis_ = wb;
    in_basis_ = seen;
    if (!refactor()) return false;
    for (const double v : xb_)
      if (v < -opt_.feas_tol) return false;
    for (double& v : xb_) v = std::max(v, 0.0);
    return true;
  }

  // Rebuild binv_ from the basis columns by Gauss-Jordan with partial
  // pivoting; recomputes xb_.  Returns false on a singular basis.  The
  // singularity threshold is relative to the matrix scale.
  bool refactor() {
    const std::size_t n = static_cast<std::size_t>(m_);
    std::vector<double> mat(n * n);
    double scale = 0.0;
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < m_; ++k) {
        const int col = basis_[static_cast<std::size_t>(k)];
        const double v =
            is_artificial(col) ? (col - ncols_ == i ? 1.0 : 0.0) : col_entry(i, col);
        mat[static_cast<std::size_t>(i) * n + k] = v;
        scale = std::max(scale, std::abs(v));
      }
    if (scale == 0.0) return false;
    const double tiny = 1e-13 * scale;
    binv_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) binv_[i * n + i] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(mat[k * n + k]);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double v = std::abs(mat[i * n + k]);
        if (v > best) { best = v; piv = i; }
      }
      if (best < tiny) return false;
      if (piv != k)
        for (std::size_t j = 0; j < n; ++j) {
          std::swap(mat[piv * n + j], mat[k * n + j]);
          std::swap(binv_[piv * n + j], binv_[k * n + j]);
        }
      const double inv = 1.0 / mat[k * n + k];
      for (std::size_t j = 0; j < n; ++j) {
        mat[k * n + j] *= inv;
        binv_[k * n + j] *= inv;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (i == k) continue;
        const double f = mat[i * n + k];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          mat[i * n + j] -= f * mat[k * n + j];
          binv_[i * n + j] -= f * binv_[k * n + j];
        }
      }
    }
    xb_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += binv_[i * n + k] * b_[k];
      xb_[i] = std::max(s, 0.0);
    }
    pivots_since_factor_ = 0;
    return true;
  }

  double objective_coef(int col, bool phase1) const {
    if (phase1) return is_artificial(col) ? -1.0 : 0.0;
    if (is_artificial(col)) return 0.0;  // kept at zero level in phase two
    return col < p_.vars ? p_.c[static_cast<std::size_t>(col)] : 0.0;
  }

  // y = (c_B)' binv, the simplex multipliers for the current basis.
  std::vector<double> multipliers(bool phase1) const {
    std::vector<double> y(static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double cb = objective_coef(basis_[static_cast<std::size_t>(i)], phase1);
      if (cb == 0.0) continue;
      const double* row = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) y[static_cast<std::size_t>(k)] += cb * row[k];
    }
    return y;
  }

  // Reduced costs for every real column: r = c - A'y.
  std::vector<double> reduced_costs(const std::vector<double>& y, bool phase1) const {
    std::vector<double> r(static_cast<std::size_t>(ncols_));
    for (int j = 0; j < ncols_; ++j) r[static_cast<std::size_t>(j)] = objective_coef(j, phase1);
    for (int i = 0; i < m_; ++i) {
      const double yi = y[static_cast<std::size_t>(i)];
      if (yi == 0.0) continue;
      const double* row = &a_[static_cast<std::size_t>(i) * ncols_];
      double* out = r.data();
      for (int j = 0; j < ncols_; ++j) out[j] -= yi * row[j];
    }
    return r;
  }

  double objective_value(bool phase1) const {
    double v = 0.0;
    for (int i = 0; i < m_; ++i)
      v += objective_coef(basis_[static_cast<std::size_t>(i)], phase1) *
           xb_[static_cast<std::size_t>(i)];
    return v;
  }

  double artificial_mass() const {
    double v = 0.0;
    for (int i = 0; i < m_; ++i)
      if (is_artificial(basis_[static_cast<std::size_t>(i)]))
        v += xb_[static_cast<std::size_t>(i)];
    return v;
  }

  std::vector<double> basis_direction(int col) const {
    std::vector<double> d(static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double* row = &binv_[static_cast<std::size_t>(i) * m_];
      double s = 0.0;
      for (int k = 0; k < m_; ++k) s += row[k] * col_entry(k, col);
      d[static_cast<std::size_t>(i)] = s;
    }
    return d;
  }

  void pivot(int leave_row, int enter_col, const std::vector<double>& d) {
    const double dr = d[static_cast<std::size_t>(leave_row)];
    const double step = xb_[static_cast<std::size_t>(leave_row)] / dr;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      double& v = xb_[static_cast<std::size_t>(i)];
      v = std::max(v - step * d[static_cast<std::size_t>(i)], 0.0);
    }
    xb_[static_cast<std::size_t>(leave_row)] = std::max(step, 0.0);

    double* prow = &binv_[static_cast<std::size_t>(leave_row) * m_];
    const double inv = 1.0 / dr;
    for (int k = 0; k < m_; ++k) prow[k] *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      const double f = d[static_cast<std::size_t>(i)];
      if (f == 0.0) continue;
      double* row = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
    }

    const int old = basis_[static_cast<std::size_t>(leave_row)];
    if (!is_artificial(old)) in_basis_[static_cast<std::size_t>(old)] = 0;
    basis_[static_cast<std::size_t>(leave_row)] = enter_col;
    in_basis_[static_cast<std::size_t>(enter_col)] = 1;
    ++pivots_since_factor_;
  }

  double basis_col_entry(int row, int col) const {
    if (is_artificial(col)) return col - ncols_ == row ? 1.0 : 0.0;
    return col_entry(row, col);
  }

  // A degenerate vertex can trap the iteration in zero-length pivots that
  // rounding noise keeps reopening faster than Bland's rule can close them.
  // Lifting every basic value by a tiny positive offset (a right-hand-side
  // shift of B * eps) makes the ratio test strict again; the shift scale,
  // ~1e-9, sits far above rounding error, so the shifted problem pivots like
  // a nondegenerate one.  Offsets come from a fixed-seed splitmix64 stream
  // to keep solves deterministic.
  void perturb() {
    if (perturbed_) return;
    b_true_ = b_;
    perturbed_ = true;
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (int i = 0; i < m_; ++i) {
      state += 0xbf58476d1ce4e5b9ull;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      z ^= z >> 31;
      const double u = static_cast<double>(z >> 11) * 0x1.0p-53;  // in [0, 1)
      const double eps = (1.0 + u) * 1e-9 *
                         (1.0 + std::abs(xb_[static_cast<std::size_t>(i)]));
      xb_[static_cast<std::size_t>(i)] += eps;
      const int col = basis_[static_cast<std::size_t>(i)];
      for (int k = 0; k < m_; ++k)
        b_[static_cast<std::size_t>(k)] += eps * basis_col_entry(k, col);
    }
  }

  void unperturb() {
    if (!perturbed_) return;
    b_ = b_true_;
    perturbed_ = false;
  }

  LpStatus iterate(bool phase1) {
    bool bland = false;
    int stalled = 0;
    double last = objective_value(phase1);
    while (true) {
      if (res_.iterations >= opt_.max_iters) {
        unperturb();
        return LpStatus::IterLimit;
      }
      if (pivots_since_factor_ >= opt_.refactor_every && !refactor()) {
        unperturb();
        return LpStatus::Stall;
      }

      const std::vector<double> y = multipliers(phase1);
      const std::vector<double> r = reduced_costs(y, phase1);
      int enter = -1;
      double best = opt_.feas_tol;
      for (int j = 0; j < ncols_; ++j) {
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        const double rj = r[static_cast<std::size_t>(j)];
        if (rj <= best) continue;
        enter = j;
        if (bland) break;  // first eligible column
        best = rj;
      }
      if (enter < 0) {
        // Optimality depends only on reduced costs, so the basis stays
        // optimal after dropping an active degeneracy shift; refactor to
        // report basic values for the true right-hand side.
        if (perturbed_) {
          unperturb();
          if (!refactor()) return LpStatus::Stall;
        }
        return LpStatus::Optimal;
      }

      const std::vector<double> d = basis_direction(enter);
      int leave = -1;
      double ratio = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double di = d[static_cast<std::size_t>(i)];
        if (di <= opt_.pivot_tol) continue;
        const double t = xb_[static_cast<std::size_t>(i)] / di;
        if (leave < 0 || t < ratio - 1e-12) {
          leave = i;
          ratio = t;
          continue;
        }
        if (t >= ratio + 1e-12) continue;
        // Tied ratios: prefer the largest pivot element for numerical
        // stability, except under Bland's rule, which needs the smallest
        // basic index to guarantee termination.
        const bool better =
            bland ? basis_[static_cast<std::size_t>(i)] <
                        basis_[static_cast<std::size_t>(leave)]
                  : di > d[static_cast<std::size_t>(leave)] + 1e-12 ||
                        (di > d[static_cast<std::size_t>(leave)] - 1e-12 &&
                         basis_[static_cast<std::size_t>(i)] <
                             basis_[static_cast<std::size_t>(leave)]);
        if (better) {
          leave = i;
          ratio = t;
        }
      }
      if (leave < 0) {
        unperturb();
        return phase1 ? LpStatus::Stall : LpStatus::Unbounded;
      }

      pivot(leave, enter, d);
      ++res_.iterations;

      const double now = objective_value(phase1);
      if (now > last + kImprove) {
        stalled = 0;
        last = now;
      } else if (++stalled > (bland ? opt_.stall_after : opt_.bland_after)) {
        if (bland) {
          unperturb();
          return LpStatus::Stall;
        }
        bland = true;
        stalled = 0;
        perturb();
        }
    }
  }

  // After phase one, pivot zero-level artificials out of the basis; rows
  // admitting no real pivot column are linearly dependent and get dropped.
  bool expel_artificials() {
    std::vector<int> redundant;
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      const double* brow = &binv_[static_cast<std::size_t>(i) * m_];
      int enter = -1;
      for (int j = 0; j < ncols_ && enter < 0; ++j) {
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        double v = 0.0;
        for (int k = 0; k < m_; ++k) v += brow[k] * col_entry(k, j);
        if (std::abs(v) > opt_.pivot_tol) enter = j;
      }
      if (enter < 0) {
        redundant.push_back(i);
        continue;
      }
      pivot(i, enter, basis_direction(enter));
      ++res_.iterations;
    }
    if (redundant.empty()) return true;
    return drop_rows(redundant);
  }

  bool drop_rows(const std::vector<int>& rows) {
    std::vector<char> dead(static_cast<std::size_t>(m_), 0);
    for (const int r : rows) dead[static_cast<std::size_t>(r)] = 1;
    const int nm = m_ - static_cast<int>(rows.size());
    std::vector<double> na(static_cast<std::size_t>(nm) * ncols_);
    std::vector<double> nb(static_cast<std::size_t>(nm));
    std::vector<bool> nneg(static_cast<std::size_t>(nm));
    std::vector<int> nmap(static_cast<std::size_t>(nm));
    std::vector<int> nbasis(static_cast<std::size_t>(nm));
    int w = 0;
    for (int i = 0; i < m_; ++i) {
      if (dead[static_cast<std::size_t>(i)]) continue;
      std::copy_n(&a_[static_cast<std::size_t>(i) * ncols_], ncols_,
                  &na[static_cast<std::size_t>(w) * ncols_]);
      nb[static_cast<std::size_t>(w)] = b_[static_cast<std::size_t>(i)];
      nneg[static_cast<std::size_t>(w)] = neg_[static_cast<std::size_t>(i)];
      nmap[static_cast<std::size_t>(w)] = rowmap_[static_cast<std::size_t>(i)];
      nbasis[static_cast<std::size_t>(w)] = basis_[static_cast<std::size_t>(i)];
      ++w;
    }
    a_ = std::move(na);
    b_ = std::move(nb);
    neg_ = std::move(nneg);
    rowmap_ = std::move(nmap);
    basis_ = std::move(nbasis);
    m_ = nm;
    res_.dropped_rows += static_cast<int>(rows.size());
    return refactor();
  }

  LpResult finish(LpStatus status) {
    res_.status = status;
    for (int i = 0; i < m_; ++i) {
      const int col = basis_[static_cast<std::size_t>(i)];
      if (col < p_.vars)
        res_.x[static_cast<std::size_t>(col)] = xb_[static_cast<std::size_t>(i)];
    }
    double v = 0.0;
    for (int j = 0; j < p_.vars; ++j)
      v += p_.c[static_cast<std::size_t>(j)] * res_.x[static_cast<std::size_t>(j)];
    res_.value = v;
    if (status == LpStatus::Optimal || status == LpStatus::IterLimit) {
      const std::vector<double> y = multipliers(/*phase1=*/false);
      for (int i = 0; i < m_; ++i) {
        const double s = neg_[static_cast<std::size_t>(i)] ? -1.0 : 1.0;
        res_.dual[static_cast<std::size_t>(rowmap_[static_cast<std::size_t>(i)])] =
            s * y[static_cast<std::size_t>(i)];
      }
      res_.basis = basis_;
    }
    return res_;
  }
};

}  // namespace detail

inline LpResult lp_solve(const LpProblem& p, const LpOptions& opt = {}) {
  detail::SimplexSolver solver(p, opt);
  return solver.run();
}

}  // namespace isingbound
