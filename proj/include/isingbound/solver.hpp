#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isingbound/entropy.hpp"
#include "isingbound/lp.hpp"
#include "isingbound/model.hpp"
#include "isingbound/pseudomarginals.hpp"
#include "isingbound/subsets.hpp"

// Certified upper bounds on the log partition function.
//
// The relaxation maximizes  energy(mu) + theta  over consistent
// pseudo-marginals mu and a scalar theta tied to the entropy surrogate by
// cutting planes: theta <= cut(mu) for each accumulated tangent of the
// concave surrogate (Kelley's method).  Every master optimum is an outer
// bound, so each iterate already certifies an upper bound on log Z; the loop
// stops once the master's entropy estimate matches the true surrogate at the
// master's optimizer to within a tolerance.
//
// Parameterization: tables are represented through their correlation moments
//   mu_T(a) = 2^-|T| * sum over U subseteq T of m_U * chi_U(a),
// which makes normalization and cross-table consistency identities of the
// encoding; only the top-level table nonnegativities remain as constraints.
// The master is solved through its LP dual, which is an equality-form
// program in nonnegative variables: one dual variable per master constraint,
// one equality row per moment (plus one for theta).  The master optimizer is
// recovered from the simplex multipliers, and adding a Kelley cut appends a
// dual column, so the previous basis stays feasible and re-solves are warm.

namespace isingbound {

struct RelaxationOptions {
  int seed_size = 1;      // entropy surrogate seed budget
  double tol = 1e-6;      // stop when master entropy - surrogate <= tol
  int max_iters = 50;     // cutting-plane iterations
  double floor = 1e-9;    // probability floor inside cut gradients
  int lp_max_iters = 200000;
};

struct KelleyStep {
  double master = 0.0;     // master optimum: certified upper bound on log Z
  double surrogate = 0.0;  // energy + surrogate entropy at the master optimizer
  mask_t seed = 0;         // minimizing surrogate seed at this iterate
};

struct BoundCertificate {
  double upper_bound = 0.0;
  bool converged = false;
  int iterations = 0;
  int level = 0;      // pseudo-marginal depth used by the relaxation
  int seed_size = 0;
  double max_clamp = 0.0;   // largest negative table mass clamped away
  double floor_error = 0.0; // largest cut flooring diagnostic
  std::vector<KelleyStep> trace;
};

struct RelaxationSolution {
  BoundCertificate certificate;
  PseudoMarginals pseudo_marginals;  // master optimizer of the final iterate
};

namespace detail {

inline double pair_energy(const IsingModel& m, const PseudoMarginals& pm) {
  double e = 0.0;
  for (const auto& [i, j, v] : m.coupling_list())
    e += 2.0 * v * pair_expectation(pm, i, j);
  return e;
}

inline PseudoMarginals blend(const PseudoMarginals& a, const PseudoMarginals& b,
                             double w) {
  std::vector<double> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = w * a.values()[i] + (1.0 - w) * b.values()[i];
  return PseudoMarginals(a.n(), a.level(), std::move(v));
}

// Builds and incrementally extends the dual of the moment-form master.
class MomentMaster {
 public:
  MomentMaster(const IsingModel& m, int level, bool with_theta, int lp_max_iters)
      : idx_(SaIndex::make(m.n(), level)),
        p_(static_cast<int>(idx_->subsets.size())),
        with_theta_(with_theta),
        lp_max_iters_(lp_max_iters) {
    const int rows = p_ + (with_theta_ ? 1 : 0);
    lp_.vars = 0;
    lp_.aeq.assign(static_cast<std::size_t>(rows), {});
    lp_.beq.assign(static_cast<std::size_t>(rows), 0.0);
    for (int u = 0; u < p_; ++u) {
      const mask_t s = idx_->subsets[static_cast<std::size_t>(u)];
      if (popcount(s) != 2) continue;
      const auto v = vertices_of(s);
      lp_.beq[static_cast<std::size_t>(u)] = 2.0 * m.coupling(v[0], v[1]);
    }
    if (with_theta_) lp_.beq[static_cast<std::size_t>(p_)] = 1.0;

    add_nonnegativity_columns(m.n(), level);
    if (with_theta_) {
      add_column({{p_, 1.0}}, static_cast<double>(m.n()) * std::log(2.0));
      add_column({{p_, -1.0}}, 0.0);
    }
  }

  const SaIndex& index() const { return *idx_; }

  // theta <= cut(mu), re-expressed over moments and appended as a dual column.
  void add_cut(const EntropyCut& cut) {
    std::vector<double> w(static_cast<std::size_t>(p_), 0.0);
    double w0 = 0.0;
    for (const auto& [col, g] : cut.coef) {
      const auto [t, a] = idx_->decode(col);
      const int sz = popcount(t);
      const double scale = std::ldexp(g, -sz);
      const auto verts = vertices_of(t);
      for (std::uint32_t up = 0; up < (1u << sz); ++up) {
        const double contrib = scale * character(up, a);
        if (up == 0) {
          w0 += contrib;
          continue;
        }
        mask_t vm = 0;
        for (int q = 0; q < sz; ++q)
          if ((up >> q) & 1) vm |= mask_t{1} << verts[static_cast<std::size_t>(q)];
        w[static_cast<std::size_t>(idx_->position_of(vm))] += contrib;
      }
    }
    std::vector<std::pair<int, double>> entries;
    entries.emplace_back(p_, 1.0);
    for (int u = 0; u < p_; ++u)
      if (w[static_cast<std::size_t>(u)] != 0.0)
        entries.emplace_back(u, -w[static_cast<std::size_t>(u)]);
    add_column(entries, cut.constant + w0);
  }

  struct Solved {
    double value = 0.0;            // master optimum
    std::vector<double> moments;   // master optimizer, index order
    double theta = 0.0;
  };

  Solved solve() {
    LpOptions opt;
    opt.max_iters = lp_max_iters_;
    if (!basis_.empty()) opt.warm_basis = basis_;
    LpResult r = lp_solve(lp_, opt);
    if (r.status == LpStatus::Stall && opt.warm_basis) {
      // The warm path can walk into a heavily degenerate corner; a cold
      // solve takes a different pivot route and usually misses it.
      opt.warm_basis.reset();
      r = lp_solve(lp_, opt);
    }
    if (r.status != LpStatus::Optimal)
      throw std::runtime_error(std::string("relaxation master: LP finished as ") +
                               to_string(r.status));
    basis_ = r.basis;
    Solved s;
    s.value = -r.value;
    s.moments.resize(static_cast<std::size_t>(p_));
    for (int u = 0; u < p_; ++u) s.moments[static_cast<std::size_t>(u)] = -r.dual[static_cast<std::size_t>(u)];
    if (with_theta_) s.theta = -r.dual[static_cast<std::size_t>(p_)];
    return s;
  }

 private:
  std::shared_ptr<const SaIndex> idx_;
  int p_ = 0;
  bool with_theta_ = false;
  int lp_max_iters_ = 0;
  LpProblem lp_;
  std::vector<int> basis_;

  // Master constraint (a column here): entries over moment rows (and the
  // theta row), right-hand side b.  The dual objective carries -b.
  void add_column(const std::vector<std::pair<int, double>>& entries, double rhs) {
    for (auto& row : lp_.aeq) row.push_back(0.0);
    for (const auto& [row, v] : entries)
      lp_.aeq[static_cast<std::size_t>(row)][static_cast<std::size_t>(lp_.vars)] = v;
    lp_.c.push_back(-rhs);
    ++lp_.vars;
  }

  // -mu_T(a) <= 0 for every top-level table entry, in moment coordinates.
  void add_nonnegativity_columns(int n, int level) {
    const double scale = std::ldexp(1.0, -level);
    for (const mask_t t : subsets_by_size(n, level)) {
      if (popcount(t) != level) continue;
      const auto verts = vertices_of(t);
      for (std::uint32_t a = 0; a < (1u << level); ++a) {
        std::vector<std::pair<int, double>> entries;
        entries.reserve((1u << level) - 1);
        for (std::uint32_t up = 1; up < (1u << level); ++up) {
          mask_t vm = 0;
          for (int q = 0; q < level; ++q)
            if ((up >> q) & 1) vm |= mask_t{1} << verts[static_cast<std::size_t>(q)];
          entries.emplace_back(idx_->position_of(vm), -scale * character(up, a));
        }
        add_column(entries, scale);
      }
    }
  }
};

}  // namespace detail

// Largest energy attainable over the depth-`level` consistency polytope.
// With positive couplings this is a max-cut style relaxation value.
inline double maximize_energy(const IsingModel& m, int level) {
  if (level < std::min(m.n(), 2) || level > m.n())
    throw std::invalid_argument("maximize_energy: level out of range");
  detail::MomentMaster master(m, level, /*with_theta=*/false, 200000);
  return master.solve().value;
}

// Runs the cutting-plane relaxation.  The certificate's upper_bound is valid
// whether or not the loop converged; the trace records one entry per master
// solve.  Requires seed_size + 1 <= n.
inline RelaxationSolution solve_relaxation(const IsingModel& m,
                                           const RelaxationOptions& opt = {}) {
  const int n = m.n();
  if (opt.seed_size < 0)
    throw std::invalid_argument("solve_relaxation: seed_size must be >= 0");
  if (opt.seed_size + 1 > n)
    throw std::invalid_argument("solve_relaxation: seed_size + 1 must not exceed n");
  if (!(opt.tol > 0.0))
    throw std::invalid_argument("solve_relaxation: tol must be positive");
  if (opt.max_iters < 1)
    throw std::invalid_argument("solve_relaxation: max_iters must be >= 1");

  const int level = std::min(n, opt.seed_size + 2);
  detail::MomentMaster master(m, level, /*with_theta=*/true, opt.lp_max_iters);
  master.add_cut(entropy_cut(PseudoMarginals::uniform(n, level), 0, opt.floor));

  BoundCertificate cert;
  cert.level = level;
  cert.seed_size = opt.seed_size;

  const auto register_cut = [&](const PseudoMarginals& at, mask_t seed) {
    const EntropyCut cut = entropy_cut(at, seed, opt.floor);
    cert.floor_error = std::max(cert.floor_error, cut.floor_error);
    master.add_cut(cut);
  };

  // Tangents for every near-minimal seed, not just the argmin: the surrogate
  // is a minimum of concave pieces, so supporting several active pieces per
  // iterate keeps the master from bouncing between them.
  const auto register_competitive_cuts = [&](const PseudoMarginals& at,
                                             std::vector<SurrogateValue> all) {
    std::stable_sort(all.begin(), all.end(),
                     [](const SurrogateValue& a, const SurrogateValue& b) {
                       return a.value < b.value;
                     });
    const double cutoff = all.front().value + 2.0;
    int added = 0;
    for (const SurrogateValue& sv : all) {
      if (sv.value > cutoff || added == 6) break;
      register_cut(at, sv.witness);
      ++added;
    }
  };

  // Inner incumbent for stabilization: cutting at points between the master
  // optimizer and a good interior point gives far better tangent models than
  // polytope vertices alone, where floored log-gradients are badly steep.
  PseudoMarginals inner = PseudoMarginals::uniform(n, level);
  double inner_value =
      detail::pair_energy(m, inner) + surrogate_entropy(inner, opt.seed_size).value;

  PseudoMarginals pm = inner;
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    const detail::MomentMaster::Solved s = master.solve();
    pm = PseudoMarginals::from_moments(n, level, s.moments);
    cert.max_clamp = std::max(cert.max_clamp, pm.max_clamp());
    const SurrogateValue sv = surrogate_entropy(pm, opt.seed_size);
    const double energy = s.value - s.theta;
    cert.trace.push_back({s.value, energy + sv.value, sv.witness});
    ++cert.iterations;
    if (s.theta - sv.value <= opt.tol) {
      cert.converged = true;
      break;
    }
    if (iter + 1 == opt.max_iters) break;

    register_competitive_cuts(pm, seeded_entropies(pm, opt.seed_size));
    const PseudoMarginals mid = detail::blend(pm, inner, 0.5);
    const std::vector<SurrogateValue> mids = seeded_entropies(mid, opt.seed_size);
    SurrogateValue mv = mids.front();
    for (const SurrogateValue& cand : mids)
      if (cand.value < mv.value) mv = cand;
    register_competitive_cuts(mid, mids);

    const double mid_value = detail::pair_energy(m, mid) + mv.value;
    if (mid_value > inner_value) {
      inner = mid;
      inner_value = mid_value;
    }
    if (energy + sv.value > inner_value) {
      inner = pm;
      inner_value = energy + sv.value;
    }
  }

  cert.upper_bound = cert.trace.back().master;
  return {std::move(cert), std::move(pm)};
}

}  // namespace isingbound
