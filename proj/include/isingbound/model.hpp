#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "isingbound/prng.hpp"

// Ising models with pairwise couplings and the spectral / density
// diagnostics used to size the relaxation guarantees.
//
// The energy convention is fixed across the library: configurations are
// x in {-1,+1}^n and
//
//   E(x) = sum over ordered pairs i != j of J[i][j] x_i x_j,
//
// i.e. each unordered coupling contributes twice.  J is symmetric with a
// zero diagonal.

namespace isingbound {

class IsingModel {
 public:
  explicit IsingModel(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("IsingModel: n must be >= 1");
    j_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  }

  // Builds a model from an upper-triangle coupling list.  Entries must have
  // 0 <= i < j < n; duplicates are rejected.
  IsingModel(int n, const std::vector<std::tuple<int, int, double>>& couplings)
      : IsingModel(n) {
    for (const auto& [i, j, v] : couplings) {
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw std::invalid_argument("IsingModel: coupling index out of range");
      if (i >= j)
        throw std::invalid_argument("IsingModel: couplings must have i < j");
      if (coupling(i, j) != 0.0)
        throw std::invalid_argument("IsingModel: duplicate coupling entry");
      set_coupling(i, j, v);
    }
  }

  int n() const { return n_; }

  double coupling(int i, int j) const {
    return j_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
              static_cast<std::size_t>(j)];
  }

  // Sets J[i][j] and J[j][i]; the diagonal stays zero.
  void set_coupling(int i, int j, double value) {
    if (i == j) throw std::invalid_argument("IsingModel: diagonal must stay zero");
    j_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
       static_cast<std::size_t>(j)] = value;
    j_[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) +
       static_cast<std::size_t>(i)] = value;
  }

  // Sum of |J[i][j]| over ordered pairs i != j.
  double j_total() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (j != i) t += std::abs(coupling(i, j));
    return t;
  }

  double max_abs_coupling() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) m = std::max(m, std::abs(coupling(i, j)));
    return m;
  }

  // Upper-triangle nonzeros in (i, j) lexicographic order.
  std::vector<std::tuple<int, int, double>> coupling_list() const {
    std::vector<std::tuple<int, int, double>> out;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        if (coupling(i, j) != 0.0) out.emplace_back(i, j, coupling(i, j));
    return out;
  }

 private:
  int n_;
  std::vector<double> j_;  // n*n row-major, symmetric, zero diagonal
};

// ---------------------------------------------------------------------------
// Generators.  Identical (spec, seed) pairs always produce identical models;
// all randomness flows through SplitMix64.

struct CurieWeiss {
  int n;
  double j;  // J[i][j] = j / n for every i != j
};

struct DenseRandom {
  int n;
  double scale;  // each unordered coupling uniform in [-scale, scale]
};

struct RegularPm {
  int n;
  int d;     // vertex degree; n*d must be even, 0 <= d < n
  double j;  // coupling magnitude; each edge gets j or -j
};

using GeneratorSpec = std::variant<CurieWeiss, DenseRandom, RegularPm>;

namespace detail {

// Random d-regular simple graph via stub pairing: put d stubs on every
// vertex, shuffle, pair consecutive stubs, reject on self-loops or repeated
// edges.  Returns the edge list sorted (i, j) with i < j.
inline std::optional<std::vector<std::pair<int, int>>> try_pairing(int n, int d,
                                                                   SplitMix64& rng) {
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
  for (int v = 0; v < n; ++v)
    for (int t = 0; t < d; ++t) stubs.push_back(v);
  // Fisher-Yates from the back; deterministic given the generator state.
  for (std::size_t i = stubs.size(); i > 1; --i) {
    const std::size_t k = static_cast<std::size_t>(rng.below(i));
    std::swap(stubs[i - 1], stubs[k]);
  }
  std::vector<std::pair<int, int>> edges;
  std::vector<char> seen(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  edges.reserve(stubs.size() / 2);
  for (std::size_t t = 0; t + 1 < stubs.size(); t += 2) {
    int a = stubs[t], b = stubs[t + 1];
    if (a == b) return std::nullopt;
    if (a > b) std::swap(a, b);
    const std::size_t key =
        static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + static_cast<std::size_t>(b);
    if (seen[key]) return std::nullopt;
    seen[key] = 1;
    edges.emplace_back(a, b);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

inline std::vector<std::pair<int, int>> regular_edges(int n, int d, SplitMix64& rng) {
  // For dense degrees the pairing model almost never yields a simple graph,
  // so build the (n-1-d)-regular complement instead and invert it.
  const bool use_complement = d > (n - 1) / 2;
  const int build_d = use_complement ? n - 1 - d : d;
  std::vector<std::pair<int, int>> built;
  if (build_d == 0) {
    built.clear();
  } else {
    // Rejection rates grow like exp(d'^2/4); mid-range degrees (complement
    // degree ~5-6) succeed only a few times per thousand attempts, so the
    // cap is generous.  Each attempt is O(n d).
    constexpr int kMaxRetries = 20000;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      if (auto edges = try_pairing(n, build_d, rng)) {
        built = std::move(*edges);
        ok = true;
      }
    }
    if (!ok)
      throw std::runtime_error(
          "generate: regular graph construction failed after bounded retries");
  }
  if (!use_complement) return built;
  std::vector<char> present(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : built)
    present[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
            static_cast<std::size_t>(b)] = 1;
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!present[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                   static_cast<std::size_t>(j)])
        out.emplace_back(i, j);
  return out;
}

}  // namespace detail

inline IsingModel generate(const GeneratorSpec& spec, std::uint64_t seed) {
  SplitMix64 rng(seed);
  if (const auto* cw = std::get_if<CurieWeiss>(&spec)) {
    if (cw->n < 1) throw std::invalid_argument("generate: curie-weiss needs n >= 1");
    IsingModel m(cw->n);
    const double v = cw->j / static_cast<double>(cw->n);
    for (int i = 0; i < cw->n; ++i)
      for (int j = i + 1; j < cw->n; ++j) m.set_coupling(i, j, v);
    return m;
  }
  if (const auto* dr = std::get_if<DenseRandom>(&spec)) {
    if (dr->n < 1) throw std::invalid_argument("generate: dense-random needs n >= 1");
    if (dr->scale < 0.0)
      throw std::invalid_argument("generate: dense-random needs scale >= 0");
    IsingModel m(dr->n);
    for (int i = 0; i < dr->n; ++i)
      for (int j = i + 1; j < dr->n; ++j)
        m.set_coupling(i, j, rng.uniform(-dr->scale, dr->scale));
    return m;
  }
  const auto& rp = std::get<RegularPm>(spec);
  if (rp.n < 1) throw std::invalid_argument("generate: regular-pm needs n >= 1");
  if (rp.d < 0 || rp.d >= rp.n)
    throw std::invalid_argument("generate: regular-pm needs 0 <= d < n");
  if ((rp.n * rp.d) % 2 != 0)
    throw std::invalid_argument("generate: regular-pm needs n*d even");
  IsingModel m(rp.n);
  const auto edges = detail::regular_edges(rp.n, rp.d, rng);
  // Signs are drawn in sorted edge order, after the graph is accepted, so
  // the edge -> sign mapping is a deterministic function of the seed.
  for (const auto& [a, b] : edges)
    m.set_coupling(a, b, (rng.next() & 1ull) ? rp.j : -rp.j);
  return m;
}

// ---------------------------------------------------------------------------
// Density and regularity diagnostics.

// Delta = J_total / (n^2 * max |J[i][j]|), capped at 1.  Undefined (throws)
// for the all-zero model.
inline double density(const IsingModel& m) {
  const double mx = m.max_abs_coupling();
  if (mx == 0.0)
    throw std::domain_error("density: undefined for a model with no couplings");
  const double n = static_cast<double>(m.n());
  return std::min(1.0, m.j_total() / (n * n * mx));
}

// If every row sum of |J| lies within tol of the first row's sum, returns
// that first-row sum J'; otherwise nullopt.
inline std::optional<double> regularity(const IsingModel& m, double tol) {
  double first = 0.0;
  for (int j = 0; j < m.n(); ++j)
    if (j != 0) first += std::abs(m.coupling(0, j));
  for (int i = 1; i < m.n(); ++i) {
    double row = 0.0;
    for (int j = 0; j < m.n(); ++j)
      if (j != i) row += std::abs(m.coupling(i, j));
    if (std::abs(row - first) > tol) return std::nullopt;
  }
  return first;
}

// Normalized adjacency A[i][j] = |J[i][j]| / J' of a regular model.  Rows
// sum to 1; entries lie in [0, 1].
struct AdjacencyMatrix {
  int n;
  std::vector<double> a;  // n*n row-major

  double at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
             static_cast<std::size_t>(j)];
  }
};

inline AdjacencyMatrix adjacency(const IsingModel& m, double reg_tol = 1e-9) {
  const auto jp = regularity(m, reg_tol);
  if (!jp)
    throw std::domain_error("adjacency: model is not regular");
  if (*jp <= 0.0)
    throw std::domain_error("adjacency: requires J' > 0");
  AdjacencyMatrix out{m.n(), {}};
  out.a.resize(static_cast<std::size_t>(m.n()) * static_cast<std::size_t>(m.n()), 0.0);
  for (int i = 0; i < m.n(); ++i)
    for (int j = 0; j < m.n(); ++j)
      if (j != i)
        out.a[static_cast<std::size_t>(i) * static_cast<std::size_t>(m.n()) +
              static_cast<std::size_t>(j)] = std::abs(m.coupling(i, j)) / *jp;
  return out;
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues via cyclic Jacobi rotations.  Self-contained so the
// spectral diagnostics carry no external dependency; adequate for the small
// dense matrices used here.

// Eigenvalues of a symmetric n x n matrix (row-major), sorted descending.
// Sweeps run until the off-diagonal Frobenius norm drops below 1e-10.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
  constexpr double kOffTol = 1e-10;
  constexpr int kMaxSweeps = 100;
  auto at = [&](int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
             static_cast<std::size_t>(c)];
  };
  auto off_norm = [&]() {
    double s = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        if (q != p) s += at(p, q) * at(p, q);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= kOffTol) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double tau = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int r = 0; r < n; ++r) {
          const double arp = at(r, p), arq = at(r, q);
          at(r, p) = c * arp - s * arq;
          at(r, q) = s * arp + c * arq;
        }
        for (int r = 0; r < n; ++r) {
          const double apr = at(p, r), aqr = at(q, r);
          at(p, r) = c * apr - s * aqr;
          at(q, r) = s * apr + c * aqr;
        }
      }
    }
  }
  if (off_norm() > kOffTol)
    throw std::runtime_error("jacobi_eigenvalues: no convergence");
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

// Number of eigenvalues of the normalized adjacency that are >= tau.
// Requires a regular model with J' > 0.
inline int threshold_rank(const IsingModel& m, double tau, double reg_tol = 1e-9) {
  const auto adj = adjacency(m, reg_tol);
  const auto eig = jacobi_eigenvalues(adj.a, adj.n);
  int count = 0;
  for (double e : eig)
    if (e >= tau) ++count;
  return count;
}

}  // namespace isingbound
