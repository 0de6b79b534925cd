#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "isingbound/model.hpp"

// Exact quantities by exhaustive enumeration.  This module is the ground
// truth the relaxation is tested against; everything here is deliberately
// simple and deterministic.
//
// State encoding: configuration index x in [0, 2^n), bit v of x = 0 means
// spin -1 at vertex v, bit 1 means spin +1.
//
// Enumeration guards: exact_log_z / free_energy allow n <= 25, the full
// table in exact_distribution allows n <= 20.
//
// Summations are chunked in a fixed order so results are bit-stable across
// runs and platforms.

namespace isingbound {

struct DenseDistribution {
  int n;
  std::vector<double> p;  // 2^n entries, indexed by configuration

  // Entries must be nonnegative and sum to 1 within 1e-12.
  void validate() const {
    if (p.size() != (std::size_t{1} << n))
      throw std::invalid_argument("DenseDistribution: size != 2^n");
    double s = 0.0;
    for (double v : p) {
      if (v < 0.0) throw std::invalid_argument("DenseDistribution: negative entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("DenseDistribution: entries must sum to 1");
  }
};

namespace detail {

constexpr int kLogZMaxN = 25;
constexpr int kTableMaxN = 20;
constexpr std::size_t kChunk = std::size_t{1} << 14;

// Walks all 2^n configurations in Gray-code order and hands each state's
// energy to `emit(state_index, energy)`.  One spin flips per step, so the
// energy update is O(n): flipping v changes E by -4 x_v f_v where
// f_v = sum_j J[v][j] x_j.
template <typename Emit>
inline void walk_energies(const IsingModel& m, Emit&& emit) {
  const int n = m.n();
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> x(static_cast<std::size_t>(n), -1.0);
  std::vector<double> field(static_cast<std::size_t>(n), 0.0);
  double energy = 0.0;
  for (int v = 0; v < n; ++v) {
    double f = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != v) f += m.coupling(v, j) * x[static_cast<std::size_t>(j)];
    field[static_cast<std::size_t>(v)] = f;
    energy += x[static_cast<std::size_t>(v)] * f;
  }
  emit(std::size_t{0}, energy);
  for (std::size_t i = 1; i < total; ++i) {
    const int v = std::countr_zero(i);
    const double xv = x[static_cast<std::size_t>(v)];
    energy -= 4.0 * xv * field[static_cast<std::size_t>(v)];
    for (int j = 0; j < n; ++j)
      if (j != v) field[static_cast<std::size_t>(j)] -= 2.0 * m.coupling(j, v) * xv;
    x[static_cast<std::size_t>(v)] = -xv;
    emit(i ^ (i >> 1), energy);  // Gray code of i is the current state
  }
}

// Streaming log-sum-exp over values arriving in a fixed order.  Values are
// buffered in fixed-size chunks; each chunk is reduced left-to-right and
// chunks are merged left-to-right, so the result does not depend on timing.
class ChunkedLogSumExp {
 public:
  void add(double v) {
    buf_.push_back(v);
    if (buf_.size() == kChunk) flush();
  }

  double result() {
    flush();
    return have_ ? gmax_ + std::log(gsum_) : -std::numeric_limits<double>::infinity();
  }

 private:
  void flush() {
    if (buf_.empty()) return;
    double lmax = buf_[0];
    for (double v : buf_)
      if (v > lmax) lmax = v;
    double lsum = 0.0;
    for (double v : buf_) lsum += std::exp(v - lmax);
    if (!have_) {
      gmax_ = lmax;
      gsum_ = lsum;
      have_ = true;
    } else if (lmax > gmax_) {
      gsum_ = gsum_ * std::exp(gmax_ - lmax) + lsum;
      gmax_ = lmax;
    } else {
      gsum_ += lsum * std::exp(lmax - gmax_);
    }
    buf_.clear();
  }

  std::vector<double> buf_;
  double gmax_ = 0.0;
  double gsum_ = 0.0;
  bool have_ = false;
};

// Sum of values in fixed-size chunks, merged in order.
class ChunkedSum {
 public:
  void add(double v) {
    sum_ += v;
    if (++count_ == kChunk) {
      total_ += sum_;
      sum_ = 0.0;
      count_ = 0;
    }
  }
  double result() const { return total_ + sum_; }

 private:
  double sum_ = 0.0;
  double total_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace detail

// log Z = log sum_x exp(E(x)), by Gray-code enumeration with chunked
// log-sum-exp.  Guard: n <= 25.
inline double exact_log_z(const IsingModel& m) {
  if (m.n() > detail::kLogZMaxN)
    throw std::invalid_argument("exact_log_z: n exceeds enumeration guard (25)");
  detail::ChunkedLogSumExp lse;
  detail::walk_energies(m, [&](std::size_t, double e) { lse.add(e); });
  return lse.result();
}

// The full Boltzmann table p(x) = exp(E(x) - log Z).  Guard: n <= 20.
inline DenseDistribution exact_distribution(const IsingModel& m) {
  if (m.n() > detail::kTableMaxN)
    throw std::invalid_argument("exact_distribution: n exceeds enumeration guard (20)");
  DenseDistribution out{m.n(), std::vector<double>(std::size_t{1} << m.n(), 0.0)};
  detail::walk_energies(m, [&](std::size_t state, double e) { out.p[state] = e; });
  detail::ChunkedLogSumExp lse;
  for (double e : out.p) lse.add(e);
  const double log_z = lse.result();
  for (double& v : out.p) v = std::exp(v - log_z);
  return out;
}

// Marginal table of a sorted vertex subset: entry a is the probability that
// each listed vertex carries the spin encoded by the corresponding bit of a.
inline std::vector<double> exact_marginal(const DenseDistribution& dist,
                                          const std::vector<int>& vertices) {
  const int k = static_cast<int>(vertices.size());
  for (int t = 0; t < k; ++t) {
    if (vertices[static_cast<std::size_t>(t)] < 0 ||
        vertices[static_cast<std::size_t>(t)] >= dist.n)
      throw std::invalid_argument("exact_marginal: vertex out of range");
    if (t > 0 && vertices[static_cast<std::size_t>(t)] <= vertices[static_cast<std::size_t>(t - 1)])
      throw std::invalid_argument("exact_marginal: vertices must be sorted and distinct");
  }
  std::vector<double> table(std::size_t{1} << k, 0.0);
  const std::size_t total = std::size_t{1} << dist.n;
  for (std::size_t x = 0; x < total; ++x) {
    std::uint32_t a = 0;
    for (int t = 0; t < k; ++t)
      a |= static_cast<std::uint32_t>((x >> vertices[static_cast<std::size_t>(t)]) & 1u) << t;
    table[a] += dist.p[x];
  }
  return table;
}

// Gibbs objective of an explicit distribution:
//   F(mu) = E_mu[E(x)] + H(mu),  H(mu) = -sum_x mu(x) log mu(x).
// Equals log Z exactly when mu is the Boltzmann distribution.
inline double free_energy(const DenseDistribution& dist, const IsingModel& m) {
  if (dist.n != m.n())
    throw std::invalid_argument("free_energy: distribution size mismatch");
  if (m.n() > detail::kLogZMaxN)
    throw std::invalid_argument("free_energy: n exceeds enumeration guard (25)");
  detail::ChunkedSum avg_energy;
  detail::walk_energies(
      m, [&](std::size_t state, double e) { avg_energy.add(dist.p[state] * e); });
  detail::ChunkedSum entropy;
  for (double v : dist.p)
    if (v > 0.0) entropy.add(-v * std::log(v));
  return avg_energy.result() + entropy.result();
}

}  // namespace isingbound
