#pragma once

#include <cstddef>
#include <numeric>
#include <queue>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/matrix.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

struct ChainStructure {
  bool irreducible = false;
  bool aperiodic = false;
};

namespace detail {

inline std::vector<long> bfs_levels(const NonnegMatrix& m, bool transpose) {
  const std::size_t n = m.rows();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : m.row_cols(i)) {
      if (transpose)
        adj[j].push_back(i);
      else
        adj[i].push_back(j);
    }
  std::vector<long> level(n, -1);
  std::queue<std::size_t> q;
  level[0] = 0;
  q.push(0);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : adj[u])
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        q.push(v);
      }
  }
  return level;
}

}  // namespace detail

/// Graph-theoretic irreducibility and aperiodicity of the support digraph.
/// The period of an irreducible chain is the gcd of level[u] + 1 - level[v]
/// over all edges u -> v, with BFS levels from any root.
inline ChainStructure check_irreducible_aperiodic(const TransitionMatrix& p) {
  const NonnegMatrix& m = p.matrix();
  ChainStructure out;
  const auto fwd = detail::bfs_levels(m, false);
  const auto bwd = detail::bfs_levels(m, true);
  out.irreducible = true;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (fwd[i] < 0 || bwd[i] < 0) out.irreducible = false;
  if (!out.irreducible) return out;
  long g = 0;
  for (std::size_t u = 0; u < m.rows(); ++u)
    for (std::size_t v : m.row_cols(u)) g = std::gcd(g, std::abs(fwd[u] + 1 - fwd[v]));
  out.aperiodic = (g == 1);
  return out;
}

/// Stationary vector of an irreducible aperiodic chain by power iteration.
/// Returns pi with ||pi P - pi||_1 <= tol.
inline ProbVector stationary_vector(const TransitionMatrix& p, double tol = 1e-13, std::size_t max_iter = 1'000'000) {
  const auto structure = check_irreducible_aperiodic(p);
  if (!structure.irreducible) throw InvariantError("stationary vector requires an irreducible chain", "");
  if (!structure.aperiodic) throw InvariantError("stationary vector requires an aperiodic chain", "");
  const NonnegMatrix& m = p.matrix();
  const std::size_t n = m.rows();
  std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    m.left_multiply(x, y);
    const double total = l1_norm(y);
    for (double& v : y) v /= total;
    const double change = l1_distance(x, y);
    x.swap(y);
    if (change <= tol) {
      // Verify the post-condition on the returned vector itself.
      m.left_multiply(x, y);
      if (l1_distance(x, y) <= tol) return ProbVector::normalized(x);
    }
  }
  throw ConvergenceError("stationary_vector: no convergence within " + std::to_string(max_iter) + " iterations");
}

}  // namespace partfilter
