#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/matrix.hpp"
#include "partfilter/model.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/partition.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

/// Kesten's 8-state example: 1/2 at the starred positions, lumped a on the
/// first four states and b on the last four.
inline FilterModel kesten_model() {
  static constexpr std::size_t stars[8][2] = {{0, 4}, {1, 5}, {3, 7}, {2, 6}, {0, 7}, {1, 6}, {3, 4}, {2, 5}};
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j : stars[i]) t.push_back({i, j, 0.5});
  TransitionMatrix p(NonnegMatrix::from_triplets(8, 8, std::move(t)));
  std::vector<std::string> g{"a", "a", "a", "a", "b", "b", "b", "b"};
  return FilterModel(partition_from_lumping(p, g), ModelMeta{{"model", "kesten"}});
}

/// (0.15, 0.35, 0.15, 0.35, 0, 0, 0, 0)
inline ProbVector kesten_start() { return ProbVector({0.15, 0.35, 0.15, 0.35, 0.0, 0.0, 0.0, 0.0}); }

/// Each state observed exactly: one single-column member per state.
inline FilterModel identity_lumped_model(const TransitionMatrix& p) {
  std::vector<std::string> g;
  for (std::size_t i = 0; i < p.size(); ++i) g.push_back(std::to_string(i));
  return FilterModel(partition_from_lumping(p, g), ModelMeta{{"model", "identity-lumped"}});
}

// ---------------------------------------------------------------------------
// Birth-death random walk on {0, ..., N-1}

enum class Boundary { fold_down, hold };

inline const char* to_string(Boundary b) { return b == Boundary::fold_down ? "fold_down" : "hold"; }

/// P(i,i-1) = a_i, P(i,i) = b_i, P(i,i+1) = c_i; a_0 is unused. At the top
/// state c_{N-1} moves to a_{N-1} (fold_down) or to b_{N-1} (hold).
struct RandomWalkParams {
  std::vector<double> a, b, c;
  std::size_t n = 0;
  Boundary boundary = Boundary::fold_down;

  static RandomWalkParams homogeneous(std::size_t n, double b, double c0, double a, double c) {
    RandomWalkParams p;
    p.n = n;
    p.a.assign(n, a);
    p.b.assign(n, b);
    p.c.assign(n, c);
    p.a[0] = 0.0;
    p.c[0] = c0;
    return p;
  }

  /// b_i = 1/3, c_0 = 2/3, a_i = 1/2, c_i = 1/6.
  static RandomWalkParams case_a(std::size_t n = 64) { return homogeneous(n, 1.0 / 3.0, 2.0 / 3.0, 0.5, 1.0 / 6.0); }

  /// Case A with a unique maximal holding probability at odd state i0.
  static RandomWalkParams case_b(std::size_t n = 64, std::size_t i0 = 3, double b_i0 = 0.6, double a_i0 = 0.25,
                                 double c_i0 = 0.15) {
    auto p = case_a(n);
    p.a.at(i0) = a_i0;
    p.b.at(i0) = b_i0;
    p.c.at(i0) = c_i0;
    return p;
  }

  void validate() const {
    if (n < 2) throw InvariantError("random walk has at least two states", "");
    if (a.size() != n || b.size() != n || c.size() != n)
      throw InvariantError("coefficient arrays cover every state", "");
    if (!(b[0] > 0.0 && c[0] > 0.0) || std::abs(b[0] + c[0] - 1.0) > kProbTolerance)
      throw InvariantError("b_0 + c_0 = 1 with both positive", "");
    for (std::size_t i = 1; i < n; ++i)
      if (!(a[i] > 0.0 && b[i] > 0.0 && c[i] > 0.0) || std::abs(a[i] + b[i] + c[i] - 1.0) > kProbTolerance)
        throw InvariantError("a_i + b_i + c_i = 1 with all positive", "state " + std::to_string(i));
  }
};

/// Partial sums of sum_k prod_{i=1..k} c_{i-1}/a_i for k = 1..N-1.
inline std::vector<double> recurrence_partial_sums(const RandomWalkParams& p) {
  std::vector<double> out;
  double term = 1.0, sum = 0.0;
  for (std::size_t i = 1; i < p.n; ++i) {
    term *= p.c[i - 1] / p.a[i];
    sum += term;
    out.push_back(sum);
  }
  return out;
}

/// Odd columns of P form M(1), even columns M(2).
inline FilterModel random_walk_model(const RandomWalkParams& p) {
  p.validate();
  const std::size_t n = p.n;
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    double down = i > 0 ? p.a[i] : 0.0, stay = p.b[i], up = p.c[i];
    if (i == n - 1) {
      (p.boundary == Boundary::fold_down ? down : stay) += up;
      up = 0.0;
    }
    if (down > 0.0) t.push_back({i, i - 1, down});
    t.push_back({i, i, stay});
    if (up > 0.0) t.push_back({i, i + 1, up});
  }
  TransitionMatrix tm(NonnegMatrix::from_triplets(n, n, std::move(t)));
  std::vector<std::string> g(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = (j % 2 == 1) ? "1" : "2";
  const auto sums = recurrence_partial_sums(p);
  ModelMeta meta{{"model", "random-walk"},
                                          {"states", std::to_string(n)},
                                          {"boundary", to_string(p.boundary)},
                                          {"recurrence_partial_sum", format_roundtrip(sums.back())}};
  if (sums.size() >= 2) meta["recurrence_last_increment"] = format_roundtrip(sums.back() - sums[sums.size() - 2]);
  return FilterModel(partition_from_lumping(tm, g), std::move(meta));
}

// ---------------------------------------------------------------------------
// Permutation families

/// perm[j] = m means the permutation matrix has its 1 at (j, m).
using Permutation = std::vector<std::size_t>;

inline bool is_permutation(const Permutation& p) {
  std::vector<char> hit(p.size(), 0);
  for (std::size_t v : p) {
    if (v >= p.size() || hit[v]) return false;
    hit[v] = 1;
  }
  return true;
}

inline NonnegMatrix permutation_matrix(const Permutation& p, double weight = 1.0) {
  std::vector<Triplet> t;
  for (std::size_t j = 0; j < p.size(); ++j) t.push_back({j, p[j], weight});
  return NonnegMatrix::from_triplets(p.size(), p.size(), std::move(t));
}

/// A partition M of A on an index set I, a block size d and permutations
/// Q(i, k, w) for every positive entry M(w)_{i,k}. Each member may have at
/// most one positive entry per row.
struct PermFamilySpec {
  Partition m;
  std::size_t d = 0;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Permutation> q;

  void validate() const {
    if (d < 2) throw InvariantError("block size d >= 2", "");
    for (std::size_t w = 0; w < m.size(); ++w)
      for (std::size_t i = 0; i < m.states(); ++i) {
        const auto cols = m[w].row_cols(i);
        if (cols.size() > 1)
          throw InvariantError("at most one positive column per member row",
                               "label " + m.label(w) + " row " + std::to_string(i));
        for (std::size_t k : cols) {
          const auto it = q.find({i, k, w});
          if (it == q.end())
            throw InvariantError("permutation given for every positive entry",
                                 "(" + std::to_string(i) + "," + std::to_string(k) + "," + m.label(w) + ")");
          if (it->second.size() != d || !is_permutation(it->second))
            throw InvariantError("Q(i,k,w) is a d x d permutation", "");
        }
      }
  }
};

/// M'(w)_{(i,j),(k,l)} = M(w)_{i,k} Q(i,k,w)_{j,l}; state (i, j) has index
/// i d + j.
inline FilterModel perm_family_model(const PermFamilySpec& spec) {
  spec.validate();
  const std::size_t n = spec.m.states() * spec.d;
  std::vector<Member> members;
  for (std::size_t w = 0; w < spec.m.size(); ++w) {
    std::vector<Triplet> t;
    for (const auto& e : spec.m[w].triplets()) {
      const auto& perm = spec.q.at({e.row, e.col, w});
      for (std::size_t j = 0; j < spec.d; ++j) t.push_back({e.row * spec.d + j, e.col * spec.d + perm[j], e.value});
    }
    members.push_back({spec.m.label(w), NonnegMatrix::from_triplets(n, n, std::move(t))});
  }
  NonnegMatrix total(n, n);
  for (const auto& mem : members) total = add(total, mem.matrix);
  return FilterModel(Partition(TransitionMatrix(std::move(total)), std::move(members)),
                     ModelMeta{{"model", "perm-family"}, {"block", std::to_string(spec.d)}});
}

/// Kesten's example as a permutation family over I = {0, 1}, d = 4.
inline PermFamilySpec kesten_perm_family_spec() {
  TransitionMatrix a(NonnegMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  PermFamilySpec s{partition_from_lumping(a, {"a", "b"}), 4, {}};
  const Permutation swap_last{0, 1, 3, 2}, cross{3, 2, 0, 1};
  s.q[{0, 0, 0}] = swap_last;
  s.q[{0, 1, 1}] = swap_last;
  s.q[{1, 0, 0}] = swap_last;
  s.q[{1, 1, 1}] = cross;
  return s;
}

// ---------------------------------------------------------------------------
// Birkhoff decomposition

struct BirkhoffTerm {
  double weight = 0.0;
  Permutation perm;
};

namespace detail {

// Kuhn's augmenting-path matching restricted to rows >= first_row and
// unused columns.
inline bool has_perfect_matching(const std::vector<std::vector<char>>& support, std::size_t first_row,
                                 const std::vector<char>& col_used) {
  const std::size_t n = support.size();
  std::vector<long> match_col(n, -1);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (!support[r][c] || col_used[c] || visited[c]) continue;
      visited[c] = 1;
      if (match_col[c] < 0 || augment(static_cast<std::size_t>(match_col[c]))) {
        match_col[c] = static_cast<long>(r);
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = first_row; r < n; ++r) {
    visited.assign(n, 0);
    if (!augment(r)) return false;
  }
  return true;
}

// Lexicographically smallest perfect matching on the support, if any.
inline std::optional<Permutation> lex_min_matching(const std::vector<std::vector<char>>& support) {
  const std::size_t n = support.size();
  Permutation perm(n);
  std::vector<char> used(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    bool placed = false;
    for (std::size_t c = 0; c < n && !placed; ++c) {
      if (!support[r][c] || used[c]) continue;
      used[c] = 1;
      if (has_perfect_matching(support, r + 1, used)) {
        perm[r] = c;
        placed = true;
      } else {
        used[c] = 0;
      }
    }
    if (!placed) return std::nullopt;
  }
  return perm;
}

// Removes terms while more than (n-1)^2 + 1 remain, using an affine
// dependency among the permutation matrices.
inline void caratheodory_reduce(std::vector<BirkhoffTerm>& terms, std::size_t n) {
  const std::size_t limit = (n - 1) * (n - 1) + 1;
  while (terms.size() > limit) {
    const std::size_t k = terms.size(), rows = n * n + 1;
    std::vector<std::vector<double>> a(rows, std::vector<double>(k, 0.0));
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t j = 0; j < n; ++j) a[j * n + terms[t].perm[j]][t] = 1.0;
      a[n * n][t] = 1.0;
    }
    std::vector<long> pivot_col_of_row;
    std::vector<char> is_pivot(k, 0);
    std::size_t r = 0;
    for (std::size_t c = 0; c < k && r < rows; ++c) {
      std::size_t best = r;
      for (std::size_t i = r; i < rows; ++i)
        if (std::abs(a[i][c]) > std::abs(a[best][c])) best = i;
      if (std::abs(a[best][c]) < 1e-12) continue;
      std::swap(a[best], a[r]);
      const double pv = a[r][c];
      for (double& v : a[r]) v /= pv;
      for (std::size_t i = 0; i < rows; ++i) {
        if (i == r || a[i][c] == 0.0) continue;
        const double f = a[i][c];
        for (std::size_t cc = 0; cc < k; ++cc) a[i][cc] -= f * a[r][cc];
      }
      pivot_col_of_row.push_back(static_cast<long>(c));
      is_pivot[c] = 1;
      ++r;
    }
    std::size_t free_col = 0;
    while (free_col < k && is_pivot[free_col]) ++free_col;
    if (free_col == k) return;
    std::vector<double> lambda(k, 0.0);
    lambda[free_col] = 1.0;
    for (std::size_t i = 0; i < pivot_col_of_row.size(); ++i)
      lambda[static_cast<std::size_t>(pivot_col_of_row[i])] = -a[i][free_col];
    double step = std::numeric_limits<double>::infinity();
    std::size_t drop = k;
    for (std::size_t t = 0; t < k; ++t)
      if (lambda[t] > 1e-12 && terms[t].weight / lambda[t] < step) {
        step = terms[t].weight / lambda[t];
        drop = t;
      }
    if (drop == k) return;
    for (std::size_t t = 0; t < k; ++t) terms[t].weight -= step * lambda[t];
    terms.erase(terms.begin() + static_cast<long>(drop));
    std::erase_if(terms, [](const BirkhoffTerm& t) { return !(t.weight > 0.0); });
  }
}

}  // namespace detail

/// D as a convex combination of permutation matrices: repeatedly take the
/// lexicographically smallest perfect matching on the positive support and
/// subtract its minimum entry. At most (n-1)^2 + 1 terms.
inline std::vector<BirkhoffTerm> birkhoff_decompose(const NonnegMatrix& d, double tol = 1e-9) {
  const std::size_t n = d.rows();
  if (n == 0 || d.cols() != n) throw InvariantError("doubly stochastic matrix is square", "");
  std::vector<double> col(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d.row_sum(i) - 1.0) > tol)
      throw InvariantError("matrix is doubly stochastic", "row " + std::to_string(i));
    const auto cols = d.row_cols(i);
    const auto vals = d.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) col[cols[k]] += vals[k];
  }
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(col[j] - 1.0) > tol) throw InvariantError("matrix is doubly stochastic", "column " + std::to_string(j));

  constexpr double zero = 1e-13;
  auto r = d.to_dense();
  std::vector<BirkhoffTerm> terms;
  for (;;) {
    std::vector<std::vector<char>> support(n, std::vector<char>(n, 0));
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (r[i * n + j] > zero) support[i][j] = any = 1;
    if (!any) break;
    const auto perm = detail::lex_min_matching(support);
    if (!perm) {
      const double left = *std::max_element(r.begin(), r.end());
      if (left > 1e-10) throw InvariantError("residual admits a perfect matching", "residual " + format_roundtrip(left));
      break;
    }
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) w = std::min(w, r[i * n + (*perm)[i]]);
    for (std::size_t i = 0; i < n; ++i) {
      double& v = r[i * n + (*perm)[i]];
      v -= w;
      if (v <= zero) v = 0.0;
    }
    terms.push_back({w, *perm});
  }
  detail::caratheodory_reduce(terms, n);
  return terms;
}

/// The partition of D into weighted permutation matrices, labels p1, p2, ...
inline Partition birkhoff_partition(const TransitionMatrix& d, const std::vector<BirkhoffTerm>& terms) {
  std::vector<Member> members;
  for (std::size_t k = 0; k < terms.size(); ++k)
    members.push_back({"p" + std::to_string(k + 1), permutation_matrix(terms[k].perm, terms[k].weight)});
  return Partition(d, std::move(members));
}

}  // namespace partfilter
