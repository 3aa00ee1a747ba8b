#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/numeric.hpp"

namespace partfilter {

struct TransportEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

struct TransportSolution {
  std::vector<TransportEntry> entries;
  double cost = 0.0;
  std::size_t pivots = 0;
};

namespace detail {

// Basis of the transportation simplex: a spanning tree on n row nodes and m
// column nodes (column j is node n + j), one edge per basic cell.
class TransportBasis {
 public:
  struct Cell {
    std::size_t row, col;
    double flow;
  };

  TransportBasis(std::size_t n, std::size_t m) : n_(n), m_(m), basic_(n * m, 0) {}

  void add(std::size_t i, std::size_t j, double flow) {
    cells_.push_back({i, j, flow});
    basic_[i * m_ + j] = 1;
  }

  bool is_basic(std::size_t i, std::size_t j) const { return basic_[i * m_ + j] != 0; }
  std::vector<Cell>& cells() { return cells_; }

  void potentials(std::span<const double> cost, std::vector<double>& u, std::vector<double>& v) {
    build_adjacency();
    std::vector<char> seen(n_ + m_, 0);
    std::vector<double> pot(n_ + m_, 0.0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (auto [b, c] : adj_[a]) {
        if (seen[b]) continue;
        seen[b] = 1;
        const double cc = cost[cells_[c].row * m_ + cells_[c].col];
        pot[b] = cc - pot[a];  // u_i + v_j = c_ij
        stack.push_back(b);
      }
    }
    u.assign(pot.begin(), pot.begin() + static_cast<long>(n_));
    v.assign(pot.begin() + static_cast<long>(n_), pot.end());
  }

  // Cells on the tree path from row node i to column node n + j, ordered
  // starting next to row i.
  std::vector<std::size_t> path(std::size_t i, std::size_t j) {
    std::vector<long> parent_cell(n_ + m_, -1);
    std::vector<long> parent_node(n_ + m_, -1);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<std::size_t> stack{i};
    seen[i] = 1;
    const std::size_t goal = n_ + j;
    while (!stack.empty() && !seen[goal]) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (auto [b, c] : adj_[a]) {
        if (seen[b]) continue;
        seen[b] = 1;
        parent_cell[b] = static_cast<long>(c);
        parent_node[b] = static_cast<long>(a);
        stack.push_back(b);
      }
    }
    std::vector<std::size_t> out;
    for (std::size_t node = goal; node != i; node = static_cast<std::size_t>(parent_node[node]))
      out.push_back(static_cast<std::size_t>(parent_cell[node]));
    std::reverse(out.begin(), out.end());
    return out;
  }

  void replace(std::size_t leaving, std::size_t i, std::size_t j, double flow) {
    basic_[cells_[leaving].row * m_ + cells_[leaving].col] = 0;
    cells_[leaving] = {i, j, flow};
    basic_[i * m_ + j] = 1;
  }

 private:
  void build_adjacency() {
    adj_.assign(n_ + m_, {});
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      adj_[cells_[c].row].push_back({n_ + cells_[c].col, c});
      adj_[n_ + cells_[c].col].push_back({cells_[c].row, c});
    }
  }

  std::size_t n_, m_;
  std::vector<char> basic_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj_;
};

}  // namespace detail

/// Exact minimum-cost transport between supplies and demands of equal total
/// mass. `cost` is row-major (supply index major). Northwest-corner start,
/// MODI pricing with most-negative entering cell; switches to Bland's
/// lowest-index rule after a run of degenerate pivots.
inline TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                         std::span<const double> cost) {
  const std::size_t n = supply.size(), m = demand.size();
  if (n == 0 || m == 0) throw InvariantError("transport problem has nonempty supports", "");
  if (cost.size() != n * m) throw InvariantError("cost matrix matches supports", "");
  double ts = 0.0, td = 0.0;
  for (double s : supply) {
    if (!(s >= 0.0)) throw InvariantError("supplies nonnegative", "");
    ts += s;
  }
  for (double d : demand) {
    if (!(d >= 0.0)) throw InvariantError("demands nonnegative", "");
    td += d;
  }
  if (std::abs(ts - td) > kProbTolerance * std::max(1.0, ts))
    throw InvariantError("transport marginals carry equal mass", format_roundtrip(ts) + " vs " + format_roundtrip(td));

  detail::TransportBasis basis(n, m);
  {
    std::vector<double> s(supply.begin(), supply.end()), d(demand.begin(), demand.end());
    std::size_t i = 0, j = 0;
    for (;;) {
      const double x = std::min(s[i], d[j]);
      basis.add(i, j, x);
      s[i] -= x;
      d[j] -= x;
      if (i == n - 1 && j == m - 1) break;
      if (i == n - 1)
        ++j;
      else if (j == m - 1)
        ++i;
      else if (s[i] < d[j])
        ++i;
      else
        ++j;
    }
  }

  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, std::abs(c));
  const double eps = 1e-12 * (1.0 + cmax);
  std::vector<double> u, v;
  std::size_t pivots = 0, degenerate_run = 0;
  const std::size_t max_pivots = 100 * (n + m) * (n + m) + 10000;
  for (;;) {
    basis.potentials(cost, u, v);
    const bool bland = degenerate_run > n + m;
    double best = -eps;
    std::size_t ei = n, ej = m;
    for (std::size_t i = 0; i < n && !(bland && ei < n); ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (basis.is_basic(i, j)) continue;
        const double r = cost[i * m + j] - u[i] - v[j];
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
          if (bland) break;
        }
      }
    if (ei == n) break;
    if (++pivots > max_pivots) throw ConvergenceError("solve_transport: pivot limit exceeded");

    auto path = basis.path(ei, ej);
    auto& cells = basis.cells();
    // Signs along the cycle: entering +, then alternating starting with -
    // on the cell next to column ej.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = cells.size();
    for (std::size_t k = path.size(); k-- > 0;) {
      const bool minus = ((path.size() - 1 - k) % 2) == 0;
      if (!minus) continue;
      const auto& c = cells[path[k]];
      const bool better = c.flow < theta ||
                          (c.flow == theta && leaving < cells.size() &&
                           c.row * m + c.col < cells[leaving].row * m + cells[leaving].col);
      if (better) {
        theta = c.flow;
        leaving = path[k];
      }
    }
    for (std::size_t k = path.size(); k-- > 0;) {
      const bool minus = ((path.size() - 1 - k) % 2) == 0;
      auto& c = cells[path[k]];
      c.flow += minus ? -theta : theta;
      if (c.flow < 0.0) c.flow = 0.0;
    }
    degenerate_run = (theta <= 0.0) ? degenerate_run + 1 : 0;
    basis.replace(leaving, ei, ej, theta);
  }

  TransportSolution out;
  out.pivots = pivots;
  KahanSum total;
  for (const auto& c : basis.cells()) {
    if (c.flow <= 0.0) continue;
    total += c.flow * cost[c.row * m + c.col];
    out.entries.push_back({c.row, c.col, c.flow});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const TransportEntry& a, const TransportEntry& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  out.cost = total.value();
  return out;
}

}  // namespace partfilter
