#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "partfilter/chain.hpp"
#include "partfilter/error.hpp"
#include "partfilter/matrix.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/parallel.hpp"
#include "partfilter/partition.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

/// Every nonzero row has support equal to the set of nonzero columns.
inline bool is_subrectangular(const NonnegMatrix& m) {
  const auto cols = m.nonzero_columns();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto rc = m.row_cols(i);
    if (rc.empty()) continue;
    if (rc.size() != cols.size() || !std::equal(rc.begin(), rc.end(), cols.begin())) return false;
  }
  return true;
}

struct WordSearch {
  std::optional<Word> word;
  std::size_t products = 0;      // word products evaluated
  bool budget_exhausted = false;
};

namespace detail {

inline NonnegMatrix support_pattern(const NonnegMatrix& m) {
  auto t = m.triplets();
  for (auto& e : t) e.value = 1.0;
  return NonnegMatrix::from_triplets(m.rows(), m.cols(), std::move(t));
}

inline std::vector<std::size_t> pattern_key(const NonnegMatrix& m) {
  std::vector<std::size_t> key;
  key.reserve(m.nnz());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j : m.row_cols(i)) key.push_back(i * m.cols() + j);
  return key;
}

// Breadth-first search over words by length, lexicographic within a length.
// Only support patterns matter for the predicates used here, so words whose
// product repeats an already seen pattern are not extended.
template <class Pred>
WordSearch pattern_search(const Partition& m, std::size_t max_len, std::size_t budget, Pred pred) {
  WordSearch out;
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::pair<Word, NonnegMatrix>> level{{Word{}, NonnegMatrix::identity(m.states())}};
  std::vector<NonnegMatrix> letters;
  for (const auto& mem : m.members()) letters.push_back(support_pattern(mem.matrix));
  for (std::size_t len = 1; len <= max_len && !level.empty(); ++len) {
    std::vector<std::pair<Word, NonnegMatrix>> next;
    for (const auto& [w, prod] : level) {
      for (std::size_t k = 0; k < letters.size(); ++k) {
        if (out.products >= budget) {
          out.budget_exhausted = true;
          return out;
        }
        ++out.products;
        auto p = support_pattern(multiply(prod, letters[k]));
        if (p.is_zero()) continue;
        Word wk = w;
        wk.push_back(k);
        if (pred(p)) {
          out.word = std::move(wk);
          return out;
        }
        if (seen.insert(pattern_key(p)).second) next.emplace_back(std::move(wk), std::move(p));
      }
    }
    level = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Shortest (then lexicographically first) word whose product is nonzero
/// and subrectangular.
inline WordSearch condition_A_search(const Partition& m, std::size_t max_len, std::size_t budget = 1'000'000) {
  if (max_len == 0) throw InvariantError("max_len >= 1", "");
  return detail::pattern_search(m, max_len, budget, [](const NonnegMatrix& p) { return is_subrectangular(p); });
}

inline std::size_t default_col_bound(std::size_t states) { return (states + 3) / 4; }

/// Shortest word whose product is nonzero with at most col_bound nonzero
/// columns.
inline WordSearch localizing_search(const Partition& m, std::size_t max_len, std::size_t col_bound,
                                    std::size_t budget = 1'000'000) {
  return detail::pattern_search(m, max_len, budget,
                                [col_bound](const NonnegMatrix& p) { return p.nonzero_columns().size() <= col_bound; });
}

/// Max l1 distance between normalized rows whose sums exceed row_floor.
/// Zero exactly when those rows are proportional.
inline double rank1_proximity(const NonnegMatrix& m, double row_floor = 1e-9) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double s = m.row_sum(i);
    if (!(s > row_floor)) continue;
    std::vector<double> r(m.cols(), 0.0);
    const auto cols = m.row_cols(i);
    const auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) r[cols[k]] = vals[k] / s;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw InvariantError("some row sum exceeds the floor", "floor " + format_roundtrip(row_floor));
  double best = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) best = std::max(best, l1_distance(rows[a], rows[b]));
  return best;
}

enum class VerdictKind { condition_a, b1_converged, localizing, undecided, nonstable };

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::condition_a: return "condition_a";
    case VerdictKind::b1_converged: return "b1_converged";
    case VerdictKind::localizing: return "localizing";
    case VerdictKind::undecided: return "undecided";
    case VerdictKind::nonstable: return "nonstable";
  }
  return "unknown";
}

struct StabilityVerdict {
  VerdictKind kind = VerdictKind::undecided;
  std::optional<Word> word;
  std::optional<NonnegMatrix> W;
  std::string policy;
  std::size_t budget_spent = 0;
  double proximity = std::numeric_limits<double>::infinity();
  std::vector<double> curve;  // proximity per iteration of the reported word
};

struct B1Options {
  double tol = 1e-6;
  double row_floor = 1e-9;
  std::size_t repeat_max_len = 3;
  std::size_t max_iterations = 2000;
  std::optional<std::size_t> max_word_len;  // exhaustive depth; default min(8, log_|W| 1e6)
  std::size_t budget = 2'000'000;           // matrix products over all policies
};

/// W = u^T v with u the row sums of x and v its largest row, normalized.
/// Has operator norm 1 when x does.
inline NonnegMatrix rank1_from(const NonnegMatrix& x) {
  std::size_t imax = 0;
  for (std::size_t i = 1; i < x.rows(); ++i)
    if (x.row_sum(i) > x.row_sum(imax)) imax = i;
  const double smax = x.row_sum(imax);
  std::vector<Triplet> t;
  const auto vc = x.row_cols(imax);
  const auto vv = x.row_values(imax);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double u = x.row_sum(i) / smax;
    if (!(u > 0.0)) continue;
    for (std::size_t k = 0; k < vc.size(); ++k) t.push_back({i, vc[k], u * vv[k]});
  }
  return NonnegMatrix::from_triplets(x.rows(), x.cols(), std::move(t));
}

namespace detail {

inline std::string join_labels(const Partition& m, const Word& w) {
  std::string s;
  for (std::size_t k = 0; k < w.size(); ++k) s += (k ? "," : "") + m.label(w[k]);
  return s;
}

inline NonnegMatrix normalized(const NonnegMatrix& m) { return m.scaled(1.0 / operator_norm(m)); }

inline double max_abs_diff(const NonnegMatrix& a, const NonnegMatrix& b) {
  const auto da = a.to_dense(), db = b.to_dense();
  double d = 0.0;
  for (std::size_t k = 0; k < da.size(); ++k) d = std::max(d, std::abs(da[k] - db[k]));
  return d;
}

inline std::vector<Word> words_of_length(std::size_t alphabet, std::size_t len) {
  std::vector<Word> out{Word{}};
  for (std::size_t l = 0; l < len; ++l) {
    std::vector<Word> next;
    for (const auto& w : out)
      for (std::size_t k = 0; k < alphabet; ++k) {
        next.push_back(w);
        next.back().push_back(k);
      }
    out = std::move(next);
  }
  return out;
}

inline StabilityVerdict converged(const NonnegMatrix& x, Word word, std::string policy, std::vector<double> curve,
                                  double prox) {
  StabilityVerdict v;
  v.kind = VerdictKind::b1_converged;
  v.word = std::move(word);
  v.W = rank1_from(x);
  v.policy = std::move(policy);
  v.proximity = prox;
  v.curve = std::move(curve);
  return v;
}

}  // namespace detail

inline std::size_t default_exhaustive_depth(std::size_t alphabet) {
  if (alphabet <= 1) return 8;
  const auto d = static_cast<std::size_t>(std::floor(std::log(1e6) / std::log(static_cast<double>(alphabet)) + 1e-9));
  return std::clamp<std::size_t>(d, 1, 8);
}

/// Searches for a word sequence whose normalized products M(w^n)/||M(w^n)||
/// approach a rank-1 matrix. Policies, in order:
///   repeat      every word of length <= repeat_max_len raised to powers
///   exhaustive  every word up to the exhaustive depth
///   greedy      extension by the letter maximizing ||M(w^n) M(w)||
/// Returns b1_converged with the limit W, or undecided.
inline StabilityVerdict condition_B1_detect(const Partition& m, const B1Options& opt = {}) {
  std::size_t spent = 0;
  StabilityVerdict best;
  auto note_best = [&](double prox, const Word& w, const std::string& policy, const std::vector<double>& curve) {
    if (prox < best.proximity) {
      best.proximity = prox;
      best.word = w;
      best.policy = policy;
      best.curve = curve;
    }
  };
  auto finish_undecided = [&] {
    best.kind = VerdictKind::undecided;
    best.budget_spent = spent;
    return best;
  };

  for (std::size_t len = 1; len <= opt.repeat_max_len; ++len) {
    for (const auto& w : detail::words_of_length(m.size(), len)) {
      const NonnegMatrix g = matrix_word_product(m, w);
      spent += len;
      if (g.is_zero()) continue;
      NonnegMatrix x = detail::normalized(g);
      std::vector<double> curve;
      Word power;
      for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        power.insert(power.end(), w.begin(), w.end());
        const double prox = rank1_proximity(x, opt.row_floor);
        curve.push_back(prox);
        if (prox <= opt.tol) {
          auto v = detail::converged(x, power, "repeat", std::move(curve), prox);
          v.budget_spent = spent;
          return v;
        }
        if (spent >= opt.budget) {
          note_best(prox, power, "repeat", curve);
          return finish_undecided();
        }
        NonnegMatrix y = multiply(x, g);
        ++spent;
        if (y.is_zero()) break;
        y = detail::normalized(y);
        const bool fixed = detail::max_abs_diff(x, y) <= 1e-14;
        x = std::move(y);
        if (fixed) break;
      }
      note_best(curve.empty() ? best.proximity : curve.back(), power, "repeat", curve);
    }
  }

  const std::size_t depth = opt.max_word_len.value_or(default_exhaustive_depth(m.size()));
  {
    // Depth-first over words, reusing prefix products, lexicographic order.
    struct Frame {
      Word w;
      NonnegMatrix prod;
    };
    std::vector<Frame> stack{{Word{}, NonnegMatrix::identity(m.states())}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (!f.w.empty()) {
        const double prox = rank1_proximity(f.prod, opt.row_floor);
        if (prox <= opt.tol) {
          auto v = detail::converged(f.prod, f.w, "exhaustive", {prox}, prox);
          v.budget_spent = spent;
          return v;
        }
        note_best(prox, f.w, "exhaustive", {prox});
      }
      if (f.w.size() >= depth) continue;
      for (std::size_t k = m.size(); k-- > 0;) {
        if (spent >= opt.budget) return finish_undecided();
        ++spent;
        NonnegMatrix p = multiply(f.prod, m[k]);
        if (p.is_zero()) continue;
        Word wk = f.w;
        wk.push_back(k);
        stack.push_back({std::move(wk), detail::normalized(p)});
      }
    }
  }

  {
    NonnegMatrix x = NonnegMatrix::identity(m.states());
    Word w;
    std::vector<double> curve;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      std::optional<NonnegMatrix> pick;
      std::size_t pick_k = 0;
      double pick_norm = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (spent >= opt.budget) {
          if (!curve.empty()) note_best(curve.back(), w, "greedy", curve);
          return finish_undecided();
        }
        ++spent;
        NonnegMatrix p = multiply(x, m[k]);
        const double nrm = operator_norm(p);
        if (nrm > pick_norm) {
          pick_norm = nrm;
          pick = std::move(p);
          pick_k = k;
        }
      }
      if (!pick) break;
      x = pick->scaled(1.0 / pick_norm);
      w.push_back(pick_k);
      const double prox = rank1_proximity(x, opt.row_floor);
      curve.push_back(prox);
      if (prox <= opt.tol) {
        auto v = detail::converged(x, w, "greedy", std::move(curve), prox);
        v.budget_spent = spent;
        return v;
      }
    }
    if (!curve.empty()) note_best(curve.back(), w, "greedy", curve);
  }
  return finish_undecided();
}

/// Shortest label path from state `from` to state `to` in the support graph
/// of P; each edge takes the first label whose member has a positive entry
/// there. The empty word when from == to.
inline std::optional<Word> connector_word(const Partition& m, std::size_t from, std::size_t to) {
  if (from == to) return Word{};
  const std::size_t n = m.states();
  std::vector<long> parent(n, -1);
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> q{from};
  seen[from] = 1;
  const NonnegMatrix& p = m.base().matrix();
  while (!q.empty() && !seen[to]) {
    const std::size_t a = q.front();
    q.pop_front();
    for (std::size_t b : p.row_cols(a)) {
      if (seen[b]) continue;
      seen[b] = 1;
      parent[b] = static_cast<long>(a);
      q.push_back(b);
    }
  }
  if (!seen[to]) return std::nullopt;
  std::vector<std::size_t> nodes{to};
  while (nodes.back() != from) nodes.push_back(static_cast<std::size_t>(parent[nodes.back()]));
  std::reverse(nodes.begin(), nodes.end());
  Word w;
  for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k].at(nodes[s], nodes[s + 1]) > 0.0) {
        w.push_back(k);
        break;
      }
  }
  return w;
}

struct Theorem93Witness {
  bool success = false;
  std::string reason;
  Word a, b, c, d;
  Word word;  // d a c b
  std::optional<NonnegMatrix> W;
  std::size_t iterations = 0;
  double proximity = std::numeric_limits<double>::infinity();
};

/// Combines a Condition A word a and a localizing word b into
/// G = M(d) M(a) M(c) M(b), with connectors c: j1 -> i0 and d: j0 -> i1
/// chosen so that G has a positive diagonal entry, then power-iterates
/// G^n / ||G^n|| to a rank-1 limit.
inline Theorem93Witness theorem93_witness(const Partition& m, std::size_t max_len, double tol = 1e-9,
                                          std::optional<std::size_t> col_bound = std::nullopt,
                                          std::size_t max_iterations = 10000, double row_floor = 1e-12) {
  Theorem93Witness out;
  const auto structure = check_irreducible_aperiodic(m.base());
  if (!structure.irreducible || !structure.aperiodic)
    throw InvariantError("base chain irreducible and aperiodic", "");
  const auto a = condition_A_search(m, max_len);
  if (!a.word) {
    out.reason = "no subrectangular word up to length " + std::to_string(max_len);
    return out;
  }
  const auto b = localizing_search(m, max_len, col_bound.value_or(default_col_bound(m.states())));
  if (!b.word) {
    out.reason = "no localizing word up to length " + std::to_string(max_len);
    return out;
  }
  out.a = *a.word;
  out.b = *b.word;
  const auto first_entry = [](const NonnegMatrix& x) {
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (!x.row_cols(i).empty()) return std::pair{i, x.row_cols(i).front()};
    return std::pair<std::size_t, std::size_t>{0, 0};
  };
  const auto [i1, j1] = first_entry(matrix_word_product(m, out.a));
  const auto [i0, j0] = first_entry(matrix_word_product(m, out.b));
  const auto c = connector_word(m, j1, i0);
  const auto d = connector_word(m, j0, i1);
  if (!c || !d) {
    out.reason = "connector path missing";
    return out;
  }
  out.c = *c;
  out.d = *d;
  for (const Word* part : {&out.d, &out.a, &out.c, &out.b}) out.word.insert(out.word.end(), part->begin(), part->end());
  const NonnegMatrix g = detail::normalized(matrix_word_product(m, out.word));
  NonnegMatrix x = g;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    out.iterations = it;
    out.proximity = rank1_proximity(x, row_floor);
    if (out.proximity <= tol) {
      out.success = true;
      out.W = rank1_from(x);
      return out;
    }
    x = detail::normalized(multiply(x, g));
  }
  out.reason = "power iteration did not reach rank 1 within " + std::to_string(max_iterations) + " steps";
  return out;
}

/// Minimum pairwise l1 distance among the distinct points
/// xM(w)/||xM(w)|| for words up to length n_max (x itself included).
/// Points closer than 1e-12 count as one. Infinity for a single point.
inline double orbit_separation(const ProbVector& x, const Partition& m, std::size_t n_max,
                               std::vector<ProbVector>* orbit_out = nullptr) {
  std::vector<ProbVector> orbit{x};
  auto add = [&](const ProbVector& p) {
    for (const auto& q : orbit)
      if (l1_distance(p, q) <= 1e-12) return false;
    orbit.push_back(p);
    return true;
  };
  std::vector<ProbVector> frontier{x};
  for (std::size_t depth = 1; depth <= n_max && !frontier.empty(); ++depth) {
    std::vector<ProbVector> next;
    for (const auto& p : frontier)
      for (std::size_t k = 0; k < m.size(); ++k) {
        auto y = m[k].left_multiply(p.coords());
        if (!(l1_norm(y) > 0.0)) continue;
        auto z = ProbVector::normalized(std::move(y));
        if (add(z)) next.push_back(std::move(z));
      }
    frontier = std::move(next);
  }
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < orbit.size(); ++a)
    for (std::size_t b = a + 1; b < orbit.size(); ++b) sep = std::min(sep, l1_distance(orbit[a], orbit[b]));
  if (orbit_out) *orbit_out = std::move(orbit);
  return sep;
}

struct Theorem11Report {
  bool isolated = false;     // sampled orbit points stay apart
  bool same_words = false;   // x and y in K_S' see the same positive words
  bool isometric = false;    // normalized steps preserve l1 distances
  double epsilon0 = 0.0;
  std::size_t orbit_size = 0;
  std::size_t pairs_checked = 0;
  std::size_t words_checked = 0;
  std::string witness;       // first failure, if any
  bool pass() const noexcept { return isolated && same_words && isometric; }
};

struct Theorem11Options {
  std::size_t n_max = 6;
  std::size_t sample_count = 20;
  std::uint64_t seed = 0;
  std::optional<ProbVector> orbit_start;  // default: first sampled point
  double tol = 1e-9;
};

/// Samples pairs x, y in K_{S'} and checks, for every word up to n_max with
/// positive mass, that both vectors activate the same words and that the
/// normalized images stay at distance ||x - y||.
inline Theorem11Report theorem11_check(const Partition& m, const std::vector<std::size_t>& subset,
                                       const Theorem11Options& opt = {}) {
  if (subset.size() < 2) throw InvariantError("subset S' has at least two states", "");
  for (std::size_t s : subset)
    if (s >= m.states()) throw InvariantError("subset states in range", std::to_string(s));
  Rng rng(opt.seed);
  const auto sample = [&] {
    const auto w = rng.simplex_point(subset.size());
    std::vector<double> x(m.states(), 0.0);
    for (std::size_t k = 0; k < subset.size(); ++k) x[subset[k]] = w[k];
    return ProbVector::normalized(std::move(x));
  };

  Theorem11Report rep;
  rep.same_words = rep.isometric = true;
  std::optional<ProbVector> first;
  for (std::size_t s = 0; s < opt.sample_count; ++s) {
    const ProbVector x = sample(), y = sample();
    if (!first) first = x;
    ++rep.pairs_checked;
    const double dxy = l1_distance(x, y);
    struct Node {
      std::vector<double> x, y;
      std::size_t depth;
      Word w;
    };
    std::vector<Node> stack{{x.values(), y.values(), 0, {}}};
    while (!stack.empty()) {
      Node nd = std::move(stack.back());
      stack.pop_back();
      if (nd.depth == opt.n_max) continue;
      for (std::size_t k = m.size(); k-- > 0;) {
        auto xm = m[k].left_multiply(nd.x);
        auto ym = m[k].left_multiply(nd.y);
        const double mx = l1_norm(xm), my = l1_norm(ym);
        Word w = nd.w;
        w.push_back(k);
        ++rep.words_checked;
        if ((mx > 0.0) != (my > 0.0)) {
          if (rep.same_words) rep.witness = "active word sets differ at word " + detail::join_labels(m, w);
          rep.same_words = false;
          continue;
        }
        if (!(mx > 0.0)) continue;
        for (auto& v : xm) v /= mx;
        for (auto& v : ym) v /= my;
        const double d = l1_distance(xm, ym);
        if (std::abs(d - dxy) > opt.tol) {
          if (rep.isometric && rep.same_words)
            rep.witness = "word " + detail::join_labels(m, w) + " moves distance " + format_roundtrip(dxy) + " to " +
                          format_roundtrip(d);
          rep.isometric = false;
        }
        stack.push_back({std::move(xm), std::move(ym), nd.depth + 1, std::move(w)});
      }
    }
  }
  std::vector<ProbVector> orbit;
  rep.epsilon0 = orbit_separation(opt.orbit_start.value_or(*first), m, opt.n_max, &orbit);
  rep.orbit_size = orbit.size();
  rep.isolated = rep.epsilon0 > 1e-9;
  if (!rep.isolated && rep.witness.empty()) rep.witness = "orbit points closer than 1e-9";
  return rep;
}

}  // namespace partfilter
