#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/matrix.hpp"

namespace partfilter {

/// Member indices into a Partition, read left to right.
using Word = std::vector<std::size_t>;

/// How a partition was produced; kept so model files round-trip in the
/// form they were written.
struct LumpingOrigin {
  std::vector<std::string> labels;  // one per state
};
struct ObservationEntry {
  std::size_t state = 0;
  std::string label;
  double value = 0.0;
};
struct ObservationOrigin {
  std::vector<ObservationEntry> entries;
};
using PartitionOrigin = std::variant<std::monostate, LumpingOrigin, ObservationOrigin>;

struct Member {
  std::string label;
  NonnegMatrix matrix;

  friend bool operator==(const Member&, const Member&) = default;
};

/// A finite labeled family {M(w)} of nonnegative matrices summing entrywise
/// to a transition matrix P.
class Partition {
 public:
  Partition() = default;

  Partition(TransitionMatrix base, std::vector<Member> members, PartitionOrigin origin = {})
      : base_(std::move(base)), members_(std::move(members)), origin_(std::move(origin)) {
    if (members_.empty()) throw InvariantError("partition has at least one label", "");
    const std::size_t n = base_.size();
    std::map<std::string, int> seen;
    for (const auto& m : members_) {
      if (m.matrix.rows() != n || m.matrix.cols() != n)
        throw InvariantError("partition members share the dimensions of P", "label " + m.label);
      if (seen[m.label]++) throw InvariantError("partition labels are distinct", "label " + m.label);
    }
    // Entrywise sum check against P.
    std::vector<double> total(n * n, 0.0);
    for (const auto& m : members_)
      for (const auto& t : m.matrix.triplets()) total[t.row * n + t.col] += t.value;
    for (const auto& t : base_.matrix().triplets()) total[t.row * n + t.col] -= t.value;
    for (std::size_t k = 0; k < total.size(); ++k)
      if (std::abs(total[k]) > kProbTolerance)
        throw InvariantError("sum of partition members equals P within 1e-9",
                             "entry (" + std::to_string(k / n) + "," + std::to_string(k % n) + ") off by " +
                                 format_roundtrip(total[k]));
  }

  std::size_t states() const noexcept { return base_.size(); }
  std::size_t size() const noexcept { return members_.size(); }
  const TransitionMatrix& base() const noexcept { return base_; }
  const std::vector<Member>& members() const noexcept { return members_; }
  const Member& member(std::size_t k) const { return members_.at(k); }
  const NonnegMatrix& operator[](std::size_t k) const { return members_.at(k).matrix; }
  const std::string& label(std::size_t k) const { return members_.at(k).label; }
  const PartitionOrigin& origin() const noexcept { return origin_; }

  std::optional<std::size_t> find(const std::string& label) const {
    for (std::size_t k = 0; k < members_.size(); ++k)
      if (members_[k].label == label) return k;
    return std::nullopt;
  }

  Word word_from_labels(const std::vector<std::string>& labels) const {
    Word w;
    for (const auto& l : labels) {
      auto k = find(l);
      if (!k) throw InvariantError("word labels belong to the partition", "unknown label '" + l + "'");
      w.push_back(*k);
    }
    return w;
  }

  std::vector<std::string> labels_of(const Word& w) const {
    std::vector<std::string> out;
    for (std::size_t k : w) out.push_back(label(k));
    return out;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.base_ == b.base_ && a.members_ == b.members_;
  }

 private:
  TransitionMatrix base_;
  std::vector<Member> members_;
  PartitionOrigin origin_;
};

/// Column split of P by a lumping function g: M(a) keeps the columns j with
/// g(j) = a. Labels are ordered lexicographically.
inline Partition partition_from_lumping(const TransitionMatrix& p, const std::vector<std::string>& g) {
  if (g.size() != p.size())
    throw InvariantError("lumping function is total on states",
                         std::to_string(g.size()) + " labels for " + std::to_string(p.size()) + " states");
  std::vector<std::string> labels = g;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw InvariantError("label set is nonempty", "");
  std::vector<std::vector<Triplet>> parts(labels.size());
  for (const auto& t : p.matrix().triplets()) {
    const auto k = static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), g[t.col]) - labels.begin());
    parts[k].push_back(t);
  }
  std::vector<Member> members;
  for (std::size_t k = 0; k < labels.size(); ++k)
    members.push_back({labels[k], NonnegMatrix::from_triplets(p.size(), p.size(), std::move(parts[k]))});
  return Partition(p, std::move(members), LumpingOrigin{g});
}

/// Split of P by an observation matrix R (states x labels):
/// (M(a))_{i,j} = P_{i,j} R_{j,a}. Rows of R must sum to 1.
inline Partition partition_from_observation(const TransitionMatrix& p, const std::vector<ObservationEntry>& r) {
  const std::size_t n = p.size();
  std::vector<std::string> labels;
  for (const auto& e : r) {
    if (e.state >= n)
      throw InvariantError("observation rows indexed by states of P", "state " + std::to_string(e.state));
    if (!std::isfinite(e.value) || e.value < 0.0)
      throw InvariantError("observation probabilities nonnegative", "state " + std::to_string(e.state));
    labels.push_back(e.label);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw InvariantError("label set is nonempty", "");
  // Dense R: states x labels.
  std::vector<double> rmat(n * labels.size(), 0.0);
  std::vector<char> filled(n * labels.size(), 0);
  for (const auto& e : r) {
    const auto a = static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), e.label) - labels.begin());
    if (filled[e.state * labels.size() + a])
      throw InvariantError("no duplicate observation entries", "state " + std::to_string(e.state) + " label " + e.label);
    filled[e.state * labels.size() + a] = 1;
    rmat[e.state * labels.size() + a] = e.value;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t a = 0; a < labels.size(); ++a) s += rmat[j * labels.size() + a];
    if (std::abs(s - 1.0) > kProbTolerance)
      throw InvariantError("observation matrix rows sum to 1 within 1e-9", "state " + std::to_string(j));
  }
  std::vector<std::vector<Triplet>> parts(labels.size());
  for (const auto& t : p.matrix().triplets())
    for (std::size_t a = 0; a < labels.size(); ++a) {
      const double v = t.value * rmat[t.col * labels.size() + a];
      if (v > 0.0) parts[a].push_back({t.row, t.col, v});
    }
  std::vector<Member> members;
  for (std::size_t a = 0; a < labels.size(); ++a)
    members.push_back({labels[a], NonnegMatrix::from_triplets(n, n, std::move(parts[a]))});
  return Partition(p, std::move(members), ObservationOrigin{r});
}

/// One-member partition {P}.
inline Partition trivial_partition(const TransitionMatrix& p, std::string label = "0") {
  return Partition(p, {Member{std::move(label), p.matrix()}});
}

/// The product partition {M1(w1) M2(w2)} of P1 P2, labels "w1,w2" with w1
/// varying slowest. Associative, including labels.
inline Partition partition_product(const Partition& m1, const Partition& m2) {
  if (m1.states() != m2.states()) throw InvariantError("compatible partition dimensions", "");
  TransitionMatrix base(multiply(m1.base().matrix(), m2.base().matrix()));
  std::vector<Member> members;
  members.reserve(m1.size() * m2.size());
  for (const auto& a : m1.members())
    for (const auto& b : m2.members()) members.push_back({a.label + "," + b.label, multiply(a.matrix, b.matrix)});
  return Partition(std::move(base), std::move(members));
}

/// n-fold self product M^n, a partition of P^n.
inline Partition partition_power(const Partition& m, std::size_t n) {
  if (n == 0) throw InvariantError("partition power n >= 1", "");
  Partition out = m;
  for (std::size_t k = 1; k < n; ++k) out = partition_product(out, m);
  return out;
}

/// M(w_1) M(w_2) ... M(w_m); the empty word gives the identity.
inline NonnegMatrix matrix_word_product(const Partition& m, const Word& word) {
  NonnegMatrix out = NonnegMatrix::identity(m.states());
  for (std::size_t k : word) {
    if (k >= m.size()) throw InvariantError("word labels belong to the partition", "index " + std::to_string(k));
    out = multiply(out, m[k]);
  }
  return out;
}

inline NonnegMatrix matrix_word_product(const Partition& m, const std::vector<std::string>& labels) {
  return matrix_word_product(m, m.word_from_labels(labels));
}

}  // namespace partfilter
