#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

struct Atom {
  double weight = 0.0;
  ProbVector point;
};

/// Merges atoms lying within `eps` (l1) of an already kept atom.
///
/// Atoms are visited in input order; each one joins the earliest kept atom
/// within eps, adding its weight. The merged atom keeps the coordinates of
/// whichever side is strictly heavier, so ties go to the first seen.
inline std::vector<Atom> merge_atoms(std::vector<Atom> atoms, double eps) {
  std::vector<Atom> kept;
  kept.reserve(atoms.size());
  // Index on the first coordinate: atoms within eps in l1 are within eps
  // there too.
  std::multimap<double, std::size_t> index;
  for (auto& a : atoms) {
    const double key = a.point.size() ? a.point[0] : 0.0;
    std::size_t target = kept.size();
    for (auto it = index.lower_bound(key - eps); it != index.end() && it->first <= key + eps; ++it) {
      if (it->second < target && l1_distance(kept[it->second].point, a.point) <= eps) target = it->second;
    }
    if (target == kept.size()) {
      index.emplace(key, kept.size());
      kept.push_back(std::move(a));
      continue;
    }
    Atom& k = kept[target];
    if (a.weight > k.weight) {
      const double old_key = k.point.size() ? k.point[0] : 0.0;
      auto range = index.equal_range(old_key);
      for (auto it = range.first; it != range.second; ++it)
        if (it->second == target) {
          index.erase(it);
          break;
        }
      k.point = std::move(a.point);
      index.emplace(key, target);
    }
    k.weight += a.weight;
  }
  return kept;
}

/// Finitely supported probability measure on K.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  /// Validates positive weights summing to 1 within 1e-9 (then renormalized),
  /// equal dimensions, and merges exact duplicates.
  explicit DiscreteMeasure(std::vector<Atom> atoms, double merge_eps = 0.0) {
    if (atoms.empty()) throw InvariantError("measure has nonempty support", "");
    const std::size_t dim = atoms.front().point.size();
    KahanSum total;
    for (const auto& a : atoms) {
      if (!(a.weight > 0.0) || !std::isfinite(a.weight))
        throw InvariantError("atom weights are positive", "weight " + format_roundtrip(a.weight));
      if (a.point.size() != dim) throw InvariantError("atoms share one state space", "");
      total += a.weight;
    }
    if (std::abs(total.value() - 1.0) > kProbTolerance)
      throw InvariantError("measure weights sum to 1 within 1e-9", "sum = " + format_roundtrip(total.value()));
    atoms_ = merge_atoms(std::move(atoms), merge_eps);
    renormalize();
  }

  static DiscreteMeasure dirac(ProbVector x) { return DiscreteMeasure({Atom{1.0, std::move(x)}}); }

  /// Builds from atoms of arbitrary positive total mass by rescaling.
  static DiscreteMeasure normalized(std::vector<Atom> atoms, double merge_eps = 0.0) {
    KahanSum total;
    for (const auto& a : atoms) total += a.weight;
    if (!(total.value() > 0.0)) throw InvariantError("measure has positive mass", "");
    for (auto& a : atoms) a.weight /= total.value();
    return DiscreteMeasure(std::move(atoms), merge_eps);
  }

  std::size_t size() const noexcept { return atoms_.size(); }
  std::size_t dimension() const noexcept { return atoms_.empty() ? 0 : atoms_.front().point.size(); }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const Atom& operator[](std::size_t k) const noexcept { return atoms_[k]; }

  template <class F>
  double integrate(F&& f) const {
    KahanSum s;
    for (const auto& a : atoms_) s += a.weight * f(a.point.coords());
    return s.value();
  }

 private:
  void renormalize() {
    KahanSum total;
    for (const auto& a : atoms_) total += a.weight;
    if (total.value() != 1.0)
      for (auto& a : atoms_) a.weight /= total.value();
  }

  std::vector<Atom> atoms_;
};

/// (b(mu))_i = integral of (x)_i; the weighted mean of the atoms.
inline ProbVector barycenter(std::span<const Atom> atoms) {
  if (atoms.empty()) throw InvariantError("measure has nonempty support", "");
  const std::size_t n = atoms.front().point.size();
  std::vector<KahanSum> acc(n);
  for (const auto& a : atoms)
    for (std::size_t i = 0; i < n; ++i) acc[i] += a.weight * a.point[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i].value();
  return ProbVector::normalized(std::move(out));
}

inline ProbVector barycenter(const DiscreteMeasure& mu) { return barycenter(std::span<const Atom>(mu.atoms())); }

/// psi_q: mass q_i on each vertex e^i with q_i > 0.
inline DiscreteMeasure vertex_measure(const ProbVector& q) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) atoms.push_back({q[i], ProbVector::vertex(q.size(), i)});
  return DiscreteMeasure(std::move(atoms));
}

}  // namespace partfilter
