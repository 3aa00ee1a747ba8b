#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/numeric.hpp"

namespace partfilter {

/// A point of the probability simplex K on a finite state space.
///
/// Construction accepts coordinates whose sum is within kProbTolerance of 1
/// and rescales them to sum exactly to 1 (up to rounding). Larger deviations
/// and negative coordinates are modeling errors.
class ProbVector {
 public:
  ProbVector() = default;

  explicit ProbVector(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw InvariantError("state space size >= 1", "empty probability vector");
    KahanSum total;
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      double& v = coords_[i];
      if (!std::isfinite(v) || v < -1e-15)
        throw InvariantError("probability coordinates >= 0",
                             "coordinate " + std::to_string(i) + " = " + format_roundtrip(v));
      if (v < 0.0) v = 0.0;
      total += v;
    }
    if (std::abs(total.value() - 1.0) > kProbTolerance)
      throw InvariantError("probability vector sums to 1 within 1e-9", "sum = " + format_roundtrip(total.value()));
    if (total.value() != 1.0)
      for (double& v : coords_) v /= total.value();
  }

  /// Normalizes an arbitrary nonnegative vector with positive mass. Used for
  /// filter updates xM(w)/||xM(w)|| where the sum is far from 1 by design.
  static ProbVector normalized(std::vector<double> coords) {
    KahanSum total;
    for (double& v : coords) {
      if (v < 0.0) v = 0.0;
      total += v;
    }
    if (!(total.value() > 0.0)) throw InvariantError("normalized vector has positive mass", "");
    for (double& v : coords) v /= total.value();
    ProbVector out;
    out.coords_ = std::move(coords);
    return out;
  }

  static ProbVector vertex(std::size_t n, std::size_t i) {
    std::vector<double> c(n, 0.0);
    c.at(i) = 1.0;
    return ProbVector(std::move(c));
  }

  static ProbVector uniform(std::size_t n) { return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

  std::size_t size() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<double>& values() const noexcept { return coords_; }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> coords_;
};

inline double l1_distance(const ProbVector& x, const ProbVector& y) noexcept { return l1_distance(x.coords(), y.coords()); }

/// Nonnegative vector with an attached norm convention; houses the b of
/// barycenter retargeting (l1) and the u of rank-one matrices (sup).
struct NonnegVector {
  enum class Norm { l1, sup };

  NonnegVector() = default;
  NonnegVector(std::vector<double> c, Norm kind = Norm::l1) : coords(std::move(c)), norm_kind(kind) {
    for (std::size_t i = 0; i < coords.size(); ++i)
      if (!std::isfinite(coords[i]) || coords[i] < 0.0)
        throw InvariantError("nonnegative vector coordinates >= 0", "coordinate " + std::to_string(i));
  }

  double norm() const noexcept {
    if (norm_kind == Norm::l1) return l1_norm(coords);
    double m = 0.0;
    for (double v : coords) m = std::max(m, v);
    return m;
  }

  std::vector<double> coords;
  Norm norm_kind = Norm::l1;
};

}  // namespace partfilter
