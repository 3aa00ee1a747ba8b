#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace partfilter {

// Tolerances shared across modules.
inline constexpr double kProbTolerance = 1e-9;
inline constexpr double kStationaryTolerance = 1e-8;
inline constexpr double kDefaultPrune = 1e-12;
inline constexpr double kDefaultMergeEps = 1e-10;

/// Kahan-compensated running sum.
class KahanSum {
 public:
  void add(double v) noexcept {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  KahanSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double l1_norm(std::span<const double> x) noexcept {
  KahanSum s;
  for (double v : x) s += std::abs(v);
  return s.value();
}

inline double l1_distance(std::span<const double> x, std::span<const double> y) noexcept {
  KahanSum s;
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - y[i]);
  for (std::size_t i = n; i < x.size(); ++i) s += std::abs(x[i]);
  for (std::size_t i = n; i < y.size(); ++i) s += std::abs(y[i]);
  return s.value();
}

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
  KahanSum s;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) s += x[i] * y[i];
  return s.value();
}

/// Shortest decimal string that round-trips to the same double.
inline std::string format_roundtrip(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Fixed significant-digit formatting (`%.<digits>g`).
inline std::string format_significant(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

/// Seeded generator with a platform-independent mapping to [0,1).
///
/// std::mt19937_64's output sequence is fixed by the standard, but the
/// standard distributions are not, so uniform draws are built by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1], safe for logarithms.
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double exponential() { return -std::log(uniform_open()); }

  /// A point drawn uniformly from the simplex of dimension `n`.
  std::vector<double> simplex_point(std::size_t n) {
    std::vector<double> x(n);
    double total = 0.0;
    for (auto& v : x) {
      v = exponential();
      total += v;
    }
    for (auto& v : x) v /= total;
    return x;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace partfilter
