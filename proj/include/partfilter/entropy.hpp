#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "partfilter/dynamics.hpp"
#include "partfilter/error.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/parallel.hpp"
#include "partfilter/partition.hpp"
#include "partfilter/stability.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

/// h(t) = -t ln t / ln 2, with h(0) = 0.
inline double h(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvariantError("h argument in [0,1]", format_roundtrip(t));
  if (t == 0.0 || t == 1.0) return 0.0;
  return -t * std::log2(t);
}

namespace detail {
// Values within rounding of [0,1] from products of stochastic data; a mass
// within 1e-14 of 1 counts as 1.
inline constexpr double kUnitMassSnap = 1e-14;
inline double h_clamped(double t) { return t >= 1.0 - kUnitMassSnap ? 0.0 : h(std::max(t, 0.0)); }
}  // namespace detail

struct EntropyValue {
  double value = 0.0;           // bits
  double pruned_mass = 0.0;
  std::size_t pruned_count = 0;
  double budget = 0.0;          // bound on the contribution lost to pruning
};

/// c h(m/c) + m n log2|W| for c pruned branches of total mass m at horizon n.
inline double pruning_budget(double mass, std::size_t count, std::size_t n, std::size_t alphabet) {
  if (count == 0 || !(mass > 0.0)) return 0.0;
  const double c = static_cast<double>(count);
  return c * detail::h_clamped(std::min(1.0, mass / c)) +
         mass * static_cast<double>(n) * std::log2(static_cast<double>(std::max<std::size_t>(alphabet, 1)));
}

/// H^1(Y;x), ..., H^{n_max}(Y;x) from one depth-first pass over the word
/// tree: H^k sums h(||x M(w^k)||) over words of length k. Branches with
/// mass <= prune are cut; their mass counts against every later horizon.
inline std::vector<EntropyValue> entropy_H_all(const ProbVector& x, const Partition& m, std::size_t n_max,
                                               double prune = kDefaultPrune) {
  if (n_max == 0) throw InvariantError("entropy horizon n >= 1", "");
  struct Acc {
    std::vector<KahanSum> h, pruned;
    std::vector<std::size_t> count;
  };
  const std::size_t alphabet = m.size();
  auto branch = [&](std::size_t first) {
    Acc acc{std::vector<KahanSum>(n_max), std::vector<KahanSum>(n_max), std::vector<std::size_t>(n_max, 0)};
    struct Frame {
      std::vector<double> y;
      std::size_t depth;  // length of the word ending here
    };
    std::vector<Frame> stack;
    auto visit = [&](std::vector<double> y, std::size_t depth) {
      const double mass = l1_norm(y);
      if (!(mass > 0.0)) return;
      if (!(mass > prune)) {
        acc.pruned[depth - 1] += mass;
        ++acc.count[depth - 1];
        return;
      }
      acc.h[depth - 1] += detail::h_clamped(mass);
      if (depth < n_max) stack.push_back({std::move(y), depth});
    };
    visit(m[first].left_multiply(x.coords()), 1);
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      for (std::size_t k = alphabet; k-- > 0;) visit(m[k].left_multiply(f.y), f.depth + 1);
    }
    return acc;
  };
  const auto parts = parallel_map(alphabet, branch);
  std::vector<EntropyValue> out(n_max);
  double pruned_so_far = 0.0;
  std::size_t count_so_far = 0;
  for (std::size_t k = 0; k < n_max; ++k) {
    KahanSum hv, pm;
    for (const auto& p : parts) {
      hv += p.h[k].value();
      pm += p.pruned[k].value();
      count_so_far += p.count[k];
    }
    pruned_so_far += pm.value();
    out[k].value = hv.value();
    out[k].pruned_mass = pruned_so_far;
    out[k].pruned_count = count_so_far;
    out[k].budget = pruning_budget(pruned_so_far, count_so_far, k + 1, alphabet);
  }
  return out;
}

/// H^n(Y;x) = sum over words w^n of h(||x M(w^n)||).
inline EntropyValue entropy_H(const ProbVector& x, const Partition& m, std::size_t n, double prune = kDefaultPrune) {
  return entropy_H_all(x, m, n, prune).back();
}

/// sum_w h(||y M(w)||), the one-step entropy at y.
inline double one_step_entropy(std::span<const double> y, const Partition& m) {
  KahanSum s;
  for (const auto& mem : m.members()) s += detail::h_clamped(mem.matrix.left_mass(y));
  return s.value();
}

enum class IncrementMethod { difference, integral };

struct IncrementValue {
  double value = 0.0;
  double budget = 0.0;
};

/// H_R^n(Y;x) = H^{n+1} - H^n, or as the integral of the one-step entropy
/// against P^n(x, .).
inline IncrementValue entropy_rate_increment(const ProbVector& x, const Partition& m, std::size_t n,
                                             double prune = kDefaultPrune,
                                             IncrementMethod method = IncrementMethod::difference) {
  if (n == 0) throw InvariantError("entropy horizon n >= 1", "");
  if (method == IncrementMethod::difference) {
    const auto all = entropy_H_all(x, m, n + 1, prune);
    return {all[n].value - all[n - 1].value, all[n].budget + all[n - 1].budget};
  }
  const auto ev = evolve(x, m, n, prune, 0.0);
  const double v = ev.measure.integrate([&](std::span<const double> y) { return one_step_entropy(y, m); });
  // Pruned atoms are missing and the kept ones were renormalized.
  const double lg = std::log2(static_cast<double>(std::max<std::size_t>(m.size(), 2)));
  return {v, 2.0 * ev.pruned_mass * lg};
}

struct EntropyRow {
  std::size_t n = 0;
  double H_n = 0.0;    // H^n(Y;pi)
  double H_R_n = 0.0;  // H_R^n(Y;pi) = U_n
  double L_n = 0.0;
  double U_n = 0.0;
  double pruned_mass = 0.0;
  double budget = 0.0;
};

/// L_n = sum_i pi_i H_R^n(Y;e^i) and U_n = H_R^n(Y;pi) for n = 1..n_max.
/// L is nondecreasing, U nonincreasing, and L_n <= U_n. States with
/// pi_i <= 1e-12 are skipped and their mass added to the budget.
inline std::vector<EntropyRow> entropy_bracket(const Partition& m, const ProbVector& pi, std::size_t n_max,
                                               double prune = kDefaultPrune) {
  if (pi.size() != m.states()) throw InvariantError("stationary vector matches state space", "");
  const auto upper = entropy_H_all(pi, m, n_max + 1, prune);
  std::vector<EntropyRow> rows(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto& r = rows[n - 1];
    r.n = n;
    r.H_n = upper[n - 1].value;
    r.H_R_n = r.U_n = upper[n].value - upper[n - 1].value;
    r.pruned_mass = upper[n].pruned_mass;
    r.budget = upper[n].budget + upper[n - 1].budget;
  }
  std::vector<std::size_t> states;
  double skipped = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] > 1e-12)
      states.push_back(i);
    else
      skipped += pi[i];
  }
  const auto per_state = parallel_map(states.size(), [&](std::size_t s) {
    return entropy_H_all(ProbVector::vertex(pi.size(), states[s]), m, n_max + 1, prune);
  });
  const double lg = std::log2(static_cast<double>(std::max<std::size_t>(m.size(), 2)));
  for (std::size_t n = 1; n <= n_max; ++n) {
    KahanSum lower, lower_budget, lower_pruned;
    for (std::size_t s = 0; s < states.size(); ++s) {
      const double w = pi[states[s]];
      lower += w * (per_state[s][n].value - per_state[s][n - 1].value);
      lower_budget += w * (per_state[s][n].budget + per_state[s][n - 1].budget);
      lower_pruned += w * per_state[s][n].pruned_mass;
    }
    auto& r = rows[n - 1];
    r.L_n = lower.value();
    r.budget += lower_budget.value() + skipped * lg;
    r.pruned_mass = std::max(r.pruned_mass, lower_pruned.value());
  }
  return rows;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t batches = 0;
  bool nonconvergent = false;  // no B1 verdict for the model
};

/// Simulates the filter from pi, discards burn_in steps and averages the
/// one-step entropy over `samples` steps. Standard error by batch means over
/// 32 batches.
inline MonteCarloEstimate entropy_rate_mc(const Partition& m, const ProbVector& pi, std::size_t burn_in,
                                          std::size_t samples, std::uint64_t seed, bool check_stability = true) {
  constexpr std::size_t kBatches = 32;
  if (samples < kBatches) throw InvariantError("at least 32 samples for batch means", std::to_string(samples));
  MonteCarloEstimate out;
  if (check_stability) out.nonconvergent = condition_B1_detect(m).kind != VerdictKind::b1_converged;
  const auto trace = simulate_filter(pi, m, burn_in + samples, seed);
  const std::size_t per = samples / kBatches;
  std::vector<double> means;
  KahanSum total;
  std::size_t used = 0;
  for (std::size_t b = 0; b < kBatches; ++b) {
    KahanSum s;
    for (std::size_t t = 0; t < per; ++t) {
      const double v = one_step_entropy(trace.steps[burn_in + b * per + t].state.coords(), m);
      s += v;
      total += v;
      ++used;
    }
    means.push_back(s.value() / static_cast<double>(per));
  }
  out.estimate = total.value() / static_cast<double>(used);
  double var = 0.0;
  for (double mu : means) var += (mu - out.estimate) * (mu - out.estimate);
  var /= static_cast<double>(kBatches - 1);
  out.std_error = std::sqrt(var / static_cast<double>(kBatches));
  out.batches = kBatches;
  return out;
}

struct EntropyConditionReport {
  double value = 0.0;  // nats; a sampled lower estimate of the supremum
  ProbVector argmax;
  std::size_t points = 0;
};

/// max over sampled x of -sum_w ||xM(w)|| ln ||xM(w)||, over all vertices of
/// K plus `sample_count` uniform random points.
inline EntropyConditionReport check_entropy_condition(const Partition& m, std::size_t sample_count,
                                                      std::uint64_t seed) {
  const std::size_t n = m.states();
  Rng rng(seed);
  EntropyConditionReport rep;
  rep.value = -1.0;
  auto consider = [&](const ProbVector& x) {
    const double v = one_step_entropy(x.coords(), m) * std::numbers::ln2;
    ++rep.points;
    if (v > rep.value) {
      rep.value = v;
      rep.argmax = x;
    }
  };
  for (std::size_t i = 0; i < n; ++i) consider(ProbVector::vertex(n, i));
  for (std::size_t s = 0; s < sample_count; ++s) consider(ProbVector::normalized(rng.simplex_point(n)));
  return rep;
}

}  // namespace partfilter
