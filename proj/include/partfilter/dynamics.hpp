#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partfilter/measure.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/parallel.hpp"
#include "partfilter/partition.hpp"
#include "partfilter/test_function.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

/// One branch of the filter kernel from x: observing label w has probability
/// ||xM(w)|| and moves the filter to xM(w)/||xM(w)||.
struct Outcome {
  std::size_t member = 0;
  double prob = 0.0;
  ProbVector next;
};

struct StepResult {
  std::vector<Outcome> outcomes;
  double dropped_mass = 0.0;
};

/// All outcomes of one filter step with ||xM(w)|| > threshold, in member order.
inline StepResult step_outcomes(const ProbVector& x, const Partition& m, double threshold = 0.0) {
  if (x.size() != m.states()) throw InvariantError("vector lives on the partition's state space", "");
  StepResult out;
  KahanSum dropped;
  for (std::size_t k = 0; k < m.size(); ++k) {
    auto y = m[k].left_multiply(x.coords());
    const double mass = l1_norm(y);
    if (mass > threshold && mass > 0.0) {
      out.outcomes.push_back({k, mass, ProbVector::normalized(std::move(y))});
    } else {
      dropped += mass;
    }
  }
  out.dropped_mass = dropped.value();
  return out;
}

struct MeasureResult {
  DiscreteMeasure measure;
  double pruned_mass = 0.0;
};

/// The transition probability operator applied to a discrete measure:
/// each atom (a, x) spreads into (a * ||xM(w)||, xM(w)/||xM(w)||).
/// Candidates with joint mass <= prune are dropped and their mass reported;
/// the rest are merged within merge_eps and renormalized.
inline MeasureResult pushforward(const DiscreteMeasure& mu, const Partition& m, double prune = kDefaultPrune,
                                 double merge_eps = kDefaultMergeEps) {
  const auto& atoms = mu.atoms();
  auto branches = parallel_map(atoms.size(), [&](std::size_t a) { return step_outcomes(atoms[a].point, m, 0.0); });
  std::vector<Atom> candidates;
  KahanSum pruned;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    pruned += atoms[a].weight * branches[a].dropped_mass;
    for (auto& o : branches[a].outcomes) {
      const double w = atoms[a].weight * o.prob;
      if (w > prune)
        candidates.push_back({w, std::move(o.next)});
      else
        pruned += w;
    }
  }
  if (candidates.empty()) throw InvariantError("pushforward keeps positive mass", "all branches pruned");
  return {DiscreteMeasure::normalized(std::move(candidates), merge_eps), pruned.value()};
}

/// n-step kernel P^n(x, .) as a discrete measure; pruned mass accumulates
/// over the steps.
inline MeasureResult evolve(const ProbVector& x, const Partition& m, std::size_t n, double prune = kDefaultPrune,
                            double merge_eps = kDefaultMergeEps) {
  if (n == 0) throw InvariantError("evolve horizon n >= 1", "");
  MeasureResult cur{DiscreteMeasure::dirac(x), 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    auto next = pushforward(cur.measure, m, prune, merge_eps);
    next.pruned_mass += cur.pruned_mass;
    cur = std::move(next);
  }
  return cur;
}

/// T_M u(x) = sum over outcomes of prob * u(next).
inline double transition_operator(const TestFunction& u, const Partition& m, const ProbVector& x) {
  KahanSum s;
  for (const auto& o : step_outcomes(x, m).outcomes) s += o.prob * u(o.next.coords());
  return s.value();
}

/// T_M^n u(x) = <u, P^n(x, .)>.
inline double transition_operator(const TestFunction& u, const Partition& m, const ProbVector& x, std::size_t n,
                                  double prune = 0.0, double merge_eps = kDefaultMergeEps) {
  if (n == 0) return u(x.coords());
  return evolve(x, m, n, prune, merge_eps).measure.integrate([&](std::span<const double> y) { return u(y); });
}

/// The test function y -> T_M u(y).
inline TestFunction apply_transition(const TestFunction& u, const Partition& m) {
  return TestFunction([u, m](std::span<const double> y) {
    return transition_operator(u, m, ProbVector::normalized({y.begin(), y.end()}));
  });
}

struct TraceStep {
  std::string label;
  ProbVector state;
};

struct FilterTrace {
  ProbVector initial;
  std::vector<TraceStep> steps;
  std::uint64_t seed = 0;
};

/// Samples one path of the filtering process. Each step draws u in [0,1)
/// and picks the first outcome (member order) whose cumulative probability
/// exceeds u.
inline FilterTrace simulate_filter(const ProbVector& x0, const Partition& m, std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw InvariantError("simulation steps >= 1", "");
  Rng rng(seed);
  FilterTrace trace{x0, {}, seed};
  trace.steps.reserve(steps);
  ProbVector x = x0;
  for (std::size_t t = 0; t < steps; ++t) {
    auto step = step_outcomes(x, m);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t pick = step.outcomes.size() - 1;
    for (std::size_t k = 0; k < step.outcomes.size(); ++k) {
      cumulative += step.outcomes[k].prob;
      if (u < cumulative) {
        pick = k;
        break;
      }
    }
    x = step.outcomes[pick].next;
    trace.steps.push_back({m.label(step.outcomes[pick].member), x});
  }
  return trace;
}

}  // namespace partfilter
