#include <gtest/gtest.h>

#include <map>

#include "support/generators.hpp"

using namespace partfilter;

namespace {

Partition two_state_lumping() {
  return partition_from_lumping(TransitionMatrix(NonnegMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})), {"a", "b"});
}

// Same support within tol, matched greedily, with weights within tol.
void expect_same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  std::vector<char> used(b.size(), 0);
  for (const auto& x : a.atoms()) {
    bool found = false;
    for (std::size_t k = 0; k < b.size() && !found; ++k) {
      if (used[k] || l1_distance(x.point, b[k].point) > tol) continue;
      EXPECT_NEAR(x.weight, b[k].weight, tol);
      used[k] = 1;
      found = true;
    }
    EXPECT_TRUE(found);
  }
}

}  // namespace

TEST(StepOutcomes, TwoStateLumping) {
  auto s = step_outcomes(ProbVector({1.0, 0.0}), two_state_lumping());
  ASSERT_EQ(s.outcomes.size(), 2u);
  EXPECT_DOUBLE_EQ(s.outcomes[0].prob, 0.5);
  EXPECT_EQ(s.outcomes[0].next, ProbVector({1.0, 0.0}));
  EXPECT_EQ(s.outcomes[1].next, ProbVector({0.0, 1.0}));
}

TEST(StepOutcomes, TrivialPartitionIsDeterministic) {
  Rng rng(1);
  auto p = pftest::random_transition(rng, 5);
  auto x = pftest::random_point(rng, 5);
  auto s = step_outcomes(x, trivial_partition(p));
  ASSERT_EQ(s.outcomes.size(), 1u);
  EXPECT_NEAR(s.outcomes[0].prob, 1.0, 1e-12);
  EXPECT_LE(l1_distance(s.outcomes[0].next.values(), p.matrix().left_multiply(x.coords())), 1e-12);
}

TEST(StepOutcomes, MassesSumToOne) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = pftest::random_partition(rng, 12, 4);
    auto s = step_outcomes(pftest::random_point(rng, m.states()), m);
    double total = s.dropped_mass;
    for (const auto& o : s.outcomes) total += o.prob;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(StepOutcomes, ThresholdReportsDroppedMass) {
  auto p = TransitionMatrix(NonnegMatrix::from_rows({{0.99, 0.01}, {0.5, 0.5}}));
  auto s = step_outcomes(ProbVector({1.0, 0.0}), partition_from_lumping(p, {"a", "b"}), 0.05);
  ASSERT_EQ(s.outcomes.size(), 1u);
  EXPECT_NEAR(s.dropped_mass, 0.01, 1e-15);
}

TEST(Pushforward, DiracGivesStepOutcomes) {
  Rng rng(3);
  auto m = pftest::random_partition(rng, 6, 3);
  auto x = pftest::random_point(rng, m.states());
  auto mu = pushforward(DiscreteMeasure::dirac(x), m, 0.0, 0.0).measure;
  auto s = step_outcomes(x, m);
  std::vector<Atom> want;
  for (auto& o : s.outcomes) want.push_back({o.prob, o.next});
  expect_same_measure(mu, DiscreteMeasure::normalized(want), 1e-12);
}

TEST(Pushforward, BarycenterMovesByP) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = pftest::random_partition(rng, 8, 3);
    auto mu = pftest::random_measure(rng, m.states(), 5);
    auto next = pushforward(mu, m);
    auto want = m.base().matrix().left_multiply(barycenter(mu).coords());
    EXPECT_LE(l1_distance(barycenter(next.measure).values(), want), 1e-9);
  }
}

TEST(Pushforward, TwoStepsEqualProductPartition) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = pftest::random_partition(rng, 6, 3);
    auto mu = pftest::random_measure(rng, m.states(), 3);
    auto twice = pushforward(pushforward(mu, m, 0.0).measure, m, 0.0).measure;
    auto once = pushforward(mu, partition_product(m, m), 0.0).measure;
    expect_same_measure(twice, once, 1e-9);
  }
}

TEST(Evolve, OneStepIsStepOutcomes) {
  auto m = two_state_lumping();
  auto e = evolve(ProbVector({0.3, 0.7}), m, 1).measure;
  ASSERT_EQ(e.size(), 2u);
  EXPECT_NEAR(e[0].weight, 0.5, 1e-15);
  EXPECT_THROW(evolve(ProbVector({0.3, 0.7}), m, 0), InvariantError);
}

TEST(Evolve, IdentityLumpingCollapsesToVertices) {
  Rng rng(6);
  auto p = pftest::random_transition(rng, 4);
  auto model = identity_lumped_model(p);
  auto x = pftest::random_point(rng, 4);
  for (std::size_t n = 1; n <= 4; ++n) {
    auto e = evolve(x, model.partition(), n, 0.0).measure;
    // Oracle: x P^n by repeated products.
    std::vector<double> xn = x.values();
    for (std::size_t k = 0; k < n; ++k) xn = p.matrix().left_multiply(xn);
    std::map<std::size_t, double> weight;
    for (const auto& a : e.atoms()) {
      std::size_t vertex = 4;
      for (std::size_t i = 0; i < 4; ++i)
        if (a.point[i] == 1.0) vertex = i;
      ASSERT_LT(vertex, 4u);
      weight[vertex] += a.weight;
    }
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(weight[i], xn[i], 1e-12);
  }
}

TEST(Evolve, SemigroupAcrossSplits) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = pftest::random_partition(rng, 5, 2);
    auto x = pftest::random_point(rng, m.states());
    auto full = evolve(x, m, 4, 0.0).measure;
    auto split = pushforward(evolve(x, m, 1, 0.0).measure, partition_power(m, 3), 0.0).measure;
    expect_same_measure(full, split, 1e-9);
  }
}

TEST(Evolve, BarycenterIsXPn) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = pftest::random_partition(rng, 8, 3);
    auto x = pftest::random_point(rng, m.states());
    std::vector<double> xn = x.values();
    for (std::size_t n = 1; n <= 5; ++n) {
      xn = m.base().matrix().left_multiply(xn);
      EXPECT_LE(l1_distance(barycenter(evolve(x, m, n, 0.0).measure).values(), xn), 1e-9);
    }
  }
}

TEST(Evolve, FiberPreservedUnderStationaryBarycenter) {
  auto k = kesten_model();
  const auto& pi = *k.stationary();
  auto mu = vertex_measure(pi);
  for (std::size_t n = 1; n <= 4; ++n) {
    mu = pushforward(mu, k.partition()).measure;
    EXPECT_LE(l1_distance(barycenter(mu), pi), 1e-9);
  }
}

TEST(TransitionOperator, ConstantAndCoordinate) {
  Rng rng(9);
  auto m = pftest::random_partition(rng, 6, 3);
  auto x = pftest::random_point(rng, m.states());
  EXPECT_NEAR(transition_operator(TestFunction::constant(2.5), m, x), 2.5, 1e-12);
  const auto xp = m.base().matrix().left_multiply(x.coords());
  for (std::size_t i = 0; i < m.states(); ++i)
    EXPECT_NEAR(transition_operator(TestFunction::coordinate(m.states(), i), m, x), xp[i], 1e-12);
}

TEST(TransitionOperator, CompositionAndDuality) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = pftest::random_transition(rng, 4);
    auto m1 = pftest::random_explicit_partition(rng, p, 2);
    auto m2 = pftest::random_lumping_partition(rng, p, 3);
    auto u = pftest::random_affine_max(rng, 4);
    auto x = pftest::random_point(rng, 4);
    const double lhs = transition_operator(u, partition_product(m1, m2), x);
    const double rhs = transition_operator(apply_transition(u, m2), m1, x);
    EXPECT_NEAR(lhs, rhs, 1e-12);
    // <T u, mu> = <u, P mu>
    auto mu = pftest::random_measure(rng, 4, 4);
    auto tu = apply_transition(u, m1);
    const double a = mu.integrate([&](std::span<const double> y) { return tu(y); });
    const double b = pushforward(mu, m1, 0.0, 0.0).measure.integrate([&](std::span<const double> y) { return u(y); });
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(TransitionOperator, LipschitzBoundThree) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = pftest::random_partition(rng, 6, 3);
    auto u = pftest::random_affine_max(rng, m.states());
    auto x = pftest::random_point(rng, m.states()), y = pftest::random_point(rng, m.states());
    const std::size_t n = 1 + rng.index(3);
    const double d = std::abs(transition_operator(u, m, x, n) - transition_operator(u, m, y, n));
    EXPECT_LE(d, 3.0 * *u.lipschitz() * l1_distance(x, y) + 1e-9);
  }
}

TEST(TransitionOperator, PreservesConvexity) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = pftest::random_partition(rng, 6, 3);
    auto u = pftest::random_affine_max(rng, m.states());
    auto x = pftest::random_point(rng, m.states()), y = pftest::random_point(rng, m.states());
    const double lam = rng.uniform();
    std::vector<double> z(m.states());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = lam * x[i] + (1 - lam) * y[i];
    const double tz = transition_operator(u, m, ProbVector::normalized(z));
    EXPECT_LE(tz, lam * transition_operator(u, m, x) + (1 - lam) * transition_operator(u, m, y) + 1e-9);
  }
}

TEST(TestFunction, AffineLipschitzIsHalfRange) {
  AffinePiece v{{1.0, -1.0, 0.5}, 0.0};
  EXPECT_DOUBLE_EQ(v.lipschitz(), 1.0);
  EXPECT_DOUBLE_EQ(*TestFunction::coordinate(3, 1).lipschitz(), 0.5);
  // Attained on two vertices.
  ProbVector a = ProbVector::vertex(3, 0), b = ProbVector::vertex(3, 1);
  EXPECT_DOUBLE_EQ(std::abs(v(a.coords()) - v(b.coords())) / l1_distance(a, b), 1.0);
}

TEST(TestFunction, VertexBracket) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(5);
    auto u = pftest::random_affine_max(rng, n);
    auto mu = pftest::random_measure(rng, n, 6);
    auto q = barycenter(mu);
    const double at_q = u(q.coords());
    const double on_mu = mu.integrate([&](std::span<const double> y) { return u(y); });
    const double on_psi = vertex_measure(q).integrate([&](std::span<const double> y) { return u(y); });
    EXPECT_LE(at_q, on_mu + 1e-12);
    EXPECT_LE(on_mu, on_psi + 1e-12);
  }
}

TEST(Measure, BarycenterExamples) {
  ProbVector x({0.2, 0.8});
  EXPECT_EQ(barycenter(DiscreteMeasure::dirac(x)), x);
  auto mu = DiscreteMeasure({{0.5, ProbVector({1.0, 0.0})}, {0.5, ProbVector({0.0, 1.0})}});
  EXPECT_EQ(barycenter(mu), ProbVector({0.5, 0.5}));
  ProbVector q({0.1, 0.0, 0.6, 0.3});
  auto psi = vertex_measure(q);
  EXPECT_EQ(psi.size(), 3u);
  EXPECT_LE(l1_distance(barycenter(psi), q), 1e-15);
  EXPECT_EQ(vertex_measure(ProbVector::vertex(3, 2)).size(), 1u);
}

TEST(Measure, MergeKeepsHeavierAtom) {
  auto mu = DiscreteMeasure({{0.3, ProbVector({0.5, 0.5})}, {0.7, ProbVector({0.5 + 1e-12, 0.5 - 1e-12})}}, 1e-10);
  ASSERT_EQ(mu.size(), 1u);
  EXPECT_DOUBLE_EQ(mu[0].weight, 1.0);
  EXPECT_DOUBLE_EQ(mu[0].point[0], 0.5 + 1e-12);
}

TEST(Measure, RejectsZeroWeight) {
  EXPECT_THROW(DiscreteMeasure({{0.0, ProbVector({1.0})}}), InvariantError);
}

TEST(Normalization, RatioInequality) {
  Rng rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.index(6);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform() + 1e-3;
    const double na = l1_norm(a), nb = l1_norm(b);
    std::vector<double> an(a), bn(b);
    for (auto& v : an) v /= na;
    for (auto& v : bn) v /= nb;
    if (!(na > 0.0)) continue;
    EXPECT_LE(l1_distance(an, bn), 2.0 * l1_distance(a, b) / nb + 1e-12);
  }
}

TEST(Simulate, TrivialPartitionIsDeterministicOrbit) {
  Rng rng(15);
  auto p = pftest::random_transition(rng, 4);
  auto x = pftest::random_point(rng, 4);
  auto trace = simulate_filter(x, trivial_partition(p), 5, 99);
  std::vector<double> cur = x.values();
  for (const auto& s : trace.steps) {
    cur = p.matrix().left_multiply(cur);
    EXPECT_LE(l1_distance(s.state.values(), cur), 1e-12);
    EXPECT_EQ(s.label, "0");
  }
}

TEST(Simulate, SeedReproducible) {
  auto k = kesten_model();
  auto a = simulate_filter(kesten_start(), k.partition(), 100, 7);
  auto b = simulate_filter(kesten_start(), k.partition(), 100, 7);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t].label, b.steps[t].label);
    EXPECT_EQ(a.steps[t].state, b.steps[t].state);
  }
}

TEST(Simulate, FrequenciesMatchEvolve) {
  auto p = TransitionMatrix(NonnegMatrix::from_rows({{0.6, 0.4}, {0.3, 0.7}}));
  auto m = partition_from_observation(p, {{0, "a", 0.8}, {0, "b", 0.2}, {1, "a", 0.3}, {1, "b", 0.7}});
  ProbVector x0({0.5, 0.5});
  const std::size_t n = 3, runs = 100000;
  auto exact = evolve(x0, m, n, 0.0, 1e-12).measure;
  std::vector<double> hits(exact.size(), 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    auto t = simulate_filter(x0, m, n, 1000 + r);
    const auto& z = t.steps.back().state;
    for (std::size_t k = 0; k < exact.size(); ++k)
      if (l1_distance(z, exact[k].point) <= 1e-9) {
        hits[k] += 1.0;
        break;
      }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double pk = exact[k].weight, f = hits[k] / runs;
    const double sigma = std::sqrt(pk * (1 - pk) / runs);
    EXPECT_LE(std::abs(f - pk), 3.0 * sigma + 1e-12) << "atom " << k;
    total += hits[k];
  }
  EXPECT_EQ(total, static_cast<double>(runs));
}
