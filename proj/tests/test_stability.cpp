#include <gtest/gtest.h>

#include "support/generators.hpp"

using namespace partfilter;

namespace {

bool brute_subrectangular(const NonnegMatrix& m) {
  for (std::size_t i1 = 0; i1 < m.rows(); ++i1)
    for (std::size_t i2 = 0; i2 < m.rows(); ++i2)
      for (std::size_t j1 = 0; j1 < m.cols(); ++j1)
        for (std::size_t j2 = 0; j2 < m.cols(); ++j2)
          if (m.at(i1, j1) > 0 && m.at(i2, j2) > 0 && !(m.at(i1, j2) > 0 && m.at(i2, j1) > 0)) return false;
  return true;
}

// rows of the normalized product within tol of the rows of W
void expect_b1_limit(const Partition& m, const StabilityVerdict& v, double tol) {
  ASSERT_EQ(v.kind, VerdictKind::b1_converged);
  ASSERT_TRUE(v.W && v.word);
  const auto prod = matrix_word_product(m, *v.word);
  const auto x = prod.scaled(1.0 / operator_norm(prod));
  EXPECT_NEAR(operator_norm(*v.W), 1.0, 1e-12);
  EXPECT_LE(rank1_proximity(*v.W), 1e-12);
  const auto dx = x.to_dense(), dw = v.W->to_dense();
  for (std::size_t i = 0; i < m.states(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < m.states(); ++j) d += std::abs(dx[i * m.states() + j] - dw[i * m.states() + j]);
    EXPECT_LE(d, tol) << "row " << i;
  }
}

}  // namespace

TEST(Subrectangular, Examples) {
  EXPECT_TRUE(is_subrectangular(NonnegMatrix::from_rows({{1, 1}, {0, 0}})));
  EXPECT_FALSE(is_subrectangular(NonnegMatrix::identity(2)));
  EXPECT_TRUE(is_subrectangular(NonnegMatrix::from_rows({{1, 2}, {3, 4}})));
}

TEST(Subrectangular, AgreesWithQuantifierDefinition) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 1 + rng.index(8), c = 1 + rng.index(8);
    std::vector<double> d(r * c);
    const double density = rng.uniform();
    for (auto& v : d) v = rng.uniform() < density ? 1.0 : 0.0;
    if (rng.uniform() < 0.3) {  // force a product pattern now and then
      std::vector<char> rows(r), cols(c);
      for (auto& v : rows) v = rng.uniform() < 0.5;
      for (auto& v : cols) v = rng.uniform() < 0.5;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] = rows[i] && cols[j];
    }
    auto m = NonnegMatrix::from_dense(r, c, d);
    EXPECT_EQ(is_subrectangular(m), brute_subrectangular(m));
  }
}

TEST(ConditionA, TrivialPositiveChain) {
  Rng rng(2);
  auto p = pftest::random_positive_transition(rng, 5);
  auto s = condition_A_search(trivial_partition(p), 4);
  ASSERT_TRUE(s.word);
  EXPECT_EQ(s.word->size(), 1u);
}

TEST(ConditionA, IdentityLumpingLengthOne) {
  Rng rng(3);
  auto model = identity_lumped_model(pftest::random_transition(rng, 6));
  auto s = condition_A_search(model.partition(), 4);
  ASSERT_TRUE(s.word);
  EXPECT_EQ(s.word->size(), 1u);
}

TEST(ConditionA, KestenHasNone) {
  auto s = condition_A_search(kesten_model().partition(), 8);
  EXPECT_FALSE(s.word);
  EXPECT_FALSE(s.budget_exhausted);
  // Exhaustive oracle over all 2^1 + ... + 2^8 words.
  const auto kesten = kesten_model();
  const auto& m = kesten.partition();
  for (std::size_t len = 1; len <= 8; ++len)
    for (std::size_t code = 0; code < (1u << len); ++code) {
      Word w;
      for (std::size_t b = 0; b < len; ++b) w.push_back((code >> b) & 1u);
      auto prod = matrix_word_product(m, w);
      EXPECT_FALSE(!prod.is_zero() && brute_subrectangular(prod));
    }
}

TEST(ConditionA, BudgetReported) {
  auto s = condition_A_search(kesten_model().partition(), 8, 3);
  EXPECT_TRUE(s.budget_exhausted);
  EXPECT_FALSE(s.word);
}

TEST(Localizing, Examples) {
  Rng rng(4);
  auto p = pftest::random_transition(rng, 6);
  auto il = localizing_search(identity_lumped_model(p).partition(), 3, 1);
  ASSERT_TRUE(il.word);
  EXPECT_EQ(il.word->size(), 1u);
  auto pos = pftest::random_positive_transition(rng, 6);
  EXPECT_FALSE(localizing_search(trivial_partition(pos), 6, default_col_bound(6)).word);
}

TEST(Localizing, RandomWalkNeedsHalfTheColumns) {
  const std::size_t n = 16;
  auto rw = random_walk_model(RandomWalkParams::case_a(n));
  EXPECT_FALSE(localizing_search(rw.partition(), 10, default_col_bound(n)).word);
  auto s = localizing_search(rw.partition(), 10, n / 2);
  ASSERT_TRUE(s.word);
  EXPECT_EQ(matrix_word_product(rw.partition(), *s.word).nonzero_columns().size(), n / 2);
}

TEST(Rank1Proximity, Examples) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) t.push_back({i, j, (i + 1.0) * (j + 2.0)});
  EXPECT_NEAR(rank1_proximity(NonnegMatrix::from_triplets(3, 3, t)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(rank1_proximity(NonnegMatrix::identity(2)), 2.0);
  EXPECT_THROW(rank1_proximity(NonnegMatrix(2, 2)), InvariantError);
}

TEST(Rank1Proximity, PowersOfPrimitiveMatrixDecrease) {
  Rng rng(5);
  auto p = pftest::random_transition(rng, 6, 0.5);
  ASSERT_TRUE(check_irreducible_aperiodic(p).aperiodic);
  NonnegMatrix pn = p.matrix();
  double prev = rank1_proximity(pn);
  for (int n = 2; n <= 30; ++n) {
    pn = multiply(pn, p.matrix());
    const double cur = rank1_proximity(pn);
    EXPECT_LE(cur, prev + 1e-15);
    prev = cur;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(ConditionB1, RandomWalkCaseA) {
  auto rw = random_walk_model(RandomWalkParams::case_a());
  const auto& m = rw.partition();
  auto v = condition_B1_detect(m);
  ASSERT_EQ(v.kind, VerdictKind::b1_converged);
  EXPECT_EQ(v.policy, "repeat");
  EXPECT_EQ(m.labels_of(Word(v.word->begin(), v.word->begin() + 2)), (std::vector<std::string>{"1", "2"}));
  expect_b1_limit(m, v, 1e-6);

  // W rows proportional to the Perron left vector q of the even block of
  // M(1)M(2), found by plain dense power iteration.
  const std::size_t n = m.states();
  const auto g = pftest::dense_multiply(m[0].to_dense(), m[1].to_dense(), n);
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < n; i += 2) q[i] = 1.0;
  for (int it = 0; it < 5000; ++it) {
    std::vector<double> nq(n, 0.0);
    for (std::size_t i = 0; i < n; i += 2)
      for (std::size_t j = 0; j < n; j += 2) nq[j] += q[i] * g[i * n + j];
    const double s = std::accumulate(nq.begin(), nq.end(), 0.0);
    for (auto& x : nq) x /= s;
    q = nq;
  }
  const auto w = v.W->to_dense();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w[i * n + j];
    if (s < 1e-9) continue;
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += std::abs(w[i * n + j] / s - q[j]);
    EXPECT_LE(d, 1e-5) << "row " << i;
  }
}

TEST(ConditionB1, RandomWalkRowMassesAfterOneRound) {
  const double b0 = 1.0 / 3.0;
  auto rw = random_walk_model(RandomWalkParams::case_a(32));
  const auto& m = rw.partition();
  const auto g = multiply(m[0], m[1]);
  // Away from the top boundary, where the fold changes the neighbours.
  for (std::size_t i = 1; i + 2 < 32; ++i) {
    const double want = (i % 2 == 0) ? (1 - b0) * (1 - b0) : b0 * (1 - b0);
    EXPECT_NEAR(g.row_sum(i), want, 1e-15) << "state " << i;
  }
}

TEST(ConditionB1, RandomWalkCaseBConcentratesOnI0) {
  auto rw = random_walk_model(RandomWalkParams::case_b());
  auto v = condition_B1_detect(rw.partition());
  expect_b1_limit(rw.partition(), v, 1e-6);
  EXPECT_EQ(v.W->nonzero_columns(), std::vector<std::size_t>{3});
}

TEST(ConditionB1, KestenUndecided) {
  B1Options opt;
  opt.max_word_len = 12;
  auto v = condition_B1_detect(kesten_model().partition(), opt);
  EXPECT_EQ(v.kind, VerdictKind::undecided);
  EXPECT_NEAR(v.proximity, 2.0, 1e-12);
  EXPECT_GT(v.budget_spent, 0u);
}

TEST(ConditionB1, BudgetExhaustionIsUndecided) {
  B1Options opt;
  opt.budget = 5;
  auto v = condition_B1_detect(random_walk_model(RandomWalkParams::case_a()).partition(), opt);
  EXPECT_EQ(v.kind, VerdictKind::undecided);
}

TEST(RankOneWitness, IdentityLumpedPrimitiveChains) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = pftest::random_transition(rng, 2 + rng.index(8), 0.5);
    const auto cs = check_irreducible_aperiodic(p);
    if (!cs.irreducible || !cs.aperiodic) continue;
    auto model = identity_lumped_model(p);
    auto w = theorem93_witness(model.partition(), 4);
    ASSERT_TRUE(w.success) << w.reason;
    EXPECT_LE(rank1_proximity(*w.W), 1e-12);
    // The constructed word, repeated, is detected as B1 as well.
    B1Options opt;
    opt.repeat_max_len = 0;
    opt.max_word_len = 0;
    auto prod = matrix_word_product(model.partition(), w.word);
    EXPECT_LE(rank1_proximity(prod.scaled(1.0 / operator_norm(prod)), 1e-12), 1e-9);
  }
}

TEST(RankOneWitness, KestenFails) {
  auto w = theorem93_witness(kesten_model().partition(), 8);
  EXPECT_FALSE(w.success);
  EXPECT_NE(w.reason.find("subrectangular"), std::string::npos);
}

TEST(RankOneWitness, RandomWalkHasNoSubrectangularWord) {
  auto w = theorem93_witness(random_walk_model(RandomWalkParams::case_a(16)).partition(), 10);
  EXPECT_FALSE(w.success);
}

TEST(RankOneWitness, RequiresPrimitiveBase) {
  auto swap = TransitionMatrix(NonnegMatrix::from_rows({{0, 1}, {1, 0}}));
  EXPECT_THROW(theorem93_witness(trivial_partition(swap), 3), InvariantError);
}

TEST(NonStabilityCheck, KestenPasses) {
  Theorem11Options opt;
  opt.n_max = 8;
  opt.orbit_start = kesten_start();
  auto r = theorem11_check(kesten_model().partition(), {0, 1, 2, 3}, opt);
  EXPECT_TRUE(r.pass()) << r.witness;
  EXPECT_EQ(r.orbit_size, 8u);
  EXPECT_NEAR(r.epsilon0, 0.4, 1e-12);
}

TEST(NonStabilityCheck, IdentityLumpingFailsIsometry) {
  Rng rng(7);
  auto model = identity_lumped_model(pftest::random_positive_transition(rng, 4));
  auto r = theorem11_check(model.partition(), {0, 1, 2});
  EXPECT_FALSE(r.isometric);
  EXPECT_FALSE(r.witness.empty());
}

TEST(NonStabilityCheck, SubsetValidated) {
  EXPECT_THROW(theorem11_check(kesten_model().partition(), {0}), InvariantError);
  EXPECT_THROW(theorem11_check(kesten_model().partition(), {0, 9}), InvariantError);
}

TEST(NonStabilityCheck, OrbitSeparationSinglePoint) {
  auto p = TransitionMatrix(NonnegMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_TRUE(std::isinf(orbit_separation(ProbVector({0.5, 0.5}), trivial_partition(p), 5)));
}

TEST(NonStabilityCheck, KestenDistanceStaysApart) {
  auto k = kesten_model();
  const auto x0 = kesten_start();
  const double eps0 = orbit_separation(x0, k.partition(), 8);
  std::vector<double> y(x0.values());
  y[0] += eps0 / 4;
  y[1] -= eps0 / 4;
  const ProbVector y0(y);
  EXPECT_NEAR(l1_distance(x0, y0), eps0 / 2, 1e-15);
  for (std::size_t n = 1; n <= 12; ++n) {
    const double d = kantorovich_distance(evolve(x0, k.partition(), n).measure, evolve(y0, k.partition(), n).measure)
                         .distance;
    EXPECT_GE(d, eps0 / 2 - 1e-9) << "n = " << n;
  }
}
