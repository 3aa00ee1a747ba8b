// Kesten's 8-state example: the filter started at x0 never forgets a
// perturbation inside the first block.

#include <partfilter/partfilter.hpp>

#include <cstdio>

using namespace partfilter;

int main() {
  const auto k = kesten_model();
  const auto& m = k.partition();
  const auto x0 = kesten_start();

  std::vector<ProbVector> orbit;
  const double eps0 = orbit_separation(x0, m, 8, &orbit);
  std::printf("orbit of x0: %zu points, separation eps0 = %.6g\n", orbit.size(), eps0);

  const ProbVector y0({0.25, 0.25, 0.15, 0.35, 0.0, 0.0, 0.0, 0.0});
  std::printf("||x0 - y0|| = %.6g\n\n", l1_distance(x0, y0));
  std::printf("%4s %8s %14s\n", "n", "atoms", "d_K(x0, y0)");
  auto mx = DiscreteMeasure::dirac(x0), my = DiscreteMeasure::dirac(y0);
  for (std::size_t n = 1; n <= 20; ++n) {
    mx = pushforward(mx, m).measure;
    my = pushforward(my, m).measure;
    if (n <= 5 || n % 5 == 0)
      std::printf("%4zu %8zu %14.10f\n", n, mx.size(), kantorovich_distance(mx, my).distance);
  }

  Theorem11Options opt;
  opt.n_max = 8;
  opt.orbit_start = x0;
  const auto r = theorem11_check(m, {0, 1, 2, 3}, opt);
  std::printf("\nnon-stability check on states 1-4: %s (isolated %d, same words %d, isometric %d)\n",
              r.pass() ? "pass" : "fail", r.isolated, r.same_words, r.isometric);

  B1Options b1;
  b1.max_word_len = 12;
  const auto v = condition_B1_detect(m, b1);
  std::printf("rank-one detection: %s, best proximity %.3g after %zu products\n", to_string(v.kind), v.proximity,
              v.budget_spent);

  for (const auto& row : entropy_bracket(m, *k.stationary(), 4, 0.0))
    std::printf("entropy n=%zu: L=%.6f U=%.6f bits\n", row.n, row.L_n, row.U_n);
}
