// Birth-death chain observed through the parity of its state.

#include <partfilter/partfilter.hpp>

#include <cstdio>

using namespace partfilter;

namespace {

void report(const char* name, const RandomWalkParams& params) {
  const auto model = random_walk_model(params);
  const auto& m = model.partition();
  std::printf("%s: %zu states, recurrence partial sum %s\n", name, model.states(),
              model.meta().at("recurrence_partial_sum").c_str());
  const auto v = condition_B1_detect(m);
  std::printf("  verdict %s via %s", to_string(v.kind), v.policy.c_str());
  if (v.word) {
    std::string w;
    for (const auto& l : m.labels_of(*v.word)) w += l;
    std::printf(", word %s", w.size() > 24 ? (w.substr(0, 24) + "...").c_str() : w.c_str());
  }
  std::printf(", proximity %.3g\n", v.proximity);
  for (std::size_t i = 0; i < v.curve.size(); i += std::max<std::size_t>(1, v.curve.size() / 6))
    std::printf("    iteration %4zu  proximity %.3e\n", i + 1, v.curve[i]);
  if (v.W) {
    std::printf("  limit columns:");
    const auto cols = v.W->nonzero_columns();
    for (std::size_t c = 0; c < std::min<std::size_t>(cols.size(), 10); ++c) std::printf(" %zu", cols[c]);
    if (cols.size() > 10) std::printf(" ... (%zu total)", cols.size());
    std::printf("\n");
  }
  const auto rows = entropy_bracket(m, *model.stationary(), 6);
  std::printf("  entropy bracket n=6: [%.6f, %.6f] bits\n\n", rows.back().L_n, rows.back().U_n);
}

}  // namespace

int main() {
  report("case A", RandomWalkParams::case_a(64));
  report("case B", RandomWalkParams::case_b(64));
}
