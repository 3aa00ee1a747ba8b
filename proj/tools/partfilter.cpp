#include <CLI11.hpp>
#include <partfilter/io.hpp>
#include <partfilter/partfilter.hpp>

#include <iostream>
#include <sstream>

using namespace partfilter;
using io::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUndecided = 2;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvariantError("comma-separated numeric list", text);
    out.push_back(v);
  }
  return out;
}

ProbVector default_start(const FilterModel& model) {
  if (model.stationary()) return *model.stationary();
  try {
    return stationary_vector(model.base());
  } catch (const Error&) {
    return ProbVector(std::vector<double>(model.states(), 1.0 / static_cast<double>(model.states())));
  }
}

ProbVector start_vector(const FilterModel& model, const std::string& x0) {
  if (x0.empty()) return default_start(model);
  auto v = parse_list(x0);
  if (v.size() != model.states()) throw InvariantError("x0 has one coordinate per state", x0);
  return ProbVector(std::move(v));
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    io::write_text(out, text);
}

json word_json(const Partition& m, const std::optional<Word>& w) {
  if (!w) return nullptr;
  return m.labels_of(*w);
}

struct SimulateArgs {
  std::string model, x0, out;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  const auto model = io::model_from_json(io::read_json(a.model));
  const auto trace = simulate_filter(start_vector(model, a.x0), model.partition(), a.steps, a.seed);
  emit(a.out, io::trace_csv(trace));
  return kOk;
}

struct EvolveArgs {
  std::string model, x0, out;
  std::size_t steps = 1;
  double prune = kDefaultPrune;
};

int run_evolve(const EvolveArgs& a) {
  const auto model = io::model_from_json(io::read_json(a.model));
  const auto r = evolve(start_vector(model, a.x0), model.partition(), a.steps, a.prune);
  auto j = io::measure_to_json(r.measure);
  j["pruned_mass"] = r.pruned_mass;
  emit(a.out, j.dump(2) + "\n");
  return kOk;
}

struct DistanceArgs {
  std::string mu, nu, plan;
};

int run_distance(const DistanceArgs& a) {
  const auto mu = io::measure_from_json(io::read_json(a.mu));
  const auto nu = io::measure_from_json(io::read_json(a.nu));
  const auto r = kantorovich_distance(mu, nu);
  std::cout << format_significant(r.distance, 12) << "\n";
  if (!a.plan.empty()) io::write_json(a.plan, io::plan_to_json(r));
  return kOk;
}

struct CheckArgs {
  std::string model, condition, subset, out;
  std::optional<std::size_t> max_word_len;
  std::optional<double> tol;
  std::uint64_t seed = 0;
};

int run_check(const CheckArgs& a) {
  const auto model = io::model_from_json(io::read_json(a.model));
  const Partition& m = model.partition();
  json v{{"condition", a.condition}};
  bool decided = false;
  if (a.condition == "a" || a.condition == "localizing") {
    const std::size_t len = a.max_word_len.value_or(8);
    const auto s = a.condition == "a" ? condition_A_search(m, len)
                                      : localizing_search(m, len, default_col_bound(m.states()));
    decided = s.word.has_value();
    v["verdict"] = decided ? "found" : "undecided";
    v["word"] = word_json(m, s.word);
    v["products"] = s.products;
    v["budget_exhausted"] = s.budget_exhausted;
    v["max_word_len"] = len;
  } else if (a.condition == "b1") {
    B1Options opt;
    if (a.tol) opt.tol = *a.tol;
    opt.max_word_len = a.max_word_len;
    const auto r = condition_B1_detect(m, opt);
    decided = r.kind == VerdictKind::b1_converged;
    v["verdict"] = to_string(r.kind);
    v["policy"] = r.policy;
    v["word"] = word_json(m, r.word);
    v["proximity"] = r.proximity;
    v["budget_spent"] = r.budget_spent;
    v["iterations"] = r.curve.size();
    if (r.W) v["W"] = io::detail::triplets_json(*r.W);
  } else if (a.condition == "thm93") {
    const auto r = theorem93_witness(m, a.max_word_len.value_or(8), a.tol.value_or(1e-9));
    decided = r.success;
    v["verdict"] = r.success ? "b1_converged" : "undecided";
    v["reason"] = r.reason;
    if (r.success) {
      v["a"] = m.labels_of(r.a);
      v["b"] = m.labels_of(r.b);
      v["c"] = m.labels_of(r.c);
      v["d"] = m.labels_of(r.d);
      v["word"] = m.labels_of(r.word);
      v["iterations"] = r.iterations;
      v["proximity"] = r.proximity;
    }
  } else if (a.condition == "thm11") {
    if (a.subset.empty()) throw InvariantError("thm11 needs --subset", "");
    std::vector<std::size_t> subset;
    for (double s : parse_list(a.subset)) {
      if (s < 1 || s != std::floor(s)) throw InvariantError("subset lists 1-based state numbers", a.subset);
      subset.push_back(static_cast<std::size_t>(s) - 1);
    }
    Theorem11Options opt;
    if (a.max_word_len) opt.n_max = *a.max_word_len;
    if (a.tol) opt.tol = *a.tol;
    opt.seed = a.seed;
    const auto r = theorem11_check(m, subset, opt);
    decided = r.pass();
    v["verdict"] = r.pass() ? "pass" : "fail";
    v["isolated"] = r.isolated;
    v["same_words"] = r.same_words;
    v["isometric"] = r.isometric;
    v["epsilon0"] = r.epsilon0;
    v["orbit_size"] = r.orbit_size;
    v["pairs_checked"] = r.pairs_checked;
    v["words_checked"] = r.words_checked;
    v["witness"] = r.witness;
  } else {
    throw InvariantError("condition is one of a, b1, localizing, thm93, thm11", a.condition);
  }
  emit(a.out, v.dump(2) + "\n");
  return decided ? kOk : kUndecided;
}

RandomWalkParams random_walk_params(const json& p) {
  const auto n = p.value("n", std::size_t{64});
  RandomWalkParams r;
  if (p.contains("a") || p.contains("b") || p.contains("c")) {
    r.n = n;
    r.a = p.at("a").get<std::vector<double>>();
    r.b = p.at("b").get<std::vector<double>>();
    r.c = p.at("c").get<std::vector<double>>();
  } else if (p.value("case", std::string("a")) == "b") {
    r = RandomWalkParams::case_b(n, p.value("i0", std::size_t{3}), p.value("b_i0", 0.6), p.value("a_i0", 0.25),
                                 p.value("c_i0", 0.15));
  } else {
    r = RandomWalkParams::case_a(n);
  }
  const auto boundary = p.value("boundary", std::string("fold_down"));
  if (boundary != "fold_down" && boundary != "hold") throw InvariantError("boundary is fold_down or hold", boundary);
  r.boundary = boundary == "hold" ? Boundary::hold : Boundary::fold_down;
  return r;
}

PermFamilySpec perm_family_params(const json& p) {
  if (p.empty()) return kesten_perm_family_spec();
  const auto base = io::model_from_json(p.at("base"));
  PermFamilySpec spec{base.partition(), p.at("d").get<std::size_t>(), {}};
  for (const auto& e : p.at("q")) {
    if (!e.is_array() || e.size() != 4) throw InvariantError("q entries are [i, k, label, permutation]", e.dump());
    const auto w = spec.m.word_from_labels({io::detail::label_from(e[2])}).front();
    spec.q[{e[0].get<std::size_t>(), e[1].get<std::size_t>(), w}] = e[3].get<Permutation>();
  }
  return spec;
}

FilterModel birkhoff_params(const json& p) {
  if (!p.contains("matrix")) throw InvariantError("birkhoff params give a dense matrix", "");
  const auto rows = p.at("matrix").get<std::vector<std::vector<double>>>();
  const auto d = NonnegMatrix::from_rows(rows);
  const auto terms = birkhoff_decompose(d, p.value("tol", 1e-9));
  return FilterModel(birkhoff_partition(TransitionMatrix(d), terms), ModelMeta{{"model", "birkhoff"}});
}

struct GalleryArgs {
  std::string name, params, out;
};

int run_gallery(const GalleryArgs& a) {
  json p = a.params.empty() ? json::object() : io::read_json(a.params);
  if (!p.is_object()) throw InvariantError("params file holds a JSON object", "");
  FilterModel model = [&] {
    if (a.name == "kesten") return kesten_model();
    if (a.name == "random-walk") return random_walk_model(random_walk_params(p));
    if (a.name == "perm-family") return perm_family_model(perm_family_params(p));
    return birkhoff_params(p);
  }();
  emit(a.out, io::model_to_json(model).dump(2) + "\n");
  return kOk;
}

struct EntropyArgs {
  std::string model, out;
  std::size_t horizon = 5;
  double prune = kDefaultPrune;
  bool bracket = false;
  std::vector<std::string> mc;
};

int run_entropy(const EntropyArgs& a) {
  const auto model = io::model_from_json(io::read_json(a.model));
  const auto pi = default_start(model);
  const auto rows = entropy_bracket(model.partition(), pi, a.horizon, a.prune);
  std::string csv = "n,H_n,H_R_n,L_n,U_n,pruned_mass\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.n);
    for (double v : {r.H_n, r.H_R_n, r.L_n, r.U_n, r.pruned_mass}) csv += "," + format_roundtrip(v);
    csv += "\n";
  }
  emit(a.out, csv);
  if (a.bracket) {
    const auto& last = rows.back();
    json s{{"n", last.n}, {"L_n", last.L_n}, {"U_n", last.U_n}, {"gap", last.U_n - last.L_n},
           {"budget", last.budget}};
    std::cerr << json{{"bracket", s}}.dump() << "\n";
  }
  if (!a.mc.empty()) {
    std::size_t samples = 0, burn = 0;
    std::uint64_t seed = 0;
    for (const auto& tok : a.mc) {
      std::stringstream ss(tok);
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvariantError("--mc takes key=value pairs", kv);
        const auto key = kv.substr(0, eq);
        const auto val = std::stoull(kv.substr(eq + 1));
        if (key == "samples")
          samples = val;
        else if (key == "burn")
          burn = val;
        else if (key == "seed")
          seed = val;
        else
          throw InvariantError("--mc keys are samples, burn, seed", key);
      }
    }
    const auto r = entropy_rate_mc(model.partition(), pi, burn, samples, seed);
    json s{{"estimate", r.estimate}, {"std_error", r.std_error}, {"batches", r.batches},
           {"nonconvergent", r.nonconvergent}};
    std::cerr << json{{"mc", s}}.dump() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtering processes of partitioned Markov chains"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (default $PARTFILTER_THREADS or 1)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "sample one filter path, CSV trace");
  s->add_option("--model", sim.model)->required();
  s->add_option("--steps", sim.steps)->required();
  s->add_option("--seed", sim.seed);
  s->add_option("--x0", sim.x0, "comma-separated start vector (default: stationary)");
  s->add_option("--out", sim.out);

  EvolveArgs ev;
  auto* e = app.add_subcommand("evolve", "n-step distribution of the filter, measure JSON");
  e->add_option("--model", ev.model)->required();
  e->add_option("--steps", ev.steps);
  e->add_option("--x0", ev.x0);
  e->add_option("--prune", ev.prune);
  e->add_option("--out", ev.out);

  DistanceArgs di;
  auto* d = app.add_subcommand("distance", "exact Kantorovich distance between two measures");
  d->add_option("--mu", di.mu)->required();
  d->add_option("--nu", di.nu)->required();
  d->add_option("--plan", di.plan);

  CheckArgs ch;
  auto* c = app.add_subcommand("check", "stability diagnostics, JSON verdict");
  c->add_option("--model", ch.model)->required();
  c->add_option("--condition", ch.condition)
      ->required()
      ->check(CLI::IsMember({"a", "b1", "localizing", "thm93", "thm11"}));
  c->add_option("--max-word-len", ch.max_word_len);
  c->add_option("--tol", ch.tol);
  c->add_option("--subset", ch.subset, "1-based states, comma-separated");
  c->add_option("--seed", ch.seed);
  c->add_option("--out", ch.out);

  GalleryArgs ga;
  auto* g = app.add_subcommand("gallery", "write a gallery model");
  g->add_option("name", ga.name)->required()->check(CLI::IsMember({"kesten", "random-walk", "perm-family", "birkhoff"}));
  g->add_option("--params", ga.params);
  g->add_option("--out", ga.out);

  EntropyArgs en;
  auto* h = app.add_subcommand("entropy", "entropy-rate bracket, CSV");
  h->add_option("--model", en.model)->required();
  h->add_option("--horizon", en.horizon);
  h->add_option("--prune", en.prune);
  h->add_flag("--bracket", en.bracket, "report the final bracket on stderr");
  h->add_option("--mc", en.mc, "samples=K burn=B seed=S")->expected(1, 3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kInvalid;
  }
  if (threads > 0) set_thread_count(threads);

  try {
    if (*s) return run_simulate(sim);
    if (*e) return run_evolve(ev);
    if (*d) return run_distance(di);
    if (*c) return run_check(ch);
    if (*g) return run_gallery(ga);
    if (*h) return run_entropy(en);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}
