#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "partfilter/dynamics.hpp"
#include "partfilter/error.hpp"
#include "partfilter/kantorovich.hpp"
#include "partfilter/measure.hpp"
#include "partfilter/model.hpp"
#include "partfilter/numeric.hpp"
#include "partfilter/partition.hpp"

namespace partfilter::io {

using json = nlohmann::ordered_json;

namespace detail {

inline json triplets_json(const NonnegMatrix& m) {
  json out = json::array();
  for (const auto& t : m.triplets()) out.push_back(json::array({t.row, t.col, t.value}));
  return out;
}

inline std::vector<Triplet> triplets_from(const json& j, const char* what) {
  if (!j.is_array()) throw InvariantError(std::string(what) + " is a list of [i, j, v] triplets", "");
  std::vector<Triplet> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
        !e[2].is_number())
      throw InvariantError(std::string(what) + " is a list of [i, j, v] triplets", e.dump());
    out.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
  }
  return out;
}

// Labels may be written as strings or numbers.
inline std::string label_from(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  if (j.is_number()) return format_roundtrip(j.get<double>());
  throw InvariantError("labels are strings or numbers", j.dump());
}

}  // namespace detail

inline json model_to_json(const FilterModel& model) {
  const Partition& m = model.partition();
  json j;
  j["states"] = m.states();
  j["P"] = detail::triplets_json(m.base().matrix());
  json part;
  if (const auto* lump = std::get_if<LumpingOrigin>(&m.origin())) {
    part["lumping"] = lump->labels;
  } else if (const auto* obs = std::get_if<ObservationOrigin>(&m.origin())) {
    json entries = json::array();
    for (const auto& e : obs->entries) entries.push_back(json::array({e.state, e.label, e.value}));
    part["observation"] = std::move(entries);
  } else {
    json explicit_members = json::object();
    for (const auto& mem : m.members()) explicit_members[mem.label] = detail::triplets_json(mem.matrix);
    part["explicit"] = std::move(explicit_members);
  }
  j["partition"] = std::move(part);
  if (!model.meta().empty()) j["meta"] = model.meta();
  return j;
}

inline FilterModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("states") || !j.contains("P") || !j.contains("partition"))
    throw InvariantError("model has states, P and partition", "");
  if (!j["states"].is_number_unsigned() || j["states"].get<std::size_t>() == 0)
    throw InvariantError("states >= 1", j["states"].dump());
  const auto n = j["states"].get<std::size_t>();
  TransitionMatrix p(NonnegMatrix::from_triplets(n, n, detail::triplets_from(j["P"], "P")));
  const json& part = j["partition"];
  std::optional<Partition> m;
  if (part.contains("lumping")) {
    std::vector<std::string> g;
    for (const auto& l : part["lumping"]) g.push_back(detail::label_from(l));
    m = partition_from_lumping(p, g);
  } else if (part.contains("observation")) {
    std::vector<ObservationEntry> entries;
    for (const auto& e : part["observation"]) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[2].is_number())
        throw InvariantError("observation is a list of [state, label, value]", e.dump());
      entries.push_back({e[0].get<std::size_t>(), detail::label_from(e[1]), e[2].get<double>()});
    }
    m = partition_from_observation(p, entries);
  } else if (part.contains("explicit")) {
    if (!part["explicit"].is_object()) throw InvariantError("explicit partition maps labels to triplets", "");
    std::vector<Member> members;
    for (const auto& [label, trip] : part["explicit"].items())
      members.push_back({label, NonnegMatrix::from_triplets(n, n, detail::triplets_from(trip, "member"))});
    m = Partition(p, std::move(members));
  } else {
    throw InvariantError("partition is lumping, observation or explicit", "");
  }
  ModelMeta meta;
  if (j.contains("meta"))
    for (const auto& [k, v] : j["meta"].items()) meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return FilterModel(std::move(*m), std::move(meta));
}

inline json measure_to_json(const DiscreteMeasure& mu) {
  json atoms = json::array();
  for (const auto& a : mu.atoms()) atoms.push_back({{"w", a.weight}, {"x", a.point.values()}});
  return {{"atoms", std::move(atoms)}};
}

inline DiscreteMeasure measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array())
    throw InvariantError("measure has an atoms list", "");
  std::vector<Atom> atoms;
  for (const auto& a : j["atoms"]) {
    if (!a.contains("w") || !a.contains("x")) throw InvariantError("atom has w and x", a.dump());
    atoms.push_back({a["w"].get<double>(), ProbVector(a["x"].get<std::vector<double>>())});
  }
  return DiscreteMeasure(std::move(atoms));
}

inline json plan_to_json(const KantorovichResult& r) {
  json entries = json::array();
  for (const auto& e : r.plan.entries) entries.push_back(json::array({e.source, e.target, e.mass}));
  return {{"distance", r.distance}, {"plan", std::move(entries)}};
}

inline json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed JSON: ") + e.what());
  }
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// step,label,x0,...,x{N-1}; step 0 is the initial state with an empty label.
inline std::string trace_csv(const FilterTrace& trace) {
  std::string out = "step,label";
  for (std::size_t i = 0; i < trace.initial.size(); ++i) out += ",x" + std::to_string(i);
  out += "\n";
  auto row = [&](std::size_t step, const std::string& label, const ProbVector& x) {
    out += std::to_string(step) + "," + label;
    for (double v : x.values()) out += "," + format_significant(v, 17);
    out += "\n";
  };
  row(0, "", trace.initial);
  for (std::size_t t = 0; t < trace.steps.size(); ++t) row(t + 1, trace.steps[t].label, trace.steps[t].state);
  return out;
}

}  // namespace partfilter::io
