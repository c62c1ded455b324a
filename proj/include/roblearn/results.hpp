#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roblearn/boosting.hpp"
#include "roblearn/core.hpp"
#include "roblearn/redaction.hpp"

namespace roblearn {

using Json = nlohmann::json;

inline Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "expected a numeric array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorCode::ParseError, "expected a numeric array");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Json to_json(const LinearModel& m) { return Json{{"w", vector_to_json(m.w)}, {"bias", m.bias}}; }

inline LinearModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("w")) fail(ErrorCode::ParseError, "model document needs a 'w' array");
  LinearModel m(vector_from_json(j.at("w")), j.value("bias", 0.0));
  if (m.dim() < 1) fail(ErrorCode::ParseError, "model has empty weight vector");
  return m;
}

inline Json to_json(const PerturbationSpec& U) {
  if (const auto* b = std::get_if<LpBall>(&U)) {
    Json j{{"kind", "lp_ball"}, {"gamma", b->gamma}};
    if (std::isinf(b->p)) j["p"] = "inf";
    else j["p"] = b->p;
    return j;
  }
  if (const auto* o = std::get_if<FiniteOffsets>(&U)) {
    Json a = Json::array();
    for (const auto& v : o->offsets) a.push_back(vector_to_json(v));
    return Json{{"kind", "finite_offsets"}, {"offsets", a}};
  }
  Json pts = Json::object();
  for (const auto& [i, list] : std::get<FinitePerExample>(U).points) {
    Json a = Json::array();
    for (const auto& v : list) a.push_back(vector_to_json(v));
    pts[std::to_string(i)] = a;
  }
  return Json{{"kind", "finite_per_example"}, {"points", pts}};
}

inline Json to_json(const Cascade& c) {
  Json stages = Json::array();
  for (const auto& s : c.stages) stages.push_back(Json{{"model", to_json(s.model)}, {"abstain", to_json(s.abstain_spec)}});
  return Json{{"stages", stages}, {"fallback", to_json(c.fallback)}};
}

inline Json to_json(const SelectionSet& S) {
  Json j{{"h", to_json(S.h)}, {"mode", S.mode == SelectionMode::Rejectron ? "rejectron" : "urejectron"}};
  Json d = Json::array();
  for (const auto& c : S.discriminators) d.push_back(to_json(c));
  Json p = Json::array();
  for (const auto& [a, b] : S.pairs) p.push_back(Json::array({to_json(a), to_json(b)}));
  j["discriminators"] = d;
  j["pairs"] = p;
  return j;
}

inline SelectionSet selection_from_json(const Json& j) {
  SelectionSet S;
  S.h = model_from_json(j.at("h"));
  S.mode = j.at("mode").get<std::string>() == "rejectron" ? SelectionMode::Rejectron : SelectionMode::URejectron;
  for (const auto& c : j.at("discriminators")) S.discriminators.push_back(model_from_json(c));
  for (const auto& p : j.at("pairs")) S.pairs.emplace_back(model_from_json(p.at(0)), model_from_json(p.at(1)));
  return S;
}

template <class H>
Json to_json(const MajorityVote<H>& v) {
  Json a = Json::array();
  for (const auto& m : v.members) a.push_back(to_json(m));
  return Json{{"members", a}};
}

inline std::string dump_document(const Json& doc) { return doc.dump(2) + "\n"; }

inline void save_results(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << dump_document(doc);
  if (!out) fail(ErrorCode::IoError, "write to '" + path + "' failed");
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

}  // namespace roblearn
