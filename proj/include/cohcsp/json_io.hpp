#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "cohcsp/presheaf.hpp"
#include "cohcsp/structure.hpp"

namespace cohcsp {

using json = nlohmann::ordered_json;

namespace detail {
inline json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

inline void require(bool cond, const std::string& message) {
  if (!cond) throw ParseError(message);
}

inline std::string name_at(const std::shared_ptr<const std::vector<std::string>>& names, int i) {
  return names ? (*names)[static_cast<std::size_t>(i)] : std::to_string(i);
}

inline Vocabulary parse_vocabulary(const json& doc) {
  require(doc.contains("vocabulary") && doc["vocabulary"].is_array(),
          "expected a \"vocabulary\" array");
  Vocabulary sigma;
  for (const auto& rel : doc["vocabulary"]) {
    require(rel.is_object() && rel.contains("name") && rel.contains("arity"),
            "vocabulary entries need \"name\" and \"arity\"");
    require(rel["name"].is_string() && rel["arity"].is_number_integer(),
            "vocabulary entry types: name string, arity integer");
    sigma.relations.push_back({rel["name"].get<std::string>(), rel["arity"].get<int>()});
  }
  return sigma;
}

inline std::vector<std::string> parse_universe(const json& doc) {
  require(doc.contains("universe") && doc["universe"].is_array(),
          "expected a \"universe\" array");
  std::vector<std::string> universe;
  for (const auto& e : doc["universe"]) {
    require(e.is_string(), "universe elements must be strings");
    universe.push_back(e.get<std::string>());
  }
  return universe;
}
}  // namespace detail

/// Parse the JSON structure format:
///   {"vocabulary": [{"name": "E", "arity": 2}],
///    "universe": ["0", "1"],
///    "relations": {"E": [["0", "1"], ["1", "0"]]}}
/// A relation key may be omitted for an empty relation. Element order is
/// taken from the document.
inline Structure parse_structure(const std::string& text) {
  json doc = detail::parse_document(text);
  detail::require(doc.is_object(), "expected a JSON object");
  Structure s;
  s.sigma = detail::parse_vocabulary(doc);
  s.universe = detail::parse_universe(doc);
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < s.universe.size(); ++i) {
    auto [it, fresh] = index.emplace(s.universe[i], static_cast<int>(i));
    detail::require(fresh, "duplicate universe element \"" + s.universe[i] + "\"");
  }
  s.tuples.resize(s.sigma.relations.size());
  if (doc.contains("relations")) {
    detail::require(doc["relations"].is_object(), "\"relations\" must be an object");
    for (const auto& [name, tuples] : doc["relations"].items()) {
      int r = s.sigma.index_of(name);
      detail::require(r >= 0, "unknown relation \"" + name + "\" in relations");
      detail::require(tuples.is_array(), "relation \"" + name + "\" must hold an array");
      int arity = s.sigma.relations[static_cast<std::size_t>(r)].arity;
      for (const auto& tup : tuples) {
        detail::require(tup.is_array() && static_cast<int>(tup.size()) == arity,
                        "relation \"" + name + "\": tuple arity mismatch");
        std::vector<int> t;
        for (const auto& e : tup) {
          detail::require(e.is_string(), "tuple elements must be strings");
          auto it = index.find(e.get<std::string>());
          detail::require(it != index.end(),
                          "unknown element \"" + e.get<std::string>() + "\" in relation \"" +
                              name + "\"");
          t.push_back(it->second);
        }
        s.tuples[static_cast<std::size_t>(r)].insert(std::move(t));
      }
    }
  }
  validate_structure(s);
  return s;
}

inline json structure_to_json(const Structure& s) {
  json doc;
  doc["vocabulary"] = json::array();
  for (const auto& rel : s.sigma.relations)
    doc["vocabulary"].push_back({{"name", rel.name}, {"arity", rel.arity}});
  doc["universe"] = s.universe;
  json rels = json::object();
  for (std::size_t r = 0; r < s.sigma.relations.size(); ++r) {
    json tuples = json::array();
    for (const auto& t : s.tuples[r]) {
      json tup = json::array();
      for (int e : t) tup.push_back(s.universe[static_cast<std::size_t>(e)]);
      tuples.push_back(std::move(tup));
    }
    rels[s.sigma.relations[r].name] = std::move(tuples);
  }
  doc["relations"] = std::move(rels);
  return doc;
}

/// Canonical serialization: vocabulary order from the structure, tuples in
/// sorted order, two-space indentation. parse(serialize(s)) == s bit-exactly
/// on re-serialization.
inline std::string serialize_structure(const Structure& s) {
  return structure_to_json(s).dump(2) + "\n";
}

/// Parse the linear-template format: the structure format keys plus
///   {"modulus": 2, "linear": {"E": {"coeffs": [1, 1], "const": 1}}}
/// "universe"/"relations" may be omitted; when present they must agree with
/// the expansion of the equations over Z_p.
inline LinearTemplate parse_template(const std::string& text) {
  json doc = detail::parse_document(text);
  detail::require(doc.is_object(), "expected a JSON object");
  detail::require(doc.contains("modulus") && doc["modulus"].is_number_integer(),
                  "expected an integer \"modulus\"");
  detail::require(doc.contains("linear") && doc["linear"].is_object(),
                  "expected a \"linear\" object");
  LinearTemplate t;
  t.modulus = doc["modulus"].get<int>();
  t.sigma = detail::parse_vocabulary(doc);
  t.shapes.resize(t.sigma.relations.size());
  std::vector<bool> seen(t.sigma.relations.size(), false);
  for (const auto& [name, shape] : doc["linear"].items()) {
    int r = t.sigma.index_of(name);
    detail::require(r >= 0, "unknown relation \"" + name + "\" in linear");
    detail::require(shape.is_object() && shape.contains("coeffs") && shape.contains("const"),
                    "linear shapes need \"coeffs\" and \"const\"");
    LinearEquationShape& sh = t.shapes[static_cast<std::size_t>(r)];
    for (const auto& c : shape["coeffs"]) {
      detail::require(c.is_number_integer(), "coefficients must be integers");
      sh.coeffs.push_back(c.get<int>());
    }
    detail::require(shape["const"].is_number_integer(), "\"const\" must be an integer");
    sh.constant = shape["const"].get<int>();
    seen[static_cast<std::size_t>(r)] = true;
  }
  for (std::size_t r = 0; r < seen.size(); ++r)
    detail::require(seen[r], "relation \"" + t.sigma.relations[r].name + "\" has no linear shape");
  validate_template(t);
  if (doc.contains("universe") || doc.contains("relations")) {
    Structure expanded = template_structure(t);
    Structure given;
    given.sigma = t.sigma;
    given.universe = detail::parse_universe(doc);
    detail::require(given.universe == expanded.universe,
                    "template universe must list 0..p-1 in order");
    json probe = doc;
    probe.erase("modulus");
    probe.erase("linear");
    Structure reparsed = parse_structure(probe.dump());
    detail::require(reparsed.tuples == expanded.tuples,
                    "template relations must equal the equation solution sets");
  }
  return t;
}

inline json template_to_json(const LinearTemplate& t) {
  json doc = structure_to_json(template_structure(t));
  doc["modulus"] = t.modulus;
  json linear = json::object();
  for (std::size_t r = 0; r < t.sigma.relations.size(); ++r)
    linear[t.sigma.relations[r].name] = {{"coeffs", t.shapes[r].coeffs},
                                         {"const", t.shapes[r].constant}};
  doc["linear"] = std::move(linear);
  return doc;
}

inline std::string serialize_template(const LinearTemplate& t) {
  return template_to_json(t).dump(2) + "\n";
}

/// Parse a linear-system description:
///   {"modulus": 2, "variables": ["x", "y"],
///    "equations": [{"vars": ["x", "y"], "coeffs": [1, 1], "const": 1}]}
inline LinearSystemSpec parse_linear_system(const std::string& text) {
  json doc = detail::parse_document(text);
  detail::require(doc.is_object(), "expected a JSON object");
  detail::require(doc.contains("modulus") && doc["modulus"].is_number_integer(),
                  "expected an integer \"modulus\"");
  detail::require(doc.contains("variables") && doc["variables"].is_array(),
                  "expected a \"variables\" array");
  detail::require(doc.contains("equations") && doc["equations"].is_array(),
                  "expected an \"equations\" array");
  LinearSystemSpec spec;
  spec.modulus = doc["modulus"].get<int>();
  for (const auto& v : doc["variables"]) {
    detail::require(v.is_string(), "variables must be strings");
    spec.variables.push_back(v.get<std::string>());
  }
  std::map<std::string, int> var_index;
  for (std::size_t i = 0; i < spec.variables.size(); ++i) {
    auto [it, fresh] = var_index.emplace(spec.variables[i], static_cast<int>(i));
    detail::require(fresh, "duplicate variable \"" + spec.variables[i] + "\"");
  }
  for (const auto& eq : doc["equations"]) {
    detail::require(eq.is_object() && eq.contains("vars") && eq.contains("coeffs") &&
                        eq.contains("const"),
                    "equations need \"vars\", \"coeffs\", and \"const\"");
    LinearSystemSpec::Equation e;
    for (const auto& v : eq["vars"]) {
      detail::require(v.is_string(), "equation variables must be strings");
      auto it = var_index.find(v.get<std::string>());
      detail::require(it != var_index.end(),
                      "unknown variable \"" + v.get<std::string>() + "\" in equation");
      e.vars.push_back(it->second);
    }
    for (const auto& c : eq["coeffs"]) {
      detail::require(c.is_number_integer(), "coefficients must be integers");
      e.coeffs.push_back(c.get<int>());
    }
    detail::require(eq["const"].is_number_integer(), "\"const\" must be an integer");
    e.constant = eq["const"].get<int>();
    spec.equations.push_back(std::move(e));
  }
  return spec;
}

/// Serialize a presheaf family: contexts in poset order with their
/// sections, all element references by name.
inline json family_to_json(const PresheafFamily& f, int rounds = -1) {
  const ContextPoset& p = *f.poset;
  json doc;
  doc["k"] = p.k;
  doc["mode"] = f.mode == SectionMode::hom ? "hom" : "iso";
  json ua = json::array(), ub = json::array();
  for (int i = 0; i < p.n; ++i) ua.push_back(detail::name_at(f.a_names, i));
  for (int i = 0; i < f.b_size; ++i) ub.push_back(detail::name_at(f.b_names, i));
  doc["a_universe"] = std::move(ua);
  doc["b_universe"] = std::move(ub);
  if (rounds >= 0) doc["rounds"] = rounds;
  doc["total_sections"] = f.total_sections();
  json contexts = json::array();
  for (std::size_t cid = 0; cid < p.contexts.size(); ++cid) {
    json entry;
    json ctx = json::array();
    for (int a : p.contexts[cid]) ctx.push_back(detail::name_at(f.a_names, a));
    entry["context"] = std::move(ctx);
    json secs = json::array();
    for (const auto& vals : f.sections[cid]) {
      json sec = json::array();
      for (int b : vals) sec.push_back(detail::name_at(f.b_names, b));
      secs.push_back(std::move(sec));
    }
    entry["sections"] = std::move(secs);
    contexts.push_back(std::move(entry));
  }
  doc["contexts"] = std::move(contexts);
  return doc;
}

}  // namespace cohcsp
