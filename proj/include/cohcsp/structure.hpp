#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cohcsp/util.hpp"

namespace cohcsp {

struct RelationSymbol {
  std::string name;
  int arity = 0;
  friend bool operator==(const RelationSymbol&, const RelationSymbol&) = default;
};

/// A finite relational vocabulary. Relation order is significant: it is the
/// document order of the source and the canonical serialization order.
struct Vocabulary {
  std::vector<RelationSymbol> relations;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

  int size() const { return static_cast<int>(relations.size()); }

  /// Largest arity occurring in the vocabulary (0 for the empty vocabulary).
  int width() const {
    int w = 0;
    for (const auto& r : relations) w = std::max(w, r.arity);
    return w;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < relations.size(); ++i)
      if (relations[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

/// A finite relational structure. Elements are referred to by their index in
/// `universe`; tuples are stored as sorted sets of index vectors, one set per
/// relation symbol (parallel to `sigma.relations`).
struct Structure {
  Vocabulary sigma;
  std::vector<std::string> universe;
  std::vector<std::set<std::vector<int>>> tuples;

  friend bool operator==(const Structure&, const Structure&) = default;

  int size() const { return static_cast<int>(universe.size()); }

  bool has_tuple(int rel, const std::vector<int>& t) const {
    return tuples[static_cast<std::size_t>(rel)].count(t) > 0;
  }

  int element_index(const std::string& name) const {
    for (std::size_t i = 0; i < universe.size(); ++i)
      if (universe[i] == name) return static_cast<int>(i);
    return -1;
  }
};

/// Throws ParseError if the structure violates its representation
/// invariants (unique names, arity >= 1, tuples over valid indices).
inline void validate_structure(const Structure& a) {
  std::set<std::string> names;
  for (const auto& r : a.sigma.relations) {
    if (r.name.empty()) throw ParseError("vocabulary: relation names must be non-empty");
    if (!names.insert(r.name).second)
      throw ParseError("vocabulary: duplicate relation name '" + r.name + "'");
    if (r.arity < 1)
      throw ParseError("vocabulary: relation '" + r.name + "' must have arity >= 1");
  }
  std::set<std::string> elems;
  for (const auto& e : a.universe) {
    if (e.empty()) throw ParseError("universe: element names must be non-empty");
    if (!elems.insert(e).second) throw ParseError("universe: duplicate element '" + e + "'");
  }
  if (a.tuples.size() != a.sigma.relations.size())
    throw ParseError("relations: tuple-set count does not match the vocabulary");
  for (std::size_t r = 0; r < a.tuples.size(); ++r) {
    for (const auto& t : a.tuples[r]) {
      if (static_cast<int>(t.size()) != a.sigma.relations[r].arity)
        throw ParseError("relations." + a.sigma.relations[r].name + ": tuple of wrong arity");
      for (int e : t)
        if (e < 0 || e >= a.size())
          throw ParseError("relations." + a.sigma.relations[r].name + ": element index out of range");
    }
  }
}

/// A partial map between two structures: `context` is a sorted list of
/// distinct A-element indices, `values[i]` the B-element assigned to
/// `context[i]`.
struct Section {
  std::vector<int> context;
  std::vector<int> values;

  friend bool operator==(const Section&, const Section&) = default;
  friend auto operator<=>(const Section&, const Section&) = default;
};

enum class SectionMode { hom, iso };

inline const char* to_string(SectionMode m) { return m == SectionMode::hom ? "hom" : "iso"; }

namespace detail {
inline void require_compatible(const Structure& a, const Structure& b) {
  if (!(a.sigma == b.sigma))
    throw std::invalid_argument("structures must share one vocabulary");
}

inline int position_in(const std::vector<int>& sorted, int x) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
  if (it == sorted.end() || *it != x) return -1;
  return static_cast<int>(it - sorted.begin());
}

/// Enumerate all |ctx|^arity tuples over `ctx` (so both directions of the
/// iso condition can be checked with one loop).
template <class Fn>
void for_each_tuple_over(const std::vector<int>& ctx, int arity, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(arity), 0);
  if (ctx.empty()) return;
  while (true) {
    fn(idx);
    int pos = arity - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] + 1 == static_cast<int>(ctx.size())) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
  }
}
}  // namespace detail

/// Is `s` a partial homomorphism (mode hom) or partial isomorphism (mode
/// iso) from A to B?  hom: every A-tuple inside the context maps to a
/// B-tuple.  iso: additionally injective, and tuple membership is reflected.
inline bool check_section(const Structure& a, const Structure& b, const Section& s,
                          SectionMode mode) {
  detail::require_compatible(a, b);
  if (s.context.size() != s.values.size())
    throw std::invalid_argument("section: context and values differ in length");
  for (std::size_t i = 0; i < s.context.size(); ++i) {
    if (i > 0 && s.context[i - 1] >= s.context[i])
      throw std::invalid_argument("section: context must be strictly increasing");
    if (s.context[i] < 0 || s.context[i] >= a.size())
      throw std::invalid_argument("section: context element outside universe(A)");
    if (s.values[i] < 0 || s.values[i] >= b.size())
      throw std::invalid_argument("section: value outside universe(B)");
  }

  if (mode == SectionMode::iso) {
    std::vector<int> vals = s.values;
    sort_unique(vals);
    if (vals.size() != s.values.size()) return false;  // not injective
    for (std::size_t r = 0; r < a.sigma.relations.size(); ++r) {
      int arity = a.sigma.relations[r].arity;
      bool ok = true;
      detail::for_each_tuple_over(s.context, arity, [&](const std::vector<int>& idx) {
        if (!ok) return;
        std::vector<int> ta(idx.size()), tb(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
          ta[i] = s.context[static_cast<std::size_t>(idx[i])];
          tb[i] = s.values[static_cast<std::size_t>(idx[i])];
        }
        if (a.has_tuple(static_cast<int>(r), ta) != b.has_tuple(static_cast<int>(r), tb))
          ok = false;
      });
      if (!ok) return false;
    }
    return true;
  }

  for (std::size_t r = 0; r < a.sigma.relations.size(); ++r) {
    for (const auto& t : a.tuples[r]) {
      std::vector<int> image(t.size());
      bool inside = true;
      for (std::size_t i = 0; i < t.size(); ++i) {
        int pos = detail::position_in(s.context, t[i]);
        if (pos < 0) {
          inside = false;
          break;
        }
        image[i] = s.values[static_cast<std::size_t>(pos)];
      }
      if (inside && !b.has_tuple(static_cast<int>(r), image)) return false;
    }
  }
  return true;
}

/// The substructure of A induced on `subset` (sorted element indices).
/// Elements are renamed to their original names; tuples entirely inside the
/// subset are kept and re-indexed.
inline Structure induced_substructure(const Structure& a, const std::vector<int>& subset) {
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= a.size())
      throw std::invalid_argument("induced_substructure: element index out of range");
    if (i > 0 && subset[i - 1] >= subset[i])
      throw std::invalid_argument("induced_substructure: subset must be strictly increasing");
  }
  Structure out;
  out.sigma = a.sigma;
  for (int e : subset) out.universe.push_back(a.universe[static_cast<std::size_t>(e)]);
  out.tuples.resize(a.tuples.size());
  for (std::size_t r = 0; r < a.tuples.size(); ++r) {
    for (const auto& t : a.tuples[r]) {
      std::vector<int> mapped(t.size());
      bool inside = true;
      for (std::size_t i = 0; i < t.size(); ++i) {
        int pos = detail::position_in(subset, t[i]);
        if (pos < 0) {
          inside = false;
          break;
        }
        mapped[i] = pos;
      }
      if (inside) out.tuples[r].insert(mapped);
    }
  }
  return out;
}

enum class MapMode { hom, embed, iso };

/// Exhaustive search for total maps universe(A) -> universe(B) of the given
/// kind.  hom: homomorphisms.  embed: injective strong homomorphisms.
/// iso: isomorphisms (embeddings with |A| = |B|).  Enumerates all |B|^|A|
/// candidates in lexicographic order; throws BudgetError when that count
/// exceeds the budget.
inline std::vector<std::vector<int>> brute_force(const Structure& a, const Structure& b,
                                                 MapMode mode,
                                                 const Budget& budget = budget_from_env()) {
  detail::require_compatible(a, b);
  std::vector<std::vector<int>> found;
  if (mode == MapMode::iso && a.size() != b.size()) return found;
  if (a.size() == 0) {
    found.push_back({});
    return found;
  }
  if (b.size() == 0) return found;

  long long count = 1;
  for (int i = 0; i < a.size(); ++i) {
    count *= b.size();
    if (count > budget.max_maps)
      throw BudgetError("brute_force: |B|^|A| exceeds the map budget of " +
                        std::to_string(budget.max_maps));
  }

  std::vector<int> ctx(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) ctx[static_cast<std::size_t>(i)] = i;
  SectionMode smode = mode == MapMode::hom ? SectionMode::hom : SectionMode::iso;

  std::vector<int> vals(static_cast<std::size_t>(a.size()), 0);
  while (true) {
    if (check_section(a, b, Section{ctx, vals}, smode)) found.push_back(vals);
    int pos = a.size() - 1;
    while (pos >= 0 && vals[static_cast<std::size_t>(pos)] + 1 == b.size()) {
      vals[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++vals[static_cast<std::size_t>(pos)];
  }
  return found;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace detail {
inline Vocabulary graph_vocabulary() { return Vocabulary{{RelationSymbol{"E", 2}}}; }

inline std::vector<std::string> numbered_universe(int n) {
  std::vector<std::string> u;
  for (int i = 0; i < n; ++i) u.push_back(std::to_string(i));
  return u;
}
}  // namespace detail

/// Complete loopless graph on n >= 1 vertices named "0".."n-1".
inline Structure clique(int n) {
  if (n < 1) throw std::invalid_argument("clique: n must be >= 1");
  Structure g;
  g.sigma = detail::graph_vocabulary();
  g.universe = detail::numbered_universe(n);
  g.tuples.resize(1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) g.tuples[0].insert({i, j});
  return g;
}

/// Undirected n-cycle (n >= 3) as a symmetric edge relation.
inline Structure cycle(int n) {
  if (n < 3) throw std::invalid_argument("cycle: n must be >= 3");
  Structure g;
  g.sigma = detail::graph_vocabulary();
  g.universe = detail::numbered_universe(n);
  g.tuples.resize(1);
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    g.tuples[0].insert({i, j});
    g.tuples[0].insert({j, i});
  }
  return g;
}

/// Disjoint union over a shared vocabulary. Elements are renamed to
/// "0".."|A|+|B|-1", left operand first.
inline Structure disjoint_union(const Structure& a, const Structure& b) {
  detail::require_compatible(a, b);
  Structure out;
  out.sigma = a.sigma;
  out.universe = detail::numbered_universe(a.size() + b.size());
  out.tuples.resize(a.tuples.size());
  for (std::size_t r = 0; r < a.tuples.size(); ++r) {
    for (const auto& t : a.tuples[r]) out.tuples[r].insert(t);
    for (const auto& t : b.tuples[r]) {
      std::vector<int> shifted(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) shifted[i] = t[i] + a.size();
      out.tuples[r].insert(shifted);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear templates over a prime field
// ---------------------------------------------------------------------------

/// The shape of one linear relation E_{a,c} = { r : sum_i a_i r_i = c } over
/// Z_p. The arity of the relation equals coeffs.size().
struct LinearEquationShape {
  std::vector<int> coeffs;  // in [0, p)
  int constant = 0;         // in [0, p)
  friend bool operator==(const LinearEquationShape&, const LinearEquationShape&) = default;
  friend auto operator<=>(const LinearEquationShape&, const LinearEquationShape&) = default;
};

/// A template whose relations are all linear equations over Z_p, p prime.
/// `shapes` is parallel to `sigma.relations`.
struct LinearTemplate {
  int modulus = 2;
  Vocabulary sigma;
  std::vector<LinearEquationShape> shapes;
  friend bool operator==(const LinearTemplate&, const LinearTemplate&) = default;
};

inline void validate_template(const LinearTemplate& t) {
  if (!is_prime(t.modulus))
    throw ParseError("modulus: must be a prime number, got " + std::to_string(t.modulus));
  if (t.shapes.size() != t.sigma.relations.size())
    throw ParseError("linear: one equation shape per relation is required");
  for (std::size_t r = 0; r < t.shapes.size(); ++r) {
    const auto& sh = t.shapes[r];
    if (static_cast<int>(sh.coeffs.size()) != t.sigma.relations[r].arity)
      throw ParseError("linear." + t.sigma.relations[r].name +
                       ": coefficient count must equal the relation arity");
    for (int c : sh.coeffs)
      if (c < 0 || c >= t.modulus)
        throw ParseError("linear." + t.sigma.relations[r].name +
                         ": coefficients must lie in [0, modulus)");
    if (sh.constant < 0 || sh.constant >= t.modulus)
      throw ParseError("linear." + t.sigma.relations[r].name +
                       ": constant must lie in [0, modulus)");
  }
}

/// The structure over universe Z_p = {"0",..,"p-1"} whose relation E_{a,c}
/// holds exactly the tuples satisfying the equation.
inline Structure template_structure(const LinearTemplate& t) {
  validate_template(t);
  Structure out;
  out.sigma = t.sigma;
  out.universe = detail::numbered_universe(t.modulus);
  out.tuples.resize(t.shapes.size());
  for (std::size_t r = 0; r < t.shapes.size(); ++r) {
    const auto& sh = t.shapes[r];
    int arity = static_cast<int>(sh.coeffs.size());
    std::vector<int> tup(static_cast<std::size_t>(arity), 0);
    while (true) {
      long long lhs = 0;
      for (int i = 0; i < arity; ++i)
        lhs += static_cast<long long>(sh.coeffs[static_cast<std::size_t>(i)]) *
               tup[static_cast<std::size_t>(i)];
      if (lhs % t.modulus == sh.constant) out.tuples[r].insert(tup);
      int pos = arity - 1;
      while (pos >= 0 && tup[static_cast<std::size_t>(pos)] + 1 == t.modulus) {
        tup[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++tup[static_cast<std::size_t>(pos)];
    }
  }
  return out;
}

/// Source form of a system of linear equations over named variables.
struct LinearSystemSpec {
  int modulus = 2;
  std::vector<std::string> variables;
  struct Equation {
    std::vector<int> vars;    // indices into `variables`, repeats allowed
    std::vector<int> coeffs;  // parallel to vars, in [0, p)
    int constant = 0;         // in [0, p)
  };
  std::vector<Equation> equations;
};

/// Turn a system of equations into a CSP instance/template pair: one
/// relation symbol per distinct (coeffs, constant) shape, one instance tuple
/// per equation. A single-shape system uses the relation name "E",
/// otherwise shapes are named "E1", "E2", ... in order of first appearance.
inline std::pair<Structure, LinearTemplate> linear_instance(const LinearSystemSpec& spec) {
  if (!is_prime(spec.modulus))
    throw ParseError("modulus: must be a prime number, got " + std::to_string(spec.modulus));
  {
    std::set<std::string> seen;
    for (const auto& v : spec.variables) {
      if (v.empty()) throw ParseError("variables: names must be non-empty");
      if (!seen.insert(v).second) throw ParseError("variables: duplicate name '" + v + "'");
    }
  }

  std::vector<LinearEquationShape> shapes;
  std::vector<std::vector<std::vector<int>>> tuples_per_shape;
  for (std::size_t e = 0; e < spec.equations.size(); ++e) {
    const auto& eq = spec.equations[e];
    std::string where = "equations[" + std::to_string(e) + "]";
    if (eq.vars.empty()) throw ParseError(where + ": at least one variable is required");
    if (eq.vars.size() != eq.coeffs.size())
      throw ParseError(where + ": vars and coeffs differ in length");
    for (int v : eq.vars)
      if (v < 0 || v >= static_cast<int>(spec.variables.size()))
        throw ParseError(where + ": variable index out of range");
    for (int c : eq.coeffs)
      if (c < 0 || c >= spec.modulus) throw ParseError(where + ": coefficient outside [0, modulus)");
    if (eq.constant < 0 || eq.constant >= spec.modulus)
      throw ParseError(where + ": constant outside [0, modulus)");

    LinearEquationShape sh{eq.coeffs, eq.constant};
    std::size_t idx = 0;
    while (idx < shapes.size() && !(shapes[idx] == sh)) ++idx;
    if (idx == shapes.size()) {
      shapes.push_back(sh);
      tuples_per_shape.emplace_back();
    }
    tuples_per_shape[idx].push_back(eq.vars);
  }

  LinearTemplate tmpl;
  tmpl.modulus = spec.modulus;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    std::string name = shapes.size() == 1 ? "E" : "E" + std::to_string(i + 1);
    tmpl.sigma.relations.push_back({name, static_cast<int>(shapes[i].coeffs.size())});
  }
  tmpl.shapes = shapes;
  validate_template(tmpl);

  Structure inst;
  inst.sigma = tmpl.sigma;
  inst.universe = spec.variables;
  inst.tuples.resize(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i)
    for (const auto& t : tuples_per_shape[i]) inst.tuples[i].insert(t);
  validate_structure(inst);
  return {inst, tmpl};
}

}  // namespace cohcsp
