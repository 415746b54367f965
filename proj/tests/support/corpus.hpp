#pragma once

// Seeded corpus generators shared by the property tests and the acceptance
// suite. Everything is driven by an explicit mt19937_64 so runs reproduce.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "cohcsp/structure.hpp"

namespace corpus {

using namespace cohcsp;

inline Vocabulary graph_vocabulary() { return Vocabulary{{{"E", 2}}}; }

inline Structure empty_graph(int n) {
  Structure s;
  s.sigma = graph_vocabulary();
  for (int i = 0; i < n; ++i) s.universe.push_back(std::to_string(i));
  s.tuples.resize(1);
  return s;
}

/// Undirected simple graph: each unordered pair independently with
/// probability p, stored with symmetric closure.
inline Structure random_graph(std::mt19937_64& rng, int n, double p) {
  Structure s = empty_graph(n);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < p) {
        s.tuples[0].insert({i, j});
        s.tuples[0].insert({j, i});
      }
  return s;
}

/// Directed binary structure: each ordered pair (loops included)
/// independently with probability p.
inline Structure random_binary(std::mt19937_64& rng, int n, double p) {
  Structure s = empty_graph(n);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (coin(rng) < p) s.tuples[0].insert({i, j});
  return s;
}

/// Path on n vertices (symmetric closure).
inline Structure path(int n) {
  Structure s = empty_graph(n);
  for (int i = 0; i + 1 < n; ++i) {
    s.tuples[0].insert({i, i + 1});
    s.tuples[0].insert({i + 1, i});
  }
  return s;
}

/// Complete bipartite graph K_{m,n}.
inline Structure complete_bipartite(int m, int n) {
  Structure s = empty_graph(m + n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      s.tuples[0].insert({i, m + j});
      s.tuples[0].insert({m + j, i});
    }
  return s;
}

/// Triangular prism (C3 x K2): two triangles joined by a perfect matching;
/// 3-regular on 6 vertices, a classic 1-WL twin of K_{3,3}.
inline Structure prism() {
  Structure s = empty_graph(6);
  auto edge = [&](int i, int j) {
    s.tuples[0].insert({i, j});
    s.tuples[0].insert({j, i});
  };
  edge(0, 1);
  edge(1, 2);
  edge(2, 0);
  edge(3, 4);
  edge(4, 5);
  edge(5, 3);
  edge(0, 3);
  edge(1, 4);
  edge(2, 5);
  return s;
}

/// Relabel a structure by a random permutation of its universe (names kept
/// positional, so the result is isomorphic but usually not equal).
inline Structure shuffle_structure(std::mt19937_64& rng, const Structure& s) {
  int n = s.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  Structure out;
  out.sigma = s.sigma;
  for (int i = 0; i < n; ++i) out.universe.push_back(std::to_string(i));
  out.tuples.resize(s.tuples.size());
  for (std::size_t r = 0; r < s.tuples.size(); ++r)
    for (const auto& t : s.tuples[r]) {
      std::vector<int> mapped;
      for (int e : t) mapped.push_back(perm[static_cast<std::size_t>(e)]);
      out.tuples[r].insert(std::move(mapped));
    }
  return out;
}

/// Curated graph pairs exercising the equivalence hierarchy: identical,
/// isomorphic-but-relabeled, classically equivalent-but-non-isomorphic, and
/// separable pairs.
inline std::vector<std::tuple<std::string, Structure, Structure>> curated_graph_pairs() {
  std::vector<std::tuple<std::string, Structure, Structure>> out;
  Structure c3 = cycle(3), c4 = cycle(4), c5 = cycle(5), c6 = cycle(6), c7 = cycle(7),
            c8 = cycle(8);
  out.push_back({"C6 vs C3+C3", c6, disjoint_union(c3, c3)});
  out.push_back({"C8 vs C4+C4", c8, disjoint_union(c4, c4)});
  out.push_back({"C7 vs C3+C4", c7, disjoint_union(c3, c4)});
  out.push_back({"C6 vs C6", c6, c6});
  out.push_back({"C6 vs C5", c6, c5});
  out.push_back({"C6 vs P6", c6, path(6)});
  out.push_back({"prism vs K33", prism(), complete_bipartite(3, 3)});
  out.push_back({"K3 vs K3", clique(3), clique(3)});
  out.push_back({"K3 vs K2", clique(3), clique(2)});
  out.push_back({"K2 vs K3", clique(2), clique(3)});
  out.push_back({"K4 vs C4", clique(4), cycle(4)});
  return out;
}

/// Random linear system over Z_p: every equation touches at most
/// `max_arity` distinct variables with non-zero coefficients.
inline LinearSystemSpec random_linear_system(std::mt19937_64& rng, int p, int max_vars = 8,
                                             int max_eqs = 10, int max_arity = 3) {
  std::uniform_int_distribution<int> nvars_d(3, max_vars), neqs_d(2, max_eqs);
  LinearSystemSpec spec;
  spec.modulus = p;
  int nvars = nvars_d(rng);
  for (int i = 0; i < nvars; ++i) spec.variables.push_back("x" + std::to_string(i));
  int neqs = neqs_d(rng);
  std::uniform_int_distribution<int> arity_d(1, std::min(max_arity, nvars));
  std::uniform_int_distribution<int> var_d(0, nvars - 1);
  std::uniform_int_distribution<int> coeff_d(1, p - 1);
  std::uniform_int_distribution<int> const_d(0, p - 1);
  for (int e = 0; e < neqs; ++e) {
    LinearSystemSpec::Equation eq;
    int arity = arity_d(rng);
    std::vector<int> vars;
    while (static_cast<int>(vars.size()) < arity) {
      int v = var_d(rng);
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
    std::sort(vars.begin(), vars.end());
    for (int v : vars) {
      eq.vars.push_back(v);
      eq.coeffs.push_back(coeff_d(rng));
    }
    eq.constant = const_d(rng);
    spec.equations.push_back(std::move(eq));
  }
  return spec;
}

/// The TRI system: three XOR equations x+y=1, y+z=1, x+z=1 over Z_2 — the
/// smallest all-versus-nothing triangle.
inline LinearSystemSpec tri_system() {
  LinearSystemSpec spec;
  spec.modulus = 2;
  spec.variables = {"x", "y", "z"};
  spec.equations.push_back({{0, 1}, {1, 1}, 1});
  spec.equations.push_back({{1, 2}, {1, 1}, 1});
  spec.equations.push_back({{0, 2}, {1, 1}, 1});
  return spec;
}

/// Number of satisfying assignments of a linear system, by enumerating all
/// p^n assignments — the independent oracle for linear exactness.
inline std::size_t count_solutions(const LinearSystemSpec& spec) {
  int n = static_cast<int>(spec.variables.size());
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::size_t found = 0;
  while (true) {
    bool ok = true;
    for (const auto& eq : spec.equations) {
      long long lhs = 0;
      for (std::size_t i = 0; i < eq.vars.size(); ++i)
        lhs += static_cast<long long>(eq.coeffs[i]) *
               assign[static_cast<std::size_t>(eq.vars[i])];
      if (((lhs - eq.constant) % spec.modulus + spec.modulus) % spec.modulus != 0) {
        ok = false;
        break;
      }
    }
    if (ok) ++found;
    int pos = 0;
    while (pos < n && assign[static_cast<std::size_t>(pos)] + 1 == spec.modulus)
      assign[static_cast<std::size_t>(pos++)] = 0;
    if (pos == n) return found;
    ++assign[static_cast<std::size_t>(pos)];
  }
}

inline bool linear_system_satisfiable(const LinearSystemSpec& spec) {
  return count_solutions(spec) > 0;
}

inline Structure two_triangles() { return disjoint_union(cycle(3), cycle(3)); }

}  // namespace corpus
