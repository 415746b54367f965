#pragma once

#include <map>
#include <string>
#include <vector>

#include "cohcsp/cohomology.hpp"
#include "cohcsp/presheaf.hpp"
#include "cohcsp/structure.hpp"

namespace cohcsp {

/// Bipartite graph between the elements of A (left) and B (right).
struct BipartiteGraph {
  int left = 0, right = 0;
  std::vector<std::pair<int, int>> edges;
};

/// Maximum bipartite matching via augmenting paths (Kuhn), deterministic
/// left-vertex order. Returns the matching size.
inline int max_matching(const BipartiteGraph& g) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.left));
  for (const auto& [a, b] : g.edges) {
    if (a < 0 || a >= g.left || b < 0 || b >= g.right)
      throw std::invalid_argument("max_matching: edge endpoint out of range");
    adj[static_cast<std::size_t>(a)].push_back(b);
  }
  for (auto& v : adj) sort_unique(v);
  std::vector<int> match_right(static_cast<std::size_t>(g.right), -1);
  std::vector<char> visited;
  std::function<bool(int)> augment = [&](int a) {
    for (int b : adj[static_cast<std::size_t>(a)]) {
      if (visited[static_cast<std::size_t>(b)]) continue;
      visited[static_cast<std::size_t>(b)] = 1;
      if (match_right[static_cast<std::size_t>(b)] < 0 ||
          augment(match_right[static_cast<std::size_t>(b)])) {
        match_right[static_cast<std::size_t>(b)] = a;
        return true;
      }
    }
    return false;
  };
  int size = 0;
  for (int a = 0; a < g.left; ++a) {
    visited.assign(static_cast<std::size_t>(g.right), 0);
    if (augment(a)) ++size;
  }
  return size;
}

/// The bijection-game condition for section s at context C with |C| < k:
/// the graph with an edge (a, b) whenever some extension of s at C u {a}
/// sends a to b admits a perfect matching between the two universes.
inline BipartiteGraph cotest_graph(const PresheafFamily& f, int cid,
                                   const std::vector<int>& values) {
  const ContextPoset& p = *f.poset;
  const Context& c = p.contexts[static_cast<std::size_t>(cid)];
  if (static_cast<int>(c.size()) >= p.k)
    throw std::invalid_argument("cotest: context must have fewer than k elements");
  if (!f.contains(cid, values))
    throw std::invalid_argument("cotest: section must belong to the family");
  BipartiteGraph g;
  g.left = p.n;
  g.right = f.b_size;
  for (std::size_t i = 0; i < c.size(); ++i)
    g.edges.push_back({c[i], values[i]});
  for (const auto& [a, parent] : p.parents[static_cast<std::size_t>(cid)]) {
    const Context& pc = p.contexts[static_cast<std::size_t>(parent)];
    for (const auto& ext : f.sections[static_cast<std::size_t>(parent)]) {
      if (restrict_values(pc, ext, c) != values) continue;
      auto it = std::lower_bound(pc.begin(), pc.end(), a);
      g.edges.push_back({a, ext[static_cast<std::size_t>(it - pc.begin())]});
    }
  }
  sort_unique(g.edges);
  return g;
}

inline bool cotest(const PresheafFamily& f, int cid, const std::vector<int>& values) {
  if (f.poset->n != f.b_size) return false;  // no bijection between the universes
  BipartiteGraph g = cotest_graph(f, cid, values);
  return max_matching(g) == g.left;
}

/// Drop the sections at contexts of size < k that fail cotest; size-k
/// contexts pass through (they are filtered indirectly by coflasquify).
inline PresheafFamily cotest_filter(const PresheafFamily& f) {
  DeflationaryOperator op = from_local_predicate(
      "cotest",
      [](const PresheafFamily& snapshot, int cid, const std::vector<int>& values) {
        const ContextPoset& p = *snapshot.poset;
        if (static_cast<int>(p.contexts[static_cast<std::size_t>(cid)].size()) >= p.k)
          return true;
        return cotest(snapshot, cid, values);
      },
      PredicateScope::all_contexts);
  return op.apply(f);
}

struct EquivResult {
  bool equivalent = false;
  PresheafFamily fixpoint;
  int rounds = 0;                   // fixpoint rounds of the outermost loop
  std::vector<std::size_t> trace;   // total section counts, initial first
};

/// EL^k preorder: coflasquification of the partial-isomorphism base is
/// non-empty, i.e. Duplicator wins the existential k-pebble game with
/// injective positions in both directions of each play.
inline EquivResult el_preorder(const Structure& a, const Structure& b, int k,
                               const Budget& budget = budget_from_env()) {
  EquivResult res;
  PresheafFamily base = build_base(a, b, k, SectionMode::iso, budget);
  CoflasquifyStats stats;
  res.fixpoint = coflasquify(base, &stats);
  res.rounds = stats.rounds;
  res.trace = stats.trace;
  res.equivalent = !res.fixpoint.empty();
  return res;
}

/// Full k-variable equivalence: the greatest subfamily S of the
/// partial-isomorphism base such that S and dagger(S) are both flasque.
/// One round applies the A-side coflasquification first, then conjugates
/// the B-side coflasquification by dagger.
inline EquivResult lk_equiv(const Structure& a, const Structure& b, int k,
                            const Budget& budget = budget_from_env()) {
  EquivResult res;
  PresheafFamily cur = build_base(a, b, k, SectionMode::iso, budget);
  res.trace.push_back(cur.total_sections());
  while (true) {
    PresheafFamily next = dagger(coflasquify(dagger(coflasquify(cur))));
    ++res.rounds;
    res.trace.push_back(next.total_sections());
    if (next == cur) break;
    cur = std::move(next);
  }
  res.fixpoint = std::move(cur);
  res.equivalent = !res.fixpoint.empty();
  return res;
}

struct CountingFixpointResult {
  PresheafFamily family;
  int rounds = 0;
  std::vector<std::size_t> trace;
};

/// Greatest fixpoint of alternating coflasquification and the cotest
/// filter, starting from coflasquify(S).
inline CountingFixpointResult counting_fixpoint(
    const PresheafFamily& s, const std::function<void(const PresheafFamily&)>& on_round = nullptr) {
  CountingFixpointResult res;
  res.trace.push_back(s.total_sections());
  PresheafFamily cur = coflasquify(s);
  ++res.rounds;
  res.trace.push_back(cur.total_sections());
  if (on_round) on_round(cur);
  while (true) {
    PresheafFamily next = coflasquify(cotest_filter(cur));
    ++res.rounds;
    res.trace.push_back(next.total_sections());
    if (on_round) on_round(next);
    if (next == cur) break;
    cur = std::move(next);
  }
  res.family = std::move(cur);
  return res;
}

/// Counting k-variable equivalence via the bijection game.
inline EquivResult ck_equiv(const Structure& a, const Structure& b, int k,
                            const Budget& budget = budget_from_env()) {
  EquivResult res;
  PresheafFamily base = build_base(a, b, k, SectionMode::iso, budget);
  CountingFixpointResult fp = counting_fixpoint(base);
  res.fixpoint = std::move(fp.family);
  res.rounds = fp.rounds;
  res.trace = std::move(fp.trace);
  res.equivalent = !res.fixpoint.empty();
  return res;
}

/// Symmetrized cohomological reduction: reduce, flip sides, reduce, flip
/// back. The plain reduction is not symmetric under dagger, so both sides
/// are filtered explicitly.
inline PresheafFamily sym_cohomological_reduction(const PresheafFamily& s) {
  return dagger(cohomological_reduction(dagger(cohomological_reduction(s))));
}

/// Cohomological equivalence: alternate the counting fixpoint with the
/// symmetrized cohomological reduction until nothing shrinks.
inline EquivResult z_equiv(const Structure& a, const Structure& b, int k,
                           const Budget& budget = budget_from_env(),
                           const std::function<void(const PresheafFamily&)>& on_round = nullptr) {
  EquivResult res;
  PresheafFamily base = build_base(a, b, k, SectionMode::iso, budget);
  res.trace.push_back(base.total_sections());
  PresheafFamily cur = counting_fixpoint(base).family;
  ++res.rounds;
  res.trace.push_back(cur.total_sections());
  if (on_round) on_round(cur);
  while (!cur.empty()) {
    PresheafFamily next = counting_fixpoint(sym_cohomological_reduction(cur)).family;
    ++res.rounds;
    res.trace.push_back(next.total_sections());
    if (on_round) on_round(next);
    bool fixed = next == cur;
    cur = std::move(next);
    if (fixed) break;
  }
  res.fixpoint = std::move(cur);
  res.equivalent = !res.fixpoint.empty();
  return res;
}

// ---------------------------------------------------------------------------
// Weisfeiler-Leman oracle (dimension 1, a.k.a. color refinement)
// ---------------------------------------------------------------------------

struct Coloring {
  std::vector<int> colors_a;
  std::vector<int> colors_b;
  int rounds = 0;
  int classes = 0;
};

/// Joint color refinement on the disjoint union of two structures over the
/// same all-binary vocabulary. Colors are canonical: ids are assigned by
/// sorted signature order each round, so equal inputs get equal colorings.
inline Coloring wl_colors(const Structure& a, const Structure& b) {
  if (!(a.sigma == b.sigma))
    throw std::invalid_argument("wl: both structures must share one vocabulary");
  for (const auto& rel : a.sigma.relations)
    if (rel.arity != 2)
      throw std::invalid_argument("wl: vocabulary must be binary (arity-2 relations only)");

  const int na = a.size(), nb = b.size(), n = na + nb;
  const std::size_t nrel = a.sigma.relations.size();
  std::vector<std::vector<std::vector<int>>> out_adj(nrel), in_adj(nrel);
  for (std::size_t r = 0; r < nrel; ++r) {
    out_adj[r].assign(static_cast<std::size_t>(n), {});
    in_adj[r].assign(static_cast<std::size_t>(n), {});
    for (const auto& t : a.tuples[r]) {
      out_adj[r][static_cast<std::size_t>(t[0])].push_back(t[1]);
      in_adj[r][static_cast<std::size_t>(t[1])].push_back(t[0]);
    }
    for (const auto& t : b.tuples[r]) {
      out_adj[r][static_cast<std::size_t>(na + t[0])].push_back(na + t[1]);
      in_adj[r][static_cast<std::size_t>(na + t[1])].push_back(na + t[0]);
    }
  }

  std::vector<int> colors(static_cast<std::size_t>(n), 0);
  int classes = 1;
  Coloring out;
  while (true) {
    std::vector<std::vector<int>> sig(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      auto& s = sig[static_cast<std::size_t>(v)];
      s.push_back(colors[static_cast<std::size_t>(v)]);
      for (std::size_t r = 0; r < nrel; ++r) {
        std::vector<int> outc, inc;
        for (int w : out_adj[r][static_cast<std::size_t>(v)])
          outc.push_back(colors[static_cast<std::size_t>(w)]);
        for (int w : in_adj[r][static_cast<std::size_t>(v)])
          inc.push_back(colors[static_cast<std::size_t>(w)]);
        std::sort(outc.begin(), outc.end());
        std::sort(inc.begin(), inc.end());
        s.push_back(-1);
        s.insert(s.end(), outc.begin(), outc.end());
        s.push_back(-2);
        s.insert(s.end(), inc.begin(), inc.end());
      }
    }
    std::map<std::vector<int>, int> ids;
    for (const auto& s : sig) ids.emplace(s, 0);
    int next_id = 0;
    for (auto& [key, id] : ids) id = next_id++;
    std::vector<int> refined(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) refined[static_cast<std::size_t>(v)] = ids.at(sig[static_cast<std::size_t>(v)]);
    ++out.rounds;
    bool stable = next_id == classes;
    colors = std::move(refined);
    classes = next_id;
    if (stable) break;
  }
  out.colors_a.assign(colors.begin(), colors.begin() + na);
  out.colors_b.assign(colors.begin() + na, colors.end());
  out.classes = classes;
  return out;
}

/// 1-WL indistinguishability: the stable color multisets of the two
/// structures coincide.
inline bool wl_oracle(const Structure& a, const Structure& b) {
  Coloring c = wl_colors(a, b);
  std::vector<int> ma = c.colors_a, mb = c.colors_b;
  std::sort(ma.begin(), ma.end());
  std::sort(mb.begin(), mb.end());
  return ma == mb;
}

}  // namespace cohcsp
