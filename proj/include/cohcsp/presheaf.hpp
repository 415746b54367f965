#pragma once

#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cohcsp/structure.hpp"
#include "cohcsp/util.hpp"

namespace cohcsp {

/// A context is a sorted list of distinct element indices of the domain
/// universe, of size at most k.
using Context = std::vector<int>;

/// The poset S_k(A) of contexts over an n-element universe, enumerated once
/// and shared. Contexts are ordered by (size, lexicographic), so the empty
/// context has id 0. `maximal` lists the k-subsets, or just the full
/// universe when n < k.
struct ContextPoset {
  int n = 0;
  int k = 1;
  std::vector<Context> contexts;
  std::map<Context, int> index;
  std::vector<int> maximal;
  /// For |C| < k: (a, id of C + {a}) for every a outside C.
  std::vector<std::vector<std::pair<int, int>>> parents;
  /// (a, id of C - {a}) for every a in C.
  std::vector<std::vector<std::pair<int, int>>> children;
  /// Some maximal context containing each context.
  std::vector<int> covering_maximal;

  int id_of(const Context& c) const {
    auto it = index.find(c);
    if (it == index.end()) throw std::invalid_argument("context is not in the poset");
    return it->second;
  }

  int context_size(int cid) const { return static_cast<int>(contexts[static_cast<std::size_t>(cid)].size()); }
  int max_context_size() const { return std::min(n, k); }

  static std::shared_ptr<const ContextPoset> make(int n, int k) {
    if (n < 0) throw std::invalid_argument("context poset: universe size must be >= 0");
    if (k < 1) throw std::invalid_argument("context poset: k must be >= 1");
    auto p = std::make_shared<ContextPoset>();
    p->n = n;
    p->k = k;
    int top = std::min(n, k);
    // Enumerate subsets by size, lexicographically within each size.
    p->contexts.push_back({});
    for (int size = 1; size <= top; ++size) {
      Context c(static_cast<std::size_t>(size));
      std::iota(c.begin(), c.end(), 0);
      while (true) {
        p->contexts.push_back(c);
        int pos = size - 1;
        while (pos >= 0 && c[static_cast<std::size_t>(pos)] == n - size + pos) --pos;
        if (pos < 0) break;
        ++c[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < size; ++i)
          c[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i - 1)] + 1;
      }
    }
    for (std::size_t i = 0; i < p->contexts.size(); ++i)
      p->index[p->contexts[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < p->contexts.size(); ++i)
      if (static_cast<int>(p->contexts[i].size()) == top) p->maximal.push_back(static_cast<int>(i));

    p->parents.resize(p->contexts.size());
    p->children.resize(p->contexts.size());
    for (std::size_t i = 0; i < p->contexts.size(); ++i) {
      const Context& c = p->contexts[i];
      if (static_cast<int>(c.size()) < k) {
        for (int a = 0; a < n; ++a) {
          if (sorted_contains(c, a)) continue;
          Context up = c;
          up.insert(std::lower_bound(up.begin(), up.end(), a), a);
          p->parents[i].push_back({a, p->index.at(up)});
        }
      }
      for (int a : c) {
        Context down;
        for (int x : c)
          if (x != a) down.push_back(x);
        p->children[i].push_back({a, p->index.at(down)});
      }
    }
    p->covering_maximal.assign(p->contexts.size(), -1);
    for (int mid : p->maximal) {
      const Context& m = p->contexts[static_cast<std::size_t>(mid)];
      for (std::size_t i = 0; i < p->contexts.size(); ++i)
        if (p->covering_maximal[i] < 0 && is_subset(p->contexts[i], m))
          p->covering_maximal[i] = mid;
    }
    return p;
  }
};

/// Restrict a value tuple on `from` to the sub-context `to` (both sorted;
/// `to` must be a subset of `from`).
inline std::vector<int> restrict_values(const Context& from, const std::vector<int>& values,
                                        const Context& to) {
  std::vector<int> out;
  out.reserve(to.size());
  std::size_t i = 0;
  for (int a : to) {
    while (i < from.size() && from[i] < a) ++i;
    if (i == from.size() || from[i] != a)
      throw std::invalid_argument("restrict: target is not a sub-context");
    out.push_back(values[i]);
  }
  return out;
}

/// Restriction of a Section as a standalone operation.
inline Section restrict_section(const Section& s, const Context& to) {
  return Section{to, restrict_values(s.context, s.values, to)};
}

/// A family of sections over S_k(A) with values in a universe of size
/// b_size: sections[cid] is the sorted set of value tuples held at that
/// context. Presheaf-level operations treat the family purely
/// combinatorially; structures only enter when a base family is built.
struct PresheafFamily {
  std::shared_ptr<const ContextPoset> poset;
  int b_size = 0;
  SectionMode mode = SectionMode::hom;
  std::vector<std::vector<std::vector<int>>> sections;
  std::shared_ptr<const std::vector<std::string>> a_names, b_names;

  bool empty() const {
    for (const auto& s : sections)
      if (!s.empty()) return false;
    return true;
  }

  std::size_t total_sections() const {
    std::size_t n = 0;
    for (const auto& s : sections) n += s.size();
    return n;
  }

  bool contains(int cid, const std::vector<int>& values) const {
    return sorted_contains(sections[static_cast<std::size_t>(cid)], values);
  }

  friend bool operator==(const PresheafFamily& x, const PresheafFamily& y) {
    return x.poset->n == y.poset->n && x.poset->k == y.poset->k && x.b_size == y.b_size &&
           x.sections == y.sections;
  }

  /// Stable content hash, used to key caches of per-family computations.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(poset->n));
    mix(static_cast<std::uint64_t>(poset->k));
    mix(static_cast<std::uint64_t>(b_size));
    for (const auto& ctx : sections) {
      mix(0x9e3779b97f4a7c15ull);
      for (const auto& vals : ctx) {
        mix(0xbf58476d1ce4e5b9ull);
        for (int v : vals) mix(static_cast<std::uint64_t>(v) + 0x94d049bb133111ebull);
      }
    }
    return h;
  }

  std::string describe_section(int cid, const std::vector<int>& values) const {
    const Context& c = poset->contexts[static_cast<std::size_t>(cid)];
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) os << ", ";
      if (a_names)
        os << (*a_names)[static_cast<std::size_t>(c[i])];
      else
        os << c[i];
      os << " -> ";
      if (b_names)
        os << (*b_names)[static_cast<std::size_t>(values[i])];
      else
        os << values[i];
    }
    os << "}";
    return os.str();
  }
};

/// Structural sanity check used by tests: sorted unique tuples, values in
/// range, the empty context holding at most the empty tuple.
inline void validate_family(const PresheafFamily& f) {
  if (!f.poset) throw ContractViolation("family: missing poset");
  if (f.sections.size() != f.poset->contexts.size())
    throw ContractViolation("family: one section set per context is required");
  for (std::size_t cid = 0; cid < f.sections.size(); ++cid) {
    const auto& rows = f.sections[cid];
    std::size_t want = f.poset->contexts[cid].size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != want) throw ContractViolation("family: value tuple of wrong length");
      for (int v : rows[i])
        if (v < 0 || v >= f.b_size) throw ContractViolation("family: value out of range");
      if (i > 0 && !(rows[i - 1] < rows[i]))
        throw ContractViolation("family: section sets must be sorted and duplicate-free");
    }
  }
}

/// H_k(A,B) (mode hom) or I_k(A,B) (mode iso): at every context, all maps
/// that pass check_section. Requires k >= width(sigma) so that every
/// constraint fits inside some context; throws BudgetError when
/// |A|^k * |B|^k exceeds the budget.
inline PresheafFamily build_base(const Structure& a, const Structure& b, int k, SectionMode mode,
                                 const Budget& budget = budget_from_env()) {
  detail::require_compatible(a, b);
  if (k < 1) throw std::invalid_argument("build_base: k must be >= 1");
  if (k < a.sigma.width())
    throw std::invalid_argument("build_base: k must be at least the width of the vocabulary (" +
                                std::to_string(a.sigma.width()) + ")");
  {
    long long cap = 1;
    bool over = false;
    for (int i = 0; i < k && !over; ++i) {
      cap *= std::max(1, a.size());
      if (cap > budget.max_maps) over = true;
    }
    for (int i = 0; i < k && !over; ++i) {
      cap *= std::max(1, b.size());
      if (cap > budget.max_maps) over = true;
    }
    if (over)
      throw BudgetError("build_base: |A|^k * |B|^k exceeds the map budget of " +
                        std::to_string(budget.max_maps));
  }

  PresheafFamily f;
  f.poset = ContextPoset::make(a.size(), k);
  f.b_size = b.size();
  f.mode = mode;
  f.a_names = std::make_shared<const std::vector<std::string>>(a.universe);
  f.b_names = std::make_shared<const std::vector<std::string>>(b.universe);
  f.sections.resize(f.poset->contexts.size());

  SectionMode smode = mode;
  std::vector<std::vector<std::vector<int>>>& out = f.sections;
  parallel_for(f.poset->contexts.size(), [&](std::size_t cid) {
    const Context& c = f.poset->contexts[cid];
    if (c.empty()) {
      out[cid].push_back({});
      return;
    }
    if (b.size() == 0) return;
    std::vector<int> vals(c.size(), 0);
    while (true) {
      if (check_section(a, b, Section{c, vals}, smode)) out[cid].push_back(vals);
      int pos = static_cast<int>(c.size()) - 1;
      while (pos >= 0 && vals[static_cast<std::size_t>(pos)] + 1 == b.size()) {
        vals[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++vals[static_cast<std::size_t>(pos)];
    }
  });
  return f;
}

/// One "forth" pass: at every context of size < k, keep a section only if
/// it extends into the current family at C + {a} for every element a.
/// Size-k contexts pass through unchanged.
inline PresheafFamily up_step(const PresheafFamily& f) {
  PresheafFamily out = f;
  const ContextPoset& p = *f.poset;
  parallel_for(p.contexts.size(), [&](std::size_t cid) {
    if (p.context_size(static_cast<int>(cid)) >= p.k) return;
    const Context& c = p.contexts[cid];
    std::vector<std::vector<int>> keep;
    for (const auto& vals : f.sections[cid]) {
      bool ok = true;
      for (const auto& [a, pid] : p.parents[cid]) {
        (void)a;
        bool extends = false;
        const Context& pc = p.contexts[static_cast<std::size_t>(pid)];
        for (const auto& pv : f.sections[static_cast<std::size_t>(pid)]) {
          if (restrict_values(pc, pv, c) == vals) {
            extends = true;
            break;
          }
        }
        if (!extends) {
          ok = false;
          break;
        }
      }
      if (ok) keep.push_back(vals);
    }
    out.sections[cid] = std::move(keep);
  });
  return out;
}

/// One closure pass: keep a section only if each one-point restriction is
/// present in the current family.
inline PresheafFamily down_step(const PresheafFamily& f) {
  PresheafFamily out = f;
  const ContextPoset& p = *f.poset;
  parallel_for(p.contexts.size(), [&](std::size_t cid) {
    const Context& c = p.contexts[cid];
    if (c.empty()) return;
    std::vector<std::vector<int>> keep;
    for (const auto& vals : f.sections[cid]) {
      bool ok = true;
      for (const auto& [a, chid] : p.children[cid]) {
        (void)a;
        const Context& cc = p.contexts[static_cast<std::size_t>(chid)];
        if (!f.contains(chid, restrict_values(c, vals, cc))) {
          ok = false;
          break;
        }
      }
      if (ok) keep.push_back(vals);
    }
    out.sections[cid] = std::move(keep);
  });
  return out;
}

struct CoflasquifyStats {
  int rounds = 0;                  // applications of down_step(up_step(.)) until a repeat
  std::vector<std::size_t> trace;  // total section counts: initial, then one entry per round
};

/// The coflasquification S^<>: greatest flasque restriction-closed
/// subfamily, computed by iterating down_step(up_step(.)) to its fixpoint.
/// `on_round(family)` (when given) observes each round's result.
inline PresheafFamily coflasquify(
    const PresheafFamily& f, CoflasquifyStats* stats = nullptr,
    const std::function<void(const PresheafFamily&)>& on_round = nullptr) {
  PresheafFamily cur = f;
  int rounds = 0;
  std::vector<std::size_t> trace{cur.total_sections()};
  while (true) {
    PresheafFamily next = down_step(up_step(cur));
    ++rounds;
    trace.push_back(next.total_sections());
    if (on_round) on_round(next);
    bool fixed = next == cur;
    cur = std::move(next);
    if (fixed) break;
  }
  if (stats) {
    stats->rounds = rounds;
    stats->trace = std::move(trace);
  }
  return cur;
}

/// Are all restriction maps F(C') -> F(C), C subseteq C', surjective?
/// Checked directly over every nested pair of contexts.
inline bool is_flasque(const PresheafFamily& f) {
  const ContextPoset& p = *f.poset;
  for (std::size_t big = 0; big < p.contexts.size(); ++big) {
    for (std::size_t small = 0; small < p.contexts.size(); ++small) {
      if (big == small || !is_subset(p.contexts[small], p.contexts[big])) continue;
      std::vector<std::vector<int>> restricted;
      restricted.reserve(f.sections[big].size());
      for (const auto& vals : f.sections[big])
        restricted.push_back(restrict_values(p.contexts[big], vals, p.contexts[small]));
      sort_unique(restricted);
      for (const auto& vals : f.sections[small])
        if (!sorted_contains(restricted, vals)) return false;
    }
  }
  return true;
}

/// Is the family closed under restriction (a subpresheaf of the ambient
/// presheaf)? Checked directly over every nested pair of contexts.
inline bool is_closed(const PresheafFamily& f) {
  const ContextPoset& p = *f.poset;
  for (std::size_t big = 0; big < p.contexts.size(); ++big) {
    for (std::size_t small = 0; small < p.contexts.size(); ++small) {
      if (big == small || !is_subset(p.contexts[small], p.contexts[big])) continue;
      for (const auto& vals : f.sections[big])
        if (!f.contains(static_cast<int>(small),
                        restrict_values(p.contexts[big], vals, p.contexts[small])))
          return false;
    }
  }
  return true;
}

/// Close a family under restriction by adding every restriction of every
/// section (used to build hand-made subfamilies in tests).
inline PresheafFamily downward_closure(const PresheafFamily& f) {
  PresheafFamily out = f;
  const ContextPoset& p = *f.poset;
  // Walk contexts from largest to smallest, pushing one-point restrictions.
  std::vector<std::size_t> order(p.contexts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return p.contexts[x].size() > p.contexts[y].size();
  });
  for (std::size_t cid : order) {
    const Context& c = p.contexts[cid];
    for (const auto& vals : out.sections[cid]) {
      for (const auto& [a, chid] : p.children[cid]) {
        (void)a;
        const Context& cc = p.contexts[static_cast<std::size_t>(chid)];
        out.sections[static_cast<std::size_t>(chid)].push_back(restrict_values(c, vals, cc));
      }
    }
    for (const auto& [a, chid] : p.children[cid]) {
      (void)a;
      sort_unique(out.sections[static_cast<std::size_t>(chid)]);
    }
  }
  return out;
}

/// A global section: one compatible value tuple per context of the poset.
struct GlobalSection {
  std::vector<std::vector<int>> per_context;
  friend bool operator==(const GlobalSection&, const GlobalSection&) = default;
};

/// Total map induced by a global section, read off the singleton contexts.
inline std::vector<int> to_total_map(const GlobalSection& g, const ContextPoset& p) {
  std::vector<int> out(static_cast<std::size_t>(p.n), -1);
  for (std::size_t cid = 0; cid < p.contexts.size(); ++cid) {
    if (p.contexts[cid].size() == 1)
      out[static_cast<std::size_t>(p.contexts[cid][0])] = g.per_context[cid][0];
  }
  return out;
}

/// All global sections of a restriction-closed family, found by choosing a
/// section at each maximal context, pruning on pairwise overlap agreement,
/// and extending downward by restriction. The number of explored search
/// nodes is capped by the budget.
inline std::vector<GlobalSection> global_sections(const PresheafFamily& f,
                                                  const Budget& budget = budget_from_env()) {
  const ContextPoset& p = *f.poset;
  std::vector<GlobalSection> out;
  std::vector<const std::vector<int>*> chosen(p.maximal.size(), nullptr);
  long long nodes = 0;

  std::function<void(std::size_t)> rec = [&](std::size_t level) {
    if (level == p.maximal.size()) {
      GlobalSection g;
      g.per_context.resize(p.contexts.size());
      for (std::size_t i = 0; i < p.maximal.size(); ++i)
        g.per_context[static_cast<std::size_t>(p.maximal[i])] = *chosen[i];
      for (std::size_t cid = 0; cid < p.contexts.size(); ++cid) {
        int mid = p.covering_maximal[cid];
        std::size_t pos = 0;
        while (p.maximal[pos] != mid) ++pos;
        g.per_context[cid] = restrict_values(p.contexts[static_cast<std::size_t>(mid)],
                                             *chosen[pos], p.contexts[cid]);
        if (!f.contains(static_cast<int>(cid), g.per_context[cid]))
          throw ContractViolation("global_sections: family is not restriction-closed");
      }
      out.push_back(std::move(g));
      return;
    }
    int mid = p.maximal[level];
    const Context& mc = p.contexts[static_cast<std::size_t>(mid)];
    for (const auto& vals : f.sections[static_cast<std::size_t>(mid)]) {
      if (++nodes > budget.max_maps)
        throw BudgetError("global_sections: search exceeds the map budget of " +
                          std::to_string(budget.max_maps));
      bool ok = true;
      for (std::size_t prev = 0; prev < level && ok; ++prev) {
        const Context& pc = p.contexts[static_cast<std::size_t>(p.maximal[prev])];
        Context overlap = intersect_sorted(mc, pc);
        if (restrict_values(mc, vals, overlap) != restrict_values(pc, *chosen[prev], overlap))
          ok = false;
      }
      if (!ok) continue;
      chosen[level] = &vals;
      rec(level + 1);
    }
  };
  rec(0);
  return out;
}

/// Pointwise composite (T o S)(U) = { t o s : s in S(U), t in T(im s) } of a
/// family S over (A,B) with a family T over (B,C).
inline PresheafFamily compose(const PresheafFamily& s, const PresheafFamily& t) {
  if (s.b_size != t.poset->n)
    throw std::invalid_argument("compose: middle universes do not match");
  if (s.poset->k != t.poset->k) throw std::invalid_argument("compose: k must agree");
  PresheafFamily out;
  out.poset = s.poset;
  out.b_size = t.b_size;
  out.mode = (s.mode == SectionMode::iso && t.mode == SectionMode::iso) ? SectionMode::iso
                                                                        : SectionMode::hom;
  out.a_names = s.a_names;
  out.b_names = t.b_names;
  out.sections.resize(s.sections.size());
  for (std::size_t cid = 0; cid < s.sections.size(); ++cid) {
    std::vector<std::vector<int>> acc;
    for (const auto& sv : s.sections[cid]) {
      Context image = sv;
      sort_unique(image);
      int imid = t.poset->id_of(image);
      for (const auto& tv : t.sections[static_cast<std::size_t>(imid)]) {
        std::vector<int> comp(sv.size());
        for (std::size_t i = 0; i < sv.size(); ++i) {
          int pos = detail::position_in(image, sv[i]);
          comp[i] = tv[static_cast<std::size_t>(pos)];
        }
        acc.push_back(std::move(comp));
      }
    }
    sort_unique(acc);
    out.sections[cid] = std::move(acc);
  }
  return out;
}

/// The dagger of an iso-mode family: S^dagger(D) = { t : t^{-1} in
/// S(im t) }, i.e. every section inverted onto its image. Involutive.
inline PresheafFamily dagger(const PresheafFamily& s) {
  if (s.mode != SectionMode::iso)
    throw std::invalid_argument("dagger: only iso-mode families can be inverted");
  PresheafFamily out;
  out.poset = ContextPoset::make(s.b_size, s.poset->k);
  out.b_size = s.poset->n;
  out.mode = SectionMode::iso;
  out.a_names = s.b_names;
  out.b_names = s.a_names;
  out.sections.resize(out.poset->contexts.size());
  for (std::size_t cid = 0; cid < s.sections.size(); ++cid) {
    const Context& c = s.poset->contexts[cid];
    for (const auto& vals : s.sections[cid]) {
      std::vector<std::pair<int, int>> graph(vals.size());  // (value, source)
      for (std::size_t i = 0; i < vals.size(); ++i) graph[i] = {vals[i], c[i]};
      std::sort(graph.begin(), graph.end());
      for (std::size_t i = 1; i < graph.size(); ++i)
        if (graph[i - 1].first == graph[i].first)
          throw std::invalid_argument("dagger: family contains a non-injective section");
      Context image(graph.size());
      std::vector<int> inverse(graph.size());
      for (std::size_t i = 0; i < graph.size(); ++i) {
        image[i] = graph[i].first;
        inverse[i] = graph[i].second;
      }
      out.sections[static_cast<std::size_t>(out.poset->id_of(image))].push_back(
          std::move(inverse));
    }
  }
  for (auto& rows : out.sections) sort_unique(rows);
  return out;
}

}  // namespace cohcsp
