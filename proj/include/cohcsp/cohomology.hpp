#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cohcsp/fixpoint.hpp"
#include "cohcsp/presheaf.hpp"
#include "cohcsp/structure.hpp"
#include "cohcsp/zlin.hpp"

namespace cohcsp {

/// The exact linear system deciding whether an anchored section extends to
/// a Z-linear compatible family: one variable per (maximal context,
/// section), one compatibility row per unordered pair of distinct maximal
/// contexts and overlap section, and one anchor row per section of the
/// anchor context. All matrix entries lie in {-1, 0, 1}.
struct ZtestSystem {
  SparseIntMatrix matrix;
  std::vector<Int> rhs;
  std::vector<std::pair<int, std::vector<int>>> columns;  // (maximal cid, section values)
  int anchor_cid = -1;
  std::vector<int> anchor_values;
};

namespace detail {
struct ZtestColumns {
  std::vector<std::pair<int, std::vector<int>>> columns;
  std::map<int, int> col_base;  // maximal cid -> first column index
};

inline ZtestColumns ztest_columns(const PresheafFamily& f) {
  ZtestColumns out;
  for (int mid : f.poset->maximal) {
    out.col_base[mid] = static_cast<int>(out.columns.size());
    for (const auto& vals : f.sections[static_cast<std::size_t>(mid)])
      out.columns.push_back({mid, vals});
  }
  return out;
}
}  // namespace detail

/// Build the full Ztest system for anchor section `values` at maximal
/// context `cid`. Compatibility rows are emitted for every unordered pair
/// of distinct maximal contexts in (id, id, overlap-section) order; anchor
/// rows follow in section order with right-hand side 1 at the anchor.
inline ZtestSystem build_ztest_system(const PresheafFamily& f, int cid,
                                      const std::vector<int>& values) {
  const ContextPoset& p = *f.poset;
  if (std::find(p.maximal.begin(), p.maximal.end(), cid) == p.maximal.end())
    throw std::invalid_argument("ztest: anchor context must be maximal");
  if (!f.contains(cid, values))
    throw std::invalid_argument("ztest: anchor section must belong to the family");

  ZtestSystem sys;
  auto cols = detail::ztest_columns(f);
  sys.columns = cols.columns;
  sys.anchor_cid = cid;
  sys.anchor_values = values;

  struct Row {
    std::vector<std::pair<int, int>> entries;  // (col, +-1)
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < p.maximal.size(); ++i) {
    for (std::size_t j = i + 1; j < p.maximal.size(); ++j) {
      int c1 = p.maximal[i], c2 = p.maximal[j];
      const Context& ctx1 = p.contexts[static_cast<std::size_t>(c1)];
      const Context& ctx2 = p.contexts[static_cast<std::size_t>(c2)];
      Context overlap = intersect_sorted(ctx1, ctx2);
      int did = p.id_of(overlap);
      for (const auto& r : f.sections[static_cast<std::size_t>(did)]) {
        Row row;
        int base1 = cols.col_base.at(c1);
        const auto& secs1 = f.sections[static_cast<std::size_t>(c1)];
        for (std::size_t s = 0; s < secs1.size(); ++s)
          if (restrict_values(ctx1, secs1[s], overlap) == r)
            row.entries.push_back({base1 + static_cast<int>(s), 1});
        int base2 = cols.col_base.at(c2);
        const auto& secs2 = f.sections[static_cast<std::size_t>(c2)];
        for (std::size_t s = 0; s < secs2.size(); ++s)
          if (restrict_values(ctx2, secs2[s], overlap) == r)
            row.entries.push_back({base2 + static_cast<int>(s), -1});
        rows.push_back(std::move(row));
      }
    }
  }

  int anchor_base = cols.col_base.at(cid);
  const auto& anchor_secs = f.sections[static_cast<std::size_t>(cid)];
  sys.matrix.rows = static_cast<int>(rows.size() + anchor_secs.size());
  sys.matrix.cols = static_cast<int>(sys.columns.size());
  sys.rhs.assign(static_cast<std::size_t>(sys.matrix.rows), 0);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [c, v] : rows[r].entries) sys.matrix.add(static_cast<int>(r), c, v);
  for (std::size_t s = 0; s < anchor_secs.size(); ++s) {
    int r = static_cast<int>(rows.size() + s);
    sys.matrix.add(r, anchor_base + static_cast<int>(s), 1);
    if (anchor_secs[s] == values) sys.rhs[static_cast<std::size_t>(r)] = 1;
  }
  sys.matrix.canonicalize();
  return sys;
}

/// Does the anchored section extend to a Z-linear compatible family? The
/// definitional route: build the full system and solve it exactly.
inline bool ztest(const PresheafFamily& f, int cid, const std::vector<int>& values) {
  ZtestSystem sys = build_ztest_system(f, cid, values);
  return solve_integer(sys.matrix, sys.rhs).solvable;
}

/// Batch evaluator answering Ztest queries for every section of a family.
///
/// The compatibility rows are shared by all queries on one family, so the
/// evaluator computes the kernel lattice of a rationally equivalent row set
/// once and then answers the query for anchor (C0, s) as the lattice
/// membership e_s in pi_C0(kernel), one small Hermite reduction per maximal
/// context. Agreement with the definitional ztest is covered by tests.
///
/// The row set keeps, for each exact overlap context D, only a spanning
/// forest of the graph of maximal-context pairs meeting exactly in D:
/// dropped rows telescope along forest paths, so the rational row space
/// (which determines the homogeneous integer solution set) is unchanged.
class ZtestEvaluator {
 public:
  explicit ZtestEvaluator(const PresheafFamily& f) : family_(f) {
    const ContextPoset& p = *f.poset;
    cols_ = detail::ztest_columns(f);

    struct Edge {
      int i, j, did;
    };
    std::vector<Edge> forest;
    std::map<int, std::vector<int>> uf_per_d;  // union-find parents per overlap context
    auto find = [](std::vector<int>& parent, int x) {
      while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] =
            parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
      }
      return x;
    };
    for (std::size_t i = 0; i < p.maximal.size(); ++i) {
      for (std::size_t j = i + 1; j < p.maximal.size(); ++j) {
        Context overlap = intersect_sorted(p.contexts[static_cast<std::size_t>(p.maximal[i])],
                                           p.contexts[static_cast<std::size_t>(p.maximal[j])]);
        int did = p.id_of(overlap);
        auto [it, fresh] = uf_per_d.try_emplace(did);
        if (fresh) {
          it->second.resize(p.maximal.size());
          std::iota(it->second.begin(), it->second.end(), 0);
        }
        int ri = find(it->second, static_cast<int>(i));
        int rj = find(it->second, static_cast<int>(j));
        if (ri == rj) continue;  // row implied by the forest of this overlap
        it->second[static_cast<std::size_t>(ri)] = rj;
        forest.push_back({static_cast<int>(i), static_cast<int>(j), did});
      }
    }

    SparseIntMatrix mat;
    mat.cols = static_cast<int>(cols_.columns.size());
    std::vector<SparseIntMatrix::Entry> entries;
    int nrows = 0;
    for (const auto& e : forest) {
      int c1 = p.maximal[static_cast<std::size_t>(e.i)];
      int c2 = p.maximal[static_cast<std::size_t>(e.j)];
      const Context& ctx1 = p.contexts[static_cast<std::size_t>(c1)];
      const Context& ctx2 = p.contexts[static_cast<std::size_t>(c2)];
      const Context& d = p.contexts[static_cast<std::size_t>(e.did)];
      const auto& overlap_secs = f.sections[static_cast<std::size_t>(e.did)];
      auto class_of = [&](const Context& ctx, const std::vector<int>& vals) {
        std::vector<int> r = restrict_values(ctx, vals, d);
        auto it = std::lower_bound(overlap_secs.begin(), overlap_secs.end(), r);
        if (it == overlap_secs.end() || *it != r)
          throw std::invalid_argument("ztest: family is not restriction-closed");
        return static_cast<int>(it - overlap_secs.begin());
      };
      int base1 = cols_.col_base.at(c1), base2 = cols_.col_base.at(c2);
      const auto& secs1 = f.sections[static_cast<std::size_t>(c1)];
      const auto& secs2 = f.sections[static_cast<std::size_t>(c2)];
      for (std::size_t s = 0; s < secs1.size(); ++s)
        entries.push_back({nrows + class_of(ctx1, secs1[s]), base1 + static_cast<int>(s), 1});
      for (std::size_t s = 0; s < secs2.size(); ++s)
        entries.push_back({nrows + class_of(ctx2, secs2[s]), base2 + static_cast<int>(s), -1});
      nrows += static_cast<int>(overlap_secs.size());
    }
    mat.rows = nrows;
    mat.entries = std::move(entries);
    mat.canonicalize();
    kernel_ = integer_kernel(mat);

    lattices_.resize(p.maximal.size());
    block_size_.resize(p.maximal.size());
    parallel_for(p.maximal.size(), [&](std::size_t i) {
      int mid = p.maximal[i];
      int base = cols_.col_base.at(mid);
      int block = static_cast<int>(f.sections[static_cast<std::size_t>(mid)].size());
      block_size_[i] = block;
      std::vector<std::vector<Int>> proj(static_cast<std::size_t>(block),
                                         std::vector<Int>(kernel_.size(), 0));
      for (std::size_t v = 0; v < kernel_.size(); ++v)
        for (int r = 0; r < block; ++r)
          proj[static_cast<std::size_t>(r)][v] = kernel_[v][static_cast<std::size_t>(base + r)];
      lattices_[i] = column_echelon(std::move(proj));
    });
    for (std::size_t i = 0; i < p.maximal.size(); ++i)
      lattice_index_[p.maximal[i]] = static_cast<int>(i);
  }

  /// Ztest for the section at position `sidx` of maximal context `cid`:
  /// does the indicator vector e_sidx lie in the projected kernel lattice?
  bool test(int cid, int sidx) const {
    std::size_t i = static_cast<std::size_t>(lattice_index_.at(cid));
    std::vector<Int> e(static_cast<std::size_t>(block_size_[i]), 0);
    e[static_cast<std::size_t>(sidx)] = 1;
    return lattice_member(lattices_[i], std::move(e));
  }

  bool test(int cid, const std::vector<int>& values) const {
    const auto& secs = family_.sections[static_cast<std::size_t>(cid)];
    auto it = std::lower_bound(secs.begin(), secs.end(), values);
    if (it == secs.end() || *it != values)
      throw std::invalid_argument("ztest: anchor section must belong to the family");
    return test(cid, static_cast<int>(it - secs.begin()));
  }

 private:
  PresheafFamily family_;
  detail::ZtestColumns cols_;
  std::vector<std::vector<Int>> kernel_;
  std::vector<ColumnEchelonResult> lattices_;
  std::vector<int> block_size_;
  std::map<int, int> lattice_index_;
};

/// One cohomological reduction pass S^ch: drop every maximal-context
/// section whose Ztest fails; all other contexts pass through. The result
/// is restriction-closed but in general no longer flasque.
inline PresheafFamily cohomological_reduction(const PresheafFamily& f) {
  PresheafFamily out = f;
  if (f.empty()) return out;
  ZtestEvaluator eval(f);
  const ContextPoset& p = *f.poset;
  parallel_for(p.maximal.size(), [&](std::size_t i) {
    int mid = p.maximal[i];
    const auto& secs = f.sections[static_cast<std::size_t>(mid)];
    std::vector<std::vector<int>> keep;
    for (std::size_t s = 0; s < secs.size(); ++s)
      if (eval.test(mid, static_cast<int>(s))) keep.push_back(secs[s]);
    out.sections[static_cast<std::size_t>(mid)] = std::move(keep);
  });
  return out;
}

/// CSC(S): no section at any maximal context passes the Ztest. Empty
/// families are vacuously cohomologically strongly contextual.
inline bool csc_check(const PresheafFamily& f) {
  if (f.empty()) return true;
  ZtestEvaluator eval(f);
  for (int mid : f.poset->maximal) {
    const auto& secs = f.sections[static_cast<std::size_t>(mid)];
    for (std::size_t s = 0; s < secs.size(); ++s)
      if (eval.test(mid, static_cast<int>(s))) return false;
  }
  return true;
}

struct CohConsistencyResult {
  bool consistent = false;       // the requested (one-step or full) verdict
  bool strong_k_consistent = false;  // S^(0) non-empty
  PresheafFamily fixpoint;       // the last family computed
  int initial_rounds = 0;        // coflasquification rounds for S^(0)
  int reduction_rounds = 0;      // reduction+coflasquify iterations performed
  std::vector<std::size_t> trace;  // |S^(0)|, |S^(1)|, ...
};

/// Cohomological k-consistency: starting from S^(0) = coflasquify(H_k(A,B)),
/// iterate S^(m+1) = coflasquify(cohomological_reduction(S^(m))) — to the
/// greatest fixpoint, or for a single step when one_step is set. The
/// verdict is non-emptiness of the last family.
inline CohConsistencyResult coh_k_consistency(
    const Structure& a, const Structure& b, int k, bool one_step = false,
    const Budget& budget = budget_from_env(),
    const std::function<void(const PresheafFamily&)>& on_round = nullptr) {
  CohConsistencyResult res;
  PresheafFamily base = build_base(a, b, k, SectionMode::hom, budget);
  CoflasquifyStats stats;
  PresheafFamily cur = coflasquify(base, &stats);
  res.initial_rounds = stats.rounds;
  res.strong_k_consistent = !cur.empty();
  res.trace.push_back(cur.total_sections());
  if (on_round) on_round(cur);
  while (!cur.empty()) {
    PresheafFamily next = coflasquify(cohomological_reduction(cur));
    ++res.reduction_rounds;
    res.trace.push_back(next.total_sections());
    if (on_round) on_round(next);
    bool fixed = next == cur;
    cur = std::move(next);
    if (fixed || one_step) break;
  }
  res.consistent = !cur.empty();
  res.fixpoint = std::move(cur);
  return res;
}

// ---------------------------------------------------------------------------
// Equation theories of linear templates
// ---------------------------------------------------------------------------

/// A canonical linear equation over Z_p: sorted (variable, coefficient)
/// pairs with coefficients in [1, p), plus a constant. Collapsing repeated
/// variables and dropping zero coefficients happens at construction.
struct CanonicalEquation {
  std::vector<std::pair<int, int>> terms;
  int constant = 0;
  friend bool operator==(const CanonicalEquation&, const CanonicalEquation&) = default;
  friend auto operator<=>(const CanonicalEquation&, const CanonicalEquation&) = default;
};

inline CanonicalEquation make_equation(const std::vector<int>& vars, const std::vector<int>& coeffs,
                                       int constant, int p) {
  std::map<int, int> acc;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    int& c = acc[vars[i]];
    c = (c + coeffs[i]) % p;
  }
  CanonicalEquation eq;
  for (const auto& [v, c] : acc)
    if (c != 0) eq.terms.push_back({v, c});
  eq.constant = ((constant % p) + p) % p;
  return eq;
}

/// A set of canonical equations over the elements of one structure.
struct EquationTheory {
  int modulus = 2;
  std::set<CanonicalEquation> equations;
};

struct TheoryExtraction {
  EquationTheory t_a;  // equations read off the instance tuples
  EquationTheory t_s;  // equations valid across every surviving section
  std::vector<int> vacuous_contexts;  // maximal cids with no sections: every candidate held
};

/// Read off T_A (one equation per instance tuple) and T_S (every equation
/// over at most width(sigma) variables of a maximal context satisfied by
/// all surviving sections there). Contexts with no sections satisfy every
/// candidate vacuously and are flagged.
inline TheoryExtraction extract_theories(const Structure& a, const LinearTemplate& t,
                                         const PresheafFamily& sbar,
                                         const Budget& budget = budget_from_env()) {
  validate_template(t);
  if (!(a.sigma == t.sigma))
    throw std::invalid_argument("extract_theories: instance and template vocabularies differ");
  if (sbar.poset->n != a.size() || sbar.b_size != t.modulus)
    throw std::invalid_argument("extract_theories: family does not match the instance/template pair");
  int p = t.modulus;
  TheoryExtraction out;
  out.t_a.modulus = p;
  out.t_s.modulus = p;

  for (std::size_t r = 0; r < a.tuples.size(); ++r) {
    const auto& shape = t.shapes[r];
    for (const auto& tuple : a.tuples[r])
      out.t_a.equations.insert(make_equation(tuple, shape.coeffs, shape.constant, p));
  }

  const ContextPoset& poset = *sbar.poset;
  int n = a.sigma.width();
  {
    // Candidate count per maximal context: subsets of size <= n, each with
    // every coefficient vector and constant over Z_p.
    long double per_context = 0;
    long double choose = 1;
    for (int m = 0; m <= n && m <= sbar.poset->k; ++m) {
      if (m > 0) choose = choose * (sbar.poset->k - m + 1) / m;
      long double combos = choose;
      for (int i = 0; i < m + 1; ++i) combos *= p;
      per_context += combos;
    }
    if (per_context * static_cast<long double>(poset.maximal.size()) >
        static_cast<long double>(budget.max_maps))
      throw BudgetError("extract_theories: candidate equation count exceeds budget");
  }
  for (int mid : poset.maximal) {
    const Context& c = poset.contexts[static_cast<std::size_t>(mid)];
    const auto& secs = sbar.sections[static_cast<std::size_t>(mid)];
    if (secs.empty()) out.vacuous_contexts.push_back(mid);
    // All subsets of the context with at most n elements...
    std::vector<std::vector<int>> subsets{{}};
    for (std::size_t i = 0; i < c.size(); ++i) {
      std::size_t count = subsets.size();
      for (std::size_t s = 0; s < count; ++s) {
        if (static_cast<int>(subsets[s].size()) >= n) continue;
        std::vector<int> bigger = subsets[s];
        bigger.push_back(static_cast<int>(i));  // positions within the context
        subsets.push_back(std::move(bigger));
      }
    }
    // ... each with every coefficient/constant combination over Z_p.
    for (const auto& subset : subsets) {
      std::vector<int> coeffs(subset.size(), 0);
      while (true) {
        for (int constant = 0; constant < p; ++constant) {
          bool holds = true;
          for (const auto& vals : secs) {
            long long lhs = 0;
            for (std::size_t i = 0; i < subset.size(); ++i)
              lhs += static_cast<long long>(coeffs[i]) *
                     vals[static_cast<std::size_t>(subset[i])];
            if (lhs % p != constant) {
              holds = false;
              break;
            }
          }
          if (holds) {
            std::vector<int> vars(subset.size());
            for (std::size_t i = 0; i < subset.size(); ++i)
              vars[i] = c[static_cast<std::size_t>(subset[i])];
            out.t_s.equations.insert(make_equation(vars, coeffs, constant, p));
          }
        }
        std::size_t pos = 0;
        while (pos < coeffs.size() && coeffs[pos] + 1 == p) coeffs[pos++] = 0;
        if (pos == coeffs.size()) break;
        ++coeffs[pos];
      }
    }
  }
  return out;
}

/// AvN contextuality: is the extracted theory unsatisfiable over Z_p? An
/// empty theory is satisfiable, hence not AvN.
inline bool avn_check(const EquationTheory& theory, int nvars) {
  SparseIntMatrix m;
  m.rows = static_cast<int>(theory.equations.size());
  m.cols = nvars;
  std::vector<Int> rhs;
  int row = 0;
  for (const auto& eq : theory.equations) {
    for (const auto& [v, c] : eq.terms) m.add(row, v, c);
    rhs.push_back(eq.constant);
    ++row;
  }
  m.canonicalize();
  return !solve_mod_p(m, rhs, theory.modulus).solvable;
}

}  // namespace cohcsp
