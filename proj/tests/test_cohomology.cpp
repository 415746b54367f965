#include <catch_amalgamated.hpp>

#include <random>

#include "cohcsp/cohomology.hpp"
#include "support/corpus.hpp"

using namespace cohcsp;

namespace {

/// The parity family: all partial maps from a 3-element edgeless structure
/// to a 2-element one, filtered at the pair level by the XOR constraints
/// x+y=0, y+z=0, x+z=1. Flasque, closed, non-empty, yet with no global
/// section — the canonical strictly contextual subfamily.
PresheafFamily parity_family(const PresheafFamily& full) {
  PresheafFamily out = full;
  const ContextPoset& p = *out.poset;
  auto filt = [&](const Context& c, int parity) {
    auto& rows = out.sections[static_cast<std::size_t>(p.id_of(c))];
    std::vector<std::vector<int>> keep;
    for (const auto& v : rows)
      if ((v[0] + v[1]) % 2 == parity) keep.push_back(v);
    rows = std::move(keep);
  };
  filt({0, 1}, 0);
  filt({1, 2}, 0);
  filt({0, 2}, 1);
  return out;
}

}  // namespace

TEST_CASE("ztest system of the clique strategy has the expected shape and verdict",
          "[cohomology]") {
  Structure k3 = clique(3), k2 = clique(2);
  PresheafFamily sbar = coflasquify(build_base(k3, k2, 2, SectionMode::hom));
  REQUIRE(sbar.total_sections() == 13);

  int pair01 = sbar.poset->id_of({0, 1});
  ZtestSystem sys = build_ztest_system(sbar, pair01, {0, 1});
  // 6 variables: two sections at each of three maximal contexts.
  REQUIRE(sys.matrix.cols == 6);
  // 3 context pairs x 2 overlap sections + 2 anchor rows.
  REQUIRE(sys.matrix.rows == 8);
  REQUIRE(sys.columns.size() == 6);
  for (const auto& e : sys.matrix.entries) REQUIRE((e.v == 1 || e.v == -1));
  REQUIRE_FALSE(solve_integer(sys.matrix, sys.rhs).solvable);

  // No section at any maximal context passes, so the strategy is CSC.
  for (int mid : sbar.poset->maximal)
    for (const auto& vals : sbar.sections[static_cast<std::size_t>(mid)])
      REQUIRE_FALSE(ztest(sbar, mid, vals));
  REQUIRE(csc_check(sbar));

  // Anchors must be maximal sections of the family.
  REQUIRE_THROWS_AS(build_ztest_system(sbar, sbar.poset->id_of({0}), {0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(build_ztest_system(sbar, pair01, {0, 0}), std::invalid_argument);
}

TEST_CASE("a single maximal context always passes ztest", "[cohomology]") {
  PresheafFamily f = coflasquify(build_base(clique(2), clique(2), 2, SectionMode::hom));
  REQUIRE(f.poset->maximal.size() == 1);
  int mid = f.poset->maximal[0];
  for (const auto& vals : f.sections[static_cast<std::size_t>(mid)])
    REQUIRE(ztest(f, mid, vals));
  REQUIRE_FALSE(csc_check(f));
  REQUIRE(cohomological_reduction(f) == f);
}

TEST_CASE("batch evaluator agrees with the definitional ztest", "[cohomology]") {
  std::mt19937_64 rng(424242);
  int families = 0, queries = 0;
  auto check_family = [&](const PresheafFamily& f) {
    if (f.empty()) return;
    ++families;
    ZtestEvaluator eval(f);
    for (int mid : f.poset->maximal) {
      const auto& secs = f.sections[static_cast<std::size_t>(mid)];
      for (std::size_t s = 0; s < secs.size(); ++s) {
        INFO("context " << mid << " section " << s);
        bool batch = eval.test(mid, static_cast<int>(s));
        REQUIRE(batch == ztest(f, mid, secs[s]));
        REQUIRE(batch == eval.test(mid, secs[s]));
        ++queries;
      }
    }
  };

  for (int trial = 0; trial < 10; ++trial) {
    Structure a = corpus::random_graph(rng, 4, 0.5);
    Structure b = corpus::random_graph(rng, 3, 0.6);
    check_family(coflasquify(build_base(a, b, 2, SectionMode::hom)));
    check_family(coflasquify(build_base(a, b, 2, SectionMode::iso)));
  }
  for (int trial = 0; trial < 4; ++trial) {
    Structure a = corpus::random_binary(rng, 4, 0.4);
    Structure b = corpus::random_binary(rng, 3, 0.5);
    check_family(coflasquify(build_base(a, b, 3, SectionMode::hom)));
  }
  // The worked example again, through the evaluator.
  check_family(coflasquify(build_base(clique(3), clique(2), 2, SectionMode::hom)));
  REQUIRE(families >= 8);   // the corpus must not collapse to nothing
  REQUIRE(queries >= 100);
}

TEST_CASE("batch evaluator rejects bad inputs", "[cohomology]") {
  PresheafFamily f = coflasquify(build_base(clique(3), clique(2), 2, SectionMode::hom));
  PresheafFamily broken = f;
  int single0 = broken.poset->id_of({0});
  broken.sections[static_cast<std::size_t>(single0)].clear();
  REQUIRE_THROWS_AS(ZtestEvaluator(broken), std::invalid_argument);

  ZtestEvaluator eval(f);
  REQUIRE_THROWS_AS(eval.test(f.poset->id_of({0, 1}), std::vector<int>{0, 0}),
                    std::invalid_argument);
}

TEST_CASE("cohomological reduction filters only the maximal level", "[cohomology]") {
  Structure k3 = clique(3), k2 = clique(2);
  PresheafFamily sbar = coflasquify(build_base(k3, k2, 2, SectionMode::hom));
  PresheafFamily red = cohomological_reduction(sbar);
  for (int mid : sbar.poset->maximal)
    REQUIRE(red.sections[static_cast<std::size_t>(mid)].empty());
  for (std::size_t cid = 0; cid < sbar.sections.size(); ++cid)
    if (sbar.poset->context_size(static_cast<int>(cid)) < 2)
      REQUIRE(red.sections[cid] == sbar.sections[cid]);
  REQUIRE(coflasquify(red).empty());

  PresheafFamily nothing;
  nothing.poset = sbar.poset;
  nothing.b_size = sbar.b_size;
  nothing.sections.resize(sbar.sections.size());
  REQUIRE(cohomological_reduction(nothing).empty());
}

TEST_CASE("cohomological 2-consistency separates K3 -> K2 from true instances", "[cohomology]") {
  Structure k3 = clique(3), k2 = clique(2);

  CohConsistencyResult no = coh_k_consistency(k3, k2, 2);
  REQUIRE(no.strong_k_consistent);
  REQUIRE_FALSE(no.consistent);
  REQUIRE(no.reduction_rounds == 1);
  REQUIRE(no.trace == std::vector<std::size_t>{13, 0});
  REQUIRE(no.fixpoint.empty());

  CohConsistencyResult yes = coh_k_consistency(k2, k2, 2);
  REQUIRE(yes.consistent);
  REQUIRE(yes.strong_k_consistent);
  REQUIRE(yes.trace.front() == yes.trace.back());
  REQUIRE(global_sections(yes.fixpoint).size() == 2);

  // A homomorphism guarantees consistency (soundness).
  CohConsistencyResult cyc = coh_k_consistency(cycle(6), clique(3), 2);
  REQUIRE(cyc.consistent);
}

TEST_CASE("one-step reduction already refutes the XOR triangle", "[cohomology]") {
  auto [inst, tmpl] = linear_instance(corpus::tri_system());
  Structure target = template_structure(tmpl);

  CohConsistencyResult one = coh_k_consistency(inst, target, 2, /*one_step=*/true);
  REQUIRE(one.strong_k_consistent);
  REQUIRE_FALSE(one.consistent);
  REQUIRE(one.reduction_rounds == 1);

  CohConsistencyResult full = coh_k_consistency(inst, target, 2, /*one_step=*/false);
  REQUIRE_FALSE(full.consistent);

  // One-step on a consistent instance stops after a single idle round.
  CohConsistencyResult idle = coh_k_consistency(clique(2), clique(2), 2, /*one_step=*/true);
  REQUIRE(idle.consistent);
  REQUIRE(idle.reduction_rounds == 1);
}

TEST_CASE("ztest is monotone under subfamily inclusion", "[cohomology]") {
  std::mt19937_64 rng(90210);
  int triples = 0;
  for (int trial = 0; trial < 30 && triples < 120; ++trial) {
    Structure a = corpus::random_graph(rng, 4, 0.5);
    Structure b = corpus::random_graph(rng, 3, 0.7);
    PresheafFamily s = coflasquify(build_base(a, b, 2, SectionMode::hom));
    if (s.empty()) continue;
    // Drop one random maximal section; the family stays closed.
    std::vector<int> fat;
    for (int mid : s.poset->maximal)
      if (s.sections[static_cast<std::size_t>(mid)].size() >= 2) fat.push_back(mid);
    if (fat.empty()) continue;
    int mid = fat[std::uniform_int_distribution<std::size_t>(0, fat.size() - 1)(rng)];
    PresheafFamily sub = s;
    auto& rows = sub.sections[static_cast<std::size_t>(mid)];
    rows.erase(rows.begin() +
               static_cast<std::ptrdiff_t>(
                   std::uniform_int_distribution<std::size_t>(0, rows.size() - 1)(rng)));
    for (int m2 : sub.poset->maximal) {
      const auto& secs = sub.sections[static_cast<std::size_t>(m2)];
      for (const auto& vals : secs) {
        ++triples;
        INFO("trial " << trial << " context " << m2);
        // Monotonicity: passing in the subfamily implies passing in the
        // superfamily.
        if (ztest(sub, m2, vals)) REQUIRE(ztest(s, m2, vals));
      }
    }
  }
  REQUIRE(triples >= 100);
}

TEST_CASE("the parity family witnesses strict failure of the ztest converse", "[cohomology]") {
  PresheafFamily full =
      coflasquify(build_base(corpus::empty_graph(3), corpus::empty_graph(2), 2, SectionMode::hom));
  REQUIRE(full.total_sections() == 1 + 3 * 2 + 3 * 4);
  PresheafFamily sub = parity_family(full);
  REQUIRE(is_closed(sub));
  REQUIRE(is_flasque(sub));
  REQUIRE_FALSE(sub.empty());
  // No global section: the XOR constraints sum to 1 over Z_2.
  REQUIRE(global_sections(sub).empty());

  int pair01 = full.poset->id_of({0, 1});
  std::vector<int> anchor{0, 0};
  // The superfamily extends the anchor (any total map through it does)...
  REQUIRE(ztest(full, pair01, anchor));
  // ... but the parity subfamily does not: the strict converse failure.
  REQUIRE_FALSE(ztest(sub, pair01, anchor));
  // In fact every section of the subfamily fails, so it is CSC.
  REQUIRE(csc_check(sub));
}

TEST_CASE("theories of the XOR triangle witness all-versus-nothing", "[cohomology]") {
  auto [inst, tmpl] = linear_instance(corpus::tri_system());
  Structure target = template_structure(tmpl);
  PresheafFamily sbar = coflasquify(build_base(inst, target, 2, SectionMode::hom));
  REQUIRE_FALSE(sbar.empty());

  TheoryExtraction th = extract_theories(inst, tmpl, sbar);
  REQUIRE(th.t_a.equations.size() == 3);
  for (const auto& eq : th.t_a.equations) {
    REQUIRE(eq.terms.size() == 2);
    REQUIRE(eq.constant == 1);
    for (const auto& [v, c] : eq.terms) {
      (void)v;
      REQUIRE(c == 1);
    }
  }
  REQUIRE(std::includes(th.t_s.equations.begin(), th.t_s.equations.end(),
                        th.t_a.equations.begin(), th.t_a.equations.end()));
  REQUIRE(th.vacuous_contexts.empty());
  REQUIRE(avn_check(th.t_a, inst.size()));
  REQUIRE(avn_check(th.t_s, inst.size()));

  // An empty theory is satisfiable, hence not all-versus-nothing.
  REQUIRE_FALSE(avn_check(EquationTheory{2, {}}, 3));
}

TEST_CASE("vacuous contexts are flagged and satisfy every candidate equation", "[cohomology]") {
  LinearSystemSpec spec;
  spec.modulus = 2;
  spec.variables = {"x", "y"};
  spec.equations.push_back({{0}, {0}, 1});  // 0*x = 1: unsatisfiable on its face
  auto [inst, tmpl] = linear_instance(spec);
  Structure target = template_structure(tmpl);
  PresheafFamily sbar = coflasquify(build_base(inst, target, 2, SectionMode::hom));
  REQUIRE(sbar.empty());

  TheoryExtraction th = extract_theories(inst, tmpl, sbar);
  REQUIRE(th.vacuous_contexts.size() == sbar.poset->maximal.size());
  // T_A already contains the contradiction 0 = 1.
  REQUIRE(th.t_a.equations.count(CanonicalEquation{{}, 1}) == 1);
  REQUIRE(std::includes(th.t_s.equations.begin(), th.t_s.equations.end(),
                        th.t_a.equations.begin(), th.t_a.equations.end()));
  REQUIRE(avn_check(th.t_s, inst.size()));
}

TEST_CASE("T_A is contained in T_S whenever the strategy is non-empty", "[cohomology]") {
  std::mt19937_64 rng(777);
  int checked = 0;
  for (int trial = 0; trial < 24 && checked < 10; ++trial) {
    int p = trial % 2 == 0 ? 2 : 3;
    LinearSystemSpec spec = corpus::random_linear_system(rng, p, 5, 6, 2);
    auto [inst, tmpl] = linear_instance(spec);
    Structure target = template_structure(tmpl);
    PresheafFamily sbar =
        coflasquify(build_base(inst, target, inst.sigma.width(), SectionMode::hom));
    if (sbar.empty()) continue;
    TheoryExtraction th = extract_theories(inst, tmpl, sbar);
    INFO("trial " << trial);
    REQUIRE(std::includes(th.t_s.equations.begin(), th.t_s.equations.end(),
                          th.t_a.equations.begin(), th.t_a.equations.end()));
    ++checked;
  }
  REQUIRE(checked >= 5);
}

TEST_CASE("extract_theories validates its inputs", "[cohomology]") {
  auto [inst, tmpl] = linear_instance(corpus::tri_system());
  Structure target = template_structure(tmpl);
  PresheafFamily sbar = coflasquify(build_base(inst, target, 2, SectionMode::hom));

  LinearTemplate other = tmpl;
  other.sigma.relations[0].name = "F";
  REQUIRE_THROWS_AS(extract_theories(inst, other, sbar), std::invalid_argument);

  PresheafFamily wrong = coflasquify(build_base(clique(2), clique(2), 2, SectionMode::hom));
  REQUIRE_THROWS_AS(extract_theories(inst, tmpl, wrong), std::invalid_argument);

  REQUIRE_THROWS_AS(extract_theories(inst, tmpl, sbar, Budget{2}), BudgetError);
}
