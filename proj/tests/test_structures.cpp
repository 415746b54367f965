#include <catch_amalgamated.hpp>

#include "cohcsp/json_io.hpp"
#include "cohcsp/structure.hpp"
#include "support/corpus.hpp"

using namespace cohcsp;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("structure JSON parse/serialize round trip is byte identical", "[structures]") {
  Structure k3 = clique(3);
  std::string text = serialize_structure(k3);
  Structure back = parse_structure(text);
  REQUIRE(back.universe == k3.universe);
  REQUIRE(back.tuples == k3.tuples);
  REQUIRE(back.sigma == k3.sigma);
  REQUIRE(serialize_structure(back) == text);
}

TEST_CASE("structure parser accepts handwritten documents", "[structures]") {
  const char* text = R"({
    "vocabulary": [{"name": "E", "arity": 2}],
    "universe": ["a", "b"],
    "relations": {"E": [["a", "b"], ["b", "a"]]}
  })";
  Structure s = parse_structure(text);
  REQUIRE(s.universe == std::vector<std::string>{"a", "b"});
  REQUIRE(s.tuples[0] == std::set<std::vector<int>>{{0, 1}, {1, 0}});

  // A missing "relations" key means every relation is empty.
  Structure empty = parse_structure(R"({
    "vocabulary": [{"name": "E", "arity": 2}],
    "universe": ["a"]
  })");
  REQUIRE(empty.tuples[0].empty());
}

TEST_CASE("structure parser rejects malformed documents", "[structures]") {
  REQUIRE_THROWS_MATCHES(parse_structure("{"), ParseError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("malformed document")));
  REQUIRE_THROWS_MATCHES(
      parse_structure(R"({"vocabulary": [{"name":"E","arity":2}],
                          "universe": ["a","a"]})"),
      ParseError, Catch::Matchers::MessageMatches(ContainsSubstring("duplicate universe element")));
  REQUIRE_THROWS_MATCHES(
      parse_structure(R"({"vocabulary": [{"name":"E","arity":2}], "universe": ["a"],
                          "relations": {"R": []}})"),
      ParseError, Catch::Matchers::MessageMatches(ContainsSubstring("unknown relation")));
  REQUIRE_THROWS_MATCHES(
      parse_structure(R"({"vocabulary": [{"name":"E","arity":2}], "universe": ["a"],
                          "relations": {"E": [["a"]]}})"),
      ParseError, Catch::Matchers::MessageMatches(ContainsSubstring("arity")));
  REQUIRE_THROWS_MATCHES(
      parse_structure(R"({"vocabulary": [{"name":"E","arity":2}], "universe": ["a"],
                          "relations": {"E": [["a","z"]]}})"),
      ParseError, Catch::Matchers::MessageMatches(ContainsSubstring("z")));
}

TEST_CASE("check_section separates partial homomorphisms from partial isomorphisms",
          "[structures]") {
  Structure k3 = clique(3), k2 = clique(2);

  // Edge of K3 onto the edge of K2: a hom and an iso.
  REQUIRE(check_section(k3, k2, Section{{0, 1}, {0, 1}}, SectionMode::hom));
  REQUIRE(check_section(k3, k2, Section{{0, 1}, {0, 1}}, SectionMode::iso));
  // Collapsing an edge: neither (the image pair is a non-edge loop).
  REQUIRE_FALSE(check_section(k3, k2, Section{{0, 1}, {0, 0}}, SectionMode::hom));
  REQUIRE_FALSE(check_section(k3, k2, Section{{0, 1}, {0, 0}}, SectionMode::iso));

  // Non-edge to edge: fine for hom, reflection fails for iso.
  Structure e2 = corpus::empty_graph(2);
  REQUIRE(check_section(e2, k2, Section{{0, 1}, {0, 1}}, SectionMode::hom));
  REQUIRE_FALSE(check_section(e2, k2, Section{{0, 1}, {0, 1}}, SectionMode::iso));

  // The empty section is always valid.
  REQUIRE(check_section(k3, k2, Section{{}, {}}, SectionMode::hom));
  REQUIRE(check_section(k3, k2, Section{{}, {}}, SectionMode::iso));

  // Malformed sections are input errors, not "no".
  REQUIRE_THROWS_AS(check_section(k3, k2, Section{{0, 1}, {0}}, SectionMode::hom),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(check_section(k3, k2, Section{{1, 0}, {0, 1}}, SectionMode::hom),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(check_section(k3, k2, Section{{0, 5}, {0, 1}}, SectionMode::hom),
                    std::invalid_argument);
}

TEST_CASE("induced_substructure keeps inner tuples and element names", "[structures]") {
  Structure c4 = cycle(4);
  Structure sub = induced_substructure(c4, {0, 1});
  REQUIRE(sub.universe == std::vector<std::string>{"0", "1"});
  REQUIRE(sub.tuples[0] == std::set<std::vector<int>>{{0, 1}, {1, 0}});

  Structure diag = induced_substructure(c4, {0, 2});
  REQUIRE(diag.tuples[0].empty());

  REQUIRE_THROWS_AS(induced_substructure(c4, {1, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(induced_substructure(c4, {0, 9}), std::invalid_argument);
}

TEST_CASE("brute_force counts maps of each kind on closed-form examples", "[structures]") {
  Structure k2 = clique(2), k3 = clique(3);
  REQUIRE(brute_force(k3, k3, MapMode::hom).size() == 6);
  REQUIRE(brute_force(k3, k3, MapMode::embed).size() == 6);
  REQUIRE(brute_force(k3, k3, MapMode::iso).size() == 6);
  REQUIRE(brute_force(k2, k3, MapMode::hom).size() == 6);
  REQUIRE(brute_force(k3, k2, MapMode::hom).empty());
  REQUIRE(brute_force(cycle(5), k3, MapMode::hom).size() == 30);
  REQUIRE(brute_force(cycle(6), k3, MapMode::hom).size() == 66);

  // Proper 2-colorings of the even cycle.
  REQUIRE(brute_force(cycle(6), k2, MapMode::hom).size() == 2);

  // Size guard: iso between different cardinalities is empty, not an error.
  REQUIRE(brute_force(cycle(6), corpus::two_triangles(), MapMode::iso).empty());

  // The empty structure has exactly the empty map.
  Structure none;
  none.sigma = corpus::graph_vocabulary();
  none.tuples.resize(1);
  REQUIRE(brute_force(none, k3, MapMode::hom).size() == 1);

  REQUIRE_THROWS_AS(brute_force(k3, k3, MapMode::hom, Budget{10}), BudgetError);
}

TEST_CASE("generators produce the expected graphs", "[structures]") {
  REQUIRE(clique(4).tuples[0].size() == 12);
  REQUIRE(cycle(5).tuples[0].size() == 10);
  REQUIRE_THROWS_AS(clique(0), std::invalid_argument);
  REQUIRE_THROWS_AS(cycle(2), std::invalid_argument);

  Structure u = disjoint_union(clique(2), clique(2));
  REQUIRE(u.universe == std::vector<std::string>{"0", "1", "2", "3"});
  REQUIRE(u.tuples[0] == std::set<std::vector<int>>{{0, 1}, {1, 0}, {2, 3}, {3, 2}});
}

TEST_CASE("linear_instance turns an equation system into an instance/template pair",
          "[structures]") {
  auto [inst, tmpl] = linear_instance(corpus::tri_system());
  REQUIRE(inst.universe == std::vector<std::string>{"x", "y", "z"});
  REQUIRE(tmpl.sigma.relations.size() == 1);
  REQUIRE(tmpl.sigma.relations[0].name == "E");  // one shape shared by all equations
  REQUIRE(tmpl.shapes[0] == LinearEquationShape{{1, 1}, 1});
  REQUIRE(inst.tuples[0] == std::set<std::vector<int>>{{0, 1}, {0, 2}, {1, 2}});

  // The template structure of x + y = 1 over Z_2 is exactly the 2-clique.
  Structure ts = template_structure(tmpl);
  REQUIRE(ts.universe == std::vector<std::string>{"0", "1"});
  REQUIRE(ts.tuples[0] == clique(2).tuples[0]);

  // Distinct shapes get numbered relation names.
  LinearSystemSpec two;
  two.modulus = 2;
  two.variables = {"x", "y"};
  two.equations.push_back({{0, 1}, {1, 1}, 0});
  two.equations.push_back({{0}, {1}, 1});
  auto [inst2, tmpl2] = linear_instance(two);
  REQUIRE(tmpl2.sigma.relations.size() == 2);
  REQUIRE(tmpl2.sigma.relations[0].name == "E1");
  REQUIRE(tmpl2.sigma.relations[1].name == "E2");
  REQUIRE(inst2.tuples[1] == std::set<std::vector<int>>{{0}});
}

TEST_CASE("template validation enforces the prime-field contract", "[structures]") {
  REQUIRE(is_prime(2));
  REQUIRE(is_prime(46337));
  REQUIRE_FALSE(is_prime(1));
  REQUIRE_FALSE(is_prime(4));
  REQUIRE_FALSE(is_prime(46341));

  LinearTemplate t;
  t.modulus = 4;
  t.sigma.relations = {{"E", 2}};
  t.shapes = {{{1, 1}, 1}};
  REQUIRE_THROWS_MATCHES(validate_template(t), ParseError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("prime")));
  t.modulus = 3;
  t.shapes = {{{1}, 1}};
  REQUIRE_THROWS_MATCHES(validate_template(t), ParseError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("arity")));
  t.shapes = {{{1, 3}, 1}};
  REQUIRE_THROWS_AS(validate_template(t), ParseError);
}

TEST_CASE("template JSON round trip preserves the document", "[structures]") {
  auto [inst, tmpl] = linear_instance(corpus::tri_system());
  (void)inst;
  std::string text = serialize_template(tmpl);
  LinearTemplate back = parse_template(text);
  REQUIRE(back == tmpl);
  REQUIRE(serialize_template(back) == text);
}

TEST_CASE("satisfying assignments are exactly the homomorphisms into the template structure",
          "[structures]") {
  // The unsatisfiable triangle has no homomorphism...
  auto [inst, tmpl] = linear_instance(corpus::tri_system());
  REQUIRE(brute_force(inst, template_structure(tmpl), MapMode::hom).empty());

  // ... and on random systems the hom count equals the solution count.
  std::mt19937_64 rng(20260822);
  for (int trial = 0; trial < 12; ++trial) {
    int p = trial % 2 == 0 ? 2 : 3;
    LinearSystemSpec spec = corpus::random_linear_system(rng, p, 6, 8, 3);
    auto [a, t] = linear_instance(spec);
    std::size_t homs = brute_force(a, template_structure(t), MapMode::hom).size();
    REQUIRE(homs == corpus::count_solutions(spec));
  }
}
