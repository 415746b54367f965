#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cohcsp/cohomology.hpp"
#include "cohcsp/equivalence.hpp"
#include "cohcsp/json_io.hpp"

namespace cohcsp::cli {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Streams fixpoint rounds as JSON lines when --trace is given.
class TraceWriter {
 public:
  void open(const std::string& path) {
    os_.open(path, std::ios::binary | std::ios::trunc);
    if (!os_) throw ParseError("cannot write trace file: " + path);
    active_ = true;
  }
  bool active() const { return active_; }
  void family_row(const PresheafFamily& f) {
    if (!active_) return;
    json row;
    row["round"] = round_++;
    row["total_sections"] = f.total_sections();
    json per = json::object();
    const ContextPoset& p = *f.poset;
    for (std::size_t cid = 0; cid < p.contexts.size(); ++cid) {
      std::vector<std::string> names;
      for (int a : p.contexts[cid])
        names.push_back(cohcsp::detail::name_at(f.a_names, a));
      per[join(names, ",")] = f.sections[cid].size();
    }
    row["per_context"] = std::move(per);
    os_ << row.dump() << "\n";
  }
  void total_row(std::size_t total) {
    if (!active_) return;
    json row;
    row["round"] = round_++;
    row["total_sections"] = total;
    os_ << row.dump() << "\n";
  }

 private:
  std::ofstream os_;
  bool active_ = false;
  int round_ = 0;
};

namespace detail {
inline int emit(std::ostream& out, const std::string& command, bool yes, json body) {
  json doc;
  doc["command"] = command;
  doc["verdict"] = yes ? "yes" : "no";
  doc["detail"] = std::move(body);
  out << doc.dump(2) << "\n";
  return yes ? 0 : 1;
}

inline int emit_error(std::ostream& out, const std::string& command, const std::string& message) {
  json doc;
  doc["command"] = command;
  doc["verdict"] = "error";
  doc["detail"] = json{{"message", message}};
  out << doc.dump(2) << "\n";
  return 2;
}

/// Find the context id named by a comma-separated element list.
inline int context_id(const Structure& a, const ContextPoset& poset, const std::string& names) {
  Context c;
  std::istringstream is(names);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    int e = a.element_index(tok);
    if (e < 0) throw ParseError("unknown element \"" + tok + "\" in --context");
    c.push_back(e);
  }
  sort_unique(c);
  int cid = poset.id_of(c);
  if (cid < 0) throw ParseError("--context does not name a context of the poset");
  return cid;
}

inline std::vector<int> section_values(const Structure& b, const std::string& names,
                                       std::size_t want) {
  std::vector<int> vals;
  std::istringstream is(names);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    int e = b.element_index(tok);
    if (e < 0) throw ParseError("unknown element \"" + tok + "\" in --values");
    vals.push_back(e);
  }
  if (vals.size() != want)
    throw ParseError("--values must list exactly one target element per context element");
  return vals;
}
}  // namespace detail

/// Entry point shared by the binary and the tests. Returns the process
/// exit code: 0 = yes, 1 = no, 2 = error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"presheaf strategies for constraint satisfaction and structure equivalence"};
  app.name("cohcsp");
  app.require_subcommand(1);

  std::string trace_path;
  int jobs = 1;
  app.add_option("--trace", trace_path, "write fixpoint round trace as JSON lines");
  app.add_option("--jobs", jobs, "concurrent predicate evaluations per round")
      ->check(CLI::PositiveNumber);

  std::string file_a, file_b, mode = "hom", logic, kind, spec_file, out_file, out_template;
  std::string context_arg, values_arg, what, matrix_out;
  int k = 2, n = 0;
  bool one_step = false;

  auto* hom = app.add_subcommand("hom", "brute-force map existence (oracle)");
  hom->add_option("A", file_a, "instance structure JSON")->required();
  hom->add_option("B", file_b, "target structure JSON")->required();
  hom->add_option("--mode", mode, "hom | embed | iso")
      ->check(CLI::IsMember({"hom", "embed", "iso"}));

  auto* kcon = app.add_subcommand("kcon", "strong k-consistency");
  kcon->add_option("--k", k, "pebble count")->required()->check(CLI::PositiveNumber);
  kcon->add_option("A", file_a, "instance structure JSON")->required();
  kcon->add_option("B", file_b, "target structure JSON")->required();

  auto* cohcon = app.add_subcommand("cohcon", "cohomological k-consistency");
  cohcon->add_option("--k", k, "pebble count")->required()->check(CLI::PositiveNumber);
  cohcon->add_flag("--one-step", one_step, "stop after the first reduction round");
  cohcon->add_option("A", file_a, "instance structure JSON")->required();
  cohcon->add_option("B", file_b, "target structure JSON")->required();

  auto* csc = app.add_subcommand("csc", "cohomological strong contextuality of the k-strategy");
  csc->add_option("--k", k, "pebble count")->required()->check(CLI::PositiveNumber);
  csc->add_option("A", file_a, "instance structure JSON")->required();
  csc->add_option("B", file_b, "target structure JSON")->required();

  auto* avn = app.add_subcommand("avn", "all-versus-nothing check over a linear template");
  avn->add_option("--k", k, "pebble count")->required()->check(CLI::PositiveNumber);
  avn->add_option("A", file_a, "instance structure JSON")->required();
  avn->add_option("T", file_b, "linear template JSON")->required();

  auto* equiv = app.add_subcommand("equiv", "logical equivalence deciders");
  equiv->add_option("--logic", logic, "el | lk | ck | z")
      ->required()
      ->check(CLI::IsMember({"el", "lk", "ck", "z"}));
  equiv->add_option("--k", k, "variable count")->required()->check(CLI::PositiveNumber);
  equiv->add_option("A", file_a, "structure JSON")->required();
  equiv->add_option("B", file_b, "structure JSON")->required();

  auto* wl = app.add_subcommand("wl", "color-refinement oracle (1-WL)");
  wl->add_option("A", file_a, "structure JSON")->required();
  wl->add_option("B", file_b, "structure JSON")->required();

  auto* gen = app.add_subcommand("gen", "generate fixture structures");
  gen->add_option("--kind", kind, "clique | cycle | union | linear")
      ->required()
      ->check(CLI::IsMember({"clique", "cycle", "union", "linear"}));
  gen->add_option("--n", n, "size for clique/cycle");
  gen->add_option("--spec", spec_file, "linear system JSON for --kind linear");
  gen->add_option("--out", out_file, "also write the structure (or instance) here");
  gen->add_option("--out-template", out_template, "also write the template here (linear)");
  gen->add_option("A", file_a, "left structure for --kind union");
  gen->add_option("B", file_b, "right structure for --kind union");

  auto* dump = app.add_subcommand("dump", "diagnostic dumps");
  dump->add_option("--what", what, "strategy | ztest | cotest")
      ->required()
      ->check(CLI::IsMember({"strategy", "ztest", "cotest"}));
  dump->add_option("--k", k, "pebble count")->required()->check(CLI::PositiveNumber);
  dump->add_option("--context", context_arg, "comma-separated instance elements");
  dump->add_option("--values", values_arg, "comma-separated target elements");
  dump->add_option("--matrix-out", matrix_out, "write the system in MatrixMarket form");
  dump->add_option("A", file_a, "instance structure JSON")->required();
  dump->add_option("B", file_b, "target structure JSON")->required();

  std::vector<const char*> argv;
  argv.push_back("cohcsp");
  for (const auto& a : args) argv.push_back(a.c_str());
  std::string command = "(none)";
  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      err << e.what() << "\n\n" << app.help();
      return detail::emit_error(out, command, std::string("usage: ") + e.what());
    }
    command = app.get_subcommands().front()->get_name();
    settings::jobs() = jobs;
    TraceWriter trace;
    if (!trace_path.empty()) trace.open(trace_path);
    Budget budget = budget_from_env();

    if (hom->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      MapMode m = mode == "hom" ? MapMode::hom : mode == "embed" ? MapMode::embed : MapMode::iso;
      auto maps = brute_force(a, b, m, budget);
      json body;
      body["mode"] = mode;
      body["count"] = maps.size();
      json witnesses = json::array();
      for (const auto& f : maps) {
        json w = json::object();
        for (std::size_t i = 0; i < f.size(); ++i)
          w[a.universe[i]] = b.universe[static_cast<std::size_t>(f[i])];
        witnesses.push_back(std::move(w));
      }
      body["witnesses"] = std::move(witnesses);
      return detail::emit(out, command, !maps.empty(), std::move(body));
    }

    if (kcon->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      CoflasquifyStats stats;
      PresheafFamily sbar =
          coflasquify(build_base(a, b, k, SectionMode::hom, budget), &stats,
                      [&](const PresheafFamily& f) { trace.family_row(f); });
      json body;
      body["k"] = k;
      body["rounds"] = stats.rounds;
      body["trace"] = stats.trace;
      body["total_sections"] = sbar.total_sections();
      return detail::emit(out, command, !sbar.empty(), std::move(body));
    }

    if (cohcon->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      CohConsistencyResult res = coh_k_consistency(
          a, b, k, one_step, budget, [&](const PresheafFamily& f) { trace.family_row(f); });
      json body;
      body["k"] = k;
      body["one_step"] = one_step;
      body["strong_k_consistent"] = res.strong_k_consistent;
      body["initial_rounds"] = res.initial_rounds;
      body["reduction_rounds"] = res.reduction_rounds;
      body["trace"] = res.trace;
      body["total_sections"] = res.fixpoint.total_sections();
      return detail::emit(out, command, res.consistent, std::move(body));
    }

    if (csc->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      PresheafFamily sbar = coflasquify(build_base(a, b, k, SectionMode::hom, budget), nullptr,
                                        [&](const PresheafFamily& f) { trace.family_row(f); });
      bool verdict = csc_check(sbar);
      json body;
      body["k"] = k;
      body["total_sections"] = sbar.total_sections();
      body["csc"] = verdict;
      return detail::emit(out, command, verdict, std::move(body));
    }

    if (avn->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      LinearTemplate t = parse_template(read_file(file_b));
      Structure bt = template_structure(t);
      PresheafFamily sbar = coflasquify(build_base(a, bt, k, SectionMode::hom, budget), nullptr,
                                        [&](const PresheafFamily& f) { trace.family_row(f); });
      TheoryExtraction th = extract_theories(a, t, sbar, budget);
      bool verdict = avn_check(th.t_s, a.size());
      auto theory_json = [&](const EquationTheory& theory) {
        json eqs = json::array();
        for (const auto& eq : theory.equations) {
          json terms = json::array();
          for (const auto& [v, c] : eq.terms)
            terms.push_back(json::array({a.universe[static_cast<std::size_t>(v)], c}));
          eqs.push_back(json{{"terms", std::move(terms)}, {"const", eq.constant}});
        }
        return eqs;
      };
      json body;
      body["k"] = k;
      body["modulus"] = t.modulus;
      body["strong_k_consistent"] = !sbar.empty();
      body["t_a_equations"] = th.t_a.equations.size();
      body["t_s_equations"] = th.t_s.equations.size();
      body["t_a_subset_of_t_s"] = std::includes(th.t_s.equations.begin(), th.t_s.equations.end(),
                                                th.t_a.equations.begin(), th.t_a.equations.end());
      body["t_a"] = theory_json(th.t_a);
      json vac = json::array();
      for (int cid : th.vacuous_contexts) {
        std::vector<std::string> names;
        for (int e : sbar.poset->contexts[static_cast<std::size_t>(cid)])
          names.push_back(a.universe[static_cast<std::size_t>(e)]);
        vac.push_back(join(names, ","));
      }
      body["vacuous_contexts"] = std::move(vac);
      body["avn"] = verdict;
      return detail::emit(out, command, verdict, std::move(body));
    }

    if (equiv->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      EquivResult res;
      if (logic == "el") {
        res = el_preorder(a, b, k, budget);
      } else if (logic == "lk") {
        res = lk_equiv(a, b, k, budget);
      } else if (logic == "ck") {
        res = ck_equiv(a, b, k, budget);
      } else {
        res = z_equiv(a, b, k, budget,
                      [&](const PresheafFamily& f) { trace.family_row(f); });
      }
      if (logic != "z")
        for (std::size_t t : res.trace) trace.total_row(t);
      json body;
      body["logic"] = logic;
      body["k"] = k;
      body["rounds"] = res.rounds;
      body["trace"] = res.trace;
      body["total_sections"] = res.fixpoint.total_sections();
      return detail::emit(out, command, res.equivalent, std::move(body));
    }

    if (wl->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      Coloring c = wl_colors(a, b);
      std::vector<int> ma = c.colors_a, mb = c.colors_b;
      std::sort(ma.begin(), ma.end());
      std::sort(mb.begin(), mb.end());
      bool verdict = ma == mb;
      json body;
      body["rounds"] = c.rounds;
      body["classes"] = c.classes;
      body["color_multiset_a"] = ma;
      body["color_multiset_b"] = mb;
      return detail::emit(out, command, verdict, std::move(body));
    }

    if (gen->parsed()) {
      json body;
      body["kind"] = kind;
      auto write_doc = [&](const std::string& path, const std::string& text) {
        if (path.empty()) return;
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw ParseError("cannot write file: " + path);
        os << text;
      };
      if (kind == "clique" || kind == "cycle") {
        if (n <= 0) throw ParseError("--n is required for clique/cycle");
        Structure s = kind == "clique" ? clique(n) : cycle(n);
        body["structure"] = structure_to_json(s);
        write_doc(out_file, serialize_structure(s));
      } else if (kind == "union") {
        if (file_a.empty() || file_b.empty())
          throw ParseError("union needs two structure files");
        Structure a = parse_structure(read_file(file_a));
        Structure b = parse_structure(read_file(file_b));
        Structure s = disjoint_union(a, b);
        body["structure"] = structure_to_json(s);
        write_doc(out_file, serialize_structure(s));
      } else {
        if (spec_file.empty()) throw ParseError("--spec is required for --kind linear");
        LinearSystemSpec spec = parse_linear_system(read_file(spec_file));
        auto [instance, t] = linear_instance(spec);
        body["instance"] = structure_to_json(instance);
        body["template"] = template_to_json(t);
        write_doc(out_file, serialize_structure(instance));
        write_doc(out_template, serialize_template(t));
      }
      return detail::emit(out, command, true, std::move(body));
    }

    if (dump->parsed()) {
      Structure a = parse_structure(read_file(file_a));
      Structure b = parse_structure(read_file(file_b));
      if (what == "strategy") {
        CoflasquifyStats stats;
        PresheafFamily sbar =
            coflasquify(build_base(a, b, k, SectionMode::hom, budget), &stats,
                        [&](const PresheafFamily& f) { trace.family_row(f); });
        json body = family_to_json(sbar, stats.rounds);
        return detail::emit(out, command, !sbar.empty(), std::move(body));
      }
      if (context_arg.empty() || values_arg.empty())
        throw ParseError("--context and --values are required for this dump");
      if (what == "ztest") {
        PresheafFamily sbar = coflasquify(build_base(a, b, k, SectionMode::hom, budget));
        int cid = detail::context_id(a, *sbar.poset, context_arg);
        std::vector<int> vals = detail::section_values(
            b, values_arg, sbar.poset->contexts[static_cast<std::size_t>(cid)].size());
        ZtestSystem sys = build_ztest_system(sbar, cid, vals);
        SolveResult sol = solve_integer(sys.matrix, sys.rhs);
        json body;
        body["context"] = context_arg;
        body["values"] = values_arg;
        body["rows"] = sys.matrix.rows;
        body["cols"] = sys.matrix.cols;
        body["entries"] = sys.matrix.entries.size();
        json columns = json::array();
        for (const auto& [mid, svals] : sys.columns) {
          std::vector<std::string> ctx, val;
          for (int e : sbar.poset->contexts[static_cast<std::size_t>(mid)])
            ctx.push_back(a.universe[static_cast<std::size_t>(e)]);
          for (int e : svals) val.push_back(b.universe[static_cast<std::size_t>(e)]);
          columns.push_back(json{{"context", join(ctx, ",")}, {"section", join(val, ",")}});
        }
        body["columns"] = std::move(columns);
        json rhs = json::array();
        for (const auto& v : sys.rhs) rhs.push_back(static_cast<long long>(v));
        body["rhs"] = std::move(rhs);
        body["matrix_market"] = sys.matrix.matrix_market();
        body["solvable"] = sol.solvable;
        if (!matrix_out.empty()) {
          std::ofstream os(matrix_out, std::ios::binary | std::ios::trunc);
          if (!os) throw ParseError("cannot write file: " + matrix_out);
          os << sys.matrix.matrix_market();
        }
        return detail::emit(out, command, sol.solvable, std::move(body));
      }
      // cotest dump: on the coflasquified partial-isomorphism base.
      PresheafFamily sbar = coflasquify(build_base(a, b, k, SectionMode::iso, budget));
      int cid = detail::context_id(a, *sbar.poset, context_arg);
      std::vector<int> vals = detail::section_values(
          b, values_arg, sbar.poset->contexts[static_cast<std::size_t>(cid)].size());
      BipartiteGraph g = cotest_graph(sbar, cid, vals);
      int matched = max_matching(g);
      json body;
      body["context"] = context_arg;
      body["values"] = values_arg;
      json edges = json::array();
      for (const auto& [x, y] : g.edges)
        edges.push_back(json::array(
            {a.universe[static_cast<std::size_t>(x)], b.universe[static_cast<std::size_t>(y)]}));
      body["edges"] = std::move(edges);
      body["matching_size"] = matched;
      bool perfect = a.size() == b.size() && matched == g.left;
      body["perfect"] = perfect;
      return detail::emit(out, command, perfect, std::move(body));
    }

    return detail::emit_error(out, command, "unhandled subcommand");
  } catch (const std::exception& e) {
    return detail::emit_error(out, command, e.what());
  }
}

}  // namespace cohcsp::cli
