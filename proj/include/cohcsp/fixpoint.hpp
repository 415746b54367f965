#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cohcsp/presheaf.hpp"

namespace cohcsp {

/// A named deflationary operator on presheaf families: apply(F) must be a
/// subfamily of F. greatest_fixpoint verifies that and refuses operators
/// that grow a family.
struct DeflationaryOperator {
  std::string name;
  std::function<PresheafFamily(const PresheafFamily&)> apply;
};

struct FixpointReport {
  PresheafFamily result;
  int rounds = 0;                  // operator applications until the first repeat
  std::vector<std::size_t> trace;  // total sections: initial value, then one entry per round
};

namespace detail {
/// Throws unless next is a pointwise subfamily of prev; names the first
/// offending section otherwise.
inline void require_shrinking(const std::string& op, const PresheafFamily& prev,
                              const PresheafFamily& next) {
  if (next.sections.size() != prev.sections.size())
    throw ContractViolation("operator '" + op + "' changed the context poset");
  for (std::size_t cid = 0; cid < next.sections.size(); ++cid) {
    for (const auto& vals : next.sections[cid]) {
      if (!prev.contains(static_cast<int>(cid), vals))
        throw ContractViolation("operator '" + op + "' is not deflationary: it introduced section " +
                                next.describe_section(static_cast<int>(cid), vals) +
                                " at context id " + std::to_string(cid));
    }
  }
}
}  // namespace detail

/// Greatest fixpoint of a deflationary operator by descending iteration
/// from `initial`. Rounds are operator applications, counted until the
/// first application that changes nothing; the trace starts at the initial
/// section count and is strictly decreasing until its final repeated entry.
/// `on_round` (when given) observes each round's family.
inline FixpointReport greatest_fixpoint(
    const PresheafFamily& initial, const DeflationaryOperator& op,
    const std::function<void(const PresheafFamily&)>& on_round = nullptr) {
  FixpointReport report;
  report.trace.push_back(initial.total_sections());
  PresheafFamily cur = initial;
  while (true) {
    PresheafFamily next = op.apply(cur);
    detail::require_shrinking(op.name, cur, next);
    ++report.rounds;
    report.trace.push_back(next.total_sections());
    if (on_round) on_round(next);
    bool fixed = next == cur;
    cur = std::move(next);
    if (fixed) break;
  }
  report.result = std::move(cur);
  return report;
}

enum class PredicateScope { all_contexts, maximal_only };

/// Lift a local predicate phi(F, C, s) to the deflationary operator
/// J_phi(F)(C) = { s in F(C) : phi(F, s) }. With scope maximal_only, only
/// maximal contexts are filtered and all others pass through.
inline DeflationaryOperator from_local_predicate(
    std::string name,
    std::function<bool(const PresheafFamily&, int, const std::vector<int>&)> phi,
    PredicateScope scope) {
  return DeflationaryOperator{
      std::move(name), [phi = std::move(phi), scope](const PresheafFamily& f) {
        PresheafFamily out = f;
        const ContextPoset& p = *f.poset;
        std::vector<std::size_t> targets;
        if (scope == PredicateScope::maximal_only) {
          for (int mid : p.maximal) targets.push_back(static_cast<std::size_t>(mid));
        } else {
          targets.resize(p.contexts.size());
          std::iota(targets.begin(), targets.end(), 0);
        }
        parallel_for(targets.size(), [&](std::size_t i) {
          std::size_t cid = targets[i];
          std::vector<std::vector<int>> keep;
          for (const auto& vals : f.sections[cid])
            if (phi(f, static_cast<int>(cid), vals)) keep.push_back(vals);
          out.sections[cid] = std::move(keep);
        });
        return out;
      }};
}

}  // namespace cohcsp
