#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cohcsp {

/// Input document failed syntactic or semantic validation. The message names
/// the offending location (JSON path or flag) and the constraint violated.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A combinatorial enumeration would exceed the configured budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An internal postcondition failed (verification after a solve, a
/// deflationary operator that grew a family, ...). Indicates a bug, never
/// bad user input.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Enumeration cap shared by the brute-force search, base-family
/// construction and global-section enumeration. The default of 10^7
/// candidate maps can be overridden through the COHCSP_BUDGET environment
/// variable.
struct Budget {
  long long max_maps = 10'000'000;
};

inline Budget budget_from_env() {
  Budget b;
  if (const char* raw = std::getenv("COHCSP_BUDGET")) {
    char* end = nullptr;
    long long v = std::strtoll(raw, &end, 10);
    if (end == raw || *end != '\0' || v <= 0)
      throw ParseError("COHCSP_BUDGET must be a positive integer, got '" + std::string(raw) + "'");
    b.max_maps = v;
  }
  return b;
}

inline bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

namespace settings {
/// Upper bound on concurrent per-context predicate evaluations (CLI --jobs).
inline int& jobs() {
  static int n = 1;
  return n;
}
}  // namespace settings

/// Run fn(0..n-1), splitting the range over at most settings::jobs() threads.
/// Each index owns its output slot, so results are deterministic regardless
/// of the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int jobs = settings::jobs();
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += nthreads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Is `sub` a subset of `super`? Both must be sorted and duplicate-free.
inline bool is_subset(const std::vector<int>& sub, const std::vector<int>& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

inline std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Membership test in a sorted, duplicate-free vector of rows.
template <class T>
bool sorted_contains(const std::vector<T>& rows, const T& x) {
  return std::binary_search(rows.begin(), rows.end(), x);
}

/// Sort and deduplicate in place.
template <class T>
void sort_unique(std::vector<T>& rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace cohcsp
