#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cohcsp/util.hpp"

namespace cohcsp {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

/// Sparse integer matrix in coordinate form: entries hold unique (r, c)
/// positions with nonzero values, sorted by (r, c).
struct SparseIntMatrix {
  int rows = 0, cols = 0;
  struct Entry {
    int r = 0, c = 0;
    Int v;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  std::vector<Entry> entries;

  friend bool operator==(const SparseIntMatrix&, const SparseIntMatrix&) = default;

  void add(int r, int c, Int v) {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw std::invalid_argument("matrix entry out of range");
    if (v != 0) entries.push_back({r, c, std::move(v)});
  }

  /// Sort entries and combine duplicates (dropping zero sums).
  void canonicalize() {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return std::pair(a.r, a.c) < std::pair(b.r, b.c);
    });
    std::vector<Entry> merged;
    for (auto& e : entries) {
      if (!merged.empty() && merged.back().r == e.r && merged.back().c == e.c)
        merged.back().v += e.v;
      else
        merged.push_back(std::move(e));
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Entry& e) { return e.v == 0; }),
                 merged.end());
    entries = std::move(merged);
  }

  std::vector<std::vector<Int>> dense() const {
    std::vector<std::vector<Int>> m(static_cast<std::size_t>(rows),
                                    std::vector<Int>(static_cast<std::size_t>(cols), 0));
    for (const auto& e : entries)
      m[static_cast<std::size_t>(e.r)][static_cast<std::size_t>(e.c)] += e.v;
    return m;
  }

  std::vector<std::vector<std::pair<int, Int>>> sparse_rows() const {
    std::vector<std::vector<std::pair<int, Int>>> out(static_cast<std::size_t>(rows));
    for (const auto& e : entries) out[static_cast<std::size_t>(e.r)].push_back({e.c, e.v});
    for (auto& row : out)
      std::sort(row.begin(), row.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  std::vector<Int> apply(const std::vector<Int>& x) const {
    if (static_cast<int>(x.size()) != cols)
      throw std::invalid_argument("matrix-vector product: size mismatch");
    std::vector<Int> y(static_cast<std::size_t>(rows), 0);
    for (const auto& e : entries)
      y[static_cast<std::size_t>(e.r)] += e.v * x[static_cast<std::size_t>(e.c)];
    return y;
  }

  /// MatrixMarket coordinate text (1-indexed).
  std::string matrix_market() const {
    std::ostringstream os;
    os << "%%MatrixMarket matrix coordinate integer general\n";
    os << rows << " " << cols << " " << entries.size() << "\n";
    for (const auto& e : entries) os << e.r + 1 << " " << e.c + 1 << " " << e.v << "\n";
    return os.str();
  }
};

namespace detail {
inline Int floor_div(const Int& a, const Int& b) {
  Int q = a / b;  // truncates toward zero
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace detail

/// Column-style Hermite normal form: H = M * U with U unimodular, H in
/// column echelon form with positive pivots; in each pivot's row, entries in
/// earlier columns are reduced into [0, pivot). pivots lists (row, col)
/// positions in echelon order.
struct HnfResult {
  std::vector<std::vector<Int>> h;
  std::vector<std::vector<Int>> u;
  std::vector<std::pair<int, int>> pivots;
};

inline HnfResult hermite_normal_form(const SparseIntMatrix& m) {
  const int rows = m.rows, cols = m.cols;
  HnfResult res;
  res.h = m.dense();
  res.u.assign(static_cast<std::size_t>(cols), std::vector<Int>(static_cast<std::size_t>(cols), 0));
  for (int j = 0; j < cols; ++j) res.u[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = 1;

  auto col_axpy = [&](int dst, int src, const Int& q) {  // col_dst -= q * col_src
    if (q == 0) return;
    for (int r = 0; r < rows; ++r)
      res.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(dst)] -=
          q * res.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(src)];
    for (int r = 0; r < cols; ++r)
      res.u[static_cast<std::size_t>(r)][static_cast<std::size_t>(dst)] -=
          q * res.u[static_cast<std::size_t>(r)][static_cast<std::size_t>(src)];
  };
  auto col_swap = [&](int x, int y) {
    if (x == y) return;
    for (int r = 0; r < rows; ++r)
      std::swap(res.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)],
                res.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)]);
    for (int r = 0; r < cols; ++r)
      std::swap(res.u[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)],
                res.u[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)]);
  };
  auto col_negate = [&](int x) {
    for (int r = 0; r < rows; ++r)
      res.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)] *= -1;
    for (int r = 0; r < cols; ++r)
      res.u[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)] *= -1;
  };

  int pc = 0;
  for (int row = 0; row < rows && pc < cols; ++row) {
    // Euclidean elimination across the free columns of this row.
    while (true) {
      int best = -1;
      for (int j = pc; j < cols; ++j) {
        const Int& v = res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
        if (v == 0) continue;
        if (best < 0 || abs(v) < abs(res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(best)]))
          best = j;
      }
      if (best < 0) break;  // row is zero on the free columns
      bool reduced_all = true;
      const Int pivot_val = res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(best)];
      for (int j = pc; j < cols; ++j) {
        if (j == best) continue;
        const Int& v = res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
        if (v == 0) continue;
        col_axpy(j, best, v / pivot_val);
        if (res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] != 0)
          reduced_all = false;
      }
      if (reduced_all) {
        col_swap(pc, best);
        if (res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(pc)] < 0) col_negate(pc);
        // Reduce earlier columns at this pivot row into [0, pivot).
        const Int& piv = res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(pc)];
        for (int j = 0; j < pc; ++j) {
          const Int& v = res.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
          if (v != 0) col_axpy(j, pc, detail::floor_div(v, piv));
        }
        res.pivots.push_back({row, pc});
        ++pc;
        break;
      }
    }
  }
  return res;
}

/// Column echelon form without the unimodular transform or normalization:
/// enough structure for lattice-membership queries by forward substitution.
/// The column span (hence the lattice generated) is preserved exactly.
struct ColumnEchelonResult {
  std::vector<std::vector<Int>> h;                // rows x cols, echelon columns first
  std::vector<std::pair<int, int>> pivots;        // (row, col), echelon order
};

inline ColumnEchelonResult column_echelon(std::vector<std::vector<Int>> h) {
  ColumnEchelonResult res;
  const int rows = static_cast<int>(h.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(h[0].size());
  int pc = 0;
  for (int row = 0; row < rows && pc < cols; ++row) {
    while (true) {
      int best = -1;
      for (int j = pc; j < cols; ++j) {
        const Int& v = h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
        if (v == 0) continue;
        if (best < 0 ||
            abs(v) < abs(h[static_cast<std::size_t>(row)][static_cast<std::size_t>(best)]))
          best = j;
      }
      if (best < 0) break;
      bool reduced_all = true;
      const Int pivot_val = h[static_cast<std::size_t>(row)][static_cast<std::size_t>(best)];
      for (int j = pc; j < cols; ++j) {
        if (j == best) continue;
        const Int& v = h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
        if (v == 0) continue;
        Int q = v / pivot_val;
        if (q != 0)
          for (int r = row; r < rows; ++r)
            h[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] -=
                q * h[static_cast<std::size_t>(r)][static_cast<std::size_t>(best)];
        if (h[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] != 0) reduced_all = false;
      }
      if (reduced_all) {
        if (best != pc)
          for (int r = 0; r < rows; ++r)
            std::swap(h[static_cast<std::size_t>(r)][static_cast<std::size_t>(pc)],
                      h[static_cast<std::size_t>(r)][static_cast<std::size_t>(best)]);
        res.pivots.push_back({row, pc});
        ++pc;
        break;
      }
    }
  }
  res.h = std::move(h);
  return res;
}

/// Is v in the lattice generated by the columns of an echelon form? Forward
/// substitution over the pivots; exact divisibility required at each one.
inline bool lattice_member(const ColumnEchelonResult& ech, std::vector<Int> v) {
  for (const auto& [row, col] : ech.pivots) {
    const Int& piv = ech.h[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
    const Int& num = v[static_cast<std::size_t>(row)];
    if (num % piv != 0) return false;
    Int q = num / piv;
    if (q != 0)
      for (std::size_t r = 0; r < v.size(); ++r)
        v[r] -= q * ech.h[r][static_cast<std::size_t>(col)];
  }
  for (const auto& x : v)
    if (x != 0) return false;
  return true;
}

enum class UnsolvableReason { rational_infeasible, lattice_infeasible };

struct SolveResult {
  bool solvable = false;
  std::vector<Int> witness;  // satisfies M x = rhs exactly when solvable
  std::optional<UnsolvableReason> reason;
};

/// Exact solver for M x = rhs over the integers. The Hermite transform
/// reduces the system to echelon form whose forced rational solution is
/// computed by forward substitution (the rational presolve); a non-zero
/// residual proves rational infeasibility, a fractional forced coordinate
/// proves the rational solution misses the integer lattice. Witnesses are
/// re-substituted into the original system before being returned.
inline SolveResult solve_integer(const SparseIntMatrix& m, const std::vector<Int>& rhs) {
  if (static_cast<int>(rhs.size()) != m.rows)
    throw std::invalid_argument("solve_integer: rhs size must equal the row count");
  HnfResult hnf = hermite_normal_form(m);

  // Forward substitution in H y = rhs. Pivot coordinates of y are forced;
  // all non-pivot columns of H are zero, so set those coordinates to 0.
  std::vector<Rat> y(static_cast<std::size_t>(m.cols), Rat(0));
  std::vector<Rat> residual(static_cast<std::size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r) residual[static_cast<std::size_t>(r)] = Rat(rhs[static_cast<std::size_t>(r)]);
  std::size_t next_pivot = 0;
  bool integral = true;
  for (int r = 0; r < m.rows; ++r) {
    if (next_pivot < hnf.pivots.size() && hnf.pivots[next_pivot].first == r) {
      int c = hnf.pivots[next_pivot].second;
      Rat val = residual[static_cast<std::size_t>(r)] /
                Rat(hnf.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
      y[static_cast<std::size_t>(c)] = val;
      if (denominator(val) != 1) integral = false;
      for (int rr = r + 1; rr < m.rows; ++rr) {
        const Int& coeff = hnf.h[static_cast<std::size_t>(rr)][static_cast<std::size_t>(c)];
        if (coeff != 0) residual[static_cast<std::size_t>(rr)] -= val * Rat(coeff);
      }
      ++next_pivot;
    } else if (residual[static_cast<std::size_t>(r)] != 0) {
      return SolveResult{false, {}, UnsolvableReason::rational_infeasible};
    }
  }
  if (!integral) return SolveResult{false, {}, UnsolvableReason::lattice_infeasible};

  std::vector<Int> x(static_cast<std::size_t>(m.cols), 0);
  for (int i = 0; i < m.cols; ++i) {
    Int acc = 0;
    for (int j = 0; j < m.cols; ++j) {
      const Rat& yj = y[static_cast<std::size_t>(j)];
      if (yj != 0)
        acc += hnf.u[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * numerator(yj);
    }
    x[static_cast<std::size_t>(i)] = acc;
  }
  if (m.apply(x) != rhs)
    throw ContractViolation("solve_integer: witness failed verification");
  return SolveResult{true, std::move(x), std::nullopt};
}

struct ModSolveResult {
  bool solvable = false;
  std::vector<int> witness;  // values in [0, p)
};

namespace detail {
inline long long mod_norm(const Int& v, int p) {
  Int r = v % p;
  if (r < 0) r += p;
  return static_cast<long long>(r);
}

inline long long mod_inverse(long long a, int p) {
  long long t = 0, new_t = 1, r = p, new_r = a % p;
  while (new_r != 0) {
    long long q = r / new_r;
    t -= q * new_t;
    std::swap(t, new_t);
    r -= q * new_r;
    std::swap(r, new_r);
  }
  if (r != 1) throw ContractViolation("mod_inverse: argument not invertible");
  return ((t % p) + p) % p;
}
}  // namespace detail

/// Gaussian elimination over Z_p (p a prime <= 46337). Returns a particular
/// solution with free variables set to 0 when the system is consistent.
inline ModSolveResult solve_mod_p(const SparseIntMatrix& m, const std::vector<Int>& rhs, int p) {
  if (!is_prime(p) || p > 46337)
    throw std::invalid_argument("solve_mod_p: modulus must be a prime <= 46337");
  if (static_cast<int>(rhs.size()) != m.rows)
    throw std::invalid_argument("solve_mod_p: rhs size must equal the row count");

  std::vector<std::vector<long long>> a(static_cast<std::size_t>(m.rows),
                                        std::vector<long long>(static_cast<std::size_t>(m.cols) + 1, 0));
  for (const auto& e : m.entries) {
    auto& cell = a[static_cast<std::size_t>(e.r)][static_cast<std::size_t>(e.c)];
    cell = (cell + detail::mod_norm(e.v, p)) % p;
  }
  for (int r = 0; r < m.rows; ++r)
    a[static_cast<std::size_t>(r)][static_cast<std::size_t>(m.cols)] =
        detail::mod_norm(rhs[static_cast<std::size_t>(r)], p);

  std::vector<int> pivot_col_of_row;
  int row = 0;
  for (int col = 0; col < m.cols && row < m.rows; ++col) {
    int sel = -1;
    for (int r = row; r < m.rows; ++r)
      if (a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] != 0) {
        sel = r;
        break;
      }
    if (sel < 0) continue;
    std::swap(a[static_cast<std::size_t>(sel)], a[static_cast<std::size_t>(row)]);
    long long inv = detail::mod_inverse(a[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)], p);
    for (int c = col; c <= m.cols; ++c)
      a[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] =
          a[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] * inv % p;
    for (int r = 0; r < m.rows; ++r) {
      if (r == row) continue;
      long long factor = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
      if (factor == 0) continue;
      for (int c = col; c <= m.cols; ++c) {
        auto& cell = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        cell = (cell - factor * a[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] % p + p) % p;
      }
    }
    pivot_col_of_row.push_back(col);
    ++row;
  }
  for (int r = row; r < m.rows; ++r)
    if (a[static_cast<std::size_t>(r)][static_cast<std::size_t>(m.cols)] != 0)
      return ModSolveResult{false, {}};

  ModSolveResult out;
  out.solvable = true;
  out.witness.assign(static_cast<std::size_t>(m.cols), 0);
  for (int r = 0; r < row; ++r)
    out.witness[static_cast<std::size_t>(pivot_col_of_row[static_cast<std::size_t>(r)])] =
        static_cast<int>(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(m.cols)]);
  return out;
}

namespace detail {
using SparseCol = std::vector<std::pair<int, Int>>;  // (index, value), sorted by index

inline Int sparse_dot(const std::vector<std::pair<int, Int>>& row, const SparseCol& col) {
  Int acc = 0;
  std::size_t i = 0, j = 0;
  while (i < row.size() && j < col.size()) {
    if (row[i].first < col[j].first)
      ++i;
    else if (row[i].first > col[j].first)
      ++j;
    else {
      acc += row[i].second * col[j].second;
      ++i;
      ++j;
    }
  }
  return acc;
}

inline SparseCol sparse_axpy(const SparseCol& x, const Int& q, const SparseCol& s) {
  // x - q*s
  SparseCol out;
  out.reserve(x.size() + s.size());
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < s.size()) {
    if (j == s.size() || (i < x.size() && x[i].first < s[j].first)) {
      out.push_back(x[i]);
      ++i;
    } else if (i == x.size() || s[j].first < x[i].first) {
      out.push_back({s[j].first, -q * s[j].second});
      ++j;
    } else {
      Int v = x[i].second - q * s[j].second;
      if (v != 0) out.push_back({x[i].first, std::move(v)});
      ++i;
      ++j;
    }
  }
  return out;
}
}  // namespace detail

/// Z-basis of { x : M x = 0 }, computed by streaming the rows through a
/// unimodular column reduction: a row either consumes one free column as a
/// pivot or (when rationally dependent on earlier rows) leaves every free
/// column untouched. The surviving free columns are the kernel basis.
/// Rows are processed sparsest-first to limit fill-in.
inline std::vector<std::vector<Int>> integer_kernel(const SparseIntMatrix& m) {
  auto rows = m.sparse_rows();
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].size() < rows[b].size(); });

  std::vector<detail::SparseCol> cols(static_cast<std::size_t>(m.cols));
  std::vector<char> is_free(static_cast<std::size_t>(m.cols), 1);
  // Inverted index coordinate -> columns with (possibly stale) support
  // there, so a row only probes columns that can have a non-zero dot.
  std::vector<std::vector<int>> coord_cols(static_cast<std::size_t>(m.cols));
  auto index_col = [&](int j) {
    for (const auto& [idx, val] : cols[static_cast<std::size_t>(j)]) {
      auto& bucket = coord_cols[static_cast<std::size_t>(idx)];
      if (bucket.empty() || bucket.back() != j) bucket.push_back(j);
    }
  };
  for (int j = 0; j < m.cols; ++j) {
    cols[static_cast<std::size_t>(j)] = {{j, Int(1)}};
    index_col(j);
  }
  std::vector<int> stamp(static_cast<std::size_t>(m.cols), -1);

  for (std::size_t oi : order) {
    const auto& row = rows[oi];
    if (row.empty()) continue;
    std::vector<int> candidates;
    for (const auto& [idx, val] : row)
      for (int j : coord_cols[static_cast<std::size_t>(idx)])
        if (is_free[static_cast<std::size_t>(j)] && stamp[static_cast<std::size_t>(j)] != static_cast<int>(oi)) {
          stamp[static_cast<std::size_t>(j)] = static_cast<int>(oi);
          candidates.push_back(j);
        }
    std::sort(candidates.begin(), candidates.end());
    // (column id, current dot value)
    std::vector<std::pair<int, Int>> active;
    for (int j : candidates) {
      Int d = detail::sparse_dot(row, cols[static_cast<std::size_t>(j)]);
      if (d != 0) active.push_back({j, std::move(d)});
    }
    if (active.empty()) continue;  // dependent row
    while (active.size() > 1) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < active.size(); ++i)
        if (abs(active[i].second) < abs(active[best].second)) best = i;
      std::vector<std::pair<int, Int>> next;
      const auto& [bj, bval] = active[best];
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (i == best) continue;
        auto& [j, val] = active[i];
        Int q = val / bval;
        if (q != 0) {
          cols[static_cast<std::size_t>(j)] = detail::sparse_axpy(
              cols[static_cast<std::size_t>(j)], q, cols[static_cast<std::size_t>(bj)]);
          index_col(j);
          val -= q * bval;
        }
        if (val != 0) next.push_back({j, std::move(val)});
      }
      next.push_back(active[best]);
      std::sort(next.begin(), next.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      active = std::move(next);
    }
    // The single surviving column is this row's pivot; retire it.
    is_free[static_cast<std::size_t>(active[0].first)] = 0;
  }

  std::vector<std::vector<Int>> basis;
  for (int j = 0; j < m.cols; ++j) {
    if (!is_free[static_cast<std::size_t>(j)]) continue;
    std::vector<Int> v(static_cast<std::size_t>(m.cols), 0);
    for (const auto& [idx, val] : cols[static_cast<std::size_t>(j)])
      v[static_cast<std::size_t>(idx)] = val;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace cohcsp
