#pragma once

// Factor graphs over discrete label sequences, structured examples, and
// assignment enumeration. All types are immutable after construction and safe
// to share across threads.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sop/sparse.hpp"

namespace sop {

inline constexpr std::int64_t kDefaultEnumerationCap = 10'000'000;

// labels[k] in {0, ..., alphabet_sizes[k] - 1}; indices are 0-based
// internally and in the file format.
using LabelAssignment = std::vector<int>;

struct FactorGraph {
  int num_vars = 0;
  std::vector<int> alphabet_sizes;          // size num_vars
  std::vector<std::vector<int>> factors;    // each strictly increasing, nonempty
  bool uniform_d = true;                    // all factors share |Y_f|
  std::int64_t max_factor_card = 1;         // d = max_f |Y_f|
};

inline std::int64_t factor_card(const FactorGraph& g, int f) {
  std::int64_t c = 1;
  for (int k : g.factors[static_cast<std::size_t>(f)])
    c *= g.alphabet_sizes[static_cast<std::size_t>(k)];
  return c;
}

inline FactorGraph make_graph(int num_vars, std::vector<int> alphabet_sizes,
                              std::vector<std::vector<int>> factors) {
  if (num_vars < 1) throw std::invalid_argument("graph: num_vars must be >= 1");
  if (static_cast<int>(alphabet_sizes.size()) != num_vars)
    throw std::invalid_argument("graph: alphabet_sizes size mismatch");
  for (int c : alphabet_sizes)
    if (c < 1) throw std::invalid_argument("graph: alphabet size must be >= 1");
  if (factors.empty()) throw std::invalid_argument("graph: needs at least one factor");
  for (const auto& nf : factors) {
    if (nf.empty()) throw std::invalid_argument("graph: empty factor neighborhood");
    for (std::size_t i = 0; i < nf.size(); ++i) {
      if (nf[i] < 0 || nf[i] >= num_vars)
        throw std::invalid_argument("graph: factor node index out of range");
      if (i > 0 && nf[i] <= nf[i - 1])
        throw std::invalid_argument("graph: factor nodes must be strictly increasing");
    }
  }
  FactorGraph g;
  g.num_vars = num_vars;
  g.alphabet_sizes = std::move(alphabet_sizes);
  g.factors = std::move(factors);
  g.max_factor_card = 0;
  std::int64_t first = -1;
  for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
    const std::int64_t c = factor_card(g, f);
    if (first < 0) first = c;
    if (c != first) g.uniform_d = false;
    if (c > g.max_factor_card) g.max_factor_card = c;
  }
  return g;
}

// Window-v chain: factors {k, ..., k+v-1} for k = 0, ..., l-v.
inline FactorGraph chain_graph(int l, int window, int alphabet) {
  if (window < 2) throw std::invalid_argument("chain_graph: window must be >= 2");
  if (l < window) throw std::invalid_argument("chain_graph: need l >= window");
  if (alphabet < 2) throw std::invalid_argument("chain_graph: alphabet must be >= 2");
  std::vector<std::vector<int>> factors;
  for (int k = 0; k + window <= l; ++k) {
    std::vector<int> nf(static_cast<std::size_t>(window));
    for (int j = 0; j < window; ++j) nf[static_cast<std::size_t>(j)] = k + j;
    factors.push_back(std::move(nf));
  }
  return make_graph(l, std::vector<int>(static_cast<std::size_t>(l), alphabet),
                    std::move(factors));
}

// Detects whether the factor set is a window-v chain (as built by
// chain_graph); returns the window, or nullopt.
inline std::optional<int> chain_window(const FactorGraph& g) {
  const int v = static_cast<int>(g.factors[0].size());
  if (v < 2) return std::nullopt;
  if (static_cast<int>(g.factors.size()) != g.num_vars - v + 1) return std::nullopt;
  for (int k = 0; k < static_cast<int>(g.factors.size()); ++k) {
    const auto& nf = g.factors[static_cast<std::size_t>(k)];
    if (static_cast<int>(nf.size()) != v) return std::nullopt;
    for (int j = 0; j < v; ++j)
      if (nf[static_cast<std::size_t>(j)] != k + j) return std::nullopt;
  }
  for (int c : g.alphabet_sizes)
    if (c != g.alphabet_sizes[0]) return std::nullopt;
  return v;
}

inline void validate_assignment(const FactorGraph& g, const LabelAssignment& y) {
  if (static_cast<int>(y.size()) != g.num_vars)
    throw std::invalid_argument("assignment: length mismatch");
  for (int k = 0; k < g.num_vars; ++k)
    if (y[static_cast<std::size_t>(k)] < 0 ||
        y[static_cast<std::size_t>(k)] >= g.alphabet_sizes[static_cast<std::size_t>(k)])
      throw std::invalid_argument("assignment: label out of range");
}

// Sub-tuple of y on N(f), in node order.
inline std::vector<int> restrict_to_factor(const LabelAssignment& y,
                                           const FactorGraph& g, int f) {
  if (f < 0 || f >= static_cast<int>(g.factors.size()))
    throw std::invalid_argument("restrict: invalid factor index");
  const auto& nf = g.factors[static_cast<std::size_t>(f)];
  std::vector<int> out(nf.size());
  for (std::size_t i = 0; i < nf.size(); ++i)
    out[i] = y[static_cast<std::size_t>(nf[i])];
  return out;
}

inline std::int64_t assignment_count(const std::vector<int>& sizes) {
  std::int64_t c = 1;
  for (int s : sizes) {
    if (s > 0 && c > std::numeric_limits<std::int64_t>::max() / s)
      return std::numeric_limits<std::int64_t>::max();
    c *= s;
  }
  return c;
}

inline std::int64_t total_card(const FactorGraph& g) {
  return assignment_count(g.alphabet_sizes);
}

// Lexicographic index (last coordinate fastest) <-> assignment.
inline std::vector<int> index_to_assignment(std::int64_t index,
                                            const std::vector<int>& sizes) {
  std::vector<int> y(sizes.size());
  for (std::size_t k = sizes.size(); k-- > 0;) {
    y[k] = static_cast<int>(index % sizes[k]);
    index /= sizes[k];
  }
  return y;
}

inline std::int64_t assignment_index(const std::vector<int>& y,
                                     const std::vector<int>& sizes) {
  std::int64_t idx = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) idx = idx * sizes[k] + y[k];
  return idx;
}

// Yields each assignment exactly once in lexicographic order. Throws when the
// product of alphabet sizes exceeds the cap.
inline void for_each_assignment(const std::vector<int>& sizes,
                                const std::function<void(const std::vector<int>&)>& fn,
                                std::int64_t cap = kDefaultEnumerationCap) {
  const std::int64_t total = assignment_count(sizes);
  if (total > cap) throw std::runtime_error("enumeration cap exceeded");
  std::vector<int> y(sizes.size(), 0);
  for (std::int64_t i = 0; i < total; ++i) {
    fn(y);
    for (std::size_t k = sizes.size(); k-- > 0;) {
      if (++y[k] < sizes[k]) break;
      y[k] = 0;
    }
  }
}

inline void for_each_graph_assignment(
    const FactorGraph& g, const std::function<void(const LabelAssignment&)>& fn,
    std::int64_t cap = kDefaultEnumerationCap) {
  for_each_assignment(g.alphabet_sizes, fn, cap);
}

inline std::vector<int> factor_sizes(const FactorGraph& g, int f) {
  const auto& nf = g.factors[static_cast<std::size_t>(f)];
  std::vector<int> sizes(nf.size());
  for (std::size_t i = 0; i < nf.size(); ++i)
    sizes[i] = g.alphabet_sizes[static_cast<std::size_t>(nf[i])];
  return sizes;
}

// ---- structured inputs ----

// l context vectors of equal dimension.
struct ContextSequence {
  std::vector<std::vector<double>> contexts;
};

// Explicit feature vector for every (factor, factor assignment) pair;
// tables[f][assignment_index] with the factor's lexicographic indexing.
struct FeatureTables {
  int dim = 0;
  std::vector<std::vector<SparseVec>> tables;
};

using StructuredInput = std::variant<ContextSequence, FeatureTables>;

struct StructuredExample {
  StructuredInput x;
  LabelAssignment y;
};

inline void validate_input(const FactorGraph& g, const StructuredInput& x) {
  if (const auto* cs = std::get_if<ContextSequence>(&x)) {
    if (static_cast<int>(cs->contexts.size()) != g.num_vars)
      throw std::invalid_argument("input: expected one context per node");
    for (const auto& c : cs->contexts)
      if (c.size() != cs->contexts[0].size())
        throw std::invalid_argument("input: context dimensions differ");
  } else {
    const auto& ft = std::get<FeatureTables>(x);
    if (ft.tables.size() != g.factors.size())
      throw std::invalid_argument("input: expected one table per factor");
    for (std::size_t f = 0; f < ft.tables.size(); ++f)
      if (static_cast<std::int64_t>(ft.tables[f].size()) !=
          factor_card(g, static_cast<int>(f)))
        throw std::invalid_argument("input: table does not cover the factor assignments");
  }
}

}  // namespace sop
