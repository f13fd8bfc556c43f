#pragma once

// Exact MAP and loss-augmented decoding: brute-force enumeration for any
// graph, max-sum dynamic programming for window-v chains. Both paths share
// the same tie-break (lexicographically smallest optimal assignment) so
// stability probes are deterministic.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sop/graph.hpp"
#include "sop/loss.hpp"
#include "sop/scoring.hpp"

namespace sop {

// table[f][assignment_index] = h_f(x, y_f); the per-factor assignment index
// is lexicographic (last node fastest).
using ScoreTable = std::vector<std::vector<double>>;

inline ScoreTable score_table(const FeaturePack& pack, const Weights& w) {
  ScoreTable t(pack.factors.size());
  for (std::size_t f = 0; f < pack.factors.size(); ++f) {
    t[f].resize(pack.factors[f].size());
    for (std::size_t a = 0; a < pack.factors[f].size(); ++a)
      t[f][a] = pack.factors[f][a].dot(w);
  }
  return t;
}

inline double assignment_score(const ScoreTable& t, const FactorGraph& g,
                               const LabelAssignment& y) {
  double s = 0.0;
  for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
    const std::int64_t idx =
        assignment_index(restrict_to_factor(y, g, f), factor_sizes(g, f));
    s += t[static_cast<std::size_t>(f)][static_cast<std::size_t>(idx)];
  }
  return s;
}

enum class DecodeMethod { BruteForce, ChainDP };

struct DecodeResult {
  LabelAssignment assignment;
  double value = 0.0;
  DecodeMethod method = DecodeMethod::BruteForce;
};

inline DecodeResult decode_brute(const ScoreTable& t, const FactorGraph& g,
                                 std::int64_t cap = kDefaultEnumerationCap) {
  DecodeResult best;
  bool have = false;
  for_each_graph_assignment(g, [&](const LabelAssignment& y) {
    const double s = assignment_score(t, g, y);
    if (!have || s > best.value) {
      have = true;
      best.assignment = y;
      best.value = s;
    }
  }, cap);
  best.method = DecodeMethod::BruteForce;
  return best;
}

namespace detail {

// Backward table for a window-v chain with uniform alphabet c:
// back[k][s] = max over y_{k+v}..y_{l-1} of the factor scores after factor k,
// where s indexes the overlap labels (y_{k+1}, ..., y_{k+v-1}) base-c.
inline std::vector<std::vector<double>> chain_backward(const ScoreTable& t, int c,
                                                       int v) {
  const int F = static_cast<int>(t.size());
  std::int64_t states = 1;
  for (int i = 0; i < v - 1; ++i) states *= c;
  const std::int64_t tail = states / c;  // c^(v-2)
  std::vector<std::vector<double>> back(
      static_cast<std::size_t>(F),
      std::vector<double>(static_cast<std::size_t>(states), 0.0));
  for (int k = F - 2; k >= 0; --k) {
    for (std::int64_t s = 0; s < states; ++s) {
      double m = -std::numeric_limits<double>::infinity();
      const std::int64_t base = (s % tail) * c;
      for (int b = 0; b < c; ++b) {
        const double cand =
            t[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(s * c + b)] +
            back[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(base + b)];
        if (cand > m) m = cand;
      }
      back[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] = m;
    }
  }
  return back;
}

}  // namespace detail

// Max-sum DP over a window-v chain. The greedy forward selection against the
// backward table returns the lexicographically smallest argmax, matching
// decode_brute's tie-break.
inline DecodeResult decode_chain(const ScoreTable& t, const FactorGraph& g) {
  const auto win = chain_window(g);
  if (!win) throw std::invalid_argument("decode_chain: not a chain graph");
  const int v = *win;
  const int c = g.alphabet_sizes[0];
  const int F = static_cast<int>(g.factors.size());
  const auto back = detail::chain_backward(t, c, v);
  std::int64_t states = 1;
  for (int i = 0; i < v - 1; ++i) states *= c;
  const std::int64_t tail = states / c;

  DecodeResult res;
  res.method = DecodeMethod::ChainDP;
  res.assignment.assign(static_cast<std::size_t>(g.num_vars), 0);

  // First factor: pick the lexicographically smallest full assignment that
  // attains the optimum.
  std::int64_t best_a = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  const std::int64_t first_card = states * c;  // c^v
  for (std::int64_t a = 0; a < first_card; ++a) {
    const double cand = t[0][static_cast<std::size_t>(a)] +
                        back[0][static_cast<std::size_t>(a % states)];
    if (cand > best_val) {
      best_val = cand;
      best_a = a;
    }
  }
  {
    std::int64_t a = best_a;
    for (int j = v - 1; j >= 0; --j) {
      res.assignment[static_cast<std::size_t>(j)] = static_cast<int>(a % c);
      a /= c;
    }
  }
  std::int64_t state = best_a % states;  // labels y_1..y_{v-1}
  for (int k = 1; k < F; ++k) {
    int best_b = 0;
    double m = -std::numeric_limits<double>::infinity();
    const std::int64_t base = (state % tail) * c;
    for (int b = 0; b < c; ++b) {
      const double cand =
          t[static_cast<std::size_t>(k)][static_cast<std::size_t>(state * c + b)] +
          back[static_cast<std::size_t>(k)][static_cast<std::size_t>(base + b)];
      if (cand > m) {
        m = cand;
        best_b = b;
      }
    }
    res.assignment[static_cast<std::size_t>(k + v - 1)] = best_b;
    state = base + best_b;
  }
  res.value = assignment_score(t, g, res.assignment);
  return res;
}

inline DecodeResult decode(const ScoreTable& t, const FactorGraph& g,
                           std::int64_t cap = kDefaultEnumerationCap) {
  if (chain_window(g)) return decode_chain(t, g);
  return decode_brute(t, g, cap);
}

inline DecodeResult decode(const Weights& w, const Featurizer& fz,
                           const FactorGraph& g, const StructuredInput& x,
                           std::int64_t cap = kDefaultEnumerationCap) {
  return decode(score_table(compile_features(fz, g, x), w), g, cap);
}

struct LossAugResult {
  double raw_margin = 0.0;        // max_{y'} L(y',y) - (1/rho)[h(x,y) - h(x,y')]
  LabelAssignment witness;
  DecodeMethod method = DecodeMethod::BruteForce;
};

// Brute path: maximizes over y' != y explicitly.
inline LossAugResult loss_aug_brute(const ScoreTable& t, const FactorGraph& g,
                                    const LabelAssignment& y, const MarginSpec& spec,
                                    std::int64_t cap = kDefaultEnumerationCap) {
  const double inv_rho = 1.0 / spec.rho;
  const double base = inv_rho * assignment_score(t, g, y);
  LossAugResult res;
  bool have = false;
  double best = -std::numeric_limits<double>::infinity();
  for_each_graph_assignment(g, [&](const LabelAssignment& yp) {
    if (yp == y) return;
    const double obj =
        task_loss(spec.loss, yp, y) + inv_rho * assignment_score(t, g, yp);
    if (!have || obj > best) {
      have = true;
      best = obj;
      res.witness = yp;
    }
  }, cap);
  res.raw_margin = best - base;
  res.method = DecodeMethod::BruteForce;
  return res;
}

// DP path: maximizes over all y' (the value at y' = y is exactly 0, which the
// clip floor absorbs). Node loss terms attach to the factor owning the node's
// emission: factor k owns node k, the last factor also owns the trailing
// nodes.
inline LossAugResult loss_aug_chain(const ScoreTable& t, const FactorGraph& g,
                                    const LabelAssignment& y, const MarginSpec& spec) {
  if (!node_decomposable(spec.loss))
    throw std::invalid_argument("loss_aug_chain: task loss is not node-decomposable");
  const auto win = chain_window(g);
  if (!win) throw std::invalid_argument("loss_aug_chain: not a chain graph");
  const int v = *win;
  const int F = static_cast<int>(g.factors.size());
  const double wt = node_loss_weight(spec.loss, g.num_vars);
  const double inv_rho = 1.0 / spec.rho;

  ScoreTable aug(t.size());
  for (int f = 0; f < F; ++f) {
    const auto& nf = g.factors[static_cast<std::size_t>(f)];
    aug[static_cast<std::size_t>(f)].resize(t[static_cast<std::size_t>(f)].size());
    std::int64_t idx = 0;
    for_each_assignment(factor_sizes(g, f), [&](const std::vector<int>& y_f) {
      double a = inv_rho * t[static_cast<std::size_t>(f)][static_cast<std::size_t>(idx)];
      // owned nodes: position 0 always; all positions for the last factor
      a += wt * (y_f[0] != y[static_cast<std::size_t>(nf[0])] ? 1.0 : 0.0);
      if (f == F - 1)
        for (int j = 1; j < v; ++j)
          a += wt * (y_f[static_cast<std::size_t>(j)] !=
                             y[static_cast<std::size_t>(nf[static_cast<std::size_t>(j)])]
                         ? 1.0
                         : 0.0);
      aug[static_cast<std::size_t>(f)][static_cast<std::size_t>(idx)] = a;
      ++idx;
    });
  }
  DecodeResult d = decode_chain(aug, g);
  LossAugResult res;
  res.witness = d.assignment;
  res.raw_margin = d.value - inv_rho * assignment_score(t, g, y);
  res.method = DecodeMethod::ChainDP;
  return res;
}

inline bool chain_dp_eligible(const FactorGraph& g, const MarginSpec& spec) {
  return chain_window(g).has_value() && node_decomposable(spec.loss);
}

inline LossAugResult loss_augmented_decode(const ScoreTable& t, const FactorGraph& g,
                                           const LabelAssignment& y,
                                           const MarginSpec& spec,
                                           std::int64_t cap = kDefaultEnumerationCap) {
  if (chain_dp_eligible(g, spec)) return loss_aug_chain(t, g, y, spec);
  return loss_aug_brute(t, g, y, spec, cap);
}

}  // namespace sop
