#pragma once

// Feature maps Psi_f / Psi, linear scoring <w, Psi(x,y)>, the norm constants
// kappa and Psi*, and l2-ball projection.
//
// ChainCrf index layout (the external contract): emission blocks first,
// block for class a occupying indices [a*n, (a+1)*n); transition slots after,
// slot (a,b) at n*c + a*c + b. A factor {k, k+1} with assignment (a, b)
// writes the context x^k into emission block a and 1.0 into slot (a,b); the
// final factor additionally writes x^l into block b, so every node's emission
// is counted exactly once.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sop/graph.hpp"
#include "sop/sparse.hpp"

namespace sop {

struct ChainCrf {
  int context_dim = 0;  // n
  int alphabet = 0;     // c
};

struct Tables {
  int dim = 0;  // D
};

using Featurizer = std::variant<ChainCrf, Tables>;

inline int feature_dim(const Featurizer& fz) {
  if (const auto* cc = std::get_if<ChainCrf>(&fz))
    return cc->context_dim * cc->alphabet + cc->alphabet * cc->alphabet;
  return std::get<Tables>(fz).dim;
}

// Psi_f(x, y_f) as a sparse vector.
inline SparseVec factor_features(const Featurizer& fz, const FactorGraph& g,
                                 const StructuredInput& x, int f,
                                 const std::vector<int>& y_f) {
  if (f < 0 || f >= static_cast<int>(g.factors.size()))
    throw std::invalid_argument("factor_features: invalid factor index");
  if (const auto* cc = std::get_if<ChainCrf>(&fz)) {
    const auto win = chain_window(g);
    if (!win || *win != 2)
      throw std::invalid_argument("ChainCrf features require a window-2 chain graph");
    if (g.alphabet_sizes[0] != cc->alphabet)
      throw std::invalid_argument("ChainCrf: alphabet mismatch");
    const auto* cs = std::get_if<ContextSequence>(&x);
    if (!cs) throw std::invalid_argument("ChainCrf features require a context sequence");
    const int n = cc->context_dim;
    const int c = cc->alphabet;
    if (static_cast<int>(cs->contexts[0].size()) != n)
      throw std::invalid_argument("ChainCrf: context dimension mismatch");
    const int a = y_f[0];
    const int b = y_f[1];
    SparseVec out;
    const auto& xk = cs->contexts[static_cast<std::size_t>(f)];
    for (int j = 0; j < n; ++j)
      if (xk[static_cast<std::size_t>(j)] != 0.0)
        out.push(a * n + j, xk[static_cast<std::size_t>(j)]);
    if (f == static_cast<int>(g.factors.size()) - 1) {
      const auto& xl = cs->contexts[static_cast<std::size_t>(f + 1)];
      for (int j = 0; j < n; ++j)
        if (xl[static_cast<std::size_t>(j)] != 0.0)
          out.push(b * n + j, xl[static_cast<std::size_t>(j)]);
    }
    out.push(n * c + a * c + b, 1.0);
    out.compress();
    return out;
  }
  const auto* ft = std::get_if<FeatureTables>(&x);
  if (!ft) throw std::invalid_argument("Tables features require table inputs");
  const std::int64_t idx = assignment_index(y_f, factor_sizes(g, f));
  return ft->tables[static_cast<std::size_t>(f)][static_cast<std::size_t>(idx)];
}

// Psi(x, y) = sum_f Psi_f(x, y_f), dense.
inline Weights total_features(const Featurizer& fz, const FactorGraph& g,
                              const StructuredInput& x, const LabelAssignment& y) {
  Weights out(static_cast<std::size_t>(feature_dim(fz)), 0.0);
  for (int f = 0; f < static_cast<int>(g.factors.size()); ++f)
    factor_features(fz, g, x, f, restrict_to_factor(y, g, f)).add_to(out);
  return out;
}

// h^w(x, y) = <w, Psi(x, y)>.
inline double score(const Weights& w, const Featurizer& fz, const FactorGraph& g,
                    const StructuredInput& x, const LabelAssignment& y) {
  if (static_cast<int>(w.size()) != feature_dim(fz))
    throw std::invalid_argument("score: weight dimension mismatch");
  double s = 0.0;
  for (int f = 0; f < static_cast<int>(g.factors.size()); ++f)
    s += factor_features(fz, g, x, f, restrict_to_factor(y, g, f)).dot(w);
  return s;
}

// Per-example compiled features: one sparse vector per (factor, factor
// assignment). Built once, reused by every decode in the training loops.
struct FeaturePack {
  std::vector<std::vector<SparseVec>> factors;  // [f][assignment_index]
};

inline FeaturePack compile_features(const Featurizer& fz, const FactorGraph& g,
                                    const StructuredInput& x) {
  FeaturePack pack;
  pack.factors.resize(g.factors.size());
  for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
    const auto sizes = factor_sizes(g, f);
    auto& slot = pack.factors[static_cast<std::size_t>(f)];
    slot.reserve(static_cast<std::size_t>(factor_card(g, f)));
    for_each_assignment(sizes, [&](const std::vector<int>& y_f) {
      slot.push_back(factor_features(fz, g, x, f, y_f));
    });
  }
  return pack;
}

struct Dataset {
  FactorGraph graph;
  Featurizer featurizer;
  std::vector<StructuredExample> examples;
};

struct KappaResult {
  double value = 0.0;
  bool exact = false;
};

// kappa = sup_{x,y} ||Psi(x,y)||_2 over the dataset inputs. Exact when |Y| is
// enumerable; otherwise the triangle-inequality upper bound
// sum_f max_{y_f} ||Psi_f||_2, still valid in every bound formula.
inline KappaResult compute_kappa(const Dataset& ds,
                                 std::int64_t cap = kDefaultEnumerationCap) {
  if (ds.examples.empty()) throw std::invalid_argument("compute_kappa: empty dataset");
  const FactorGraph& g = ds.graph;
  KappaResult r;
  if (total_card(g) <= cap) {
    r.exact = true;
    double best = 0.0;
    for (const auto& ex : ds.examples) {
      const FeaturePack pack = compile_features(ds.featurizer, g, ex.x);
      const int D = feature_dim(ds.featurizer);
      Weights psi(static_cast<std::size_t>(D));
      for_each_graph_assignment(g, [&](const LabelAssignment& y) {
        std::fill(psi.begin(), psi.end(), 0.0);
        for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
          const std::int64_t idx = assignment_index(restrict_to_factor(y, g, f),
                                                    factor_sizes(g, f));
          pack.factors[static_cast<std::size_t>(f)][static_cast<std::size_t>(idx)]
              .add_to(psi);
        }
        const double n2 = norm2_sq(psi);
        if (n2 > best) best = n2;
      }, cap);
    }
    r.value = std::sqrt(best);
  } else {
    r.exact = false;
    double best = 0.0;
    for (const auto& ex : ds.examples) {
      double bound = 0.0;
      for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
        double fm = 0.0;
        for_each_assignment(factor_sizes(g, f), [&](const std::vector<int>& y_f) {
          fm = std::max(fm, std::sqrt(
              factor_features(ds.featurizer, g, ex.x, f, y_f).norm2_sq()));
        }, cap);
        bound += fm;
      }
      best = std::max(best, bound);
    }
    r.value = best;
  }
  return r;
}

// Psi* = max over dataset inputs, factors, and factor assignments of
// ||Psi_f(x, y_f)||_q.
inline double compute_psi_star(const Dataset& ds, double q,
                               std::int64_t cap = kDefaultEnumerationCap) {
  if (ds.examples.empty()) throw std::invalid_argument("compute_psi_star: empty dataset");
  if (!(q > 1.0)) throw std::invalid_argument("compute_psi_star: q must be in (1, inf]");
  double best = 0.0;
  const FactorGraph& g = ds.graph;
  for (const auto& ex : ds.examples) {
    for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
      for_each_assignment(factor_sizes(g, f), [&](const std::vector<int>& y_f) {
        best = std::max(best,
                        factor_features(ds.featurizer, g, ex.x, f, y_f).norm_q(q));
      }, cap);
    }
  }
  return best;
}

// Radial projection onto the l2 ball of radius Lambda.
inline Weights project_l2(Weights w, double Lambda) {
  if (!(Lambda > 0.0)) throw std::invalid_argument("project_l2: Lambda must be > 0");
  const double n = norm2(w);
  if (n > Lambda) scale(w, Lambda / n);
  return w;
}

}  // namespace sop
