#pragma once

// Weakly-dependent document data: stationary finite Markov sources with
// state-specific emitters, exact beta-mixing coefficients, the Dobrushin
// contraction certificate, and the block-separation bound workflow.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "sop/bounds.hpp"
#include "sop/datagen.hpp"
#include "sop/graph.hpp"
#include "sop/margin.hpp"
#include "sop/rng.hpp"
#include "sop/scoring.hpp"

namespace sop::mixing {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> row_times(const std::vector<double>& v, const Matrix& P) {
  const std::size_t n = P.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += v[i] * P[i][j];
  return out;
}

inline Matrix mat_mul(const Matrix& A, const Matrix& B) {
  const std::size_t n = A.size();
  Matrix C(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double a = A[i][k];
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) C[i][j] += a * B[k][j];
    }
  return C;
}

inline Matrix mat_pow(const Matrix& P, int a) {
  Matrix R = P;
  for (int i = 1; i < a; ++i) R = mat_mul(R, P);
  return R;
}

inline double total_variation(const std::vector<double>& p,
                              const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

// Finite stationary Markov source. Emitters are state-specific teacher
// weight vectors over a shared chain scenario; each visited state emits one
// realizable chain example.
struct MarkovSource {
  Matrix transition;
  std::vector<double> stationary;
  ChainScenario scenario;
  std::vector<Weights> state_teachers;
  double teacher_norm = 1.0;

  int n_states() const { return static_cast<int>(transition.size()); }
};

inline std::vector<double> stationary_distribution(const Matrix& P) {
  const std::size_t n = P.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 1'000'000; ++it) {
    std::vector<double> next = row_times(pi, P);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::fabs(next[i] - pi[i]));
    pi = std::move(next);
    if (diff < 1e-15) break;
  }
  return pi;
}

inline MarkovSource make_markov_source(Matrix transition, ChainScenario scenario,
                                       double teacher_norm, std::uint64_t seed) {
  const std::size_t n = transition.size();
  if (n < 1) throw std::invalid_argument("markov: empty transition matrix");
  for (const auto& row : transition) {
    if (row.size() != n) throw std::invalid_argument("markov: matrix not square");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("markov: negative probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("markov: row does not sum to 1");
  }
  // irreducible + aperiodic: P^k strictly positive for some k <= n^2
  {
    Matrix R = transition;
    bool ok = false;
    const int kmax = static_cast<int>(n * n);
    for (int k = 1; k <= kmax && !ok; ++k) {
      bool all = true;
      for (const auto& row : R)
        for (double p : row)
          if (p <= 0.0) all = false;
      ok = all;
      if (!ok && k < kmax) R = mat_mul(R, transition);
    }
    if (!ok)
      throw std::invalid_argument("markov: chain is not irreducible and aperiodic");
  }
  MarkovSource src;
  src.stationary = stationary_distribution(transition);
  {
    const auto check = row_times(src.stationary, transition);
    for (std::size_t i = 0; i < n; ++i)
      if (std::fabs(check[i] - src.stationary[i]) > 1e-10)
        throw std::runtime_error("markov: stationary distribution did not converge");
  }
  src.transition = std::move(transition);
  src.scenario = scenario;
  src.teacher_norm = teacher_norm;
  const FactorGraph g = chain_graph(scenario.num_vars, 2, scenario.alphabet);
  const Featurizer fz = ChainCrf{scenario.context_dim, scenario.alphabet};
  src.state_teachers.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    CounterRng rng(seed, detail::kTeacherStream + s);
    src.state_teachers.push_back(rng.sphere(feature_dim(fz), teacher_norm));
  }
  return src;
}

// m independent documents of J weakly dependent examples each; the latent
// state sequence is kept for the plug-in beta diagnostic.
struct DocumentDataset {
  FactorGraph graph;
  Featurizer featurizer;
  std::vector<std::vector<StructuredExample>> documents;
  std::vector<std::vector<int>> states;
  std::uint64_t seed = 0;
};

inline int sample_categorical(const std::vector<double>& p, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

inline DocumentDataset gen_documents(const MarkovSource& src, int m, int J,
                                     std::uint64_t seed) {
  if (m < 1 || J < 1) throw std::invalid_argument("gen_documents: need m, J >= 1");
  DocumentDataset out;
  out.graph = chain_graph(src.scenario.num_vars, 2, src.scenario.alphabet);
  out.featurizer = ChainCrf{src.scenario.context_dim, src.scenario.alphabet};
  out.seed = seed;
  out.documents.resize(static_cast<std::size_t>(m));
  out.states.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    auto& doc = out.documents[static_cast<std::size_t>(i)];
    auto& st = out.states[static_cast<std::size_t>(i)];
    doc.reserve(static_cast<std::size_t>(J));
    st.reserve(static_cast<std::size_t>(J));
    int s = sample_categorical(src.stationary, rng.uniform());
    for (int j = 0; j < J; ++j) {
      st.push_back(s);
      doc.push_back(detail::gen_chain_example(
          src.scenario, out.graph, out.featurizer,
          src.state_teachers[static_cast<std::size_t>(s)], /*noise=*/0.0, rng));
      if (j + 1 < J)
        s = sample_categorical(src.transition[static_cast<std::size_t>(s)],
                               rng.uniform());
    }
  }
  return out;
}

inline Dataset pooled(const DocumentDataset& dd) {
  Dataset ds;
  ds.graph = dd.graph;
  ds.featurizer = dd.featurizer;
  for (const auto& doc : dd.documents)
    for (const auto& ex : doc) ds.examples.push_back(ex);
  return ds;
}

// beta(a) for a stationary finite Markov chain:
// sum_s pi(s) TV(P^a(s,.), pi), by exact matrix powers.
inline double beta_exact(const MarkovSource& src, int a) {
  if (a < 1) throw std::invalid_argument("beta_exact: a must be >= 1");
  const Matrix Pa = mat_pow(src.transition, a);
  double beta = 0.0;
  for (std::size_t s = 0; s < Pa.size(); ++s)
    beta += src.stationary[s] * total_variation(Pa[s], src.stationary);
  return beta;
}

// Dobrushin contraction coefficient gamma = max_{s,s'} TV(P(s,.), P(s',.));
// certifies beta(a) <= gamma^a.
inline double dobrushin(const MarkovSource& src) {
  double g = 0.0;
  const std::size_t n = src.transition.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t)
      g = std::max(g, total_variation(src.transition[s], src.transition[t]));
  return g;
}

struct MixingProfile {
  std::vector<int> a_values;
  std::vector<double> beta;            // exact beta(a)
  std::vector<double> beta_dobrushin;  // gamma^a envelope
  double gamma = 0.0;
};

inline MixingProfile make_profile(const MarkovSource& src, std::vector<int> a_values) {
  MixingProfile p;
  p.gamma = dobrushin(src);
  p.a_values = std::move(a_values);
  for (int a : p.a_values) {
    p.beta.push_back(beta_exact(src, a));
    p.beta_dobrushin.push_back(std::pow(p.gamma, a));
  }
  return p;
}

// Diagnostic plug-in estimate of beta(a) from observed state sequences.
// Never used inside a bound.
inline double estimate_beta(const DocumentDataset& dd, int a) {
  if (a < 1) throw std::invalid_argument("estimate_beta: a must be >= 1");
  const int J = static_cast<int>(dd.states.empty() ? 0 : dd.states[0].size());
  if (a >= J) throw std::invalid_argument("estimate_beta: a exceeds document length");
  int n_states = 0;
  for (const auto& st : dd.states)
    for (int s : st) n_states = std::max(n_states, s + 1);
  std::vector<double> counts(static_cast<std::size_t>(n_states), 0.0);
  Matrix trans(static_cast<std::size_t>(n_states),
               std::vector<double>(static_cast<std::size_t>(n_states), 0.0));
  double total = 0.0;
  for (const auto& st : dd.states) {
    for (std::size_t j = 0; j < st.size(); ++j) {
      counts[static_cast<std::size_t>(st[j])] += 1.0;
      total += 1.0;
      if (j + 1 < st.size())
        trans[static_cast<std::size_t>(st[j])][static_cast<std::size_t>(st[j + 1])] += 1.0;
    }
  }
  for (std::size_t s = 0; s < trans.size(); ++s) {
    double row = 0.0;
    for (double v : trans[s]) row += v;
    if (row < 30.0)
      throw std::runtime_error("estimate_beta: fewer than 30 visits in some state");
    for (double& v : trans[s]) v /= row;
  }
  std::vector<double> pi_hat(counts);
  for (double& v : pi_hat) v /= total;
  const Matrix Pa = mat_pow(trans, a);
  double beta = 0.0;
  for (std::size_t s = 0; s < Pa.size(); ++s)
    beta += pi_hat[s] * total_variation(Pa[s], pi_hat);
  return beta;
}

// Grand mean of per-sentence clipped margin losses over all documents.
inline double document_risk(const Weights& w, const DocumentDataset& dd,
                            const MarginSpec& spec,
                            std::int64_t cap = kDefaultEnumerationCap) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& doc : dd.documents)
    for (const auto& ex : doc) {
      sum += margin_loss(w, dd.featurizer, dd.graph, ex, spec, cap).clipped_loss;
      ++count;
    }
  if (count == 0) throw std::invalid_argument("document_risk: empty dataset");
  return sum / static_cast<double>(count);
}

struct SweepEntry {
  int a = 0;
  double beta = 0.0;
  bounds::MixingBoundResult bound;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  int best_a = 0;  // feasible entry minimizing the bound; 0 if none feasible
  double best_value = 0.0;
};

// Evaluates the bound for every a >= 1 with 2a | J, using beta(a) from the
// profile (computed on demand for missing a).
inline SweepResult sweep_feasible_a(const MarkovSource& src, int m, int J,
                                    double delta, const bounds::ProblemConstants& pc) {
  if (J < 2) throw std::invalid_argument("sweep: J must be >= 2");
  SweepResult res;
  for (int a = 1; 2 * a <= J; ++a) {
    if (J % (2 * a) != 0) continue;
    SweepEntry e;
    e.a = a;
    e.beta = beta_exact(src, a);
    e.bound = bounds::mixing_bound(m, J, a, e.beta, delta, pc);
    if (e.bound.feasible &&
        (res.best_a == 0 || e.bound.value < res.best_value)) {
      res.best_a = a;
      res.best_value = e.bound.value;
    }
    res.entries.push_back(std::move(e));
  }
  if (res.entries.empty()) throw std::invalid_argument("sweep: empty divisor set");
  return res;
}

}  // namespace sop::mixing
