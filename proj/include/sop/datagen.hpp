#pragma once

// Synthetic dataset generators: realizable chain Markov networks and
// multi-class problems, with controllable label noise. Deterministic under
// the counter-based RNG: example i always consumes stream (seed, i).

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sop/graph.hpp"
#include "sop/inference.hpp"
#include "sop/rng.hpp"
#include "sop/scoring.hpp"

namespace sop {

struct ChainScenario {
  int num_vars = 4;     // l
  int alphabet = 3;     // c
  int context_dim = 5;  // n
};

struct MultiClassScenario {
  int classes = 3;      // c
  int context_dim = 5;  // n
};

struct GeneratorConfig {
  std::variant<ChainScenario, MultiClassScenario> scenario;
  double noise = 0.0;        // per-node label resampling probability, in [0,1)
  double teacher_norm = 1.0; // ||w0||_2
  std::uint64_t seed = 0;

  void validate() const {
    if (!(noise >= 0.0 && noise < 1.0))
      throw std::invalid_argument("datagen: noise must be in [0,1)");
    if (!(teacher_norm > 0.0))
      throw std::invalid_argument("datagen: teacher_norm must be > 0");
  }
};

struct GeneratedDataset {
  Dataset data;
  Weights teacher;  // w0 on the sphere of radius teacher_norm
};

namespace detail {

// Teacher stream is (seed, 2^32); example i uses stream (seed, i).
inline constexpr std::uint64_t kTeacherStream = 1ULL << 32;

inline StructuredExample gen_chain_example(const ChainScenario& sc,
                                           const FactorGraph& g, const Featurizer& fz,
                                           const Weights& teacher, double noise,
                                           CounterRng& rng) {
  ContextSequence cs;
  cs.contexts.reserve(static_cast<std::size_t>(sc.num_vars));
  for (int k = 0; k < sc.num_vars; ++k)
    cs.contexts.push_back(rng.sphere(sc.context_dim));
  StructuredInput x = std::move(cs);
  LabelAssignment y = decode(teacher, fz, g, x).assignment;
  for (int k = 0; k < sc.num_vars; ++k)
    if (noise > 0.0 && rng.uniform() < noise)
      y[static_cast<std::size_t>(k)] = rng.uniform_int(sc.alphabet);
  return StructuredExample{std::move(x), std::move(y)};
}

inline StructuredExample gen_multiclass_example(const MultiClassScenario& sc,
                                                const FactorGraph& g,
                                                const Featurizer& fz,
                                                const Weights& teacher, double noise,
                                                CounterRng& rng) {
  const int D = sc.context_dim * sc.classes;
  const std::vector<double> ctx = rng.sphere(sc.context_dim);
  FeatureTables ft;
  ft.dim = D;
  ft.tables.resize(1);
  ft.tables[0].resize(static_cast<std::size_t>(sc.classes));
  for (int a = 0; a < sc.classes; ++a) {
    SparseVec v;
    for (int j = 0; j < sc.context_dim; ++j)
      if (ctx[static_cast<std::size_t>(j)] != 0.0)
        v.push(a * sc.context_dim + j, ctx[static_cast<std::size_t>(j)]);
    v.compress();
    ft.tables[0][static_cast<std::size_t>(a)] = std::move(v);
  }
  StructuredInput x = std::move(ft);
  LabelAssignment y = decode(teacher, fz, g, x).assignment;
  if (noise > 0.0 && rng.uniform() < noise) y[0] = rng.uniform_int(sc.classes);
  return StructuredExample{std::move(x), std::move(y)};
}

}  // namespace detail

// One fresh example from the configured generator, against an existing
// dataset's graph/featurizer and teacher. Used by the stability probes for
// replacement draws.
inline StructuredExample gen_example(const GeneratorConfig& cfg, const FactorGraph& g,
                                     const Featurizer& fz, const Weights& teacher,
                                     CounterRng& rng) {
  if (const auto* sc = std::get_if<ChainScenario>(&cfg.scenario))
    return detail::gen_chain_example(*sc, g, fz, teacher, cfg.noise, rng);
  return detail::gen_multiclass_example(std::get<MultiClassScenario>(cfg.scenario), g,
                                        fz, teacher, cfg.noise, rng);
}

// Example-1 style pairwise chain Markov networks: teacher on a sphere,
// unit-sphere contexts, labels by teacher decoding plus per-node noise.
inline GeneratedDataset gen_chain_dataset(const GeneratorConfig& cfg, int m) {
  cfg.validate();
  const auto& sc = std::get<ChainScenario>(cfg.scenario);
  if (m < 1) throw std::invalid_argument("gen_chain_dataset: m must be >= 1");
  GeneratedDataset out;
  out.data.graph = chain_graph(sc.num_vars, 2, sc.alphabet);
  out.data.featurizer = ChainCrf{sc.context_dim, sc.alphabet};
  {
    CounterRng trng(cfg.seed, detail::kTeacherStream);
    out.teacher = trng.sphere(feature_dim(out.data.featurizer), cfg.teacher_norm);
  }
  out.data.examples.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    out.data.examples.push_back(detail::gen_chain_example(
        sc, out.data.graph, out.data.featurizer, out.teacher, cfg.noise, rng));
  }
  return out;
}

// Example-2 multi-class: single factor over one node with c labels; features
// are the context written into the predicted class's block (D = n c),
// realized as per-example feature tables.
inline GeneratedDataset gen_multiclass(const GeneratorConfig& cfg, int m) {
  cfg.validate();
  const auto& sc = std::get<MultiClassScenario>(cfg.scenario);
  if (m < 1) throw std::invalid_argument("gen_multiclass: m must be >= 1");
  if (sc.classes < 2) throw std::invalid_argument("gen_multiclass: need >= 2 classes");
  GeneratedDataset out;
  out.data.graph = make_graph(1, {sc.classes}, {{0}});
  const int D = sc.context_dim * sc.classes;
  out.data.featurizer = Tables{D};
  {
    CounterRng trng(cfg.seed, detail::kTeacherStream);
    out.teacher = trng.sphere(D, cfg.teacher_norm);
  }
  out.data.examples.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    out.data.examples.push_back(detail::gen_multiclass_example(
        sc, out.data.graph, out.data.featurizer, out.teacher, cfg.noise, rng));
  }
  return out;
}

inline GeneratedDataset generate(const GeneratorConfig& cfg, int m) {
  if (std::holds_alternative<ChainScenario>(cfg.scenario))
    return gen_chain_dataset(cfg, m);
  return gen_multiclass(cfg, m);
}

}  // namespace sop
