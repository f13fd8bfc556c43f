#include "doctest.h"
#include "sop/datagen.hpp"
#include "sop/margin.hpp"
#include "sop/train.hpp"

#include <cmath>

using namespace sop;

namespace {

GeneratedDataset small_chain(int m, std::uint64_t seed = 42) {
  GeneratorConfig cfg;
  cfg.scenario = ChainScenario{3, 3, 2};
  cfg.seed = seed;
  return gen_chain_dataset(cfg, m);
}

MarginSpec hamming_spec(const FactorGraph& g, double rho = 1.0) {
  return MarginSpec(rho, TaskLoss::make(LossKind::HammingUnnormalized, g));
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("at w = 0 the raw margin is exactly the loss range") {
  const GeneratedDataset gd = small_chain(6);
  for (LossKind k : {LossKind::HammingUnnormalized, LossKind::HammingNormalized,
                     LossKind::ZeroOne}) {
    const MarginSpec spec(1.0, TaskLoss::make(k, gd.data.graph));
    const Weights zero(feature_dim(gd.data.featurizer), 0.0);
    for (const auto& ex : gd.data.examples) {
      const MarginEvaluation ev =
          margin_loss(zero, gd.data.featurizer, gd.data.graph, ex, spec);
      CHECK(ev.raw_margin == doctest::Approx(spec.loss.max_value).epsilon(1e-12));
      CHECK(ev.clipped_loss == doctest::Approx(spec.loss.max_value).epsilon(1e-12));
    }
  }
}

TEST_CASE("subgradient modes at the upper clip") {
  // At w = 0 the raw margin sits exactly on the upper clip: the clipped
  // convention returns the zero vector, the hinge convention the descent
  // direction that training needs.
  const GeneratedDataset gd = small_chain(4);
  const MarginSpec spec = hamming_spec(gd.data.graph);
  const Weights zero(feature_dim(gd.data.featurizer), 0.0);
  bool hinge_moved = false;
  for (const auto& ex : gd.data.examples) {
    const Weights gc = margin_subgradient(zero, gd.data.featurizer, gd.data.graph, ex,
                                          spec, SubgradMode::Clipped);
    CHECK(norm2(gc) == 0.0);
    const Weights gh = margin_subgradient(zero, gd.data.featurizer, gd.data.graph, ex,
                                          spec, SubgradMode::Hinge);
    if (norm2(gh) > 0.0) hinge_moved = true;
  }
  CHECK(hinge_moved);
}

TEST_CASE("fast oracle agrees with the reference evaluator") {
  const GeneratedDataset gd = small_chain(8);
  const MarginSpec spec = hamming_spec(gd.data.graph, 0.7);
  const CompiledDataset cd = compile_dataset(gd.data);
  const FastMarginOracle oracle(gd.data, cd, spec);
  CounterRng rng(55, 0);
  const int D = feature_dim(gd.data.featurizer);
  for (int trial = 0; trial < 30; ++trial) {
    const Weights w = rng.gaussian_vector(D, trial == 0 ? 0.0 : 1.0);
    const int i = rng.uniform_int(8);
    const MarginEvaluation ref =
        margin_loss(w, gd.data.featurizer, gd.data.graph, gd.data.examples[i], spec);
    int witness = -1;
    const double raw = oracle.raw_margin(i, w, &witness);
    CHECK(raw == doctest::Approx(ref.raw_margin).epsilon(1e-10));
    CHECK(oracle.clipped_loss(i, w) == doctest::Approx(ref.clipped_loss).epsilon(1e-10));
    if (ref.raw_margin > 1e-9) {
      CHECK(index_to_assignment(witness, gd.data.graph.alphabet_sizes) == ref.witness);
    }
    // subgradients match in both modes
    for (SubgradMode mode : {SubgradMode::Clipped, SubgradMode::Hinge}) {
      Weights fast(D, 0.0);
      oracle.add_subgradient(i, w, 1.0, fast, mode);
      const Weights slow = margin_subgradient(w, gd.data.featurizer, gd.data.graph,
                                              gd.data.examples[i], spec, mode);
      for (int j = 0; j < D; ++j) CHECK(fast[j] == doctest::Approx(slow[j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("sgd is deterministic and its steps obey the subgradient norm bound") {
  const GeneratedDataset gd = small_chain(10);
  const MarginSpec spec = hamming_spec(gd.data.graph);
  const double kappa = compute_kappa(gd.data).value;
  SgdConfig cfg;
  cfg.eta = 0.05;
  cfg.iterations = 60;
  cfg.seed = 9;
  cfg.mode = SubgradMode::Hinge;
  cfg.record_trajectory = true;
  const TrainResult a = sgd(gd.data, spec, cfg);
  const TrainResult b = sgd(gd.data, spec, cfg);
  CHECK(a.final_w == b.final_w);
  CHECK(a.index_sequence == b.index_sequence);
  for (int i : a.index_sequence) {
    CHECK(i >= 0);
    CHECK(i < 10);
  }
  // per-step movement bounded by eta * 2 kappa / rho
  for (std::size_t t = 1; t < a.trajectory.size(); ++t) {
    double step = 0.0;
    for (std::size_t j = 0; j < a.trajectory[t].size(); ++j) {
      const double d = a.trajectory[t][j] - a.trajectory[t - 1][j];
      step += d * d;
    }
    CHECK(std::sqrt(step) <= cfg.eta * 2.0 * kappa / spec.rho + 1e-12);
  }
  // averaged iterate is the plain mean of the trajectory
  Weights mean(a.final_w.size(), 0.0);
  for (const auto& w : a.trajectory) axpy(mean, 1.0, w);
  scale(mean, 1.0 / static_cast<double>(a.trajectory.size()));
  for (std::size_t j = 0; j < mean.size(); ++j)
    CHECK(a.averaged_w[j] == doctest::Approx(mean[j]).epsilon(1e-12));
  // training reduces risk on separable data
  const double risk0 = empirical_risk(Weights(a.final_w.size(), 0.0), gd.data, spec);
  CHECK(empirical_risk(a.final_w, gd.data, spec) < risk0);
}

TEST_CASE("sgd under the clipped convention never leaves the origin") {
  const GeneratedDataset gd = small_chain(5);
  const MarginSpec spec = hamming_spec(gd.data.graph);
  SgdConfig cfg;
  cfg.eta = 0.1;
  cfg.iterations = 25;
  cfg.seed = 1;
  cfg.mode = SubgradMode::Clipped;
  const TrainResult r = sgd(gd.data, spec, cfg);
  CHECK(norm2(r.final_w) == 0.0);
}

TEST_CASE("schedule and regularization arithmetic") {
  const SgdSchedule s = sgd_schedule(10, 2.0);
  CHECK(s.iterations == 100);
  CHECK(s.eta == doctest::Approx(std::pow(100.0, -0.75) / 2.0).epsilon(1e-15));
  CHECK(sgd_schedule(3, 1.0, 0.5).iterations == 5);  // ceil(4.5)
  CHECK_THROWS(sgd_schedule(0, 1.0));
  CHECK_THROWS(sgd_schedule(5, 0.0));

  CHECK(lambda_choice(32, 1.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambda_choice(8, 2.0, 3.0, 0.5) ==
        doctest::Approx(4.0 * std::sqrt(2.0) * 3.0 / (std::sqrt(8.0) * 2.0 * 0.5))
            .epsilon(1e-15));
  CHECK_THROWS(lambda_choice(8, 1.0, 1.0, 0.0));
}

TEST_CASE("rrm produces a certified near-minimizer") {
  const GeneratedDataset gd = small_chain(12);
  const MarginSpec spec = hamming_spec(gd.data.graph);
  const CompiledDataset cd = compile_dataset(gd.data);
  RrmConfig cfg;
  cfg.lambda = 0.5;
  cfg.tol = 5e-3;
  cfg.kappa = compute_kappa(gd.data).value;
  const TrainResult r = rrm(gd.data, cd, spec, cfg);
  CHECK(r.certified);
  REQUIRE(r.certificate.has_value());
  CHECK(*r.certificate <= cfg.tol);

  const FastMarginOracle oracle(gd.data, cd, spec);
  const double obj = rrm_objective(oracle, r.averaged_w, cfg.lambda);
  // no better than tol worse than random probes around it (local optimality)
  CounterRng rng(77, 0);
  const double radius_bound = 2.0 * cfg.kappa / (spec.rho * cfg.lambda);
  CHECK(norm2(r.averaged_w) <= radius_bound + 1e-9);
  for (int probe = 0; probe < 40; ++probe) {
    Weights cand = r.averaged_w;
    axpy(cand, 0.2 * rng.uniform(), rng.sphere(static_cast<int>(cand.size())));
    CHECK(rrm_objective(oracle, cand, cfg.lambda) >= obj - cfg.tol);
  }
  // beats the zero vector
  CHECK(obj <= rrm_objective(oracle, Weights(r.averaged_w.size(), 0.0), cfg.lambda));
  // determinism
  const TrainResult r2 = rrm(gd.data, cd, spec, cfg);
  CHECK(r.averaged_w == r2.averaged_w);
}

TEST_CASE("rrm respects max_iters and reports the honest certificate") {
  const GeneratedDataset gd = small_chain(4);
  const MarginSpec spec = hamming_spec(gd.data.graph);
  RrmConfig cfg;
  cfg.lambda = 0.1;
  cfg.tol = 1e-9;
  cfg.max_iters = 50;
  cfg.kappa = compute_kappa(gd.data).value;
  const TrainResult r = rrm(gd.data, spec, cfg);
  CHECK(!r.certified);
  CHECK(r.iterations_run == 50);
  CHECK(*r.certificate > cfg.tol);
}

TEST_CASE("empirical risk basics") {
  const GeneratedDataset gd = small_chain(6);
  const MarginSpec spec = hamming_spec(gd.data.graph);
  const Weights zero(feature_dim(gd.data.featurizer), 0.0);
  CHECK(empirical_risk(zero, gd.data, spec) ==
        doctest::Approx(spec.loss.max_value).epsilon(1e-12));
  Dataset empty;
  empty.graph = gd.data.graph;
  empty.featurizer = gd.data.featurizer;
  CHECK_THROWS(empirical_risk(zero, empty, spec));
}

TEST_SUITE_END();
