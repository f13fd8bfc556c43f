#include "doctest.h"
#include "sop/datagen.hpp"
#include "sop/train.hpp"

#include <cmath>

using namespace sop;

TEST_SUITE_BEGIN("datagen");

TEST_CASE("config validation") {
  GeneratorConfig cfg;
  cfg.scenario = ChainScenario{3, 3, 2};
  cfg.noise = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg.noise = -0.1;
  CHECK_THROWS(cfg.validate());
  cfg.noise = 0.0;
  cfg.teacher_norm = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg.teacher_norm = 1.0;
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS(gen_chain_dataset(cfg, 0));
}

TEST_CASE("chain generation is deterministic and realizable at zero noise") {
  GeneratorConfig cfg;
  cfg.scenario = ChainScenario{4, 3, 5};
  cfg.teacher_norm = 2.0;
  cfg.seed = 123;
  const GeneratedDataset a = gen_chain_dataset(cfg, 20);
  const GeneratedDataset b = gen_chain_dataset(cfg, 20);
  CHECK(a.teacher == b.teacher);
  CHECK(norm2(a.teacher) == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(a.data.examples.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& ea = a.data.examples[i];
    const auto& eb = b.data.examples[i];
    CHECK(ea.y == eb.y);
    CHECK(std::get<ContextSequence>(ea.x).contexts ==
          std::get<ContextSequence>(eb.x).contexts);
    // realizable: the teacher decodes back to the stored label
    CHECK(decode(a.teacher, a.data.featurizer, a.data.graph, ea.x).assignment == ea.y);
    // unit-sphere contexts
    for (const auto& ctx : std::get<ContextSequence>(ea.x).contexts) {
      double n2 = 0.0;
      for (double v : ctx) n2 += v * v;
      CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // a prefix of a longer run is identical (per-example streams)
  const GeneratedDataset longer = gen_chain_dataset(cfg, 30);
  CHECK(longer.data.examples[7].y == a.data.examples[7].y);
}

TEST_CASE("label noise flips some labels but keeps inputs intact") {
  GeneratorConfig clean;
  clean.scenario = ChainScenario{5, 3, 4};
  clean.seed = 7;
  GeneratorConfig noisy = clean;
  noisy.noise = 0.5;
  const GeneratedDataset a = gen_chain_dataset(clean, 40);
  const GeneratedDataset b = gen_chain_dataset(noisy, 40);
  int flipped = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(std::get<ContextSequence>(a.data.examples[i].x).contexts ==
          std::get<ContextSequence>(b.data.examples[i].x).contexts);
    if (a.data.examples[i].y != b.data.examples[i].y) ++flipped;
  }
  CHECK(flipped > 10);
}

TEST_CASE("multiclass generation") {
  GeneratorConfig cfg;
  cfg.scenario = MultiClassScenario{4, 6};
  cfg.seed = 31;
  const GeneratedDataset gd = gen_multiclass(cfg, 25);
  CHECK(gd.data.graph.num_vars == 1);
  CHECK(gd.data.graph.factors.size() == 1);
  CHECK(feature_dim(gd.data.featurizer) == 24);
  CHECK(norm2(gd.teacher) == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& ex : gd.data.examples) {
    REQUIRE(ex.y.size() == 1);
    CHECK(ex.y[0] >= 0);
    CHECK(ex.y[0] < 4);
    CHECK(decode(gd.teacher, gd.data.featurizer, gd.data.graph, ex.x).assignment ==
          ex.y);
    // each class block holds the same unit context
    const auto& ft = std::get<FeatureTables>(ex.x);
    REQUIRE(ft.tables.size() == 1);
    REQUIRE(ft.tables[0].size() == 4);
    const double n0 = std::sqrt(ft.tables[0][0].norm2_sq());
    CHECK(n0 == doctest::Approx(1.0).epsilon(1e-12));
    for (int a = 1; a < 4; ++a)
      CHECK(std::sqrt(ft.tables[0][a].norm2_sq()) == doctest::Approx(n0).epsilon(1e-12));
  }
  GeneratorConfig bad = cfg;
  bad.scenario = MultiClassScenario{1, 6};
  CHECK_THROWS(gen_multiclass(bad, 5));
}

TEST_CASE("generate dispatches on the scenario") {
  GeneratorConfig cfg;
  cfg.scenario = ChainScenario{3, 2, 2};
  cfg.seed = 1;
  CHECK(std::holds_alternative<ContextSequence>(generate(cfg, 1).data.examples[0].x));
  cfg.scenario = MultiClassScenario{3, 2};
  CHECK(std::holds_alternative<FeatureTables>(generate(cfg, 1).data.examples[0].x));
}

TEST_CASE("different seeds give different teachers and data") {
  GeneratorConfig a;
  a.scenario = ChainScenario{3, 3, 4};
  a.seed = 1;
  GeneratorConfig b = a;
  b.seed = 2;
  CHECK(gen_chain_dataset(a, 1).teacher != gen_chain_dataset(b, 1).teacher);
}

TEST_SUITE_END();
