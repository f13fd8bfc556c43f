#include "doctest.h"
#include "sop/parallel.hpp"
#include "sop/rng.hpp"
#include "sop/sparse.hpp"

#include <cmath>
#include <set>

using namespace sop;

TEST_SUITE_BEGIN("core");

TEST_CASE("counter rng streams are deterministic and decorrelated") {
  CounterRng a(1, 0), b(1, 0), c(1, 1), d(2, 0);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  std::set<std::uint64_t> seen;
  CounterRng e(1, 0);
  for (int i = 0; i < 100; ++i) {
    seen.insert(e.next_u64());
    seen.insert(c.next_u64());
    seen.insert(d.next_u64());
  }
  CHECK(seen.size() == 300);  // no collisions across streams at this scale
}

TEST_CASE("uniform and uniform_int ranges") {
  CounterRng rng(3, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = rng.uniform_int(7);
    CHECK(k >= 0);
    CHECK(k < 7);
  }
  CHECK(lo < 0.05);
  CHECK(hi > 0.95);
}

TEST_CASE("gaussian moments and sphere radius") {
  CounterRng rng(5, 0);
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    mean += g;
    var += g * g;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
  for (int d : {1, 3, 10}) {
    const auto v = rng.sphere(d, 2.5);
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    CHECK(std::sqrt(n2) == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("sparse vectors compress and compute") {
  SparseVec v;
  v.push(3, 1.0);
  v.push(0, 2.0);
  v.push(3, 0.5);
  v.compress();
  REQUIRE(v.entries.size() == 2);
  CHECK(v.entries[0] == std::pair<int, double>{0, 2.0});
  CHECK(v.entries[1] == std::pair<int, double>{3, 1.5});
  const Weights w{1.0, 0.0, 0.0, 2.0};
  CHECK(v.dot(w) == doctest::Approx(5.0));
  Weights acc(4, 1.0);
  v.add_to(acc, 2.0);
  CHECK(acc == Weights{5.0, 1.0, 1.0, 4.0});
  CHECK(v.norm2_sq() == doctest::Approx(4.0 + 2.25));
  CHECK(v.norm_q(1.0) == doctest::Approx(3.5));
  CHECK(v.norm_q(std::numeric_limits<double>::infinity()) == doctest::Approx(2.0));
  CHECK_THROWS(v.norm_q(0.5));
}

TEST_CASE("parallel_for output is independent of worker count") {
  std::vector<double> one(500), four(500);
  parallel_for(500, 1, [&](std::size_t i) { one[i] = std::sin(static_cast<double>(i)); });
  parallel_for(500, 4, [&](std::size_t i) { four[i] = std::sin(static_cast<double>(i)); });
  CHECK(one == four);
  CHECK(compensated_mean(one) == compensated_mean(four));
}

TEST_CASE("compensated mean handles ill-conditioned sums") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_mean(v) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(compensated_mean({}) == 0.0);
}

TEST_SUITE_END();
