#include "doctest.h"
#include "sop/bounds.hpp"

#include <cmath>

using namespace sop::bounds;

namespace {

ProblemConstants unit_constants(int m) {
  ProblemConstants pc;
  pc.m = m;
  pc.d = 4.0;
  pc.F_count = 3.0;
  pc.psi_star = 1.5;
  pc.Lambda = 2.0;
  pc.rho = 1.0;
  pc.q = 2.0;
  pc.M = 1.0;
  pc.kappa = 2.0;
  pc.delta = 0.05;
  return pc;
}

}  // namespace

TEST_SUITE_BEGIN("bounds");

TEST_CASE("l_tilde frozen value") {
  // m=8, d=4, |F|=1, Psi*=Lambda=rho=1: inner = 2*8*4*(8*8+3)+1 = 4289
  CHECK(l_tilde(8.0, 4.0, 1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(std::sqrt(std::log(4289.0)) * std::log(8.0)).epsilon(1e-15));
  CHECK_THROWS(l_tilde(1.0, 1.0, 1.0, 1.0, 1.0, 1.0));
}

TEST_CASE("l_tilde grows at most sqrt-log in d") {
  // doubling d at most doubles the inner argument, so the squared value
  // increases by at most log(2) * log(m)^2
  for (double m : {10.0, 100.0, 1000.0}) {
    for (double d : {2.0, 8.0, 64.0}) {
      const double a = l_tilde(m, d, 2.0, 1.0, 1.0, 0.5);
      const double b = l_tilde(m, 2.0 * d, 2.0, 1.0, 1.0, 0.5);
      CHECK(b >= a);
      CHECK(b * b - a * a <= std::log(2.0) * std::log(m) * std::log(m) + 1e-12);
    }
  }
}

TEST_CASE("rademacher and high-probability bounds fit together") {
  const ProblemConstants pc = unit_constants(200);
  const double m = 200.0;
  const double rad = rademacher_bound(pc);
  const double hp = generalization_bound_hp(pc, 0.25);
  // hp = R_S + 8/m + 2*(rad - 4/m) + confidence
  const double confidence = pc.M * std::sqrt(std::log(1.0 / pc.delta) / (2.0 * m));
  CHECK(hp == doctest::Approx(0.25 + 8.0 / m + 2.0 * (rad - 4.0 / m) + confidence)
                  .epsilon(1e-12));
  CHECK(rad > 0.0);
  CHECK(hp > 0.25);
}

TEST_CASE("bound monotonicities") {
  const ProblemConstants base = unit_constants(100);
  // decreasing in m (for m past the log warm-up)
  ProblemConstants big = base;
  big.m = 10000;
  CHECK(rademacher_bound(big) < rademacher_bound(base));
  // increasing in Lambda and |F|, decreasing in rho
  ProblemConstants t = base;
  t.Lambda *= 2.0;
  CHECK(rademacher_bound(t) > rademacher_bound(base));
  t = base;
  t.F_count += 1.0;
  CHECK(rademacher_bound(t) > rademacher_bound(base));
  t = base;
  t.rho *= 2.0;
  CHECK(rademacher_bound(t) < rademacher_bound(base));
  // confidence term decreasing in delta
  ProblemConstants loose = base;
  loose.delta = 0.5;
  CHECK(generalization_bound_hp(loose, 0.0) < generalization_bound_hp(base, 0.0));
}

TEST_CASE("constants validation") {
  ProblemConstants pc = unit_constants(100);
  CHECK_NOTHROW(pc.validate());
  pc.m = 1;
  CHECK_THROWS(pc.validate());
  pc = unit_constants(100);
  pc.q = 1.0;
  CHECK_THROWS(pc.validate());
  pc = unit_constants(100);
  pc.delta = 0.0;
  CHECK_THROWS(pc.validate());
  pc = unit_constants(100);
  pc.rho = 0.0;
  CHECK_THROWS(pc.validate());
}

TEST_CASE("prior sqrt-d baseline scales as sqrt(d)") {
  const ProblemConstants pc = unit_constants(100);
  ProblemConstants big = pc;
  big.d = 4.0 * pc.d;
  CHECK(prior_sqrt_d_bound(big) ==
        doctest::Approx(2.0 * prior_sqrt_d_bound(pc)).epsilon(1e-12));
}

TEST_CASE("stability bound formulas") {
  // 16 kappa^2 / (m rho^2 lambda)
  CHECK(rrm_stability_bound(50, 1.0, 0.1, 2.0) ==
        doctest::Approx(16.0 * 4.0 / (50.0 * 0.1)).epsilon(1e-15));
  CHECK(rrm_stability_bound(100, 1.0, 0.1, 2.0) ==
        doctest::Approx(0.5 * rrm_stability_bound(50, 1.0, 0.1, 2.0)).epsilon(1e-12));
  CHECK(rrm_regularized_excess_bound(50, 1.0, 0.1, 2.0) ==
        rrm_stability_bound(50, 1.0, 0.1, 2.0));
  CHECK(rrm_excess_bound(64, 2.0, 3.0, 0.5) ==
        doctest::Approx(4.0 * std::sqrt(2.0) * 3.0 * 0.5 / (8.0 * 2.0)).epsilon(1e-15));
  CHECK_THROWS(rrm_stability_bound(0, 1.0, 1.0, 1.0));
}

TEST_CASE("sgd stability bound") {
  // 16 e (1 + t/m^2) kappa^2 rho^-2 sum eta_j^2
  const std::vector<double> etas{0.1, 0.2, 0.3};
  const double expect =
      16.0 * std::exp(1.0) * (1.0 + 2.0 / 16.0) * 4.0 / 1.0 * (0.01 + 0.04);
  CHECK(sgd_stability_bound(2, 4, 2.0, 1.0, etas) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(sgd_stability_bound(0, 4, 2.0, 1.0, etas) == 0.0);
  CHECK_THROWS(sgd_stability_bound(5, 4, 2.0, 1.0, etas));
  CHECK(sgd_stability_bound_const_eta(3, 4, 2.0, 1.0, 0.1) ==
        doctest::Approx(sgd_stability_bound(3, 4, 2.0, 1.0,
                                            std::vector<double>(3, 0.1)))
            .epsilon(1e-12));
}

TEST_CASE("sgd excess bound frozen value and shape") {
  // T=16, m=4, kappa=1, eta=1/8: (4 + 4)/8 + (1 + 16/64)/2 = 1.625
  CHECK(sgd_excess_bound(16.0, 4.0, 1.0, 0.125) ==
        doctest::Approx(1.625).epsilon(1e-15));
  CHECK_THROWS(sgd_excess_bound(0.0, 4.0, 1.0, 0.1));
  // at the T = m^2, eta = T^(-3/4)/kappa schedule the value is
  // O(kappa / sqrt(m)): the normalized value stays bounded over 4 decades
  for (double m : {1e2, 1e3, 1e4, 1e5, 1e6}) {
    const double T = m * m;
    const double kappa = 2.0;
    const double eta = std::pow(T, -0.75) / kappa;
    const double v = sgd_excess_bound(T, m, kappa, eta);
    CHECK(v * std::sqrt(m) / kappa > 0.1);
    CHECK(v * std::sqrt(m) / kappa < 100.0);
  }
}

TEST_CASE("mixing bound reduces bitwise to the i.i.d. bound at a=1, beta=0") {
  ProblemConstants pc = unit_constants(100);
  const int m_docs = 10, J = 20;
  pc.m = m_docs * J;
  const MixingBoundResult r = mixing_bound(m_docs, J, 1, 0.0, pc.delta, pc);
  CHECK(r.feasible);
  CHECK(r.delta_eff == pc.delta);
  CHECK(r.value == generalization_bound_hp(pc, 0.0));  // bit-exact
}

TEST_CASE("mixing bound feasibility") {
  const ProblemConstants pc = unit_constants(200);
  // a = J/2 makes the penalty coefficient zero: always feasible
  const MixingBoundResult half = mixing_bound(10, 20, 10, 0.9, 0.05, pc);
  CHECK(half.feasible);
  CHECK(half.delta_eff == doctest::Approx(0.05));
  // strong dependence at small a: infeasible
  const MixingBoundResult bad = mixing_bound(10, 20, 1, 0.5, 0.05, pc);
  CHECK(!bad.feasible);
  CHECK(bad.delta_eff < 0.0);
  // block separation must divide: J % 2a == 0
  CHECK_THROWS(mixing_bound(10, 20, 3, 0.0, 0.05, pc));
  CHECK_THROWS(mixing_bound(10, 20, 0, 0.0, 0.05, pc));
  CHECK_THROWS(mixing_bound(10, 20, 2, -0.1, 0.05, pc));
  // larger a costs more when beta is already negligible
  const MixingBoundResult a1 = mixing_bound(10, 20, 1, 0.0, 0.05, pc);
  const MixingBoundResult a2 = mixing_bound(10, 20, 2, 0.0, 0.05, pc);
  CHECK(a2.value > a1.value);
}

TEST_SUITE_END();
