#pragma once

// Deterministic evaluators for the closed-form generalization/stability bound
// formulas. All logarithms are natural. Values whose multiplicative constant
// the source hides in O(.) carry a "shape-only" flag in reports.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sop::bounds {

struct ProblemConstants {
  int m = 0;               // sample count
  double d = 1.0;          // max factor label count
  double F_count = 1.0;    // |F|
  double psi_star = 1.0;   // Psi*
  double Lambda = 1.0;
  double rho = 1.0;
  double q = 2.0;          // dual norm index
  double M = 1.0;          // loss range
  double kappa = 1.0;
  double delta = 0.05;     // confidence parameter

  void validate() const {
    if (m < 2) throw std::invalid_argument("constants: m must be >= 2");
    if (!(d >= 1.0) || !(F_count >= 1.0) || !(psi_star >= 0.0) || !(Lambda > 0.0) ||
        !(rho > 0.0) || !(M > 0.0) || !(kappa >= 0.0))
      throw std::invalid_argument("constants: invalid value");
    if (!(q > 1.0)) throw std::invalid_argument("constants: q must be > 1");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("constants: delta must be in (0,1)");
  }
};

// L~ = sqrt(log(2 m d |F| [8 Psi* Lambda m |F| / rho + 3] + 1)) * log(m)
inline double l_tilde(double m, double d, double F_count, double psi_star,
                      double Lambda, double rho) {
  if (!(m >= 2.0)) throw std::invalid_argument("l_tilde: m must be >= 2");
  const double inner =
      2.0 * m * d * F_count * (8.0 * psi_star * Lambda * m * F_count / rho + 3.0) + 1.0;
  return std::sqrt(std::log(inner)) * std::log(m);
}

// Rademacher complexity bound of the loss class:
// 4/m + 144 sqrt(q-1) Psi* Lambda |F| / (rho sqrt(m)) * L~
inline double rademacher_bound(const ProblemConstants& pc) {
  pc.validate();
  const double m = static_cast<double>(pc.m);
  return 4.0 / m +
         144.0 * std::sqrt(pc.q - 1.0) * pc.psi_star * pc.Lambda * pc.F_count /
             (pc.rho * std::sqrt(m)) *
             l_tilde(m, pc.d, pc.F_count, pc.psi_star, pc.Lambda, pc.rho);
}

// High-probability generalization bound:
// R_S + 8/m + 288 sqrt(q-1) Psi* Lambda |F| / (rho sqrt(m)) L~
//     + M sqrt(log(1/delta) / (2m))
inline double generalization_bound_hp(const ProblemConstants& pc,
                                      double empirical_risk) {
  pc.validate();
  const double m = static_cast<double>(pc.m);
  return empirical_risk + 8.0 / m +
         288.0 * std::sqrt(pc.q - 1.0) * pc.psi_star * pc.Lambda * pc.F_count /
             (pc.rho * std::sqrt(m)) *
             l_tilde(m, pc.d, pc.F_count, pc.psi_star, pc.Lambda, pc.rho) +
         pc.M * std::sqrt(std::log(1.0 / pc.delta) / (2.0 * m));
}

// Prior square-root-d baseline, unit constant, shape-only:
// Lambda Psi* |F| sqrt(d) / (rho sqrt(m)).
inline double prior_sqrt_d_bound(const ProblemConstants& pc) {
  pc.validate();
  return pc.Lambda * pc.psi_star * pc.F_count * std::sqrt(pc.d) /
         (pc.rho * std::sqrt(static_cast<double>(pc.m)));
}

// Uniform stability of regularized risk minimization: 16 kappa^2 / (m rho^2 lambda).
inline double rrm_stability_bound(int m, double rho, double lambda, double kappa) {
  if (m < 1 || !(rho > 0.0) || !(lambda > 0.0) || !(kappa >= 0.0))
    throw std::invalid_argument("rrm_stability_bound: inputs must be positive");
  return 16.0 * kappa * kappa / (static_cast<double>(m) * rho * rho * lambda);
}

// Excess-risk bound at the tuned lambda: 4 sqrt(2) kappa ||w*||_2 / (sqrt(m) rho).
inline double rrm_excess_bound(int m, double rho, double kappa, double w_star_norm) {
  if (m < 1 || !(rho > 0.0) || !(kappa >= 0.0) || !(w_star_norm >= 0.0))
    throw std::invalid_argument("rrm_excess_bound: inputs must be positive");
  return 4.0 * std::sqrt(2.0) * kappa * w_star_norm /
         (std::sqrt(static_cast<double>(m)) * rho);
}

// Regularized-objective excess bound; the same expression as the stability
// bound, reported under its own name.
inline double rrm_regularized_excess_bound(int m, double rho, double lambda,
                                           double kappa) {
  return rrm_stability_bound(m, rho, lambda, kappa);
}

// SGD stability after t steps: 16 e (1 + t/m^2) kappa^2 rho^-2 sum_{j<=t} eta_j^2.
inline double sgd_stability_bound(int t, int m, double kappa, double rho,
                                  const std::vector<double>& etas) {
  if (t < 0 || t > static_cast<int>(etas.size()))
    throw std::invalid_argument("sgd_stability_bound: t out of range");
  double sum_sq = 0.0;
  for (int j = 0; j < t; ++j) sum_sq += etas[static_cast<std::size_t>(j)] *
                                        etas[static_cast<std::size_t>(j)];
  const double md = static_cast<double>(m);
  return 16.0 * std::exp(1.0) * (1.0 + static_cast<double>(t) / (md * md)) * kappa *
         kappa / (rho * rho) * sum_sq;
}

inline double sgd_stability_bound_const_eta(int t, int m, double kappa, double rho,
                                            double eta) {
  const double md = static_cast<double>(m);
  return 16.0 * std::exp(1.0) * (1.0 + static_cast<double>(t) / (md * md)) * kappa *
         kappa / (rho * rho) * eta * eta * static_cast<double>(t);
}

// SGD excess-risk expression, unit constants, shape-only:
// (sqrt(T) + T/m) kappa^2 eta + (1 + T kappa^2 eta^2) / (T eta).
inline double sgd_excess_bound(double T, double m, double kappa, double eta) {
  if (!(T > 0.0) || !(m > 0.0) || !(kappa > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("sgd_excess_bound: inputs must be positive");
  return (std::sqrt(T) + T / m) * kappa * kappa * eta +
         (1.0 + T * kappa * kappa * eta * eta) / (T * eta);
}

struct MixingBoundResult {
  bool feasible = false;
  double value = 0.0;      // valid only when feasible
  double delta_eff = 0.0;  // delta - 2 m (J/(2a) - 1) beta(a)
};

// Weakly-dependent-documents bound over m documents of length J with block
// separation a. Conventions: the complexity term uses the constant 288 with
// a sqrt(a (q-1)) factor, and the confidence term is
// M sqrt(a log(1/delta_eff) / (2 m J)); both are normalized so that at
// (a = 1, beta = 0) the value coincides exactly with the i.i.d. evaluator at
// m J samples. Infeasible when delta <= 2 m (J/(2a) - 1) beta(a).
inline MixingBoundResult mixing_bound(int m_docs, int J, int a, double beta_a,
                                      double delta, const ProblemConstants& pc) {
  if (a < 1) throw std::invalid_argument("mixing_bound: a must be >= 1");
  if (J % (2 * a) != 0) throw std::invalid_argument("mixing_bound: J must be a multiple of 2a");
  if (!(beta_a >= 0.0)) throw std::invalid_argument("mixing_bound: beta must be >= 0");
  MixingBoundResult r;
  const double md = static_cast<double>(m_docs);
  const double Jd = static_cast<double>(J);
  const double ad = static_cast<double>(a);
  r.delta_eff = delta - 2.0 * md * (Jd / (2.0 * ad) - 1.0) * beta_a;
  if (!(r.delta_eff > 0.0)) return r;
  r.feasible = true;
  const double mJ = md * Jd;
  const double complexity =
      288.0 * std::sqrt(ad * (pc.q - 1.0)) * pc.psi_star * pc.Lambda * pc.F_count /
      (pc.rho * std::sqrt(mJ)) *
      l_tilde(mJ, pc.d, pc.F_count, pc.psi_star, pc.Lambda, pc.rho);
  const double confidence =
      pc.M * std::sqrt(ad * std::log(1.0 / r.delta_eff) / (2.0 * mJ));
  r.value = 8.0 / mJ + complexity + confidence;
  return r;
}

}  // namespace sop::bounds
