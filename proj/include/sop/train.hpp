#pragma once

// The two analyzed learners: constant-step SGD on the margin loss and
// regularized risk minimization, plus empirical risk evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sop/margin.hpp"
#include "sop/rng.hpp"
#include "sop/scoring.hpp"

namespace sop {

struct CompiledDataset {
  std::vector<FeaturePack> packs;
};

inline CompiledDataset compile_dataset(const Dataset& ds) {
  CompiledDataset cd;
  cd.packs.reserve(ds.examples.size());
  for (const auto& ex : ds.examples)
    cd.packs.push_back(compile_features(ds.featurizer, ds.graph, ex.x));
  return cd;
}

// Allocation-free margin-loss/subgradient evaluator for enumerable label
// spaces; the training loops run millions of per-example evaluations, so the
// assignment/loss tables are precomputed once and score buffers are reused.
// Witness tie-break matches the brute decoder (lexicographically smallest
// maximizer). Not safe for concurrent use of a single instance.
class FastMarginOracle {
 public:
  static constexpr std::int64_t kMaxCard = 4096;

  FastMarginOracle(const Dataset& ds, const CompiledDataset& cd, const MarginSpec& spec)
      : ds_(&ds), cd_(&cd), spec_(spec) {
    const FactorGraph& g = ds.graph;
    const std::int64_t total = total_card(g);
    if (total > kMaxCard) throw std::invalid_argument("FastMarginOracle: label space too large");
    n_assign_ = static_cast<int>(total);
    n_factors_ = static_cast<int>(g.factors.size());
    factor_index_.resize(static_cast<std::size_t>(n_assign_) *
                         static_cast<std::size_t>(n_factors_));
    {
      std::int64_t j = 0;
      for_each_graph_assignment(g, [&](const LabelAssignment& y) {
        for (int f = 0; f < n_factors_; ++f)
          factor_index_[static_cast<std::size_t>(j * n_factors_ + f)] =
              static_cast<int>(assignment_index(restrict_to_factor(y, g, f),
                                                factor_sizes(g, f)));
        ++j;
      });
    }
    loss_of_.resize(ds.examples.size());
    gold_index_.resize(ds.examples.size());
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
      const LabelAssignment& yi = ds.examples[i].y;
      gold_index_[i] = static_cast<int>(assignment_index(yi, g.alphabet_sizes));
      loss_of_[i].resize(static_cast<std::size_t>(n_assign_));
      std::int64_t j = 0;
      for_each_graph_assignment(g, [&](const LabelAssignment& yp) {
        loss_of_[i][static_cast<std::size_t>(j++)] = task_loss(spec_.loss, yp, yi);
      });
    }
    scores_.resize(static_cast<std::size_t>(n_factors_));
    for (int f = 0; f < n_factors_; ++f)
      scores_[static_cast<std::size_t>(f)].resize(
          static_cast<std::size_t>(factor_card(g, f)));
  }

  int size() const { return static_cast<int>(ds_->examples.size()); }

  // raw_margin for example i at w; fills *witness_out with the maximizer's
  // global assignment index (== gold index when the hinge is inactive).
  double raw_margin(int i, const Weights& w, int* witness_out = nullptr) const {
    const auto& pack = cd_->packs[static_cast<std::size_t>(i)];
    for (int f = 0; f < n_factors_; ++f) {
      auto& sf = scores_[static_cast<std::size_t>(f)];
      const auto& pf = pack.factors[static_cast<std::size_t>(f)];
      for (std::size_t a = 0; a < sf.size(); ++a) sf[a] = pf[a].dot(w);
    }
    const double inv_rho = 1.0 / spec_.rho;
    const auto& loss_row = loss_of_[static_cast<std::size_t>(i)];
    double best = -std::numeric_limits<double>::infinity();
    int best_j = 0;
    const int* fi = factor_index_.data();
    for (int j = 0; j < n_assign_; ++j, fi += n_factors_) {
      double h = 0.0;
      for (int f = 0; f < n_factors_; ++f)
        h += scores_[static_cast<std::size_t>(f)][static_cast<std::size_t>(fi[f])];
      const double obj = loss_row[static_cast<std::size_t>(j)] + inv_rho * h;
      if (obj > best) {
        best = obj;
        best_j = j;
      }
    }
    double h_gold = 0.0;
    const int* fg = factor_index_.data() +
                    static_cast<std::size_t>(gold_index_[static_cast<std::size_t>(i)]) *
                        static_cast<std::size_t>(n_factors_);
    for (int f = 0; f < n_factors_; ++f)
      h_gold += scores_[static_cast<std::size_t>(f)][static_cast<std::size_t>(fg[f])];
    if (witness_out) *witness_out = best_j;
    return best - inv_rho * h_gold;
  }

  double clipped_loss(int i, const Weights& w) const {
    return phi_star(raw_margin(i, w), spec_.loss.max_value);
  }

  // Adds coeff * (subgradient of example i at w) into grad; returns raw_margin.
  double add_subgradient(int i, const Weights& w, double coeff, Weights& grad,
                         SubgradMode mode) const {
    int witness = 0;
    const double raw = raw_margin(i, w, &witness);
    const bool take = mode == SubgradMode::Hinge
                          ? raw > 0.0
                          : (raw > 0.0 && raw < spec_.loss.max_value);
    const int gold = gold_index_[static_cast<std::size_t>(i)];
    if (take && witness != gold) {
      const double s = coeff / spec_.rho;
      const auto& pack = cd_->packs[static_cast<std::size_t>(i)];
      const int* fw = factor_index_.data() +
                      static_cast<std::size_t>(witness) * static_cast<std::size_t>(n_factors_);
      const int* fg = factor_index_.data() +
                      static_cast<std::size_t>(gold) * static_cast<std::size_t>(n_factors_);
      for (int f = 0; f < n_factors_; ++f) {
        if (fg[f] == fw[f]) continue;
        pack.factors[static_cast<std::size_t>(f)][static_cast<std::size_t>(fg[f])]
            .add_to(grad, -s);
        pack.factors[static_cast<std::size_t>(f)][static_cast<std::size_t>(fw[f])]
            .add_to(grad, s);
      }
    }
    return raw;
  }

  const MarginSpec& spec() const { return spec_; }

 private:
  const Dataset* ds_;
  const CompiledDataset* cd_;
  MarginSpec spec_;
  int n_assign_ = 0;
  int n_factors_ = 0;
  std::vector<int> factor_index_;             // [assignment * n_factors + f]
  std::vector<std::vector<double>> loss_of_;  // [example][assignment]
  std::vector<int> gold_index_;
  mutable std::vector<std::vector<double>> scores_;  // scratch, [f][a]
};

// R_S(h^w): mean of clipped margin losses.
inline double empirical_risk(const Weights& w, const Dataset& ds,
                             const CompiledDataset& cd, const MarginSpec& spec,
                             std::int64_t cap = kDefaultEnumerationCap) {
  if (ds.examples.empty()) throw std::invalid_argument("empirical_risk: empty dataset");
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.examples.size(); ++i)
    sum += margin_loss_from_table(score_table(cd.packs[i], w), ds.graph,
                                  ds.examples[i].y, spec, cap)
               .clipped_loss;
  return sum / static_cast<double>(ds.examples.size());
}

inline double empirical_risk(const Weights& w, const Dataset& ds,
                             const MarginSpec& spec,
                             std::int64_t cap = kDefaultEnumerationCap) {
  return empirical_risk(w, ds, compile_dataset(ds), spec, cap);
}

struct SgdConfig {
  double eta = 0.0;  // constant step size
  int iterations = 1;
  std::uint64_t seed = 0;
  SubgradMode mode = SubgradMode::Clipped;
  bool record_trajectory = false;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("sgd: iterations must be >= 1");
    if (!(eta >= 0.0)) throw std::invalid_argument("sgd: eta must be >= 0");
  }
};

struct TrainResult {
  Weights final_w;
  Weights averaged_w;                 // SGD: (1/T) sum_t w^(t); RRM: w_S
  std::vector<int> index_sequence;    // realized i_t draws (SGD)
  std::vector<Weights> trajectory;    // optional: w^(1..T)
  std::optional<double> certificate;  // RRM suboptimality certificate
  bool certified = false;
  int iterations_run = 0;
};

// Plain constant-step SGD, w^(1) = 0, i_t uniform over [m] with replacement
// from a counter-based stream. averaged_w is the plain mean of w^(1..T).
inline TrainResult sgd(const Dataset& ds, const CompiledDataset& cd,
                       const MarginSpec& spec, const SgdConfig& cfg,
                       std::int64_t cap = kDefaultEnumerationCap) {
  cfg.validate();
  if (ds.examples.empty()) throw std::invalid_argument("sgd: empty dataset");
  const int m = static_cast<int>(ds.examples.size());
  const int D = feature_dim(ds.featurizer);
  const bool fast = total_card(ds.graph) <= FastMarginOracle::kMaxCard;
  std::optional<FastMarginOracle> oracle;
  if (fast) oracle.emplace(ds, cd, spec);

  CounterRng rng(cfg.seed, /*stream=*/0);
  TrainResult res;
  Weights w(static_cast<std::size_t>(D), 0.0);
  Weights avg(static_cast<std::size_t>(D), 0.0);
  res.index_sequence.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int t = 1; t <= cfg.iterations; ++t) {
    if (cfg.record_trajectory) res.trajectory.push_back(w);
    axpy(avg, 1.0, w);  // accumulate w^(t)
    const int i = rng.uniform_int(m);
    res.index_sequence.push_back(i);
    if (fast) {
      oracle->add_subgradient(i, w, -cfg.eta, w, cfg.mode);
    } else {
      const Weights g = margin_subgradient_from_pack(
          cd.packs[static_cast<std::size_t>(i)], ds.graph,
          ds.examples[static_cast<std::size_t>(i)].y, spec, w, cfg.mode, cap);
      axpy(w, -cfg.eta, g);
    }
  }
  scale(avg, 1.0 / static_cast<double>(cfg.iterations));
  res.final_w = std::move(w);
  res.averaged_w = std::move(avg);
  res.iterations_run = cfg.iterations;
  return res;
}

inline TrainResult sgd(const Dataset& ds, const MarginSpec& spec, const SgdConfig& cfg,
                       std::int64_t cap = kDefaultEnumerationCap) {
  return sgd(ds, compile_dataset(ds), spec, cfg, cap);
}

struct SgdSchedule {
  int iterations = 1;
  double eta = 0.0;
};

// Early-stopping schedule T = ceil(beta_T * m^2), eta = T^(-3/4) / kappa.
inline SgdSchedule sgd_schedule(int m, double kappa, double beta_T = 1.0) {
  if (m < 1) throw std::invalid_argument("sgd_schedule: m must be >= 1");
  if (!(kappa > 0.0))
    throw std::invalid_argument("sgd_schedule: kappa must be > 0 (degenerate features)");
  SgdSchedule s;
  s.iterations = static_cast<int>(
      std::ceil(beta_T * static_cast<double>(m) * static_cast<double>(m)));
  s.eta = std::pow(static_cast<double>(s.iterations), -0.75) / kappa;
  return s;
}

// lambda = 4 sqrt(2) kappa / (sqrt(m) rho ||w*||_2).
inline double lambda_choice(int m, double rho, double kappa, double w_star_norm) {
  if (m < 1 || !(rho > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("lambda_choice: inputs must be positive");
  if (!(w_star_norm > 0.0))
    throw std::invalid_argument("lambda_choice: w_star_norm must be > 0");
  return 4.0 * std::sqrt(2.0) * kappa /
         (std::sqrt(static_cast<double>(m)) * rho * w_star_norm);
}

struct RrmConfig {
  double lambda = 1.0;
  double tol = 1e-3;   // target objective suboptimality
  std::int64_t max_iters = 100'000'000;
  double kappa = 0.0;  // measured kappa of the dataset, sets G and the radius

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("rrm: lambda must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("rrm: tol must be > 0");
    if (!(kappa > 0.0)) throw std::invalid_argument("rrm: kappa must be > 0");
  }
};

// The RRM training objective: the convex floored hinge risk plus the ridge
// term. Clipping the risk term at M would break the convexity the solver's
// certificate needs; the floored hinge upper-bounds the clipped risk and the
// two coincide wherever raw_margin <= M.
inline double rrm_objective(const FastMarginOracle& oracle, const Weights& w,
                            double lambda) {
  double risk = 0.0;
  const int m = oracle.size();
  for (int i = 0; i < m; ++i) risk += std::max(0.0, oracle.raw_margin(i, w));
  return risk / static_cast<double>(m) + 0.5 * lambda * norm2_sq(w);
}

// Regularized risk minimization by projected full-batch subgradient descent,
// steps eta_t = 2/(lambda (t+1)), iterates projected onto the ball of radius
// 2 kappa/(rho lambda) (the minimizer norm bound from first-order
// optimality), weighted iterate averaging (weight 2t/(T(T+1))). Runs the
// smallest T whose certified suboptimality 2 G^2/(lambda (T+1)) is <= tol,
// with G = 2 kappa/rho + lambda * radius; averaged_w is the certified point.
inline TrainResult rrm(const Dataset& ds, const CompiledDataset& cd,
                       const MarginSpec& spec, const RrmConfig& cfg) {
  cfg.validate();
  if (ds.examples.empty()) throw std::invalid_argument("rrm: empty dataset");
  const int m = static_cast<int>(ds.examples.size());
  const int D = feature_dim(ds.featurizer);
  const FastMarginOracle oracle(ds, cd, spec);
  const double radius = 2.0 * cfg.kappa / (spec.rho * cfg.lambda);
  const double G = 2.0 * cfg.kappa / spec.rho + cfg.lambda * radius;

  Weights w(static_cast<std::size_t>(D), 0.0);
  Weights avg(static_cast<std::size_t>(D), 0.0);
  Weights grad(static_cast<std::size_t>(D), 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);

  const double t_needed = std::ceil(2.0 * G * G / (cfg.lambda * cfg.tol) - 1.0);
  const std::int64_t T = std::min<std::int64_t>(
      cfg.max_iters, std::max<std::int64_t>(1, static_cast<std::int64_t>(t_needed)));
  for (std::int64_t t = 1; t <= T; ++t) {
    const double mix = 2.0 / (static_cast<double>(t) + 1.0);
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] += mix * (w[j] - avg[j]);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int i = 0; i < m; ++i)
      oracle.add_subgradient(i, w, inv_m, grad, SubgradMode::Hinge);
    axpy(grad, cfg.lambda, w);
    const double eta = 2.0 / (cfg.lambda * static_cast<double>(t + 1));
    axpy(w, -eta, grad);
    const double n = norm2(w);
    if (n > radius) scale(w, radius / n);
  }
  TrainResult res;
  res.iterations_run = static_cast<int>(std::min<std::int64_t>(T, INT32_MAX));
  const double cert = 2.0 * G * G / (cfg.lambda * static_cast<double>(T + 1));
  res.certificate = cert;
  res.certified = cert <= cfg.tol;
  res.final_w = std::move(w);
  res.averaged_w = std::move(avg);  // w_S: the point the certificate covers
  return res;
}

inline TrainResult rrm(const Dataset& ds, const MarginSpec& spec, const RrmConfig& cfg) {
  return rrm(ds, compile_dataset(ds), spec, cfg);
}

}  // namespace sop
