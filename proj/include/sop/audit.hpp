#pragma once

// Empirical verification harness: measures Lipschitzness, dominance,
// algorithmic stability, generalization gaps, Rademacher complexity and
// subgradient correctness against the closed-form evaluators. Trials run in
// parallel with per-trial RNG streams (master seed, trial index); every
// verdict is reproducible from (config, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sop/bounds.hpp"
#include "sop/datagen.hpp"
#include "sop/inference.hpp"
#include "sop/margin.hpp"
#include "sop/parallel.hpp"
#include "sop/rng.hpp"
#include "sop/train.hpp"

namespace sop::audit {

namespace detail {

inline StructuredInput random_input(const Featurizer& fz, const FactorGraph& g,
                                    double scale, CounterRng& rng) {
  if (const auto* cc = std::get_if<ChainCrf>(&fz)) {
    ContextSequence cs;
    cs.contexts.reserve(static_cast<std::size_t>(g.num_vars));
    for (int k = 0; k < g.num_vars; ++k)
      cs.contexts.push_back(rng.gaussian_vector(cc->context_dim, scale));
    return cs;
  }
  const int D = std::get<Tables>(fz).dim;
  FeatureTables ft;
  ft.dim = D;
  ft.tables.resize(g.factors.size());
  for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
    auto& slot = ft.tables[static_cast<std::size_t>(f)];
    slot.resize(static_cast<std::size_t>(factor_card(g, f)));
    for (auto& v : slot) {
      for (int j = 0; j < D; ++j) v.push(j, scale * rng.gaussian());
      v.compress();
    }
  }
  return ft;
}

inline LabelAssignment random_assignment(const FactorGraph& g, CounterRng& rng) {
  LabelAssignment y(static_cast<std::size_t>(g.num_vars));
  for (int k = 0; k < g.num_vars; ++k)
    y[static_cast<std::size_t>(k)] = rng.uniform_int(g.alphabet_sizes[static_cast<std::size_t>(k)]);
  return y;
}

// max_{x fixed, all y'} ||Psi(x, y')||_2 by full enumeration.
inline double input_kappa(const FeaturePack& pack, const FactorGraph& g, int D,
                          std::int64_t cap) {
  double best = 0.0;
  Weights psi(static_cast<std::size_t>(D));
  for_each_graph_assignment(g, [&](const LabelAssignment& y) {
    std::fill(psi.begin(), psi.end(), 0.0);
    for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
      const std::int64_t idx =
          assignment_index(restrict_to_factor(y, g, f), factor_sizes(g, f));
      pack.factors[static_cast<std::size_t>(f)][static_cast<std::size_t>(idx)]
          .add_to(psi);
    }
    best = std::max(best, norm2_sq(psi));
  }, cap);
  return std::sqrt(best);
}

}  // namespace detail

struct TrialsConfig {
  int n_trials = 100;
  double scale = 1.0;   // Gaussian entry scale for random draws
  std::uint64_t seed = 0;
  int threads = 1;
};

// Max over random (x, y, w, w~) of |L_rho(w) - L_rho(w~)| - (2/rho) ||dh||_inf,
// both sides by enumeration. Nonpositive when the loss is (2/rho, l_inf)
// Lipschitz in the scoring function.
inline double check_lipschitz(const FactorGraph& g, const Featurizer& fz,
                              const MarginSpec& spec, const TrialsConfig& cfg,
                              std::int64_t cap = kDefaultEnumerationCap) {
  const int D = feature_dim(fz);
  std::vector<double> viol(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.threads, [&](std::size_t tr) {
    CounterRng rng(cfg.seed, tr);
    const StructuredInput x = detail::random_input(fz, g, cfg.scale, rng);
    const LabelAssignment y = detail::random_assignment(g, rng);
    const Weights w1 = rng.gaussian_vector(D, cfg.scale);
    const Weights w2 = rng.gaussian_vector(D, cfg.scale);
    const FeaturePack pack = compile_features(fz, g, x);
    const ScoreTable t1 = score_table(pack, w1);
    const ScoreTable t2 = score_table(pack, w2);
    const double l1 = margin_loss_from_table(t1, g, y, spec, cap).clipped_loss;
    const double l2 = margin_loss_from_table(t2, g, y, spec, cap).clipped_loss;
    double dh = 0.0;
    for_each_graph_assignment(g, [&](const LabelAssignment& yp) {
      dh = std::max(dh, std::fabs(assignment_score(t1, g, yp) -
                                  assignment_score(t2, g, yp)));
    }, cap);
    viol[tr] = std::fabs(l1 - l2) - (2.0 / spec.rho) * dh;
  });
  return *std::max_element(viol.begin(), viol.end());
}

// Max over random (x, y, w) of L(decode(w, x), y) - L_rho(x, y, w).
// Nonpositive when the margin loss dominates the decoding loss.
inline double check_dominance(const FactorGraph& g, const Featurizer& fz,
                              const MarginSpec& spec, const TrialsConfig& cfg,
                              std::int64_t cap = kDefaultEnumerationCap) {
  const int D = feature_dim(fz);
  std::vector<double> viol(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.threads, [&](std::size_t tr) {
    CounterRng rng(cfg.seed, tr);
    const StructuredInput x = detail::random_input(fz, g, cfg.scale, rng);
    const LabelAssignment y = detail::random_assignment(g, rng);
    const Weights w = rng.gaussian_vector(D, cfg.scale);
    const FeaturePack pack = compile_features(fz, g, x);
    const ScoreTable t = score_table(pack, w);
    const double margin = margin_loss_from_table(t, g, y, spec, cap).clipped_loss;
    const double decoded = task_loss(spec.loss, decode(t, g, cap).assignment, y);
    viol[tr] = decoded - margin;
  });
  return *std::max_element(viol.begin(), viol.end());
}

struct SgdStabilityConfig {
  double eta = 0.01;
  int iterations = 100;
  std::vector<int> checkpoints;  // measured after this many updates
  int n_trials = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  SubgradMode mode = SubgradMode::Hinge;
  bool coupled = true;  // uncoupled runs are a diagnostic only
};

struct StabilityProbeResult {
  std::vector<int> t_values;
  std::vector<double> measured_sq_dist;  // mean ||w - w^|| ^2 per checkpoint
  std::vector<double> bound_values;
  int n_trials = 0;
  std::uint64_t seed = 0;
  bool coupled = true;
  bool pass = false;
};

// Replace-one stability of SGD: per trial, one training example is replaced
// by a fresh draw from the same generator, both runs start at 0 and consume
// the identical index sequence, and the squared iterate distance is recorded
// at each checkpoint. The coupled interpretation is the one under which the
// neighboring-dataset stability argument operates.
inline StabilityProbeResult probe_sgd_stability(const GeneratedDataset& gd,
                                                const GeneratorConfig& gen_cfg,
                                                const MarginSpec& spec,
                                                const SgdStabilityConfig& cfg) {
  const Dataset& ds = gd.data;
  const int m = static_cast<int>(ds.examples.size());
  if (m < 2) throw std::invalid_argument("probe_sgd_stability: need m >= 2");
  for (int t : cfg.checkpoints)
    if (t < 0 || t > cfg.iterations)
      throw std::invalid_argument("probe_sgd_stability: checkpoint out of range");
  const CompiledDataset cd = compile_dataset(ds);
  const int D = feature_dim(ds.featurizer);
  const double kappa = compute_kappa(ds).value;
  const std::size_t n_ck = cfg.checkpoints.size();

  std::vector<std::vector<double>> per_trial(
      static_cast<std::size_t>(cfg.n_trials), std::vector<double>(n_ck, 0.0));
  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.threads, [&](std::size_t tr) {
    CounterRng rng(cfg.seed, tr);
    const int pos = rng.uniform_int(m);
    StructuredExample repl =
        gen_example(gen_cfg, ds.graph, ds.featurizer, gd.teacher, rng);
    Dataset ds2;
    ds2.graph = ds.graph;
    ds2.featurizer = ds.featurizer;
    ds2.examples = ds.examples;
    ds2.examples[static_cast<std::size_t>(pos)] = std::move(repl);
    CompiledDataset cd2;
    cd2.packs = cd.packs;
    cd2.packs[static_cast<std::size_t>(pos)] = compile_features(
        ds2.featurizer, ds2.graph, ds2.examples[static_cast<std::size_t>(pos)].x);
    const FastMarginOracle o1(ds, cd, spec);
    const FastMarginOracle o2(ds2, cd2, spec);

    std::vector<int> idx1(static_cast<std::size_t>(cfg.iterations));
    for (int t = 0; t < cfg.iterations; ++t) idx1[static_cast<std::size_t>(t)] = rng.uniform_int(m);
    std::vector<int> idx2 = idx1;
    if (!cfg.coupled) {
      CounterRng rng2(cfg.seed, tr + (1ULL << 48));
      for (int t = 0; t < cfg.iterations; ++t)
        idx2[static_cast<std::size_t>(t)] = rng2.uniform_int(m);
    }

    Weights w1(static_cast<std::size_t>(D), 0.0);
    Weights w2(static_cast<std::size_t>(D), 0.0);
    std::size_t ck = 0;
    auto record = [&](int t_done) {
      while (ck < n_ck && cfg.checkpoints[ck] == t_done) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < w1.size(); ++j) {
          const double d = w1[j] - w2[j];
          d2 += d * d;
        }
        per_trial[tr][ck++] = d2;
      }
    };
    record(0);
    for (int t = 0; t < cfg.iterations; ++t) {
      o1.add_subgradient(idx1[static_cast<std::size_t>(t)], w1, -cfg.eta, w1, cfg.mode);
      o2.add_subgradient(idx2[static_cast<std::size_t>(t)], w2, -cfg.eta, w2, cfg.mode);
      record(t + 1);
    }
  });

  StabilityProbeResult res;
  res.t_values = cfg.checkpoints;
  res.n_trials = cfg.n_trials;
  res.seed = cfg.seed;
  res.coupled = cfg.coupled;
  res.pass = true;
  std::vector<double> col(static_cast<std::size_t>(cfg.n_trials));
  for (std::size_t c = 0; c < n_ck; ++c) {
    for (std::size_t tr = 0; tr < col.size(); ++tr) col[tr] = per_trial[tr][c];
    res.measured_sq_dist.push_back(compensated_mean(col));
    res.bound_values.push_back(bounds::sgd_stability_bound_const_eta(
        cfg.checkpoints[c], m, kappa, spec.rho, cfg.eta));
    if (res.measured_sq_dist.back() > res.bound_values.back()) res.pass = false;
  }
  return res;
}

struct RrmStabilityConfig {
  double lambda = 1.0;
  double tol = 1e-6;
  int n_trials = 50;
  int eval_inputs = 20;  // fresh draws added to the sup approximation pool
  std::uint64_t seed = 0;
  int threads = 1;
};

struct RrmStabilityResult {
  double max_diff = 0.0;   // sup approximation over trials, inputs, labels
  double bound = 0.0;      // 16 kappa^2 / (m rho^2 lambda)
  double slack = 0.0;      // solver-tolerance allowance
  std::vector<double> per_trial_max;
  int n_trials = 0;
  std::uint64_t seed = 0;
  bool pass = false;
};

namespace detail {

// max over all labels of |L_rho(x, y, w1) - L_rho(x, y, w2)|.
inline double label_sup_diff(const FeaturePack& pack, const FactorGraph& g,
                             const MarginSpec& spec, const Weights& w1,
                             const Weights& w2, std::int64_t cap) {
  const ScoreTable t1 = score_table(pack, w1);
  const ScoreTable t2 = score_table(pack, w2);
  double best = 0.0;
  for_each_graph_assignment(g, [&](const LabelAssignment& y) {
    const double l1 = margin_loss_from_table(t1, g, y, spec, cap).clipped_loss;
    const double l2 = margin_loss_from_table(t2, g, y, spec, cap).clipped_loss;
    best = std::max(best, std::fabs(l1 - l2));
  }, cap);
  return best;
}

}  // namespace detail

// Replace-one uniform stability of regularized risk minimization. The sup
// over (x, y) is approximated from below by the training inputs, the
// replacement input, eval_inputs fresh draws, and full label enumeration, so
// a PASS is a necessary-condition check. The slack term converts the solver
// certificate into an iterate-error allowance: two tol-suboptimal points of a
// lambda-strongly-convex objective are within 2 sqrt(2 tol / lambda), and the
// loss is (2 kappa / rho)-Lipschitz in w.
inline RrmStabilityResult probe_rrm_stability(const GeneratedDataset& gd,
                                              const GeneratorConfig& gen_cfg,
                                              const MarginSpec& spec,
                                              const RrmStabilityConfig& cfg,
                                              std::int64_t cap = kDefaultEnumerationCap) {
  const Dataset& ds = gd.data;
  const int m = static_cast<int>(ds.examples.size());
  if (m < 2) throw std::invalid_argument("probe_rrm_stability: need m >= 2");
  const CompiledDataset cd = compile_dataset(ds);
  const double kappa = compute_kappa(ds).value;

  RrmConfig rc;
  rc.lambda = cfg.lambda;
  rc.tol = cfg.tol;
  rc.kappa = kappa;
  const TrainResult base = rrm(ds, cd, spec, rc);
  if (!base.certified) throw std::runtime_error("probe_rrm_stability: base solve uncertified");
  const Weights& w_base = base.averaged_w;

  std::vector<double> per_trial(static_cast<std::size_t>(cfg.n_trials), 0.0);
  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.threads, [&](std::size_t tr) {
    CounterRng rng(cfg.seed, tr);
    const int pos = rng.uniform_int(m);
    StructuredExample repl =
        gen_example(gen_cfg, ds.graph, ds.featurizer, gd.teacher, rng);
    Dataset ds2;
    ds2.graph = ds.graph;
    ds2.featurizer = ds.featurizer;
    ds2.examples = ds.examples;
    ds2.examples[static_cast<std::size_t>(pos)] = std::move(repl);
    CompiledDataset cd2;
    cd2.packs = cd.packs;
    cd2.packs[static_cast<std::size_t>(pos)] = compile_features(
        ds2.featurizer, ds2.graph, ds2.examples[static_cast<std::size_t>(pos)].x);

    RrmConfig rc2 = rc;
    rc2.kappa = std::max(
        kappa, detail::input_kappa(cd2.packs[static_cast<std::size_t>(pos)], ds.graph,
                                   feature_dim(ds.featurizer), cap));
    const TrainResult alt = rrm(ds2, cd2, spec, rc2);
    if (!alt.certified) throw std::runtime_error("probe_rrm_stability: replaced solve uncertified");

    double best = 0.0;
    for (const auto& pack : cd2.packs)
      best = std::max(best, detail::label_sup_diff(pack, ds.graph, spec, w_base,
                                                   alt.averaged_w, cap));
    best = std::max(best,
                    detail::label_sup_diff(cd.packs[static_cast<std::size_t>(pos)],
                                           ds.graph, spec, w_base, alt.averaged_w, cap));
    for (int e = 0; e < cfg.eval_inputs; ++e) {
      const StructuredExample fresh =
          gen_example(gen_cfg, ds.graph, ds.featurizer, gd.teacher, rng);
      best = std::max(
          best, detail::label_sup_diff(compile_features(ds.featurizer, ds.graph, fresh.x),
                                       ds.graph, spec, w_base, alt.averaged_w, cap));
    }
    per_trial[tr] = best;
  });

  RrmStabilityResult res;
  res.per_trial_max = std::move(per_trial);
  res.max_diff = *std::max_element(res.per_trial_max.begin(), res.per_trial_max.end());
  res.bound = bounds::rrm_stability_bound(m, spec.rho, cfg.lambda, kappa);
  res.slack = (2.0 / spec.rho) * kappa * 2.0 * std::sqrt(2.0 * cfg.tol / cfg.lambda);
  res.n_trials = cfg.n_trials;
  res.seed = cfg.seed;
  res.pass = res.max_diff <= res.bound + res.slack;
  return res;
}

struct GapTrialRecord {
  double train_risk = 0.0;
  double test_risk = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool held = false;
  bool vacuous = false;  // bound exceeds the loss range M
};

struct GapConfig {
  int m = 100;
  int m_test = 1000;  // >= 10 m, population-risk proxy
  int n_repeats = 100;
  double delta = 0.05;
  double q = 2.0;
  double Lambda = 0.0;  // floor for the norm ball; learned norm may exceed it
  std::uint64_t seed = 0;
  int threads = 1;
};

struct GapResult {
  std::vector<GapTrialRecord> trials;
  double held_fraction = 0.0;
  bool pass = false;  // held_fraction >= 1 - delta
};

using Trainer = std::function<Weights(const Dataset&, const MarginSpec&)>;

// Per repeat: a fresh train set and a large disjoint test set from the same
// teacher; the bound is evaluated with Lambda = max(config Lambda,
// ||w_learned||_2) so that the norm ball covers the model actually tested.
inline GapResult measure_gap(const GeneratorConfig& base_gen, const Trainer& trainer,
                             const MarginSpec& spec, const GapConfig& cfg,
                             std::int64_t cap = kDefaultEnumerationCap) {
  if (cfg.m_test < 10 * cfg.m)
    throw std::invalid_argument("measure_gap: m_test must be >= 10 m");
  std::vector<GapTrialRecord> recs(static_cast<std::size_t>(cfg.n_repeats));
  parallel_for(static_cast<std::size_t>(cfg.n_repeats), cfg.threads, [&](std::size_t r) {
    GeneratorConfig gen = base_gen;
    gen.seed = CounterRng(cfg.seed, r).next_u64();
    const GeneratedDataset all = generate(gen, cfg.m + cfg.m_test);
    Dataset train;
    train.graph = all.data.graph;
    train.featurizer = all.data.featurizer;
    train.examples.assign(all.data.examples.begin(),
                          all.data.examples.begin() + cfg.m);
    Dataset test;
    test.graph = all.data.graph;
    test.featurizer = all.data.featurizer;
    test.examples.assign(all.data.examples.begin() + cfg.m, all.data.examples.end());

    const Weights w = trainer(train, spec);
    GapTrialRecord rec;
    rec.train_risk = empirical_risk(w, train, spec, cap);
    rec.test_risk = empirical_risk(w, test, spec, cap);
    rec.gap = rec.test_risk - rec.train_risk;

    bounds::ProblemConstants pc;
    pc.m = cfg.m;
    pc.d = 1.0;
    for (int f = 0; f < static_cast<int>(train.graph.factors.size()); ++f)
      pc.d = std::max(pc.d, static_cast<double>(factor_card(train.graph, f)));
    pc.F_count = static_cast<double>(train.graph.factors.size());
    pc.psi_star = compute_psi_star(train, cfg.q, cap);
    pc.Lambda = std::max(cfg.Lambda, norm2(w));
    pc.rho = spec.rho;
    pc.q = cfg.q;
    pc.M = spec.loss.max_value;
    pc.kappa = compute_kappa(train, cap).value;
    pc.delta = cfg.delta;
    rec.bound = bounds::generalization_bound_hp(pc, rec.train_risk);
    rec.held = rec.gap <= rec.bound;
    rec.vacuous = rec.bound > pc.M;
    recs[r] = rec;
  });
  GapResult res;
  res.trials = std::move(recs);
  int held = 0;
  for (const auto& t : res.trials) held += t.held ? 1 : 0;
  res.held_fraction = static_cast<double>(held) / static_cast<double>(cfg.n_repeats);
  res.pass = res.held_fraction >= 1.0 - cfg.delta;
  return res;
}

struct RademacherConfig {
  double Lambda = 1.0;
  int n_sigma = 64;
  int restarts = 8;
  int ascent_iters = 200;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct RademacherEstimate {
  double estimate = 0.0;  // lower estimate by construction (nonconcave ascent)
  int n_sigma = 0;
  int restarts = 0;
  int ascent_iters = 0;
  std::vector<double> per_sigma;
  std::vector<Weights> best_w;  // per-sigma maximizers, reusable as warm starts
};

// Monte-Carlo lower estimate of the empirical Rademacher complexity of the
// loss class over the l2 ball of radius Lambda: for each sign vector,
// projected subgradient ascent from several random starts (plus w = 0 and any
// supplied warm starts), keeping the best objective value seen.
inline RademacherEstimate estimate_rademacher(const Dataset& ds, const MarginSpec& spec,
                                              const RademacherConfig& cfg,
                                              const std::vector<Weights>* warm_starts = nullptr,
                                              std::int64_t cap = kDefaultEnumerationCap) {
  if (ds.examples.empty())
    throw std::invalid_argument("estimate_rademacher: empty dataset");
  const int m = static_cast<int>(ds.examples.size());
  const int D = feature_dim(ds.featurizer);
  const CompiledDataset cd = compile_dataset(ds);
  const double kappa = compute_kappa(ds, cap).value;
  const double G = std::max(2.0 * kappa / spec.rho, 1e-12);

  RademacherEstimate out;
  out.n_sigma = cfg.n_sigma;
  out.restarts = cfg.restarts;
  out.ascent_iters = cfg.ascent_iters;
  out.per_sigma.resize(static_cast<std::size_t>(cfg.n_sigma));
  out.best_w.resize(static_cast<std::size_t>(cfg.n_sigma));

  parallel_for(static_cast<std::size_t>(cfg.n_sigma), cfg.threads, [&](std::size_t s) {
    CounterRng rng(cfg.seed, s);
    std::vector<double> sigma(static_cast<std::size_t>(m));
    for (auto& v : sigma) v = rng.next_u64() & 1 ? 1.0 : -1.0;

    // one pass computes the sign-weighted objective and its subgradient
    auto evaluate = [&](const Weights& w, Weights* grad_out) {
      if (grad_out) std::fill(grad_out->begin(), grad_out->end(), 0.0);
      double sum = 0.0;
      MarginEvaluation ev;
      for (int i = 0; i < m; ++i) {
        const double si = sigma[static_cast<std::size_t>(i)] / static_cast<double>(m);
        if (grad_out) {
          const Weights gi = margin_subgradient_from_pack(
              cd.packs[static_cast<std::size_t>(i)], ds.graph,
              ds.examples[static_cast<std::size_t>(i)].y, spec, w,
              SubgradMode::Clipped, cap, &ev);
          axpy(*grad_out, si, gi);
        } else {
          ev = margin_loss_from_table(
              score_table(cd.packs[static_cast<std::size_t>(i)], w), ds.graph,
              ds.examples[static_cast<std::size_t>(i)].y, spec, cap);
        }
        sum += si * ev.clipped_loss;
      }
      return sum;
    };

    Weights best_w(static_cast<std::size_t>(D), 0.0);
    double best = evaluate(best_w, nullptr);  // the w = 0 candidate

    std::vector<Weights> starts;
    for (int r = 0; r < cfg.restarts; ++r)
      starts.push_back(rng.sphere(D, cfg.Lambda * rng.uniform()));
    if (warm_starts && s < warm_starts->size())
      starts.push_back(project_l2((*warm_starts)[s], std::max(cfg.Lambda, 1e-12)));

    Weights g(static_cast<std::size_t>(D), 0.0);
    for (auto& w : starts) {
      for (int t = 1; t <= cfg.ascent_iters; ++t) {
        const double cur = evaluate(w, &g);
        if (cur > best) {
          best = cur;
          best_w = w;
        }
        const double eta = cfg.Lambda / (G * std::sqrt(static_cast<double>(t)));
        axpy(w, eta, g);
        w = project_l2(std::move(w), std::max(cfg.Lambda, 1e-12));
      }
      const double cur = evaluate(w, nullptr);
      if (cur > best) {
        best = cur;
        best_w = w;
      }
    }
    out.per_sigma[s] = best;
    out.best_w[s] = std::move(best_w);
  });
  out.estimate = compensated_mean(out.per_sigma);
  return out;
}

struct GradCheckConfig {
  int n_trials = 1000;
  double epsilon = 1e-5;
  double scale = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int accepted = 0;
  int skipped = 0;
  bool pass = false;
};

// Finite-difference check of the margin subgradient. Draws near the clip
// boundaries or with a non-unique witness are skipped (the function is not
// differentiable there); on accepted draws the loss is locally affine and the
// directional derivative must match the subgradient inner product.
inline GradCheckResult grad_check(const FactorGraph& g, const Featurizer& fz,
                                  const MarginSpec& spec, const GradCheckConfig& cfg,
                                  std::int64_t cap = kDefaultEnumerationCap) {
  const int D = feature_dim(fz);
  const double M = spec.loss.max_value;
  struct Trial { double err = 0.0; bool accepted = false; };
  std::vector<Trial> trials(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.threads, [&](std::size_t tr) {
    CounterRng rng(cfg.seed, tr);
    const StructuredInput x = detail::random_input(fz, g, cfg.scale, rng);
    const LabelAssignment y = detail::random_assignment(g, rng);
    const Weights w = rng.gaussian_vector(D, cfg.scale);
    const FeaturePack pack = compile_features(fz, g, x);
    const double kappa_x = detail::input_kappa(pack, g, D, cap);
    const double skip_tol = 10.0 * cfg.epsilon * (2.0 * kappa_x / spec.rho);

    // best and runner-up of the loss-augmented objective over y' != y
    const ScoreTable t = score_table(pack, w);
    const double inv_rho = 1.0 / spec.rho;
    const double base = inv_rho * assignment_score(t, g, y);
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    for_each_graph_assignment(g, [&](const LabelAssignment& yp) {
      if (yp == y) return;
      const double obj = task_loss(spec.loss, yp, y) +
                         inv_rho * assignment_score(t, g, yp) - base;
      if (obj > best) {
        second = best;
        best = obj;
      } else if (obj > second) {
        second = obj;
      }
    }, cap);
    const double raw = best;
    if (std::fabs(raw) < skip_tol || std::fabs(raw - M) < skip_tol ||
        best - second < skip_tol)
      return;  // degenerate draw, skipped

    const Weights grad =
        margin_subgradient_from_pack(pack, g, y, spec, w, SubgradMode::Clipped, cap);
    double err = 0.0;
    Weights wp(w.size()), wm(w.size());
    for (int dir = 0; dir < 10; ++dir) {
      const Weights u = rng.sphere(D);
      for (std::size_t j = 0; j < w.size(); ++j) {
        wp[j] = w[j] + cfg.epsilon * u[j];
        wm[j] = w[j] - cfg.epsilon * u[j];
      }
      const double lp =
          margin_loss_from_table(score_table(pack, wp), g, y, spec, cap).clipped_loss;
      const double lm =
          margin_loss_from_table(score_table(pack, wm), g, y, spec, cap).clipped_loss;
      const double fd = (lp - lm) / (2.0 * cfg.epsilon);
      const double dp = dot(grad, u);
      err = std::max(err, std::fabs(fd - dp) / std::max(1.0, std::fabs(dp)));
    }
    trials[tr] = Trial{err, true};
  });
  GradCheckResult res;
  for (const auto& t : trials) {
    if (t.accepted) {
      ++res.accepted;
      res.max_rel_error = std::max(res.max_rel_error, t.err);
    } else {
      ++res.skipped;
    }
  }
  if (res.accepted == 0)
    throw std::runtime_error("grad_check: all draws degenerate");
  res.pass = res.max_rel_error <= 1e-4;
  return res;
}

}  // namespace sop::audit
