#pragma once

// The clipped margin loss and its subgradient in w.

#include <cstdint>
#include <vector>

#include "sop/inference.hpp"
#include "sop/loss.hpp"
#include "sop/scoring.hpp"

namespace sop {

struct MarginEvaluation {
  double raw_margin = 0.0;
  double clipped_loss = 0.0;
  LabelAssignment witness;  // maximizer of the inner problem
  bool active = false;      // hinge active: 0 < raw_margin
};

inline MarginEvaluation margin_loss_from_table(const ScoreTable& t,
                                               const FactorGraph& g,
                                               const LabelAssignment& y,
                                               const MarginSpec& spec,
                                               std::int64_t cap = kDefaultEnumerationCap) {
  const LossAugResult aug = loss_augmented_decode(t, g, y, spec, cap);
  MarginEvaluation ev;
  ev.raw_margin = aug.raw_margin;
  ev.clipped_loss = phi_star(aug.raw_margin, spec.loss.max_value);
  ev.witness = aug.witness;
  ev.active = aug.raw_margin > 0.0;
  return ev;
}

inline MarginEvaluation margin_loss(const Weights& w, const Featurizer& fz,
                                    const FactorGraph& g, const StructuredExample& ex,
                                    const MarginSpec& spec,
                                    std::int64_t cap = kDefaultEnumerationCap) {
  return margin_loss_from_table(score_table(compile_features(fz, g, ex.x), w), g,
                                ex.y, spec, cap);
}

// Subgradient selection at the clip boundaries:
//   Clipped — zero vector when raw_margin <= 0 or raw_margin >= M (the spec'd
//   convention for the public operation; flat on both clip regions).
//   Hinge — the hinge branch -(1/rho)(Psi(x,y) - Psi(x,witness)) whenever
//   raw_margin > 0, i.e. a subgradient of the convex floored-unclipped hinge
//   max(0, raw_margin(w)). Training loops use this mode so descent can leave
//   the upper clip region.
enum class SubgradMode { Clipped, Hinge };

inline Weights margin_subgradient_from_pack(const FeaturePack& pack,
                                            const FactorGraph& g,
                                            const LabelAssignment& y,
                                            const MarginSpec& spec, const Weights& w,
                                            SubgradMode mode = SubgradMode::Clipped,
                                            std::int64_t cap = kDefaultEnumerationCap,
                                            MarginEvaluation* eval_out = nullptr) {
  const ScoreTable t = score_table(pack, w);
  const MarginEvaluation ev = margin_loss_from_table(t, g, y, spec, cap);
  if (eval_out) *eval_out = ev;
  Weights grad(w.size(), 0.0);
  const bool take_branch =
      mode == SubgradMode::Hinge
          ? ev.raw_margin > 0.0
          : (ev.raw_margin > 0.0 && ev.raw_margin < spec.loss.max_value);
  if (take_branch && ev.witness != y) {
    const double s = 1.0 / spec.rho;
    for (int f = 0; f < static_cast<int>(g.factors.size()); ++f) {
      const auto sizes = factor_sizes(g, f);
      const std::int64_t iy = assignment_index(restrict_to_factor(y, g, f), sizes);
      const std::int64_t iw =
          assignment_index(restrict_to_factor(ev.witness, g, f), sizes);
      if (iy == iw) continue;
      pack.factors[static_cast<std::size_t>(f)][static_cast<std::size_t>(iy)].add_to(
          grad, -s);
      pack.factors[static_cast<std::size_t>(f)][static_cast<std::size_t>(iw)].add_to(
          grad, s);
    }
  }
  return grad;
}

inline Weights margin_subgradient(const Weights& w, const Featurizer& fz,
                                  const FactorGraph& g, const StructuredExample& ex,
                                  const MarginSpec& spec,
                                  SubgradMode mode = SubgradMode::Clipped,
                                  std::int64_t cap = kDefaultEnumerationCap) {
  return margin_subgradient_from_pack(compile_features(fz, g, ex.x), g, ex.y, spec, w,
                                      mode, cap);
}

}  // namespace sop
