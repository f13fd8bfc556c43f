#pragma once

// Task losses L(y, y') and the clip function behind the margin loss.

#include <stdexcept>
#include <vector>

#include "sop/graph.hpp"

namespace sop {

enum class LossKind { HammingUnnormalized, HammingNormalized, ZeroOne };

struct TaskLoss {
  LossKind kind = LossKind::HammingUnnormalized;
  double max_value = 0.0;  // M = max_{y,y'} L(y,y')

  static TaskLoss make(LossKind kind, const FactorGraph& g) {
    TaskLoss t;
    t.kind = kind;
    t.max_value =
        kind == LossKind::HammingUnnormalized ? static_cast<double>(g.num_vars) : 1.0;
    return t;
  }
};

inline double task_loss(const TaskLoss& loss, const LabelAssignment& y,
                        const LabelAssignment& yp) {
  if (y.size() != yp.size()) throw std::invalid_argument("task_loss: length mismatch");
  int mismatches = 0;
  for (std::size_t k = 0; k < y.size(); ++k) mismatches += (y[k] != yp[k]);
  switch (loss.kind) {
    case LossKind::HammingUnnormalized:
      return static_cast<double>(mismatches);
    case LossKind::HammingNormalized:
      return static_cast<double>(mismatches) / static_cast<double>(y.size());
    case LossKind::ZeroOne:
      return mismatches > 0 ? 1.0 : 0.0;
  }
  return 0.0;
}

// Hamming variants decompose over nodes; zero-one does not.
inline bool node_decomposable(const TaskLoss& loss) {
  return loss.kind != LossKind::ZeroOne;
}

// Per-node contribution of a single mismatch.
inline double node_loss_weight(const TaskLoss& loss, int num_vars) {
  return loss.kind == LossKind::HammingNormalized
             ? 1.0 / static_cast<double>(num_vars)
             : 1.0;
}

// Phi*(r) = min(M, max(0, r)).
inline double phi_star(double r, double M) {
  if (!(M > 0.0)) throw std::invalid_argument("phi_star: M must be > 0");
  if (r < 0.0) return 0.0;
  if (r > M) return M;
  return r;
}

struct MarginSpec {
  double rho = 1.0;
  TaskLoss loss;

  MarginSpec(double rho_, TaskLoss loss_) : rho(rho_), loss(loss_) {
    if (!(rho > 0.0)) throw std::invalid_argument("MarginSpec: rho must be > 0");
  }
};

}  // namespace sop
