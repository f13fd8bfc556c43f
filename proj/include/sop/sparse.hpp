#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sop {

using Weights = std::vector<double>;

// Sparse feature vector: index/value pairs, sorted by index, indices unique.
struct SparseVec {
  std::vector<std::pair<int, double>> entries;

  void push(int index, double value) { entries.emplace_back(index, value); }

  // Sorts and merges duplicate indices. Call once after building.
  void compress() {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (out > 0 && entries[out - 1].first == entries[i].first) {
        entries[out - 1].second += entries[i].second;
      } else {
        entries[out++] = entries[i];
      }
    }
    entries.resize(out);
  }

  double dot(const Weights& w) const {
    double s = 0.0;
    for (const auto& [i, v] : entries) s += w[static_cast<std::size_t>(i)] * v;
    return s;
  }

  void add_to(Weights& out, double scale = 1.0) const {
    for (const auto& [i, v] : entries) out[static_cast<std::size_t>(i)] += scale * v;
  }

  double norm2_sq() const {
    double s = 0.0;
    for (const auto& [i, v] : entries) s += v * v;
    return s;
  }

  // l_q norm; q = infinity() gives the max-abs norm.
  double norm_q(double q) const {
    if (std::isinf(q)) {
      double m = 0.0;
      for (const auto& [i, v] : entries) m = std::max(m, std::fabs(v));
      return m;
    }
    if (q < 1.0) throw std::invalid_argument("norm_q: q must be >= 1");
    double s = 0.0;
    for (const auto& [i, v] : entries) s += std::pow(std::fabs(v), q);
    return std::pow(s, 1.0 / q);
  }
};

inline double dot(const Weights& a, const Weights& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2_sq(const Weights& w) {
  double s = 0.0;
  for (double x : w) s += x * x;
  return s;
}

inline double norm2(const Weights& w) { return std::sqrt(norm2_sq(w)); }

inline void axpy(Weights& y, double alpha, const Weights& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Weights& w, double s) {
  for (double& x : w) x *= s;
}

}  // namespace sop
