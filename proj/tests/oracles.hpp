// Copyright 2026 The fewbase Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reference implementations used by the tests. Each one is written from the
// defining formula with plain loops and shares no code with the library
// routine it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "fewbase/classifiers.hpp"
#include "fewbase/datastore.hpp"
#include "fewbase/library.hpp"

namespace fewbase::testing {

/// Gaussian blobs, `per_class` rows each, class means spread by `spread`.
inline FeatureSet random_feature_set(Rng& rng, int classes, int per_class, int dim, double spread) {
  FeatureSet set;
  set.features.resize(static_cast<Eigen::Index>(classes) * per_class, dim);
  for (int c = 0; c < classes; ++c) {
    set.class_names.push_back("c" + std::to_string(c));
    std::vector<double> mean(static_cast<std::size_t>(dim));
    for (auto& m : mean) m = spread * rng.normal();
    for (int r = 0; r < per_class; ++r) {
      const auto row = static_cast<Eigen::Index>(c) * per_class + r;
      for (int j = 0; j < dim; ++j) set.features(row, j) = static_cast<float>(mean[static_cast<std::size_t>(j)] + rng.normal());
      set.labels.push_back(c);
    }
  }
  return set;
}

/// Nearest centroid by exhaustive scan over squared distances; first
/// minimum wins.
inline std::vector<int> ncm_scan(const Matrix& support, const std::vector<int>& labels, int ways, const Matrix& query) {
  const auto d = support.cols();
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(ways), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  std::vector<int> count(static_cast<std::size_t>(ways), 0);
  for (Eigen::Index i = 0; i < support.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    ++count[c];
    for (Eigen::Index j = 0; j < d; ++j) sum[c][static_cast<std::size_t>(j)] += support(i, j);
  }
  std::vector<int> out;
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < ways; ++c) {
      double dist = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double mu = sum[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] / count[static_cast<std::size_t>(c)];
        dist += (query(i, j) - mu) * (query(i, j) - mu);
      }
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    out.push_back(best);
  }
  return out;
}

/// From-scratch Ward agglomeration, O(n^3) per step: every pair of current
/// clusters is rescored from member coordinates,
///   d(A, B) = sqrt(2 |A| |B| / (|A| + |B|)) * |mean(A) - mean(B)|.
/// Node ids follow SciPy (leaves 0..n-1, merge t creates n + t). Distances
/// equal within 1e-12 (relative) count as ties; ties go to the smallest
/// (min id, max id) pair.
inline std::vector<Merge> ward_reference(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  struct Cluster {
    int id;
    std::vector<int> members;
  };
  std::vector<Cluster> active;
  for (int i = 0; i < n; ++i) active.push_back({i, {i}});
  auto mean = [&](const Cluster& c) {
    std::vector<long double> m(static_cast<std::size_t>(x.cols()), 0.0L);
    for (const int r : c.members) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) m[static_cast<std::size_t>(j)] += x(r, j);
    }
    for (auto& v : m) v /= static_cast<long double>(c.members.size());
    return m;
  };
  std::vector<Merge> merges;
  for (int step = 0; step < n - 1; ++step) {
    std::vector<std::pair<double, std::pair<int, int>>> scored;
    double scale = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const auto ma = mean(active[a]), mb = mean(active[b]);
        long double sq = 0.0L;
        for (std::size_t j = 0; j < ma.size(); ++j) sq += (ma[j] - mb[j]) * (ma[j] - mb[j]);
        const long double na = active[a].members.size(), nb = active[b].members.size();
        const double dist = static_cast<double>(std::sqrt(2.0L * na * nb / (na + nb) * sq));
        scale = std::max(scale, dist);
        scored.push_back({dist, {static_cast<int>(a), static_cast<int>(b)}});
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : scored) best = std::min(best, s.first);
    const double tie = 1e-12 * std::max(1.0, scale);
    std::pair<int, int> best_key{n * 2, n * 2};
    std::pair<int, int> best_slots{-1, -1};
    double best_dist = 0.0;
    for (const auto& s : scored) {
      if (s.first > best + tie) continue;
      const int ia = active[static_cast<std::size_t>(s.second.first)].id;
      const int ib = active[static_cast<std::size_t>(s.second.second)].id;
      const std::pair<int, int> key{std::min(ia, ib), std::max(ia, ib)};
      if (key < best_key) {
        best_key = key;
        best_slots = s.second;
        best_dist = s.first;
      }
    }
    Cluster merged{n + step, active[static_cast<std::size_t>(best_slots.first)].members};
    const auto& other = active[static_cast<std::size_t>(best_slots.second)].members;
    merged.members.insert(merged.members.end(), other.begin(), other.end());
    merges.push_back({best_key.first, best_key.second, best_dist, static_cast<int>(merged.members.size())});
    active.erase(active.begin() + best_slots.second);
    active.erase(active.begin() + best_slots.first);
    active.push_back(std::move(merged));
  }
  return merges;
}

/// Optimal mass of the 1x1 unbalanced transport problem
///   min_p  c p + eps (p log p - p) + tau KL(p | a) + tau KL(p | b),
/// found by bisection on the stationarity condition in t = log p.
inline double uot_1x1_primal(double a, double b, double c, double eps, double tau) {
  auto dF = [&](double t) { return c + eps * t + tau * (t - std::log(a)) + tau * (t - std::log(b)); };
  double lo = -200.0, hi = 200.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dF(mid) > 0.0 ? hi : lo) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

/// Diagonal Fisher information estimated as the mean squared score
/// d log p(y | x) / d theta over x drawn uniformly from the rows and
/// y ~ p(. | x). Layout matches fim_diagonal: weights row-major, then bias.
inline Vector fim_monte_carlo(const LinearHead& probe, const Matrix& x, int samples, std::uint64_t seed) {
  const auto c = probe.weights.rows(), d = probe.weights.cols();
  Vector acc = Vector::Zero(c * d + c);
  Rng rng(seed);
  std::vector<double> p(static_cast<std::size_t>(c));
  for (int s = 0; s < samples; ++s) {
    const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(x.rows())));
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < c; ++k) {
      double z = probe.bias[k];
      for (Eigen::Index j = 0; j < d; ++j) z += probe.weights(k, j) * x(r, j);
      p[static_cast<std::size_t>(k)] = z;
      mx = std::max(mx, z);
    }
    double total = 0.0;
    for (auto& v : p) total += (v = std::exp(v - mx));
    for (auto& v : p) v /= total;
    double u = rng.uniform();
    Eigen::Index y = c - 1;
    for (Eigen::Index k = 0; k < c; ++k) {
      if (u < p[static_cast<std::size_t>(k)]) {
        y = k;
        break;
      }
      u -= p[static_cast<std::size_t>(k)];
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      const double score = (k == y ? 1.0 : 0.0) - p[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < d; ++j) acc[k * d + j] += score * score * x(r, j) * x(r, j);
      acc[c * d + k] += score * score;
    }
  }
  return acc / samples;
}

/// Mean softmax cross-entropy written out directly.
inline double mean_cross_entropy(const LinearHead& head, const Matrix& x, const std::vector<int>& y) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<long double> z(static_cast<std::size_t>(head.weights.rows()));
    for (Eigen::Index k = 0; k < head.weights.rows(); ++k) {
      long double v = head.bias[k];
      for (Eigen::Index j = 0; j < x.cols(); ++j) v += static_cast<long double>(head.weights(k, j)) * x(i, j);
      z[static_cast<std::size_t>(k)] = v;
    }
    long double s = 0.0L;
    for (const auto v : z) s += std::exp(v);
    total += std::log(s) - z[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])];
  }
  return static_cast<double>(total / x.rows());
}

struct NumericGradient {
  Matrix d_weights;
  Vector d_bias;
  Matrix d_inputs;
};

/// Central differences of mean_cross_entropy.
inline NumericGradient finite_difference_gradient(LinearHead head, Matrix x, const std::vector<int>& y, double h) {
  NumericGradient g;
  auto central = [&](double& v) {
    const double keep = v;
    v = keep + h;
    const double up = mean_cross_entropy(head, x, y);
    v = keep - h;
    const double down = mean_cross_entropy(head, x, y);
    v = keep;
    return (up - down) / (2.0 * h);
  };
  g.d_weights.resize(head.weights.rows(), head.weights.cols());
  for (Eigen::Index i = 0; i < head.weights.size(); ++i) g.d_weights.data()[i] = central(head.weights.data()[i]);
  g.d_bias.resize(head.bias.size());
  for (Eigen::Index i = 0; i < head.bias.size(); ++i) g.d_bias[i] = central(head.bias[i]);
  g.d_inputs.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) g.d_inputs.data()[i] = central(x.data()[i]);
  return g;
}

/// |a - b| / max(|a|, |b|, 1e-8), worst entry.
template <typename A, typename B>
double relative_error(const A& a, const B& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-8}));
  }
  return worst;
}

/// Silhouette from the definition, O(n^2) with explicit loops.
inline double silhouette_reference(const Matrix& x, const std::vector<int>& y) {
  const auto n = x.rows();
  const int k = *std::max_element(y.begin(), y.end()) + 1;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double sq = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) sq += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      sum[static_cast<std::size_t>(y[static_cast<std::size_t>(j)])] += std::sqrt(sq);
      ++cnt[static_cast<std::size_t>(y[static_cast<std::size_t>(j)])];
    }
    const auto own = static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
    if (cnt[own] == 0) continue;  // singleton contributes 0
    const double a = sum[own] / cnt[own];
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (static_cast<std::size_t>(c) != own && cnt[static_cast<std::size_t>(c)] > 0) {
        b = std::min(b, sum[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)]);
      }
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace fewbase::testing
