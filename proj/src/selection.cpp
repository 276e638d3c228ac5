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

#include "fewbase/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fewbase {

ClassSubset top_m(const Vector& scores, int m, std::string method) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m", "subset size must be >= 1");
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(m)));
  ClassSubset out;
  out.method = std::move(method);
  out.ids = order;
  for (const int id : order) out.scores.push_back(scores[id]);
  return out;
}

Vector average_activations(const Matrix& examples, const LinearHead& head) {
  if (examples.rows() < 1) throw Error(ErrorCode::kEmptySelection, "examples", "need at least one example");
  return predict_softmax(head, examples).colwise().mean().transpose();
}

ClassSubset select_aa(const Matrix& examples, const LinearHead& head, int m) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m", "subset size must be >= 1");
  return top_m(average_activations(examples, head), m, "aa");
}

Matrix pairwise_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw Error(ErrorCode::kDimensionMismatch, "centroids", "column counts differ");
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = (a.row(i) - b.row(j)).norm();
  }
  return out;
}

namespace {

double median(std::vector<double> values) {
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

double log_sum_exp(const double* v, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace

UotResult unbalanced_sinkhorn(const Matrix& cost, const Vector& mass_rows, const Vector& mass_cols,
                              const UotParams& params) {
  const auto k = cost.rows();
  const auto c = cost.cols();
  if (k < 1 || c < 1) throw Error(ErrorCode::kInvalidArgument, "cost", "empty cost matrix");
  if (mass_rows.size() != k || mass_cols.size() != c) {
    throw Error(ErrorCode::kDimensionMismatch, "mass", "mass vectors must match the cost shape");
  }
  if (!cost.allFinite() || cost.minCoeff() < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "cost", "cost must be finite and nonnegative");
  }
  if ((mass_rows.array() <= 0.0).any() || (mass_cols.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "mass", "masses must be positive");
  }
  if (!(params.epsilon > 0.0) || !(params.tau > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "params", "epsilon and tau must be positive");
  }

  double unit = 1.0;
  if (params.scale == UotScale::kRelative) {
    unit = median(std::vector<double>(cost.data(), cost.data() + cost.size()));
    if (!(unit > 0.0)) {
      // All-zero (or mostly zero) costs: fall back to the mean, then to 1.
      unit = cost.mean() > 0.0 ? cost.mean() : 1.0;
    }
  }
  const double eps = params.epsilon * unit;
  const double tau = params.tau * unit;
  const double lambda = tau / (tau + eps);

  UotResult r;
  r.epsilon = eps;
  r.tau = tau;
  Vector f = Vector::Zero(k), g = Vector::Zero(c);
  const Vector log_a = mass_rows.array().log();
  const Vector log_b = mass_cols.array().log();
  std::vector<double> buf(static_cast<std::size_t>(std::max(k, c)));

  for (int it = 0; it < params.max_iters; ++it) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) buf[static_cast<std::size_t>(j)] = (g[j] - cost(i, j)) / eps;
      const double next = lambda * (eps * log_a[i] - eps * log_sum_exp(buf.data(), static_cast<std::size_t>(c)));
      change = std::max(change, std::abs(next - f[i]));
      f[i] = next;
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < k; ++i) buf[static_cast<std::size_t>(i)] = (f[i] - cost(i, j)) / eps;
      const double next = lambda * (eps * log_b[j] - eps * log_sum_exp(buf.data(), static_cast<std::size_t>(k)));
      change = std::max(change, std::abs(next - g[j]));
      g[j] = next;
    }
    r.residual = change / eps;
    r.residual_history.push_back(r.residual);
    r.iterations = it + 1;
    if (!std::isfinite(r.residual)) {
      throw Error(ErrorCode::kNonConvergence, "epsilon",
                  "non-finite scaling vectors; increase epsilon (currently " + std::to_string(eps) + ")");
    }
    if (r.residual <= params.tolerance) {
      r.converged = true;
      break;
    }
  }

  r.plan.resize(k, c);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) r.plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps);
  }
  if (!r.plan.allFinite()) {
    throw Error(ErrorCode::kNonConvergence, "epsilon", "transport plan overflowed; increase epsilon");
  }
  r.row_marginals = r.plan.rowwise().sum();
  r.col_marginals = r.plan.colwise().sum().transpose();
  return r;
}

ClassSubset select_uot(const Matrix& target_centroids, const Matrix& base_centroids, const UotParams& params, int m) {
  if (target_centroids.rows() < 1 || base_centroids.rows() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "centroids", "need at least one class on each side");
  }
  const Matrix cost = pairwise_distances(target_centroids, base_centroids);
  const auto result = unbalanced_sinkhorn(cost, Vector::Ones(cost.rows()), Vector::Ones(cost.cols()), params);
  if (!result.converged) {
    std::ostringstream msg;
    msg << "no convergence after " << result.iterations << " iterations (residual " << result.residual << ")";
    throw Error(ErrorCode::kNonConvergence, "max_iters", msg.str());
  }
  return top_m(result.col_marginals, m, "uot");
}

}  // namespace fewbase
