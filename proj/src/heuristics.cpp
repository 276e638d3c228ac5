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

#include "fewbase/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fewbase {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<std::size_t>> rows_by_class(std::span<const int> labels, std::size_t rows) {
  if (labels.size() != rows) throw Error(ErrorCode::kDimensionMismatch, "labels", "label count differs from row count");
  if (labels.empty()) throw Error(ErrorCode::kEmptySelection, "support", "empty support");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw Error(ErrorCode::kLabelOutOfRange, "labels", std::to_string(labels[i]));
    out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (out[c].empty()) throw Error(ErrorCode::kInsufficientExamples, "labels", "class " + std::to_string(c) + " has no shots");
  }
  return out;
}

}  // namespace

HeuristicKind parse_heuristic(const std::string& name) {
  std::string n;
  for (const char ch : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (n == "ssa") return HeuristicKind::kSsa;
  if (n == "ssc") return HeuristicKind::kSsc;
  if (n == "loo") return HeuristicKind::kLoo;
  if (n == "snr") return HeuristicKind::kSnr;
  if (n == "mcs") return HeuristicKind::kMcs;
  if (n == "rkm" || n == "rankme") return HeuristicKind::kRkm;
  if (n == "fim") return HeuristicKind::kFim;
  if (n == "aa") return HeuristicKind::kAa;
  if (n == "rh" || n == "random") return HeuristicKind::kRh;
  if (n == "oracle" || n == "or") return HeuristicKind::kOracle;
  throw Error(ErrorCode::kConfig, "kinds", "unknown heuristic '" + name + "'");
}

std::string heuristic_name(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::kSsa: return "ssa";
    case HeuristicKind::kSsc: return "ssc";
    case HeuristicKind::kLoo: return "loo";
    case HeuristicKind::kSnr: return "snr";
    case HeuristicKind::kMcs: return "mcs";
    case HeuristicKind::kRkm: return "rkm";
    case HeuristicKind::kFim: return "fim";
    case HeuristicKind::kAa: return "aa";
    case HeuristicKind::kRh: return "rh";
    case HeuristicKind::kOracle: return "oracle";
  }
  return "ssa";
}

std::vector<HeuristicKind> parse_heuristic_list(const std::string& csv) {
  std::vector<HeuristicKind> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_heuristic(item));
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "kinds", "no heuristics given");
  return out;
}

HeuristicScore h_ssa(const Matrix& support, std::span<const int> labels) {
  const auto groups = rows_by_class(labels, static_cast<std::size_t>(support.rows()));
  const bool one_shot = std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() == 1; });
  const auto model = fit_ncm(support, labels, static_cast<int>(groups.size()));
  return {accuracy(predict_ncm(model, support).labels, labels), one_shot};
}

double h_ssc(const Matrix& support, std::span<const int> labels, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "T", "temperature must be positive");
  const auto groups = rows_by_class(labels, static_cast<std::size_t>(support.rows()));
  const auto model = fit_ncm(support, labels, static_cast<int>(groups.size()));
  const auto pred = predict_ncm(model, support);
  const Matrix p = softmax_rows(-pred.distances / temperature);
  return p.rowwise().maxCoeff().mean();
}

double h_loo(const Matrix& support, std::span<const int> labels, int reps, std::uint64_t seed,
             std::size_t exhaustive_limit) {
  const auto groups = rows_by_class(labels, static_cast<std::size_t>(support.rows()));
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].size() < 2) {
      throw Error(ErrorCode::kInapplicable, "labels", "LOO needs >= 2 shots per class (class " + std::to_string(c) + ")");
    }
  }
  const auto k = groups.size();
  auto score_holdout = [&](const std::vector<std::size_t>& held) {
    // held[c] indexes into groups[c].
    std::vector<bool> out(static_cast<std::size_t>(support.rows()), false);
    for (std::size_t c = 0; c < k; ++c) out[groups[c][held[c]]] = true;
    Matrix train(support.rows() - static_cast<Eigen::Index>(k), support.cols());
    std::vector<int> train_labels;
    Matrix test(static_cast<Eigen::Index>(k), support.cols());
    std::vector<int> test_labels;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
      if (out[static_cast<std::size_t>(i)]) continue;
      train.row(r++) = support.row(i);
      train_labels.push_back(labels[static_cast<std::size_t>(i)]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      test.row(static_cast<Eigen::Index>(c)) = support.row(static_cast<Eigen::Index>(groups[c][held[c]]));
      test_labels.push_back(static_cast<int>(c));
    }
    const auto model = fit_ncm(train, train_labels, static_cast<int>(k));
    return accuracy(predict_ncm(model, test).labels, test_labels);
  };

  // Combination count, saturating.
  std::size_t combos = 1;
  for (const auto& g : groups) {
    if (combos > exhaustive_limit) break;
    combos *= g.size();
  }
  std::vector<std::size_t> held(k, 0);
  if (combos <= exhaustive_limit) {
    double total = 0.0;
    for (std::size_t t = 0; t < combos; ++t) {
      total += score_holdout(held);
      for (std::size_t c = 0; c < k; ++c) {
        if (++held[c] < groups[c].size()) break;
        held[c] = 0;
      }
    }
    return total / static_cast<double>(combos);
  }
  if (reps < 1) throw Error(ErrorCode::kInvalidArgument, "reps", "need at least one repetition");
  Rng rng(seed);
  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    for (std::size_t c = 0; c < k; ++c) held[c] = rng.below(groups[c].size());
    total += score_holdout(held);
  }
  return total / static_cast<double>(reps);
}

namespace {

double mean_pairwise_distance(const Matrix& centroids) {
  const auto k = centroids.rows();
  if (k < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j, ++pairs) total += (centroids.row(i) - centroids.row(j)).norm();
  }
  return total / static_cast<double>(pairs);
}

}  // namespace

double h_snr(const Matrix& support, std::span<const int> labels) {
  const auto groups = rows_by_class(labels, static_cast<std::size_t>(support.rows()));
  const auto model = fit_ncm(support, labels, static_cast<int>(groups.size()));
  const auto k = groups.size();
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "labels", "SNR needs at least 2 classes");
  std::vector<double> sigma(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double sq = 0.0;
    for (const auto r : groups[c]) {
      sq += (support.row(static_cast<Eigen::Index>(r)) - model.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
    }
    sigma[c] = std::sqrt(sq / static_cast<double>(groups[c].size()));
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j, ++pairs) {
      const double delta =
          (model.centroids.row(static_cast<Eigen::Index>(i)) - model.centroids.row(static_cast<Eigen::Index>(j))).norm();
      const double noise = sigma[i] + sigma[j];
      total += noise > 0.0 ? 2.0 * delta / noise : delta;
    }
  }
  return total / static_cast<double>(pairs);
}

double h_mcs(const Matrix& support, std::span<const int> labels, int samples, double shrinkage, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "samples", "need at least one virtual sample per class");
  if (shrinkage < 0.0 || shrinkage > 1.0) throw Error(ErrorCode::kInvalidArgument, "shrinkage", "must be in [0, 1]");
  const auto groups = rows_by_class(labels, static_cast<std::size_t>(support.rows()));
  const auto k = groups.size();
  const auto d = support.cols();
  const auto model = fit_ncm(support, labels, static_cast<int>(k));
  const double iso_sd = mean_pairwise_distance(model.centroids) / std::sqrt(static_cast<double>(d));

  Rng rng(seed);
  Matrix virtual_rows(static_cast<Eigen::Index>(k) * samples, d);
  std::vector<int> virtual_labels;
  virtual_labels.reserve(static_cast<std::size_t>(virtual_rows.rows()));
  Vector z(d);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const RowVector mu = model.centroids.row(static_cast<Eigen::Index>(c));
    Matrix factor;  // virtual = mu + z^T factor^T
    if (groups[c].size() == 1) {
      factor = Matrix::Identity(d, d) * iso_sd;
    } else {
      Matrix centered(static_cast<Eigen::Index>(groups[c].size()), d);
      for (std::size_t r = 0; r < groups[c].size(); ++r) {
        centered.row(static_cast<Eigen::Index>(r)) = support.row(static_cast<Eigen::Index>(groups[c][r])) - mu;
      }
      Matrix cov = centered.transpose() * centered / static_cast<double>(groups[c].size() - 1);
      const double iso = cov.trace() / static_cast<double>(d);
      cov = (1.0 - shrinkage) * cov;
      cov.diagonal().array() += shrinkage * iso;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
      factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    for (int s = 0; s < samples; ++s, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
      virtual_rows.row(row) = mu + (factor * z).transpose();
      virtual_labels.push_back(static_cast<int>(c));
    }
  }
  return accuracy(predict_ncm(model, virtual_rows).labels, virtual_labels);
}

double h_rkm(const Matrix& features, double eps) {
  if (features.size() == 0 || features.isZero(0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "features", "smooth rank of an all-zero matrix is undefined");
  }
  Eigen::BDCSVD<Matrix> svd(features);
  const Vector s = svd.singularValues().array() + eps;
  const Vector p = s / s.sum();
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) entropy -= p[i] * std::log(p[i]);
  }
  return std::exp(entropy);
}

Vector fim_diagonal(const LinearHead& probe, const Matrix& x) {
  if (probe.num_classes() < 2) throw Error(ErrorCode::kInvalidArgument, "probe", "degenerate probe with a single class");
  if (x.rows() < 1) throw Error(ErrorCode::kEmptySelection, "x", "no rows");
  const Matrix p = predict_softmax(probe, x);
  const Matrix w = (p.array() * (1.0 - p.array())).matrix();  // n x C
  const Matrix x2 = x.array().square().matrix();              // n x d
  const auto c = static_cast<Eigen::Index>(probe.num_classes());
  const auto d = x.cols();
  const double n = static_cast<double>(x.rows());
  Vector out(c * d + c);
  const Matrix fw = w.transpose() * x2 / n;  // C x d
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out[i * d + j] = fw(i, j);
  }
  out.tail(c) = w.colwise().mean().transpose();
  return out;
}

Vector fim_embedding(const LinearHead& probe, const Matrix& x) {
  Vector f = fim_diagonal(probe, x);
  const double norm = f.norm();
  if (norm > 0.0) f /= norm;
  return f;
}

double h_fim(const Matrix& support, const Matrix& cluster_features, const LinearHead& probe) {
  const Vector a = fim_embedding(probe, support);
  const Vector b = fim_embedding(probe, cluster_features);
  return a.dot(b) - 1.0;
}

int h_aa_cluster(const Matrix& support, const LinearHead& base_head, const ClassPartition& partition) {
  if (partition.assignment.size() != base_head.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition", "partition must cover every base class");
  }
  const Vector mass = predict_softmax(base_head, support).colwise().sum().transpose();
  std::vector<double> sums(static_cast<std::size_t>(partition.clusters), 0.0);
  for (std::size_t c = 0; c < partition.assignment.size(); ++c) {
    sums[static_cast<std::size_t>(partition.assignment[c])] += mass[static_cast<Eigen::Index>(c)];
  }
  return static_cast<int>(argmax_lowest(sums));
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) continue;
    if (best == values.size() || values[i] > values[best]) best = i;
  }
  if (best == values.size()) throw Error(ErrorCode::kInvalidArgument, "scores", "no finite score");
  return best;
}

void prepare_fim(SelectionContext& context) {
  if (context.library == nullptr || context.base == nullptr || context.base_head == nullptr) {
    throw Error(ErrorCode::kConfig, "fim", "FIM needs the library, the base set and the base head");
  }
  const auto by_class = context.base->indices_by_class();
  context.fim_cluster_embeddings.clear();
  for (std::size_t e = 0; e < context.library->entries.size(); ++e) {
    std::vector<std::size_t> rows;
    for (const int id : context.library->entries[e].subset.ids) {
      const auto& r = by_class.at(static_cast<std::size_t>(id));
      rows.insert(rows.end(), r.begin(), r.end());
    }
    if (rows.size() > context.params.fim_max_rows) {
      Rng rng(split_seed(context.params.seed, 0xF1ULL + e));
      const auto keep = sample_without_replacement(rng, rows.size(), context.params.fim_max_rows);
      std::vector<std::size_t> sampled;
      for (const auto k : keep) sampled.push_back(rows[k]);
      std::sort(sampled.begin(), sampled.end());
      rows = std::move(sampled);
    }
    context.fim_cluster_embeddings.push_back(fim_embedding(*context.base_head, context.base->gather(rows)));
  }
}

EntryEvaluation evaluate_entries(const Episode& episode, const ExtractorLibrary& library, const NcmOptions& options) {
  EntryEvaluation ev;
  for (const auto& entry : library.entries) {
    ev.support.push_back(apply_adapter(entry.adapter, episode.support_features));
    ev.query.push_back(apply_adapter(entry.adapter, episode.query_features));
    ev.query_accuracy.push_back(
        ncm_accuracy(ev.support.back(), episode.support_labels, ev.query.back(), episode.query_labels, options));
  }
  return ev;
}

HeuristicReport select_extractor(HeuristicKind kind, const Episode& episode, const SelectionContext& context,
                                 const EntryEvaluation* evaluation) {
  if (context.library == nullptr || context.library->entries.empty()) {
    throw Error(ErrorCode::kConfig, "library", "empty extractor library");
  }
  const auto& lib = *context.library;
  EntryEvaluation local;
  if (evaluation == nullptr) {
    local = evaluate_entries(episode, lib, context.ncm);
    evaluation = &local;
  }
  const auto n = lib.entries.size();
  const auto& params = context.params;
  const std::uint64_t episode_seed = split_seed(params.seed, episode.seed);

  HeuristicReport report;
  report.kind = kind;
  report.entry_accuracies = evaluation->query_accuracy;
  report.scores.assign(n, kNaN);

  auto finish = [&](std::size_t selected) {
    report.selected = selected;
    report.query_accuracy = evaluation->query_accuracy[selected];
    return report;
  };
  if (n == 1) {
    report.scores[0] = 0.0;
    return finish(0);
  }

  try {
    switch (kind) {
      case HeuristicKind::kOracle:
        report.evaluation_only = true;
        report.scores = evaluation->query_accuracy;
        break;
      case HeuristicKind::kRh: {
        Rng rng(episode_seed);
        const auto pick = rng.below(n);
        report.scores[pick] = 1.0;
        break;
      }
      case HeuristicKind::kAa: {
        if (context.base_head == nullptr) throw Error(ErrorCode::kConfig, "base_head", "AA needs the base head");
        const Vector mass = predict_softmax(*context.base_head, episode.support_features).colwise().sum().transpose();
        for (std::size_t e = 0; e < n; ++e) {
          if (lib.entries[e].is_base) continue;  // covers every class, never a specialist
          double s = 0.0;
          for (const int id : lib.entries[e].subset.ids) s += mass[id];
          report.scores[e] = s;
        }
        break;
      }
      case HeuristicKind::kFim: {
        if (context.base_head == nullptr || context.fim_cluster_embeddings.size() != n) {
          throw Error(ErrorCode::kConfig, "fim", "call prepare_fim before selecting with FIM");
        }
        const Vector support_embedding = fim_embedding(*context.base_head, episode.support_features);
        for (std::size_t e = 0; e < n; ++e) {
          report.scores[e] = support_embedding.dot(context.fim_cluster_embeddings[e]) - 1.0;
        }
        break;
      }
      default:
        for (std::size_t e = 0; e < n; ++e) {
          const Matrix& s = evaluation->support[e];
          const auto& y = episode.support_labels;
          switch (kind) {
            case HeuristicKind::kSsa: {
              const auto score = h_ssa(s, y);
              if (score.degenerate) {
                throw Error(ErrorCode::kInapplicable, "ssa", "support accuracy is always 1 with one shot per class");
              }
              report.scores[e] = score.value;
              break;
            }
            case HeuristicKind::kSsc: report.scores[e] = h_ssc(s, y, params.ssc_temperature); break;
            case HeuristicKind::kLoo:
              report.scores[e] = h_loo(s, y, params.loo_reps, episode_seed, params.loo_exhaustive_limit);
              break;
            case HeuristicKind::kSnr: report.scores[e] = h_snr(s, y); break;
            case HeuristicKind::kMcs:
              report.scores[e] = h_mcs(s, y, params.mcs_samples, params.mcs_shrinkage, episode_seed);
              break;
            case HeuristicKind::kRkm: report.scores[e] = h_rkm(s, params.rkm_eps); break;
            default: break;
          }
        }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInapplicable) throw;
    report.fallback = true;
    report.warning = e.what();
    report.scores.assign(n, kNaN);
    return finish(lib.base_index());
  }
  return finish(argmax_lowest(report.scores));
}

}  // namespace fewbase
