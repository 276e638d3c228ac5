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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fewbase/classifiers.hpp"
#include "fewbase/episodes.hpp"
#include "fewbase/library.hpp"

namespace fewbase {

// Support-set scores predicting how well a library entry's features will
// classify the query set. Higher is better for every kind.

enum class HeuristicKind { kSsa, kSsc, kLoo, kSnr, kMcs, kRkm, kFim, kAa, kRh, kOracle };

HeuristicKind parse_heuristic(const std::string& name);
std::string heuristic_name(HeuristicKind kind);
std::vector<HeuristicKind> parse_heuristic_list(const std::string& csv);

struct HeuristicParams {
  double ssc_temperature = 1.0;
  int loo_reps = 30;
  std::size_t loo_exhaustive_limit = 256;
  int mcs_samples = 100;
  double mcs_shrinkage = 0.3;
  double rkm_eps = 1e-7;
  std::size_t fim_max_rows = 2000;  // base rows sampled per entry for its FIM embedding
  std::uint64_t seed = 0;
};

/// A score plus a flag for supports where the heuristic carries no signal.
struct HeuristicScore {
  double value = 0.0;
  bool degenerate = false;
};

/// Support-set NCM accuracy with the support as its own query set
/// (centroids include the evaluated point). Degenerate when every class has
/// a single shot.
HeuristicScore h_ssa(const Matrix& support, std::span<const int> labels);

/// Mean over support rows of max_k softmax_k(-d_k / T).
double h_ssc(const Matrix& support, std::span<const int> labels, double temperature = 1.0);

/// Hold one random row per class out, fit NCM on the rest, classify the
/// held-out rows; averaged over `reps` draws, or over every combination when
/// there are at most `exhaustive_limit`. Throws kInapplicable on 1-shot
/// classes.
double h_loo(const Matrix& support, std::span<const int> labels, int reps, std::uint64_t seed,
             std::size_t exhaustive_limit = 256);

/// Mean over class pairs of 2 ||mu_i - mu_j|| / (sigma_i + sigma_j), where
/// sigma is the RMS distance of a class's rows to its centroid. Pairs with
/// sigma_i + sigma_j = 0 (one-shot) contribute the centroid distance alone.
double h_snr(const Matrix& support, std::span<const int> labels);

/// NCM accuracy on virtual rows drawn from per-class Gaussians with
/// shrunk covariance (1 - a) S + a tr(S)/d I. One-shot classes use an
/// isotropic variance (mean pairwise centroid distance)^2 / d.
double h_mcs(const Matrix& support, std::span<const int> labels, int samples, double shrinkage,
             std::uint64_t seed);

/// Smooth rank exp(H(p)), p_k = (s_k + eps) / sum(s + eps) over singular values.
double h_rkm(const Matrix& features, double eps = 1e-7);

/// Diagonal Fisher information of a linear-softmax probe over rows of `x`,
/// flattened as [weights row-major, bias]:
///   F_cj = mean_x p_c (1 - p_c) x_j^2,  F_c = mean_x p_c (1 - p_c).
Vector fim_diagonal(const LinearHead& probe, const Matrix& x);

/// fim_diagonal normalized to unit length.
Vector fim_embedding(const LinearHead& probe, const Matrix& x);

/// Negated cosine distance between the support and cluster embeddings.
double h_fim(const Matrix& support, const Matrix& cluster_features, const LinearHead& probe);

/// Cluster receiving the most softmax mass from the support rows (ties to
/// the lower id).
int h_aa_cluster(const Matrix& support, const LinearHead& base_head, const ClassPartition& partition);

/// Everything the heuristics can consult besides the episode.
struct SelectionContext {
  const ExtractorLibrary* library = nullptr;
  const FeatureSet* base = nullptr;         // FIM cluster data
  const LinearHead* base_head = nullptr;    // AA activations and FIM probe
  HeuristicParams params;
  std::vector<Vector> fim_cluster_embeddings;  // filled by prepare_fim
  NcmOptions ncm;                              // query accuracy of each entry
};

/// Computes each entry's FIM embedding from (a seeded sample of) the base
/// rows of its subset.
void prepare_fim(SelectionContext& context);

/// Adapted support and query features for every library entry.
struct EntryEvaluation {
  std::vector<Matrix> support;
  std::vector<Matrix> query;
  std::vector<double> query_accuracy;
};

EntryEvaluation evaluate_entries(const Episode& episode, const ExtractorLibrary& library,
                                 const NcmOptions& options = {});

struct HeuristicReport {
  HeuristicKind kind = HeuristicKind::kSsa;
  std::vector<double> scores;  // NaN where an entry is not scored
  std::size_t selected = 0;
  double query_accuracy = 0.0;
  std::vector<double> entry_accuracies;
  bool fallback = false;         // heuristic inapplicable, base entry used
  bool evaluation_only = false;  // ORACLE reads the query labels
  std::string warning;
};

HeuristicReport select_extractor(HeuristicKind kind, const Episode& episode, const SelectionContext& context,
                                 const EntryEvaluation* evaluation = nullptr);

/// argmax with ties to the lowest index, skipping NaN.
std::size_t argmax_lowest(std::span<const double> values);

}  // namespace fewbase
