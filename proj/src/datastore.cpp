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

#include "fewbase/datastore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fewbase {

using nlohmann::json;

namespace {

constexpr char kMagic[] = "FFSv1\n";
constexpr std::size_t kMagicSize = 6;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[offset + k]) << (8 * k);
  return v;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kMalformedHeader, "split", "unknown split '" + name + "'");
}

void FeatureSet::validate() const {
  if (features.rows() < 1) throw Error(ErrorCode::kMalformedHeader, "n", "need at least one row");
  if (features.cols() < 1) throw Error(ErrorCode::kMalformedHeader, "d", "need at least one column");
  if (labels.size() != rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels", "label count differs from row count");
  }
  if (class_names.empty() || class_names.size() > kMaxClasses) {
    throw Error(ErrorCode::kMalformedHeader, "classes", "class count must be in [1, 2^20]");
  }
  std::set<std::string> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::kDuplicateName, "classes", "duplicate class name '" + name + "'");
    }
  }
  const auto c = static_cast<std::int64_t>(class_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw Error(ErrorCode::kLabelOutOfRange, "labels",
                  "label " + std::to_string(labels[i]) + " at row " + std::to_string(i));
    }
  }
  if (!features.allFinite()) throw Error(ErrorCode::kNonFinite, "features", "NaN or infinite entry");
}

std::vector<std::vector<std::size_t>> FeatureSet::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(num_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

Matrix FeatureSet::gather(std::span<const std::size_t> rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r])).cast<double>();
  }
  return out;
}

Matrix StandardizationStats::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorCode::kDimensionMismatch, "x", "column count");
  return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Matrix StandardizationStats::invert(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorCode::kDimensionMismatch, "x", "column count");
  Matrix out = x.array().rowwise() * std.transpose().array();
  return out.rowwise() + mean.transpose();
}

std::vector<std::uint8_t> encode_feature_set(const FeatureSet& set) {
  set.validate();
  json header;
  header["n"] = set.rows();
  header["d"] = set.dim();
  header["dtype"] = "f32le";
  header["classes"] = set.class_names;
  header["split"] = split_name(set.split);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kMagicSize + 4 + text.size() + 4 * set.rows() * (set.dim() + 1));
  out.insert(out.end(), kMagic, kMagic + kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (Eigen::Index i = 0; i < set.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < set.features.cols(); ++j) {
      put_u32(out, std::bit_cast<std::uint32_t>(set.features(i, j)));
    }
  }
  for (const auto label : set.labels) put_u32(out, std::bit_cast<std::uint32_t>(label));
  return out;
}

FeatureSet decode_feature_set(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagicSize + 4 || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0) {
    throw Error(ErrorCode::kMalformedHeader, "magic", "not an FFSv1 file");
  }
  const std::size_t header_len = get_u32(bytes, kMagicSize);
  const std::size_t header_end = kMagicSize + 4 + header_len;
  if (header_end > bytes.size()) {
    throw Error(ErrorCode::kTruncatedPayload, "header", "header length exceeds file size");
  }
  json header;
  try {
    header = json::parse(bytes.begin() + kMagicSize + 4, bytes.begin() + header_end);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader, "header", e.what());
  }
  if (!header.is_object()) throw Error(ErrorCode::kMalformedHeader, "header", "not a JSON object");
  for (const char* key : {"n", "d", "dtype", "classes", "split"}) {
    if (!header.contains(key)) throw Error(ErrorCode::kMalformedHeader, key, "missing key");
  }
  if (!header["n"].is_number_unsigned() || header["n"].get<std::uint64_t>() < 1) {
    throw Error(ErrorCode::kMalformedHeader, "n", "must be a positive integer");
  }
  if (!header["d"].is_number_unsigned() || header["d"].get<std::uint64_t>() < 1) {
    throw Error(ErrorCode::kMalformedHeader, "d", "must be a positive integer");
  }
  if (!header["dtype"].is_string() || header["dtype"].get<std::string>() != "f32le") {
    throw Error(ErrorCode::kDtypeMismatch, "dtype", "expected f32le, got " + header["dtype"].dump());
  }
  if (!header["classes"].is_array()) throw Error(ErrorCode::kMalformedHeader, "classes", "must be an array");
  if (!header["split"].is_string()) throw Error(ErrorCode::kMalformedHeader, "split", "must be a string");

  FeatureSet set;
  const auto n = header["n"].get<std::size_t>();
  const auto d = header["d"].get<std::size_t>();
  try {
    set.class_names = header["classes"].get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kMalformedHeader, "classes", "entries must be strings");
  }
  set.split = parse_split(header["split"].get<std::string>());

  const std::size_t payload = 4 * n * d + 4 * n;
  if (bytes.size() - header_end != payload) {
    throw Error(ErrorCode::kTruncatedPayload, "payload",
                "expected " + std::to_string(payload) + " bytes after header, found " +
                    std::to_string(bytes.size() - header_end));
  }
  set.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t off = header_end;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j, off += 4) {
      set.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::bit_cast<float>(get_u32(bytes, off));
    }
  }
  set.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i, off += 4) set.labels[i] = std::bit_cast<std::int32_t>(get_u32(bytes, off));
  set.validate();
  return set;
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_feature_set(bytes);
}

void save_feature_set(const FeatureSet& set, const std::filesystem::path& path) {
  const auto bytes = encode_feature_set(set);
  write_file_bytes(path, bytes);
}

CentroidTable class_centroids(const FeatureSet& set) {
  set.validate();
  const auto c = static_cast<Eigen::Index>(set.num_classes());
  CentroidTable table;
  table.centroids = Matrix::Zero(c, set.features.cols());
  table.counts.assign(set.num_classes(), 0);
  for (std::size_t i = 0; i < set.rows(); ++i) {
    const auto label = set.labels[i];
    table.centroids.row(label) += set.features.row(static_cast<Eigen::Index>(i)).cast<double>();
    ++table.counts[static_cast<std::size_t>(label)];
  }
  for (Eigen::Index k = 0; k < c; ++k) {
    const auto count = table.counts[static_cast<std::size_t>(k)];
    if (count > 0) table.centroids.row(k) /= static_cast<double>(count);
  }
  return table;
}

StandardizationStats fit_standardization(const FeatureSet& set, std::span<const int> class_ids) {
  if (class_ids.empty()) throw Error(ErrorCode::kEmptySelection, "subset", "no classes selected");
  std::vector<bool> selected(set.num_classes(), false);
  for (const int id : class_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= set.num_classes()) {
      throw Error(ErrorCode::kLabelOutOfRange, "subset", "class id " + std::to_string(id));
    }
    selected[static_cast<std::size_t>(id)] = true;
  }
  const auto d = set.features.cols();
  Vector sum = Vector::Zero(d);
  std::size_t count = 0;
  for (std::size_t i = 0; i < set.rows(); ++i) {
    if (!selected[static_cast<std::size_t>(set.labels[i])]) continue;
    sum += set.features.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kEmptySelection, "subset", "selected classes have no rows");
  StandardizationStats stats;
  stats.mean = sum / static_cast<double>(count);
  Vector sq = Vector::Zero(d);
  for (std::size_t i = 0; i < set.rows(); ++i) {
    if (!selected[static_cast<std::size_t>(set.labels[i])]) continue;
    const Vector diff = set.features.row(static_cast<Eigen::Index>(i)).cast<double>().transpose() - stats.mean;
    sq += diff.cwiseProduct(diff);
  }
  stats.std = (sq / static_cast<double>(count)).cwiseSqrt().cwiseMax(kStdFloor);
  return stats;
}

StandardizationStats fit_standardization(const FeatureSet& set, const ClassSubset& subset) {
  return fit_standardization(set, std::span<const int>(subset.ids));
}

void l2_normalize_rows(Matrix& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (norm > 0.0) x.row(i) /= norm;
  }
}

const std::filesystem::path& DatasetManifest::at(const std::string& split) const {
  const auto it = splits.find(split);
  if (it == splits.end()) throw Error(ErrorCode::kConfig, split, "manifest has no entry for split");
  return it->second;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string(), e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kConfig, path.string(), "manifest must be an object");
  DatasetManifest manifest;
  const auto base = path.parent_path();
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) throw Error(ErrorCode::kConfig, key, "manifest entries must be paths");
    std::filesystem::path p = value.get<std::string>();
    manifest.splits[key] = p.is_relative() ? base / p : p;
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json doc = json::object();
  for (const auto& [key, value] : manifest.splits) doc[key] = value.string();
  write_text_file(path, doc.dump(2) + "\n");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, path.string(), "cannot open for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, path.string(), "write failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, path.string(), "cannot open for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, path.string(), "write failed");
}

}  // namespace fewbase
