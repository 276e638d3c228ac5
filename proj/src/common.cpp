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

#include "fewbase/common.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace fewbase {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kMalformedHeader: return "malformed_header";
    case ErrorCode::kDtypeMismatch: return "dtype_mismatch";
    case ErrorCode::kTruncatedPayload: return "truncated_payload";
    case ErrorCode::kLabelOutOfRange: return "label_out_of_range";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kDuplicateName: return "duplicate_name";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kInsufficientExamples: return "insufficient_examples";
    case ErrorCode::kEmptySelection: return "empty_selection";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNonConvergence: return "non_convergence";
    case ErrorCode::kInapplicable: return "inapplicable";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

namespace {

std::string format_error(ErrorCode code, const std::string& field, const std::string& message) {
  std::string out = error_code_name(code);
  if (!field.empty()) out += " [" + field + "]";
  out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string field, const std::string& message)
    : std::runtime_error(format_error(code, field, message)), code_(code), field_(std::move(field)) {}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n", "Rng::below requires n > 0");
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  if (k > n) throw Error(ErrorCode::kInvalidArgument, "k", "cannot sample more items than available");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  idx.resize(k);
  return idx;
}

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "base64", "length is not a multiple of 4");
  }
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        q[k] = 0;
        ++pad;
      } else {
        q[k] = decode_char(c);
        if (q[k] < 0 || pad > 0) throw Error(ErrorCode::kInvalidArgument, "base64", "invalid character");
      }
    }
    if (pad > 2 || (pad > 0 && i + 4 != text.size())) {
      throw Error(ErrorCode::kInvalidArgument, "base64", "misplaced padding");
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return out;
}

namespace {

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xFF));
}

}  // namespace

std::string encode_f32le(const double* data, std::size_t count) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    put_u32le(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_f32le(const std::string& text, std::size_t expected_count,
                                 const std::string& field) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected_count * 4) {
    throw Error(ErrorCode::kTruncatedPayload, field,
                "expected " + std::to_string(expected_count) + " f32 values, got " +
                    std::to_string(bytes.size()) + " bytes");
  }
  std::vector<double> out(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    const float f = std::bit_cast<float>(v);
    if (!std::isfinite(f)) throw Error(ErrorCode::kNonFinite, field, "non-finite value in payload");
    out[i] = f;
  }
  return out;
}

}  // namespace fewbase
