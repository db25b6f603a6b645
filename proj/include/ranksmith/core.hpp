// Copyright 2026 The Ranksmith Authors.
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

#ifndef RANKSMITH_CORE_HPP_
#define RANKSMITH_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ranksmith/error.hpp"

namespace ranksmith {

using Vector = std::vector<double>;
using Year = int;

/// Dense row-major matrix. Rows are items, columns are coordinates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Sharpness of the sigmoid relaxation. Always strictly positive.
class Temperature {
 public:
  explicit Temperature(double tau) : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      throw UsageError("temperature must be a positive finite number, got " +
                       std::to_string(tau));
    }
  }
  double value() const noexcept { return tau_; }

 private:
  double tau_;
};

/// Similarities of one query against its candidates. The query is never
/// one of its own candidates.
struct SimilarityRow {
  std::size_t query_index = 0;
  std::vector<double> scores;
  std::vector<std::size_t> candidate_indices;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// a.b / (|a| |b|). Zero vectors have no direction and are rejected.
inline double cosine_similarity(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() != b.size()) {
    throw UsageError("cosine_similarity: dimension mismatch (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw UsageError("cosine_similarity: empty vectors");
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DomainError("cosine_similarity: zero-norm vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

/// G(x; tau) = 1 / (1 + exp(-x / tau)).
inline double smooth_indicator(double x, Temperature tau) {
  const double z = x / tau.value();
  // Evaluate on the side where exp() cannot overflow.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// dG/dx = G (1 - G) / tau.
inline double smooth_indicator_derivative(double x, Temperature tau) {
  const double g = smooth_indicator(x, tau);
  return g * (1.0 - g) / tau.value();
}

namespace detail {

inline std::size_t position_in_row(std::size_t candidate,
                                   const SimilarityRow& row) {
  if (row.scores.size() != row.candidate_indices.size()) {
    throw UsageError("similarity row: scores and candidates differ in size");
  }
  const auto it = std::find(row.candidate_indices.begin(),
                            row.candidate_indices.end(), candidate);
  if (it == row.candidate_indices.end()) {
    throw UsageError("item " + std::to_string(candidate) +
                     " is not a candidate of query " +
                     std::to_string(row.query_index));
  }
  return static_cast<std::size_t>(it - row.candidate_indices.begin());
}

}  // namespace detail

/// 1 + number of candidates with strictly higher similarity. Tied items
/// share the better rank.
inline std::size_t hard_rank(std::size_t candidate, const SimilarityRow& row) {
  const std::size_t pos = detail::position_in_row(candidate, row);
  const double s = row.scores[pos];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < row.scores.size(); ++j) {
    if (j != pos && row.scores[j] > s) ++rank;
  }
  return rank;
}

/// 1 + sum_j G(s_j - s_i; tau). A competitor with higher similarity pushes
/// the rank up, so tau -> 0 recovers hard_rank away from ties.
inline double smooth_rank(std::size_t candidate, const SimilarityRow& row,
                          Temperature tau) {
  const std::size_t pos = detail::position_in_row(candidate, row);
  const double s = row.scores[pos];
  double rank = 1.0;
  for (std::size_t j = 0; j < row.scores.size(); ++j) {
    if (j != pos) rank += smooth_indicator(row.scores[j] - s, tau);
  }
  return rank;
}

/// Rows scaled to unit length; also returns the original norms.
inline Matrix normalized_rows(const Matrix& m, std::vector<double>* norms) {
  Matrix out(m.rows(), m.cols());
  if (norms != nullptr) norms->assign(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = norm(m.row(r));
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw DomainError("row " + std::to_string(r) +
                        " has zero or non-finite norm");
    }
    auto src = m.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = src[c] / n;
    if (norms != nullptr) (*norms)[r] = n;
  }
  return out;
}

/// All-vs-all cosine similarity matrix of the rows of `embeddings`.
inline Matrix similarity_matrix(const Matrix& embeddings) {
  const Matrix unit = normalized_rows(embeddings, nullptr);
  const std::size_t n = unit.rows();
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    sim(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = std::clamp(dot(unit.row(i), unit.row(j)), -1.0, 1.0);
      sim(i, j) = s;
      sim(j, i) = s;
    }
  }
  return sim;
}

}  // namespace ranksmith

#endif  // RANKSMITH_CORE_HPP_
