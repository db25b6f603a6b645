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

// Year estimation from the k most similar items of a labelled support set.

#ifndef RANKSMITH_KNN_HPP_
#define RANKSMITH_KNN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ranksmith/core.hpp"
#include "ranksmith/data.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/metrics.hpp"
#include "ranksmith/parallel.hpp"

namespace ranksmith {

inline constexpr std::size_t kDefaultK = 10;

/// Labelled embeddings queried by the predictors. Immutable once built.
class SupportSet {
 public:
  SupportSet() = default;

  SupportSet(std::vector<ItemId> ids, std::vector<Year> years,
             Matrix embeddings)
      : ids_(std::move(ids)),
        years_(std::move(years)),
        embeddings_(std::move(embeddings)) {
    if (ids_.empty()) throw UsageError("support set is empty");
    if (ids_.size() != years_.size() || ids_.size() != embeddings_.rows()) {
      throw UsageError("support set: ids, years and embeddings differ");
    }
    unit_ = normalized_rows(embeddings_, nullptr);
    min_year_ = *std::min_element(years_.begin(), years_.end());
    max_year_ = *std::max_element(years_.begin(), years_.end());
  }

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return embeddings_.cols(); }
  ItemId id(std::size_t i) const { return ids_[i]; }
  Year year(std::size_t i) const { return years_[i]; }
  const std::vector<ItemId>& ids() const noexcept { return ids_; }
  const std::vector<Year>& years() const noexcept { return years_; }
  const Matrix& embeddings() const noexcept { return embeddings_; }
  /// Unit-length copies of the embeddings.
  std::span<const double> unit(std::size_t i) const { return unit_.row(i); }
  Year min_year() const noexcept { return min_year_; }
  Year max_year() const noexcept { return max_year_; }

  /// `n` items drawn without replacement; the whole set when n >= size().
  SupportSet sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw UsageError("support sample size must be positive");
    if (n >= size()) return *this;
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(n);
    std::sort(order.begin(), order.end());
    std::vector<ItemId> ids;
    std::vector<Year> years;
    Matrix emb(n, dim());
    for (std::size_t k = 0; k < n; ++k) {
      ids.push_back(ids_[order[k]]);
      years.push_back(years_[order[k]]);
      std::copy_n(embeddings_.row(order[k]).begin(), dim(),
                  emb.row(k).begin());
    }
    return SupportSet(std::move(ids), std::move(years), std::move(emb));
  }

 private:
  std::vector<ItemId> ids_;
  std::vector<Year> years_;
  Matrix embeddings_;
  Matrix unit_;
  Year min_year_ = 0;
  Year max_year_ = 0;
};

struct Neighbor {
  std::size_t index = 0;  // position in the support set
  ItemId id = 0;
  double similarity = 0.0;
};

/// Higher similarity first, ties by ascending id.
inline bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

/// Exhaustive top-k by cosine similarity.
inline std::vector<Neighbor> exact_knn(const SupportSet& support,
                                       std::span<const double> query,
                                       std::size_t k) {
  if (k == 0) throw UsageError("k must be at least 1");
  if (query.size() != support.dim()) {
    throw UsageError("query has dimension " + std::to_string(query.size()) +
                     ", support has " + std::to_string(support.dim()));
  }
  const double qn = norm(query);
  if (!(qn > 0.0)) throw DomainError("query embedding has zero norm");
  std::vector<Neighbor> all(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    all[i] = {i, support.id(i),
              std::clamp(dot(query, support.unit(i)) / qn, -1.0, 1.0)};
  }
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), neighbor_before);
  all.resize(k);
  return all;
}

struct Prediction {
  Year year = 0;
  std::vector<ItemId> neighbor_ids;
  std::vector<double> neighbor_similarities;
  /// k exceeded the support size and was reduced to it.
  bool clamped = false;
  /// Weighted mode fell back to the plain mean (similarity sum <= 0).
  bool weighted_fallback = false;
};

/// floor(x + 1/2), with 1e-9 slack for summation error.
inline Year round_half_up(double x) {
  return static_cast<Year>(std::floor(x + 0.5 + 1e-9));
}

/// Aggregates the first `k` of `neighbors` (already best-first) into a year.
inline Prediction predict_from_neighbors(std::span<const Neighbor> neighbors,
                                         const SupportSet& support,
                                         bool weighted) {
  if (neighbors.empty()) throw UsageError("no neighbors to predict from");
  Prediction p;
  std::vector<double> years;
  std::vector<double> weights;
  std::vector<double> weighted_years;
  for (const auto& n : neighbors) {
    p.neighbor_ids.push_back(n.id);
    p.neighbor_similarities.push_back(n.similarity);
    years.push_back(static_cast<double>(support.year(n.index)));
    weights.push_back(n.similarity);
    weighted_years.push_back(n.similarity * years.back());
  }
  if (weighted) {
    const double wsum = stable_sum(weights);
    if (wsum > 0.0) {
      p.year = round_half_up(stable_sum(weighted_years) / wsum);
    } else {
      p.weighted_fallback = true;
    }
  }
  if (!weighted || p.weighted_fallback) {
    p.year = round_half_up(stable_mean(years));
  }
  // Rounding keeps the mean inside the neighbours' range, but clamp anyway
  // so the support span bound holds under any floating point rounding.
  p.year = std::clamp(p.year, support.min_year(), support.max_year());
  return p;
}

/// Mean year of the k most similar support items, rounded half up.
inline Prediction knn_predict(std::span<const double> query,
                              const SupportSet& support, std::size_t k) {
  auto nn = exact_knn(support, query, k);
  Prediction p = predict_from_neighbors(nn, support, false);
  p.clamped = k > support.size();
  return p;
}

/// Similarity-weighted mean year of the k most similar support items,
/// normalised by the similarity sum.
inline Prediction weighted_knn_predict(std::span<const double> query,
                                       const SupportSet& support,
                                       std::size_t k) {
  auto nn = exact_knn(support, query, k);
  Prediction p = predict_from_neighbors(nn, support, true);
  p.clamped = k > support.size();
  return p;
}

/// Any neighbour search: exact scan or an approximate index.
using NeighborSearch =
    std::function<std::vector<Neighbor>(std::span<const double>, std::size_t)>;

inline NeighborSearch exact_search(const SupportSet& support) {
  return [&support](std::span<const double> q, std::size_t k) {
    return exact_knn(support, q, k);
  };
}

/// Predicts every row of `queries`. Row order is preserved.
inline std::vector<Prediction> predict_all(const Matrix& queries,
                                           const SupportSet& support,
                                           const NeighborSearch& search,
                                           std::size_t k, bool weighted,
                                           unsigned threads = 1) {
  std::vector<Prediction> out(queries.rows());
  parallel_for(queries.rows(), threads, [&](std::size_t r) {
    auto nn = search(queries.row(r), k);
    out[r] = predict_from_neighbors(nn, support, weighted);
    out[r].clamped = k > support.size();
  });
  return out;
}

/// MAE of k-NN prediction for each k in `ks`. Neighbours are searched once
/// at max(ks) and truncated per k, so entries never depend on each other.
inline std::vector<std::pair<std::size_t, double>> mae_vs_k_curve(
    const Matrix& queries, std::span<const Year> truths,
    const SupportSet& support, std::span<const std::size_t> ks, bool weighted,
    const NeighborSearch& search, unsigned threads = 1) {
  if (queries.rows() == 0) throw UsageError("mae_vs_k_curve: no queries");
  if (ks.empty()) throw UsageError("mae_vs_k_curve: no k values");
  if (truths.size() != queries.rows()) {
    throw UsageError("mae_vs_k_curve: truths and queries differ in size");
  }
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  if (*std::min_element(ks.begin(), ks.end()) == 0) {
    throw UsageError("mae_vs_k_curve: k must be at least 1");
  }
  std::vector<std::vector<Neighbor>> nn(queries.rows());
  parallel_for(queries.rows(), threads,
               [&](std::size_t r) { nn[r] = search(queries.row(r), k_max); });

  std::vector<std::pair<std::size_t, double>> curve;
  std::vector<Year> predicted(queries.rows());
  for (const std::size_t k : ks) {
    for (std::size_t r = 0; r < queries.rows(); ++r) {
      const std::size_t take = std::min(k, nn[r].size());
      predicted[r] =
          predict_from_neighbors(std::span(nn[r]).first(take), support,
                                 weighted)
              .year;
    }
    curve.emplace_back(k, mean_absolute_error(predicted, truths));
  }
  return curve;
}

inline std::vector<std::pair<std::size_t, double>> mae_vs_k_curve(
    const Matrix& queries, std::span<const Year> truths,
    const SupportSet& support, std::span<const std::size_t> ks, bool weighted,
    unsigned threads = 1) {
  return mae_vs_k_curve(queries, truths, support, ks, weighted,
                        exact_search(support), threads);
}

inline std::string curve_csv(
    std::span<const std::pair<std::size_t, double>> curve) {
  std::string out = "k,mae\n";
  char buf[64];
  for (const auto& [k, mae] : curve) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), mae);
    out += std::to_string(k) + "," +
           std::string(buf, static_cast<std::size_t>(res.ptr - buf)) + "\n";
  }
  return out;
}

}  // namespace ranksmith

#endif  // RANKSMITH_KNN_HPP_
