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

// Exact retrieval and regression metrics. These are the evaluation targets
// and the oracles the smooth objectives are checked against.

#ifndef RANKSMITH_METRICS_HPP_
#define RANKSMITH_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ranksmith/core.hpp"
#include "ranksmith/error.hpp"

namespace ranksmith {

using ItemId = std::int64_t;

/// Neumaier-compensated sum. Order-stable to well below 1e-12 for the sizes
/// used here.
inline double stable_sum(std::span<const double> xs) {
  double sum = 0.0;
  double compensation = 0.0;
  for (const double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      compensation += (sum - t) + x;
    } else {
      compensation += (x - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

inline double stable_mean(std::span<const double> xs) {
  if (xs.empty()) throw UsageError("mean of an empty sequence");
  return stable_sum(xs) / static_cast<double>(xs.size());
}

/// A query's retrieval result, best match first.
struct RankedList {
  ItemId query_id = 0;
  std::vector<ItemId> ordered_items;
  /// Graded relevance per position, parallel to ordered_items.
  std::vector<double> relevance;
  /// Binary-relevant items; every one must appear in ordered_items.
  std::vector<ItemId> positives;
};

/// Orders candidates by descending score, breaking ties by ascending id.
/// `is_positive` may be empty when only graded metrics are needed.
inline RankedList make_ranked_list(ItemId query_id,
                                   std::span<const ItemId> ids,
                                   std::span<const double> scores,
                                   std::span<const double> relevance,
                                   const std::vector<bool>& is_positive = {}) {
  if (ids.size() != scores.size() || ids.size() != relevance.size() ||
      (!is_positive.empty() && is_positive.size() != ids.size())) {
    throw UsageError("make_ranked_list: input lengths differ");
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  RankedList list;
  list.query_id = query_id;
  list.ordered_items.reserve(ids.size());
  list.relevance.reserve(ids.size());
  for (const std::size_t k : order) {
    list.ordered_items.push_back(ids[k]);
    list.relevance.push_back(relevance[k]);
    if (!is_positive.empty() && is_positive[k]) list.positives.push_back(ids[k]);
  }
  return list;
}

namespace detail {

inline void check_relevance(const RankedList& list) {
  if (list.relevance.size() != list.ordered_items.size()) {
    throw UsageError("ranked list: relevance and items differ in length");
  }
  for (const double r : list.relevance) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw UsageError("ranked list: relevance must be finite and >= 0");
    }
  }
}

inline double dcg_of(std::span<const double> gains) {
  std::vector<double> terms(gains.size());
  for (std::size_t n = 0; n < gains.size(); ++n) {
    terms[n] = gains[n] / std::log2(static_cast<double>(n) + 2.0);
  }
  return stable_sum(terms);
}

}  // namespace detail

/// (1/|P|) sum_n P@n * [item n is positive].
inline double average_precision(const RankedList& list) {
  if (list.positives.empty()) {
    throw DomainError("average_precision: query " +
                      std::to_string(list.query_id) + " has no positives");
  }
  const std::unordered_set<ItemId> positives(list.positives.begin(),
                                             list.positives.end());
  if (positives.size() != list.positives.size()) {
    throw UsageError("average_precision: duplicate positives");
  }
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t n = 0; n < list.ordered_items.size(); ++n) {
    if (positives.contains(list.ordered_items[n])) {
      ++hits;
      total += static_cast<double>(hits) / static_cast<double>(n + 1);
    }
  }
  if (hits != positives.size()) {
    throw UsageError("average_precision: positives missing from the list");
  }
  return total / static_cast<double>(positives.size());
}

inline double mean_average_precision(std::span<const RankedList> lists) {
  if (lists.empty()) throw UsageError("mean_average_precision: no lists");
  std::vector<double> ap;
  ap.reserve(lists.size());
  for (const auto& l : lists) ap.push_back(average_precision(l));
  return stable_mean(ap);
}

/// sum_n r(n) / log2(n + 1), positions 1-based.
inline double dcg(const RankedList& list) {
  detail::check_relevance(list);
  return detail::dcg_of(list.relevance);
}

/// DCG of the same relevances in descending order.
inline double ideal_dcg(const RankedList& list) {
  detail::check_relevance(list);
  std::vector<double> sorted = list.relevance;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return detail::dcg_of(sorted);
}

inline double ideal_dcg(std::span<const double> relevance) {
  std::vector<double> sorted(relevance.begin(), relevance.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return detail::dcg_of(sorted);
}

inline double ndcg(const RankedList& list) {
  const double ideal = ideal_dcg(list);
  if (!(ideal > 0.0)) {
    throw DomainError("ndcg: query " + std::to_string(list.query_id) +
                      " has zero total relevance");
  }
  return std::min(1.0, dcg(list) / ideal);
}

inline double mean_absolute_error(std::span<const Year> predictions,
                                  std::span<const Year> truths) {
  if (predictions.size() != truths.size()) {
    throw UsageError("mean_absolute_error: " +
                     std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw UsageError("mean_absolute_error: no pairs");
  std::vector<double> err(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    err[i] = std::abs(static_cast<double>(predictions[i]) -
                      static_cast<double>(truths[i]));
  }
  return stable_mean(err);
}

/// Aggregate evaluation numbers. Queries whose AP or nDCG is undefined are
/// skipped and counted in n_skipped.
struct MetricReport {
  double map = 0.0;
  double ndcg = 0.0;
  double mae = 0.0;
  std::vector<double> per_query_ap;
  std::vector<double> per_query_ndcg;
  std::size_t n_queries = 0;
  /// Queries with zero total graded relevance (excluded from nDCG).
  std::size_t n_skipped = 0;
  /// Queries without a binary positive (excluded from mAP).
  std::size_t n_skipped_map = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"mae", mae},
                          {"map", map},
                          {"ndcg", ndcg},
                          {"n_queries", n_queries},
                          {"n_skipped", n_skipped},
                          {"n_skipped_map", n_skipped_map}};
  }
};

}  // namespace ranksmith

#endif  // RANKSMITH_METRICS_HPP_
