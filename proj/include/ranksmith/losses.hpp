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

// Smooth-AP and smooth-nDCG listwise objectives with analytical gradients.
//
// Every item of a batch acts as a query against the remaining B-1 items.
// Hard ranks 1 + #{j : s_j > s_i} are relaxed to 1 + sum_j G(s_j - s_i; tau)
// where G is the sigmoid of core.hpp. Gradients flow from the per-query
// similarity scores through cosine similarity into the raw embeddings.

#ifndef RANKSMITH_LOSSES_HPP_
#define RANKSMITH_LOSSES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranksmith/core.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/metrics.hpp"
#include "ranksmith/parallel.hpp"
#include "ranksmith/relevance.hpp"

namespace ranksmith {

enum class Objective { kSmoothAP, kSmoothNDCG };

inline Objective parse_objective(std::string_view name) {
  if (name == "smooth-ap") return Objective::kSmoothAP;
  if (name == "smooth-ndcg") return Objective::kSmoothNDCG;
  throw UsageError("unknown loss '" + std::string(name) +
                   "' (expected smooth-ap or smooth-ndcg)");
}

inline std::string_view objective_name(Objective o) {
  return o == Objective::kSmoothAP ? "smooth-ap" : "smooth-ndcg";
}

struct LossConfig {
  Objective objective = Objective::kSmoothNDCG;
  double tau = 0.01;
  /// Graded relevance, smooth-nDCG only.
  RelevanceSpec relevance;
  /// A candidate is a positive of the query when |dy| <= positive_gap.
  /// Smooth-AP only.
  int positive_gap = 0;
  /// Per-query work fan-out. Results do not depend on it.
  unsigned threads = 1;

  void validate() const {
    Temperature{tau};
    relevance.validate();
    if (positive_gap < 0) throw UsageError("positive gap must be >= 0");
  }
};

struct BatchLossResult {
  /// 1 - mean over the non-skipped queries.
  double loss = 0.0;
  /// Smooth AP or nDCG of each query; zero for skipped queries.
  std::vector<double> per_query;
  std::vector<bool> skipped;
  std::size_t n_skipped = 0;
  /// d loss / d embedding, same shape as the input batch.
  Matrix gradient;
};

namespace detail {

// Pairwise sigmoid terms of one query. g(i, j) = G(s_j - s_i), the soft
// event "j outranks i"; d(i, j) = G'(s_j - s_i), symmetric in i and j.
struct PairTerms {
  std::size_t n = 0;
  std::vector<double> g;
  std::vector<double> d;

  PairTerms(std::span<const double> scores, Temperature tau)
      : n(scores.size()), g(n * n, 0.0), d(n * n, 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double gij = smooth_indicator(scores[j] - scores[i], tau);
        const double dij = gij * (1.0 - gij) / tau.value();
        g[i * n + j] = gij;
        g[j * n + i] = 1.0 - gij;
        d[i * n + j] = dij;
        d[j * n + i] = dij;
      }
    }
  }

  double outranked(std::size_t i, std::size_t j) const { return g[i * n + j]; }
  double slope(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

}  // namespace detail

/// Smooth AP of one query over its candidates. If `grad` is non-empty it
/// receives d AP / d score for every candidate.
inline double smooth_ap_query(std::span<const double> scores,
                              const std::vector<bool>& positive,
                              Temperature tau,
                              std::span<double> grad = {}) {
  const std::size_t n = scores.size();
  if (positive.size() != n || (!grad.empty() && grad.size() != n)) {
    throw UsageError("smooth_ap_query: input lengths differ");
  }
  std::size_t n_pos = 0;
  for (const bool p : positive) n_pos += p ? 1 : 0;
  if (n_pos == 0) throw DomainError("smooth_ap_query: no positives");

  const detail::PairTerms pairs(scores, tau);
  std::vector<double> along_pos(n, 0.0);  // d AP / d N_i without 1/|P|
  std::vector<double> along_all(n, 0.0);  // d AP / d D_i without 1/|P|
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive[i]) continue;
    double num = 1.0;  // soft rank among positives
    double den = 1.0;  // soft rank among all candidates
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double gij = pairs.outranked(i, j);
      den += gij;
      if (positive[j]) num += gij;
    }
    total += num / den;
    along_pos[i] = 1.0 / den;
    along_all[i] = -num / (den * den);
  }
  const double inv_pos = 1.0 / static_cast<double>(n_pos);

  if (!grad.empty()) {
    std::fill(grad.begin(), grad.end(), 0.0);
    // Raising s_k raises every soft rank that counts k (N_i and/or D_i) and
    // lowers the soft ranks of k itself by the same pairwise slope.
    for (std::size_t i = 0; i < n; ++i) {
      if (!positive[i]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const double coef =
            (positive[k] ? along_pos[i] : 0.0) + along_all[i];
        const double c = coef * pairs.slope(i, k) * inv_pos;
        grad[k] += c;
        grad[i] -= c;
      }
    }
  }
  return total * inv_pos;
}

/// Smooth nDCG of one query: soft DCG over the candidates divided by the
/// exact ideal DCG. The ideal term depends on labels only and carries no
/// gradient.
inline double smooth_ndcg_query(std::span<const double> scores,
                                std::span<const double> relevance,
                                Temperature tau,
                                std::span<double> grad = {}) {
  const std::size_t n = scores.size();
  if (relevance.size() != n || (!grad.empty() && grad.size() != n)) {
    throw UsageError("smooth_ndcg_query: input lengths differ");
  }
  const double ideal = ideal_dcg(relevance);
  if (!(ideal > 0.0)) {
    throw DomainError("smooth_ndcg_query: zero total relevance");
  }

  const detail::PairTerms pairs(scores, tau);
  std::vector<double> rank_slope(n, 0.0);  // d DCG / d R_i
  double soft_dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevance[i] == 0.0) continue;
    double rank = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) rank += pairs.outranked(i, j);
    }
    const double log_arg = std::log(1.0 + rank);
    soft_dcg += relevance[i] * std::numbers::ln2 / log_arg;
    rank_slope[i] = -relevance[i] * std::numbers::ln2 /
                    ((1.0 + rank) * log_arg * log_arg);
  }

  if (!grad.empty()) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (rank_slope[i] == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const double c = rank_slope[i] * pairs.slope(i, k) / ideal;
        grad[k] += c;
        grad[i] -= c;
      }
    }
  }
  return soft_dcg / ideal;
}

namespace detail {

// Shared batch driver. `query_value(q, scores, candidates, grad)` returns
// the smooth metric of query q, or a negative number when q is skipped.
template <typename QueryFn>
BatchLossResult batch_loss(const Matrix& embeddings, std::span<const Year> years,
                           unsigned threads, QueryFn&& query_value) {
  const std::size_t b = embeddings.rows();
  if (b < 2) throw UsageError("batch loss needs at least 2 items");
  if (years.size() != b) {
    throw UsageError("batch loss: " + std::to_string(years.size()) +
                     " years for " + std::to_string(b) + " embeddings");
  }
  std::vector<double> norms;
  const Matrix unit = normalized_rows(embeddings, &norms);
  const Matrix sim = similarity_matrix(embeddings);

  // coef(q, i) = d metric_q / d s(q, i), before averaging.
  Matrix coef(b, b);
  std::vector<double> value(b, 0.0);
  std::vector<bool> skipped(b, false);
  parallel_for(b, threads, [&](std::size_t q) {
    std::vector<double> scores;
    std::vector<std::size_t> candidates;
    scores.reserve(b - 1);
    candidates.reserve(b - 1);
    for (std::size_t i = 0; i < b; ++i) {
      if (i == q) continue;
      scores.push_back(sim(q, i));
      candidates.push_back(i);
    }
    std::vector<double> grad(b - 1, 0.0);
    const double v = query_value(q, scores, candidates, grad);
    if (v < 0.0) {
      skipped[q] = true;
      return;
    }
    value[q] = v;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      coef(q, candidates[c]) = grad[c];
    }
  });

  BatchLossResult out;
  out.per_query = value;
  out.skipped = skipped;
  std::vector<double> used;
  for (std::size_t q = 0; q < b; ++q) {
    if (skipped[q]) {
      ++out.n_skipped;
    } else {
      used.push_back(value[q]);
    }
  }
  if (used.empty()) throw DomainError("batch loss: every query was skipped");
  out.loss = 1.0 - stable_mean(used);
  if (!std::isfinite(out.loss)) throw NumericError("batch loss is not finite");

  // s(q, i) depends on both h_q and h_i. For unit vectors u and norms r,
  // ds/dh_i = (u_q - s u_i) / r_i.
  const double scale = -1.0 / static_cast<double>(used.size());
  const std::size_t d = embeddings.cols();
  out.gradient = Matrix(b, d);
  for (std::size_t i = 0; i < b; ++i) {
    auto gi = out.gradient.row(i);
    const auto ui = unit.row(i);
    double along_self = 0.0;
    for (std::size_t q = 0; q < b; ++q) {
      if (q == i) continue;
      const double c = coef(q, i) + coef(i, q);
      if (c == 0.0) continue;
      const auto uq = unit.row(q);
      for (std::size_t k = 0; k < d; ++k) gi[k] += c * uq[k];
      along_self += c * sim(i, q);
    }
    const double f = scale / norms[i];
    for (std::size_t k = 0; k < d; ++k) {
      gi[k] = f * (gi[k] - along_self * ui[k]);
      if (!std::isfinite(gi[k])) {
        throw NumericError("batch loss gradient is not finite");
      }
    }
  }
  return out;
}

}  // namespace detail

/// 1 - mean smooth AP with every batch item as a query. Queries without a
/// positive among the other items are skipped.
inline BatchLossResult smooth_ap_batch(const Matrix& embeddings,
                                       std::span<const Year> years,
                                       const LossConfig& cfg) {
  cfg.validate();
  const Temperature tau(cfg.tau);
  return detail::batch_loss(
      embeddings, years, cfg.threads,
      [&](std::size_t q, std::span<const double> scores,
          std::span<const std::size_t> candidates, std::span<double> grad) {
        std::vector<bool> positive(candidates.size());
        bool any = false;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          positive[c] = std::abs(years[candidates[c]] - years[q]) <=
                        cfg.positive_gap;
          any = any || positive[c];
        }
        if (!any) return -1.0;
        return smooth_ap_query(scores, positive, tau, grad);
      });
}

/// 1 - mean smooth nDCG with every batch item as a query. Queries whose
/// candidates all have zero relevance are skipped.
inline BatchLossResult smooth_ndcg_batch(const Matrix& embeddings,
                                         std::span<const Year> years,
                                         const LossConfig& cfg) {
  cfg.validate();
  const Temperature tau(cfg.tau);
  return detail::batch_loss(
      embeddings, years, cfg.threads,
      [&](std::size_t q, std::span<const double> scores,
          std::span<const std::size_t> candidates, std::span<double> grad) {
        std::vector<double> rel(candidates.size());
        double total = 0.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          rel[c] = relevance(cfg.relevance, years[q], years[candidates[c]]);
          total += rel[c];
        }
        if (!(total > 0.0)) return -1.0;
        return smooth_ndcg_query(scores, rel, tau, grad);
      });
}

inline BatchLossResult batch_loss(const Matrix& embeddings,
                                  std::span<const Year> years,
                                  const LossConfig& cfg) {
  return cfg.objective == Objective::kSmoothAP
             ? smooth_ap_batch(embeddings, years, cfg)
             : smooth_ndcg_batch(embeddings, years, cfg);
}

}  // namespace ranksmith

#endif  // RANKSMITH_LOSSES_HPP_
