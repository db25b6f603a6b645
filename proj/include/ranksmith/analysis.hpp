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

// Experiment-level analyses: retrieval reports over a labelled collection,
// random baselines, and year-bin similarity structure of an embedding.

#ifndef RANKSMITH_ANALYSIS_HPP_
#define RANKSMITH_ANALYSIS_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ranksmith/core.hpp"
#include "ranksmith/data.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/metrics.hpp"
#include "ranksmith/parallel.hpp"
#include "ranksmith/relevance.hpp"

namespace ranksmith {

/// Ids and years of a collection, with optional embeddings.
struct LabeledView {
  std::span<const ItemId> ids;
  std::span<const Year> years;
  const Matrix* embeddings = nullptr;

  std::size_t size() const { return ids.size(); }
};

struct RetrievalOptions {
  RelevanceSpec relevance;
  /// Exact-year positives by default.
  int positive_gap = 0;
  unsigned threads = 1;
};

namespace detail {

// Per query AP and nDCG given the candidate scores; NaN marks a skip.
template <typename ScoreFn>
void rank_all_queries(const LabeledView& queries, const LabeledView& database,
                      const RetrievalOptions& opt, ScoreFn&& scores_for,
                      std::vector<double>& ap, std::vector<double>& nd) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ap.assign(queries.size(), nan);
  nd.assign(queries.size(), nan);
  parallel_for(queries.size(), opt.threads, [&](std::size_t q) {
    std::vector<ItemId> ids;
    std::vector<double> rel;
    std::vector<bool> pos;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < database.size(); ++i) {
      if (database.ids[i] == queries.ids[q]) continue;  // never rank itself
      rows.push_back(i);
      ids.push_back(database.ids[i]);
      rel.push_back(relevance(opt.relevance, queries.years[q], database.years[i]));
      pos.push_back(std::abs(queries.years[q] - database.years[i]) <=
                    opt.positive_gap);
    }
    const std::vector<double> scores = scores_for(q, rows);
    const RankedList list =
        make_ranked_list(queries.ids[q], ids, scores, rel, pos);
    if (!list.positives.empty()) ap[q] = average_precision(list);
    if (ideal_dcg(list) > 0.0) nd[q] = ndcg(list);
  });
}

inline MetricReport summarize(std::vector<double> ap, std::vector<double> nd) {
  MetricReport report;
  report.n_queries = ap.size();
  std::vector<double> ap_used;
  std::vector<double> nd_used;
  for (std::size_t q = 0; q < ap.size(); ++q) {
    if (std::isnan(ap[q])) {
      ++report.n_skipped_map;
    } else {
      ap_used.push_back(ap[q]);
    }
    if (std::isnan(nd[q])) {
      ++report.n_skipped;
    } else {
      nd_used.push_back(nd[q]);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.map = ap_used.empty() ? nan : stable_mean(ap_used);
  report.ndcg = nd_used.empty() ? nan : stable_mean(nd_used);
  report.per_query_ap = std::move(ap);
  report.per_query_ndcg = std::move(nd);
  return report;
}

}  // namespace detail

/// mAP and nDCG of ranking `database` by cosine similarity for every query.
/// A query is never ranked against an item with its own id.
inline MetricReport retrieval_report(const LabeledView& queries,
                                     const LabeledView& database,
                                     const RetrievalOptions& opt) {
  if (queries.embeddings == nullptr || database.embeddings == nullptr) {
    throw UsageError("retrieval_report needs embeddings");
  }
  const Matrix qu = normalized_rows(*queries.embeddings, nullptr);
  const Matrix du = normalized_rows(*database.embeddings, nullptr);
  std::vector<double> ap, nd;
  detail::rank_all_queries(
      queries, database, opt,
      [&](std::size_t q, const std::vector<std::size_t>& rows) {
        std::vector<double> s(rows.size());
        for (std::size_t c = 0; c < rows.size(); ++c) {
          s[c] = dot(qu.row(q), du.row(rows[c]));
        }
        return s;
      },
      ap, nd);
  return detail::summarize(std::move(ap), std::move(nd));
}

/// Floors for comparison: metrics of uniformly random rankings of
/// `database`, and MAE of years drawn uniformly over the database's span.
inline MetricReport random_baseline_metrics(const LabeledView& queries,
                                            const LabeledView& database,
                                            const RetrievalOptions& opt,
                                            std::uint64_t seed) {
  if (queries.size() == 0 || database.size() == 0) {
    throw UsageError("random baseline needs queries and a database");
  }
  std::vector<double> ap, nd;
  detail::rank_all_queries(
      queries, database, opt,
      [&](std::size_t q, const std::vector<std::size_t>& rows) {
        std::mt19937_64 rng(seed ^ (0xA24BAED4963EE407ULL * (q + 1)));
        std::vector<double> s(rows.size());
        std::iota(s.begin(), s.end(), 0.0);
        std::shuffle(s.begin(), s.end(), rng);
        return s;
      },
      ap, nd);
  MetricReport report = detail::summarize(std::move(ap), std::move(nd));

  const auto [lo, hi] =
      std::minmax_element(database.years.begin(), database.years.end());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Year> draw(*lo, *hi);
  std::vector<Year> guesses(queries.size());
  for (auto& g : guesses) g = draw(rng);
  report.mae = mean_absolute_error(guesses, queries.years);
  return report;
}

// ---------------------------------------------------------------------------
// Year-bin similarity

struct BinSimilarityMatrix {
  /// Inclusive [first, last] year of each bin.
  std::vector<std::pair<Year, Year>> bins;
  /// Mean pairwise cosine similarity; NaN where a bin pair has no pairs.
  Matrix mean;
  /// Number of pairs averaged per entry (after subsampling).
  Matrix pairs;

  bool missing(std::size_t a, std::size_t b) const {
    return std::isnan(mean(a, b));
  }

  std::string label(std::size_t a) const {
    return std::to_string(bins[a].first) + "-" + std::to_string(bins[a].second);
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t a = 0; a < bins.size(); ++a) out += "," + label(a);
    out += "\n";
    char buf[64];
    for (std::size_t a = 0; a < bins.size(); ++a) {
      out += label(a);
      for (std::size_t b = 0; b < bins.size(); ++b) {
        out += ",";
        if (!missing(a, b)) {
          const auto res = std::to_chars(buf, buf + sizeof(buf), mean(a, b));
          out.append(buf, static_cast<std::size_t>(res.ptr - buf));
        }
      }
      out += "\n";
    }
    return out;
  }
};

struct BinSimilarityOptions {
  Year bin_width = 5;
  YearSpan span;
  std::size_t max_pairs = 100000;
  std::uint64_t seed = 0;
};

/// Mean cosine similarity between and within year bins. Items are processed
/// in ascending id order so the matrix does not depend on input order.
inline BinSimilarityMatrix bin_similarity(const LabeledView& items,
                                          const BinSimilarityOptions& opt) {
  if (items.embeddings == nullptr) throw UsageError("bin_similarity needs embeddings");
  if (opt.bin_width <= 0) throw UsageError("bin width must be positive");
  opt.span.validate();
  const Matrix unit = normalized_rows(*items.embeddings, nullptr);

  BinSimilarityMatrix out;
  for (Year y = opt.span.first; y <= opt.span.last; y += opt.bin_width) {
    out.bins.emplace_back(y, std::min<Year>(y + opt.bin_width - 1, opt.span.last));
  }
  const std::size_t nb = out.bins.size();
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return items.ids[a] < items.ids[b]; });
  std::vector<std::vector<std::size_t>> members(nb);
  for (const std::size_t i : order) {
    const Year y = items.years[i];
    if (!opt.span.contains(y)) continue;
    members[static_cast<std::size_t>((y - opt.span.first) / opt.bin_width)].push_back(i);
  }
  std::size_t nonempty = 0;
  for (const auto& m : members) nonempty += m.empty() ? 0 : 1;
  if (nonempty < 2) throw UsageError("bin_similarity needs two nonempty bins");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.mean = Matrix(nb, nb, nan);
  out.pairs = Matrix(nb, nb, 0.0);
  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = a; b < nb; ++b) {
      const auto& ma = members[a];
      const auto& mb = members[b];
      const std::size_t total =
          a == b ? ma.size() * (ma.size() - (ma.empty() ? 0 : 1)) / 2
                 : ma.size() * mb.size();
      if (total == 0) continue;
      std::vector<double> sims;
      if (total <= opt.max_pairs) {
        sims.reserve(total);
        for (std::size_t i = 0; i < ma.size(); ++i) {
          for (std::size_t j = a == b ? i + 1 : 0; j < mb.size(); ++j) {
            sims.push_back(dot(unit.row(ma[i]), unit.row(mb[j])));
          }
        }
      } else {
        std::mt19937_64 rng(opt.seed ^ (0x9E3779B97F4A7C15ULL * (a * nb + b + 1)));
        std::uniform_int_distribution<std::size_t> pa(0, ma.size() - 1);
        std::uniform_int_distribution<std::size_t> pb(0, mb.size() - 1);
        sims.reserve(opt.max_pairs);
        while (sims.size() < opt.max_pairs) {
          const std::size_t i = pa(rng);
          const std::size_t j = pb(rng);
          if (a == b && i == j) continue;
          sims.push_back(dot(unit.row(ma[i]), unit.row(mb[j])));
        }
      }
      const double m = stable_mean(sims);
      out.mean(a, b) = out.mean(b, a) = m;
      out.pairs(a, b) = out.pairs(b, a) = static_cast<double>(sims.size());
    }
  }
  return out;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw UsageError("spearman needs two equal-length samples of size >= 2");
  }
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = stable_mean(rx);
  const double my = stable_mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("spearman: constant sample");
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman correlation between bin distance |a - b| and mean similarity over
/// the non-missing upper triangle (diagonal included).
inline double bin_distance_correlation(const BinSimilarityMatrix& m) {
  std::vector<double> gap;
  std::vector<double> sim;
  for (std::size_t a = 0; a < m.bins.size(); ++a) {
    for (std::size_t b = a; b < m.bins.size(); ++b) {
      if (m.missing(a, b)) continue;
      gap.push_back(static_cast<double>(b - a));
      sim.push_back(m.mean(a, b));
    }
  }
  return spearman(gap, sim);
}

}  // namespace ranksmith

#endif  // RANKSMITH_ANALYSIS_HPP_
