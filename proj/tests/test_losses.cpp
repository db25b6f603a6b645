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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <catch_amalgamated.hpp>

#include "ranksmith/losses.hpp"
#include "ranksmith/metrics.hpp"
#include "test_support.hpp"

using namespace ranksmith;
using namespace ranksmith::testing;
using Catch::Approx;

namespace {

double sig(double x, double tau) { return 1.0 / (1.0 + std::exp(-x / tau)); }

double cos_sim(const Matrix& e, std::size_t a, std::size_t b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t c = 0; c < e.cols(); ++c) {
    ab += e(a, c) * e(b, c);
    aa += e(a, c) * e(a, c);
    bb += e(b, c) * e(b, c);
  }
  return ab / std::sqrt(aa * bb);
}

// Direct evaluation of the batch losses from their definitions.
double oracle_loss(const Matrix& e, const std::vector<Year>& years, const LossConfig& cfg) {
  const std::size_t b = e.rows();
  double total = 0.0;
  int used = 0;
  for (std::size_t q = 0; q < b; ++q) {
    std::vector<std::size_t> omega;
    for (std::size_t i = 0; i < b; ++i) {
      if (i != q) omega.push_back(i);
    }
    const auto rank_in = [&](std::size_t i, const std::vector<std::size_t>& set) {
      double r = 1.0;
      for (const std::size_t j : set) {
        if (j != i) r += sig(cos_sim(e, q, j) - cos_sim(e, q, i), cfg.tau);
      }
      return r;
    };
    if (cfg.objective == Objective::kSmoothAP) {
      std::vector<std::size_t> pos;
      for (const std::size_t i : omega) {
        if (std::abs(years[i] - years[q]) <= cfg.positive_gap) pos.push_back(i);
      }
      if (pos.empty()) continue;
      double ap = 0.0;
      for (const std::size_t i : pos) ap += rank_in(i, pos) / rank_in(i, omega);
      total += ap / static_cast<double>(pos.size());
    } else {
      std::vector<double> rel;
      double dcg = 0.0;
      for (const std::size_t i : omega) {
        const double r = relevance(cfg.relevance, years[q], years[i]);
        rel.push_back(r);
        dcg += r / std::log2(1.0 + rank_in(i, omega));
      }
      std::sort(rel.begin(), rel.end(), std::greater<>());
      double ideal = 0.0;
      for (std::size_t n = 0; n < rel.size(); ++n) ideal += rel[n] / std::log2(n + 2.0);
      if (!(ideal > 0.0)) continue;
      total += dcg / ideal;
    }
    ++used;
  }
  return 1.0 - total / used;
}

LossConfig config(Objective o, double tau) {
  LossConfig c;
  c.objective = o;
  c.tau = tau;
  return c;
}

std::vector<Year> batch_years(std::size_t b, std::mt19937_64& rng) {
  // Few distinct years so both objectives have positives and relevance.
  return random_years(b, 1950, 1956, rng);
}

}  // namespace

TEST_CASE("B=3 identical embeddings, smooth AP hand expansion", "[losses]") {
  Matrix e(3, 4, 1.0);
  const std::vector<Year> years{1950, 1950, 1960};
  const auto r = smooth_ap_batch(e, years, config(Objective::kSmoothAP, 0.01));
  // Queries 0 and 1: one positive, one negative, all G = 1/2, AP = 1/(1+1/2).
  // Query 2 has no positive and is skipped.
  CHECK(r.per_query[0] == Approx(2.0 / 3.0).margin(1e-15));
  CHECK(r.per_query[1] == Approx(2.0 / 3.0).margin(1e-15));
  CHECK(r.skipped == std::vector<bool>{false, false, true});
  CHECK(r.n_skipped == 1);
  CHECK(r.loss == Approx(1.0 / 3.0).margin(1e-15));
  for (const double g : r.gradient.values()) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("perfectly clustered batch drives loss to zero as tau shrinks", "[losses]") {
  // Three year groups placed on orthogonal axes with small jitter.
  Matrix e(6, 3, 0.0);
  const std::vector<Year> years{1950, 1950, 1970, 1970, 1990, 1990};
  for (std::size_t i = 0; i < 6; ++i) {
    e(i, i / 2) = 1.0;
    e(i, (i / 2 + 1) % 3) = 0.01 * static_cast<double>(i % 2 + 1);
  }
  double prev = 1.0;
  for (const double tau : {0.1, 0.01, 1e-3, 1e-4}) {
    const double loss = smooth_ap_batch(e, years, config(Objective::kSmoothAP, tau)).loss;
    CHECK(loss <= prev + 1e-15);
    prev = loss;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("batch loss matches a direct evaluation of the definitions", "[losses]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix e = random_matrix(8, 5, rng);
    const auto years = batch_years(8, rng);
    for (const auto o : {Objective::kSmoothAP, Objective::kSmoothNDCG}) {
      for (const double tau : {1.0, 0.1, 0.01}) {
        LossConfig cfg = config(o, tau);
        cfg.positive_gap = trial % 3;
        const auto r = batch_loss(e, years, cfg);
        CHECK(r.loss == Approx(oracle_loss(e, years, cfg)).margin(1e-12));
        CHECK(r.loss >= 0.0);
        CHECK(r.loss <= 1.0);
      }
    }
  }
}

TEST_CASE("analytic gradients match central differences", "[losses]") {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix e = random_matrix(8, 16, rng);
    const auto years = batch_years(8, rng);
    for (const auto o : {Objective::kSmoothAP, Objective::kSmoothNDCG}) {
      for (const double tau : {1.0, 0.1, 0.01}) {
        const LossConfig cfg = config(o, tau);
        const auto r = batch_loss(e, years, cfg);
        const std::vector<double> x(e.values().begin(), e.values().end());
        const auto fd = numeric_gradient(
            [&](const std::vector<double>& p) {
              Matrix m(8, 16);
              std::copy(p.begin(), p.end(), m.values().begin());
              return batch_loss(m, years, cfg).loss;
            },
            x);
        worst = std::max(worst, max_relative_error(r.gradient.values(), fd));
      }
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("single-query gradients match central differences", "[losses]") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + trial % 6;
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    std::vector<bool> pos(n, false);
    pos[0] = true;
    pos[n / 2] = true;
    std::vector<double> rel(n);
    for (std::size_t i = 0; i < n; ++i) rel[i] = static_cast<double>(i % 4);
    const Temperature tau(0.3);
    std::vector<double> g_ap(n), g_nd(n);
    smooth_ap_query(s, pos, tau, g_ap);
    smooth_ndcg_query(s, rel, tau, g_nd);
    const auto fd_ap = numeric_gradient(
        [&](const std::vector<double>& x) { return smooth_ap_query(x, pos, tau); }, s);
    const auto fd_nd = numeric_gradient(
        [&](const std::vector<double>& x) { return smooth_ndcg_query(x, rel, tau); }, s);
    CHECK(max_relative_error(g_ap, fd_ap) <= 1e-5);
    CHECK(max_relative_error(g_nd, fd_nd) <= 1e-5);
  }
}

TEST_CASE("smooth nDCG approaches exact nDCG at small tau", "[losses]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> jitter(0.0, 0.005);
  const RelevanceSpec spec;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 12;
    // Scores spaced at least 0.01 apart.
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = -0.9 + 0.015 * static_cast<double>(i) + jitter(rng);
    std::shuffle(s.begin(), s.end(), rng);
    const auto years = random_years(n + 1, 1950, 1962, rng);
    std::vector<double> rel(n);
    for (std::size_t i = 0; i < n; ++i) rel[i] = relevance(spec, years[n], years[i]);
    if (std::all_of(rel.begin(), rel.end(), [](double r) { return r == 0; })) continue;
    std::vector<ItemId> ids(n);
    std::iota(ids.begin(), ids.end(), ItemId{0});
    const double exact = ndcg(make_ranked_list(0, ids, s, rel));
    CHECK(std::abs(smooth_ndcg_query(s, rel, Temperature(1e-4)) - exact) <= 1e-3);
  }
}

TEST_CASE("equal relevance: every ordering is ideal in the hard limit", "[losses]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(7);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.1 * static_cast<double>(i);
    std::shuffle(s.begin(), s.end(), rng);
    const std::vector<double> rel(7, 4.0);
    std::vector<ItemId> ids(7);
    std::iota(ids.begin(), ids.end(), ItemId{0});
    CHECK(ndcg(make_ranked_list(0, ids, s, rel)) == Approx(1.0).margin(1e-15));
    CHECK(smooth_ndcg_query(s, rel, Temperature(1e-4)) == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("a small gradient step does not increase the loss", "[losses][property]") {
  std::mt19937_64 rng(2024);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix e = random_matrix(8, 16, rng);
    const auto years = batch_years(8, rng);
    const LossConfig cfg =
        config(trial % 2 ? Objective::kSmoothAP : Objective::kSmoothNDCG, 0.1);
    const auto r = batch_loss(e, years, cfg);
    Matrix stepped = e;
    for (std::size_t i = 0; i < e.values().size(); ++i) {
      stepped.values()[i] -= 1e-4 * r.gradient.values()[i];
    }
    if (batch_loss(stepped, years, cfg).loss > r.loss) ++failures;
  }
  CHECK(failures <= 2);
}

TEST_CASE("skipped queries carry no loss or gradient", "[losses]") {
  std::mt19937_64 rng(6);
  const Matrix e = random_matrix(4, 3, rng);
  // Item 3 has no same-year partner and a gap of 40 years to everyone.
  const std::vector<Year> years{1950, 1950, 1951, 1991};
  LossConfig cfg = config(Objective::kSmoothAP, 0.1);
  const auto ap = batch_loss(e, years, cfg);
  CHECK(ap.skipped == std::vector<bool>{false, false, true, true});
  CHECK(ap.n_skipped == 2);
  CHECK(ap.per_query[3] == 0.0);
  cfg.objective = Objective::kSmoothNDCG;
  const auto nd = batch_loss(e, years, cfg);
  CHECK(nd.skipped == std::vector<bool>{false, false, false, true});
  CHECK(nd.loss == Approx(oracle_loss(e, years, cfg)).margin(1e-12));

  const std::vector<Year> far{1930, 1950, 1970, 1990};
  CHECK_THROWS_AS(batch_loss(e, far, cfg), DomainError);
  cfg.objective = Objective::kSmoothAP;
  CHECK_THROWS_AS(batch_loss(e, far, cfg), DomainError);
}

TEST_CASE("batch loss is independent of the thread count", "[losses]") {
  std::mt19937_64 rng(8);
  const Matrix e = random_matrix(32, 8, rng);
  const auto years = random_years(32, 1950, 1960, rng);
  LossConfig cfg;
  const auto one = batch_loss(e, years, cfg);
  for (const unsigned t : {2u, 3u, 8u}) {
    cfg.threads = t;
    const auto many = batch_loss(e, years, cfg);
    CHECK(many.loss == one.loss);
    CHECK(many.gradient == one.gradient);
  }
}

TEST_CASE("loss API validation", "[losses]") {
  Matrix e(3, 2, 1.0);
  LossConfig cfg;
  CHECK_THROWS_AS(batch_loss(e, std::vector<Year>{1950, 1950}, cfg), UsageError);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(batch_loss(e, std::vector<Year>{1950, 1950, 1950}, cfg), UsageError);
  cfg.tau = 0.1;
  cfg.positive_gap = -1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  Matrix z(3, 2, 0.0);
  CHECK_THROWS_AS(batch_loss(z, std::vector<Year>{1950, 1950, 1950}, LossConfig{}),
                  DomainError);
  CHECK(parse_objective("smooth-ap") == Objective::kSmoothAP);
  CHECK(parse_objective("smooth-ndcg") == Objective::kSmoothNDCG);
  CHECK_THROWS_AS(parse_objective("hinge"), UsageError);
}
