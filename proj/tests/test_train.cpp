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

#include "ranksmith/ranksmith.hpp"
#include "test_support.hpp"

using namespace ranksmith;
using namespace ranksmith::testing;
using Catch::Approx;

namespace {

Dataset synthetic(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_items = n;
  spec.seed = seed;
  return generate(spec);
}

TrainConfig quick_config(std::size_t iterations, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.max_iterations = iterations;
  cfg.eval_every = 50;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("affine encoder examples", "[train][encoder]") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(5, 4, rng);
  const std::vector<ItemId> ids{0, 1, 2, 3, 4};
  const std::vector<Year> years(5, 1950);
  const Dataset items = make_items(ids, years, x);

  Encoder id = Encoder::affine(4, 4, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t o = 0; o < 4; ++o) id.weight(i, o) = i == o ? 1.0 : 0.0;
  }
  CHECK(id.encode(items) == x);

  Encoder flat = Encoder::affine(4, 3, 0);
  for (auto& p : flat.parameters()) p = 0.0;
  flat.bias(0) = 0.5;
  flat.bias(1) = -1.0;
  flat.bias(2) = 2.0;
  const Matrix h = encode(flat, items);
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(h(r, 0) == 0.5);
    CHECK(h(r, 1) == -1.0);
    CHECK(h(r, 2) == 2.0);
  }
}

TEST_CASE("free table returns stored rows", "[train][encoder]") {
  const std::vector<ItemId> ids{10, 20, 30};
  Encoder enc = Encoder::free_table(ids, 3, 4);
  for (const double p : enc.parameters()) {
    CHECK(p >= -0.1);
    CHECK(p <= 0.1);
  }
  Dataset batch(2);
  batch[0].id = 30;
  batch[1].id = 10;
  const Matrix h = enc.encode(batch);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(h(0, c) == enc.parameters()[2 * 3 + c]);
    CHECK(h(1, c) == enc.parameters()[c]);
  }
  batch[0].id = 99;
  CHECK_THROWS_AS(enc.encode(batch), UsageError);
  CHECK_THROWS_AS(Encoder::free_table(std::vector<ItemId>{1, 1}, 3, 0), UsageError);
  CHECK_THROWS_AS(Encoder::affine(3, 1, 0), UsageError);
}

TEST_CASE("chain gradient locality and zeros", "[train][encoder]") {
  const std::vector<ItemId> ids{1, 2, 3, 4};
  const Encoder table = Encoder::free_table(ids, 2, 0);
  Dataset one(1);
  one[0].id = 3;
  Matrix d(1, 2);
  d(0, 0) = 0.25;
  d(0, 1) = -1.5;
  const auto g = chain_gradient(d, table, one);
  CHECK(g == std::vector<double>{0, 0, 0, 0, 0.25, -1.5, 0, 0});

  std::mt19937_64 rng(2);
  const Dataset items = make_items(ids, std::vector<Year>(4, 1950), random_matrix(4, 5, rng));
  const Encoder aff = Encoder::affine(5, 3, 1);
  for (const double v : aff.chain_gradient(Matrix(4, 3, 0.0), items)) CHECK(v == 0.0);
  for (const double v : table.chain_gradient(Matrix(4, 2, 0.0), items)) CHECK(v == 0.0);
}

TEST_CASE("encoder parameter gradients match central differences", "[train][encoder]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<ItemId> ids(8);
    std::iota(ids.begin(), ids.end(), ItemId{0});
    const auto years = random_years(8, 1950, 1955, rng);
    const Dataset items = make_items(ids, years, random_matrix(8, 6, rng));
    const bool normalize = trial % 2 == 1;
    for (const auto objective : {Objective::kSmoothNDCG, Objective::kSmoothAP}) {
      LossConfig cfg;
      cfg.objective = objective;
      cfg.tau = 0.1;
      for (int mode = 0; mode < 2; ++mode) {
        Encoder enc = mode == 0 ? Encoder::affine(6, 4, 10 + trial)
                                : Encoder::free_table(ids, 4, 10 + trial);
        enc.set_normalize(normalize);
        const auto res = batch_loss(enc.encode(items), years, cfg);
        const auto analytic = enc.chain_gradient(res.gradient, items);
        const std::vector<double> x(enc.parameters().begin(), enc.parameters().end());
        const auto fd = numeric_gradient(
            [&](const std::vector<double>& p) {
              Encoder e = enc;
              std::copy(p.begin(), p.end(), e.parameters().begin());
              return batch_loss(e.encode(items), years, cfg).loss;
            },
            x);
        CHECK(max_relative_error(analytic, fd) <= 1e-4);
      }
    }
  }
}

TEST_CASE("model files round trip", "[train][encoder]") {
  TempDir dir;
  Encoder a = Encoder::affine(7, 3, 5);
  a.set_normalize(true);
  a.save(dir.file("a.rsmk"));
  CHECK(Encoder::load(dir.file("a.rsmk")) == a);
  const std::vector<ItemId> ids{5, -2, 9};
  const Encoder t = Encoder::free_table(ids, 4, 6);
  t.save(dir.file("t.rsmk"));
  const Encoder back = Encoder::load(dir.file("t.rsmk"));
  CHECK(back == t);
  CHECK(back.ids() == ids);
  CHECK(slurp(dir.file("t.rsmk")).rfind("RSMK1", 0) == 0);

  std::string bytes = slurp(dir.file("a.rsmk"));
  {
    std::ofstream out(dir.file("bad.rsmk"), std::ios::binary);
    out << bytes << "x";
  }
  CHECK_THROWS_AS(Encoder::load(dir.file("bad.rsmk")), ParseError);
  CHECK_THROWS_AS(Encoder::load(dir.file("none.rsmk")), IoError);
}

TEST_CASE("optimizer updates", "[train]") {
  OptimizerConfig sgd;
  sgd.kind = OptimizerKind::kSGD;
  sgd.lr = 0.5;
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.2, -0.4};
  Optimizer plain(sgd, 2);
  plain.step(p, g);
  CHECK(p == std::vector<double>{0.9, -1.8});

  sgd.momentum = 0.5;
  Optimizer heavy(sgd, 1);
  std::vector<double> q{0.0};
  heavy.step(q, std::vector<double>{1.0});
  heavy.step(q, std::vector<double>{1.0});
  CHECK(q[0] == Approx(-0.5 - 0.5 * 1.5));

  OptimizerConfig adam;
  adam.lr = 0.01;
  Optimizer a(adam, 2);
  std::vector<double> r{0.0, 0.0};
  a.step(r, std::vector<double>{3.0, -1e-3});
  CHECK(r[0] == Approx(-0.01).epsilon(1e-6));
  CHECK(r[1] == Approx(0.01).epsilon(1e-4));
  CHECK_THROWS_AS(a.step(r, std::vector<double>{1.0}), UsageError);

  OptimizerConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.lr = 1e-3;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  CHECK(parse_optimizer("sgd") == OptimizerKind::kSGD);
  CHECK_THROWS_AS(parse_optimizer("lbfgs"), UsageError);
}

TEST_CASE("training on the synthetic manifold", "[train]") {
  const Dataset items = synthetic(2000, 7);
  TrainConfig cfg = quick_config(500);
  cfg.threads = 4;
  Encoder enc = Encoder::affine(items.front().features.size(), 16, 2);
  const TrainResult result = train(items, cfg, enc);
  REQUIRE(result.log.records.size() == 10);
  CHECK(result.log.records.back().iteration == 500);
  CHECK(result.log.records.back().train_ndcg >= 0.9);
  CHECK(result.encoder.all_finite());
  CHECK(result.log.losses.size() == 500);
  for (const double l : result.log.losses) {
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
  }
  // 50-iteration block means of the per-iteration loss.
  std::vector<double> blocks;
  for (std::size_t b = 0; b + 50 <= result.log.losses.size(); b += 50) {
    blocks.push_back(stable_mean(std::span(result.log.losses).subspan(b, 50)));
  }
  CHECK(blocks.back() < blocks.front());
}

namespace {

std::vector<double> moving_average(std::span<const double> xs, std::size_t w) {
  std::vector<double> out;
  for (std::size_t i = w; i <= xs.size(); ++i) out.push_back(stable_mean(xs.subspan(i - w, w)));
  return out;
}

const TrainLog& default_run_log() {
  static const TrainLog log = [] {
    SyntheticSpec spec;
    spec.seed = 7;
    TrainConfig cfg;
    cfg.max_iterations = 1000;
    cfg.threads = 4;
    cfg.seed = 3;
    return train(generate(spec), cfg, Encoder::affine(spec.dim, 16, 2)).log;
  }();
  return log;
}

}  // namespace

TEST_CASE("moving-average loss is non-increasing", "[train][!mayfail]") {
  const auto ma = moving_average(default_run_log().losses, 50);
  std::size_t increases = 0;
  for (std::size_t i = 1; i < ma.size(); ++i) increases += ma[i] > ma[i - 1] ? 1 : 0;
  CHECK(increases == 0);
}

TEST_CASE("moving-average loss stays within batch noise of its running minimum",
          "[train]") {
  const auto& log = default_run_log();
  const auto ma = moving_average(log.losses, 50);
  double low = ma.front();
  double rebound = 0.0;
  for (const double m : ma) {
    rebound = std::max(rebound, m - low);
    low = std::min(low, m);
  }
  CHECK(rebound <= 0.01);
  CHECK(ma.back() < 0.5 * ma.front());
  for (const double l : log.losses) CHECK(std::isfinite(l));
}

TEST_CASE("untrained encoder ranks like a random permutation", "[train]") {
  SyntheticSpec spec;
  spec.seed = 7;
  const Dataset items = generate(spec);
  SplitConfig sc;
  sc.balanced = true;
  sc.test_per_year = 2;
  sc.seed = 9;
  const Split parts = split(items, sc);
  const Encoder enc = Encoder::affine(spec.dim, 16, 3);
  const Matrix h = enc.encode(parts.test);
  const auto ids = ids_of(parts.test);
  const auto years = years_of(parts.test);
  const LabeledView view{ids, years, &h};
  RetrievalOptions opt;
  opt.threads = 4;
  const double untrained = retrieval_report(view, view, opt).ndcg;
  const double random = random_baseline_metrics(view, view, opt, 11).ndcg;
  CHECK(std::abs(untrained - random) <= 0.05);
}

namespace {

bool ordered_by_gap(const Matrix& s, const std::vector<Year>& years) {
  bool ok = true;
  for (std::size_t q = 0; q < years.size(); ++q) {
    for (std::size_t a = 0; a < years.size(); ++a) {
      for (std::size_t b = 0; b < years.size(); ++b) {
        if (a == q || b == q) continue;
        if (std::abs(years[a] - years[q]) < std::abs(years[b] - years[q]) &&
            !(s(q, a) > s(q, b))) {
          ok = false;
        }
      }
    }
  }
  return ok;
}

TrainConfig four_item_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_iterations = 3000;
  cfg.eval_every = 1000;
  cfg.loss.relevance.kind = RelevanceKind::kInverseLinear;
  cfg.loss.tau = 0.01;
  return cfg;
}

const std::vector<ItemId> kFourIds{0, 1, 2, 3};
const std::vector<Year> kFourYears{1930, 1931, 1935, 1947};

}  // namespace

// Known to fail from random initialisation: descent settles where 1935's
// nearest item is 1947, and the sigmoid slope across that gap underflows.
TEST_CASE("free table with four items orders similarities by year gap from random init",
          "[train][!mayfail]") {
  const Dataset items = make_items(kFourIds, kFourYears, Matrix(4, 1, 1.0));
  const TrainResult result =
      train(items, four_item_config(), Encoder::free_table(kFourIds, 8, 4));
  CHECK(ordered_by_gap(similarity_matrix(result.encoder.encode(items)), kFourYears));
}

TEST_CASE("free table training keeps a year-ordered arrangement", "[train]") {
  const Dataset items = make_items(kFourIds, kFourYears, Matrix(4, 1, 1.0));
  // Rows on a planar arc, angle proportional to year, plus jitter in 8 dims.
  Encoder enc = Encoder::free_table(kFourIds, 8, 4);
  auto p = enc.parameters();
  for (std::size_t r = 0; r < 4; ++r) {
    const double angle = 0.15 * static_cast<double>(kFourYears[r] - 1930);
    p[r * 8 + 0] += std::cos(angle);
    p[r * 8 + 1] += std::sin(angle);
  }
  const TrainResult result = train(items, four_item_config(), enc);
  CHECK(ordered_by_gap(similarity_matrix(result.encoder.encode(items)), kFourYears));
  CHECK(result.log.losses.back() <= result.log.losses.front());
}

TEST_CASE("training is reproducible and thread independent", "[train]") {
  const Dataset items = synthetic(400, 3);
  Dataset validation = synthetic(140, 4);
  for (auto& it : validation) it.id += 10000;
  TrainConfig cfg = quick_config(120, 5);
  cfg.eval_every = 40;
  const Encoder init = Encoder::affine(32, 8, 6);
  const TrainResult a = train(items, cfg, init, &validation);
  cfg.threads = 4;
  const TrainResult b = train(items, cfg, init, &validation);
  CHECK(a.encoder == b.encoder);
  CHECK(a.log.losses == b.log.losses);
  CHECK(a.log.to_csv() == b.log.to_csv());
  REQUIRE(a.log.records.size() == 3);
  CHECK(std::isfinite(a.log.records[0].val_mae));
  CHECK(a.log.to_csv().rfind("iteration,loss,ndcg,mae\n40,", 0) == 0);
  cfg.seed = 6;
  CHECK(!(train(items, cfg, init).encoder == a.encoder));
}

TEST_CASE("log csv leaves mae empty without validation", "[train]") {
  TrainLog log;
  TrainRecord r;
  r.iteration = 10;
  r.loss = 0.5;
  r.train_ndcg = 0.75;
  log.records.push_back(r);
  CHECK(log.to_csv() == "iteration,loss,ndcg,mae\n10,0.5,0.75,\n");
}

TEST_CASE("divergence keeps the last finite encoder", "[train]") {
  const Dataset items = synthetic(200, 8);
  TrainConfig cfg = quick_config(20);
  cfg.optimizer.lr = 1e308;
  try {
    train(items, cfg, Encoder::affine(32, 8, 1));
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.code() == ExitCode::kNumeric);
    CHECK(e.last_good().all_finite());
    CHECK(e.iteration() >= 1);
  }
}

TEST_CASE("train config validation", "[train]") {
  const Dataset items = synthetic(100, 9);
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train(items, cfg, Encoder::affine(32, 4, 0)), UsageError);
  cfg.batch_size = 200;
  CHECK_THROWS_AS(train(items, cfg, Encoder::affine(32, 4, 0)), UsageError);
  cfg.batch_size = 16;
  cfg.eval_every = 0;
  CHECK_THROWS_AS(train(items, cfg, Encoder::affine(32, 4, 0)), UsageError);
}
