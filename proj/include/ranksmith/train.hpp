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

// Batch training loop: encode a batch, rank every item against the rest,
// score the rankings with a smooth objective and step the encoder.

#ifndef RANKSMITH_TRAIN_HPP_
#define RANKSMITH_TRAIN_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ranksmith/analysis.hpp"
#include "ranksmith/core.hpp"
#include "ranksmith/data.hpp"
#include "ranksmith/encoder.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/knn.hpp"
#include "ranksmith/losses.hpp"

namespace ranksmith {

enum class OptimizerKind { kSGD, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) {
      throw UsageError("momentum must lie in [0, 1)");
    }
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw UsageError("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw UsageError("Adam epsilon must be positive");
  }
};

inline OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSGD;
  throw UsageError("unknown optimizer '" + std::string(name) +
                   "' (expected adam or sgd)");
}

/// Stateful first order update rule over a flat parameter vector.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::size_t n)
      : cfg_(cfg), m_(n, 0.0), v_(cfg.kind == OptimizerKind::kAdam ? n : 0, 0.0) {
    cfg_.validate();
  }

  void step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw UsageError("optimizer: parameter count changed");
    }
    ++t_;
    if (cfg_.kind == OptimizerKind::kSGD) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.momentum * m_[i] + grad[i];
        params[i] -= cfg_.lr * m_[i];
      }
      return;
    }
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_iterations = 2000;
  std::size_t eval_every = 100;
  OptimizerConfig optimizer;
  LossConfig loss;
  std::uint64_t seed = 0;
  /// Neighbours used for the validation MAE.
  std::size_t eval_k = kDefaultK;
  unsigned threads = 1;

  void validate() const {
    if (batch_size < 2) throw UsageError("batch size must be at least 2");
    if (max_iterations < 1) throw UsageError("iterations must be at least 1");
    if (eval_every < 1) throw UsageError("eval_every must be at least 1");
    if (eval_k < 1) throw UsageError("eval k must be at least 1");
    optimizer.validate();
    loss.validate();
  }
};

struct TrainRecord {
  std::size_t iteration = 0;
  /// Mean batch loss since the previous record.
  double loss = 0.0;
  /// Exact nDCG of the hard ranking inside the current batch.
  double train_ndcg = 0.0;
  /// NaN when no validation set was given.
  double val_mae = std::numeric_limits<double>::quiet_NaN();
  double val_ndcg = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
  std::vector<TrainRecord> records;
  /// Batch loss of every iteration.
  std::vector<double> losses;

  /// "iteration,loss,ndcg,mae"; mae is empty without validation data.
  std::string to_csv() const {
    std::string out = "iteration,loss,ndcg,mae\n";
    char buf[64];
    const auto num = [&](double v) {
      if (std::isnan(v)) return std::string();
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      return std::string(buf, static_cast<std::size_t>(res.ptr - buf));
    };
    for (const auto& r : records) {
      out += std::to_string(r.iteration) + "," + num(r.loss) + "," +
             num(r.train_ndcg) + "," + num(r.val_mae) + "\n";
    }
    return out;
  }
};

/// Thrown when the loss or the parameters stop being finite. Carries the
/// encoder as it was before the failing step.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, Encoder last_good,
                   std::size_t iteration)
      : NumericError(what),
        last_good_(std::move(last_good)),
        iteration_(iteration) {}

  const Encoder& last_good() const noexcept { return last_good_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  Encoder last_good_;
  std::size_t iteration_;
};

struct TrainResult {
  Encoder encoder;
  TrainLog log;
};

/// Exact mean nDCG of ranking `items` against each other by `embeddings`.
inline double in_collection_ndcg(const Dataset& items, const Matrix& embeddings,
                                 const RelevanceSpec& rel, unsigned threads = 1) {
  const auto ids = ids_of(items);
  const auto years = years_of(items);
  const LabeledView view{ids, years, &embeddings};
  RetrievalOptions opt;
  opt.relevance = rel;
  opt.threads = threads;
  return retrieval_report(view, view, opt).ndcg;
}

/// Validation MAE of k-NN against `support_items` and in-collection nDCG of
/// `queries`.
inline std::pair<double, double> validation_metrics(const Encoder& enc,
                                                    const Dataset& support_items,
                                                    const Dataset& queries,
                                                    std::size_t k,
                                                    const RelevanceSpec& rel,
                                                    unsigned threads = 1) {
  const SupportSet support(ids_of(support_items), years_of(support_items),
                           enc.encode(support_items));
  const Matrix q = enc.encode(queries);
  const auto preds = predict_all(q, support, exact_search(support), k, false,
                                 threads);
  std::vector<Year> predicted;
  for (const auto& p : preds) predicted.push_back(p.year);
  const double mae = mean_absolute_error(predicted, years_of(queries));
  return {mae, in_collection_ndcg(queries, q, rel, threads)};
}

/// Runs cfg.max_iterations updates of `enc` on disjoint random batches of
/// `items`, reshuffled every epoch (the remainder smaller than a batch is
/// dropped). Reproducible for a fixed seed regardless of thread count.
inline TrainResult train(const Dataset& items, const TrainConfig& cfg,
                         Encoder enc, const Dataset* validation = nullptr) {
  cfg.validate();
  if (items.size() < cfg.batch_size) {
    throw UsageError("training set (" + std::to_string(items.size()) +
                     " items) is smaller than the batch size (" +
                     std::to_string(cfg.batch_size) + ")");
  }
  LossConfig loss_cfg = cfg.loss;
  loss_cfg.threads = cfg.threads;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = items.size();  // forces a shuffle on the first batch

  Optimizer opt(cfg.optimizer, enc.parameters().size());
  TrainLog log;
  log.losses.reserve(cfg.max_iterations);
  std::size_t window_start = 0;
  Dataset batch(cfg.batch_size);

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    if (cursor + cfg.batch_size > items.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      batch[b] = items[order[cursor + b]];
    }
    cursor += cfg.batch_size;

    const Matrix h = enc.encode(batch);
    if (!std::all_of(h.values().begin(), h.values().end(),
                     [](double v) { return std::isfinite(v); })) {
      throw TrainingDiverged(
          "embeddings became non-finite at iteration " + std::to_string(it),
          enc, it);
    }
    const std::vector<Year> years = years_of(batch);
    BatchLossResult res;
    try {
      res = batch_loss(h, years, loss_cfg);
    } catch (const Error& e) {
      if (e.code() != ExitCode::kNumeric) throw;
      throw TrainingDiverged(std::string(e.what()) + " at iteration " +
                                 std::to_string(it),
                             enc, it);
    }
    log.losses.push_back(res.loss);

    const std::vector<double> before(enc.parameters().begin(),
                                     enc.parameters().end());
    const auto grad = enc.chain_gradient(res.gradient, batch);
    opt.step(enc.parameters(), grad);
    if (!enc.all_finite()) {
      std::copy(before.begin(), before.end(), enc.parameters().begin());
      throw TrainingDiverged(
          "parameters became non-finite at iteration " + std::to_string(it),
          enc, it);
    }

    if (it % cfg.eval_every == 0) {
      TrainRecord rec;
      rec.iteration = it;
      rec.loss = stable_mean(std::span(log.losses).subspan(window_start));
      window_start = log.losses.size();
      rec.train_ndcg =
          in_collection_ndcg(batch, h, cfg.loss.relevance, cfg.threads);
      if (validation != nullptr && !validation->empty()) {
        const auto [mae, nd] = validation_metrics(
            enc, items, *validation, cfg.eval_k, cfg.loss.relevance,
            cfg.threads);
        rec.val_mae = mae;
        rec.val_ndcg = nd;
      }
      log.records.push_back(rec);
    }
  }
  return {std::move(enc), std::move(log)};
}

}  // namespace ranksmith

#endif  // RANKSMITH_TRAIN_HPP_
