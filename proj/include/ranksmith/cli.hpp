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

// The `ranksmith` command line: gen, train, eval, predict, ann-build and
// bin-sim. Exposed as a function so tests can drive it in process.
//
// Every random stream is derived from --seed by a fixed offset:
//   data +0, split +1, encoder init +2, batches +3, support sample +4,
//   ANN trees +5, random baseline +6, bin subsampling +7.

#ifndef RANKSMITH_CLI_HPP_
#define RANKSMITH_CLI_HPP_

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ranksmith/ranksmith.hpp"

namespace ranksmith::cli {

namespace seeds {
inline constexpr std::uint64_t kData = 0;
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kEncoder = 2;
inline constexpr std::uint64_t kBatches = 3;
inline constexpr std::uint64_t kSupport = 4;
inline constexpr std::uint64_t kAnn = 5;
inline constexpr std::uint64_t kBaseline = 6;
inline constexpr std::uint64_t kBins = 7;
}  // namespace seeds

namespace detail {

namespace fs = std::filesystem;

inline YearSpan parse_span(const std::string& text) {
  const auto colon = text.find(':');
  YearSpan span;
  const auto num = [&](std::string_view s, Year& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
  };
  const std::string_view all(text);
  if (colon == std::string::npos || !num(all.substr(0, colon), span.first) ||
      !num(all.substr(colon + 1), span.last)) {
    throw UsageError("--years expects FIRST:LAST, got '" + text + "'");
  }
  span.validate();
  return span;
}

/// "k=1,2,5" or "1,2,5".
inline std::vector<std::size_t> parse_k_list(std::string text) {
  if (text.rfind("k=", 0) == 0) text.erase(0, 2);
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t k = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), k);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || k == 0) {
      throw UsageError("--curve: bad k value '" + tok + "'");
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw UsageError("--curve needs at least one k");
  return ks;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, static_cast<std::size_t>(res.ptr - buf));
}

/// Paths gathered up front and checked before any work starts.
class PathPlan {
 public:
  void input(const std::string& path) {
    if (path.empty()) return;
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
      throw IoError("input '" + path + "' does not exist or is not a file");
    }
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open '" + path + "' for reading");
    inputs_.push_back(path);
  }

  void output(const std::string& path) {
    if (path.empty()) return;
    std::error_code ec;
    const fs::path p(path);
    if (fs::is_directory(p, ec)) {
      throw IoError("output '" + path + "' is a directory");
    }
    const fs::path parent = p.parent_path();
    if (!parent.empty() && !fs::is_directory(parent, ec)) {
      throw IoError("output directory '" + parent.string() + "' does not exist");
    }
    for (const auto& in : inputs_) {
      if (fs::exists(p, ec) && fs::equivalent(p, in, ec)) {
        throw UsageError("output '" + path + "' would overwrite input '" + in + "'");
      }
    }
    for (const auto& out : outputs_) {
      if (fs::weakly_canonical(p, ec) == fs::weakly_canonical(out, ec)) {
        throw UsageError("output '" + path + "' is given twice");
      }
    }
    outputs_.push_back(path);
  }

 private:
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Applies flat key=value defaults from --config files: each key becomes
/// --key=value unless the command line already sets it.
inline std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::vector<std::string> files;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      files.push_back(args[i + 1]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      files.push_back(args[i].substr(9));
    }
  }
  const auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file '" + file + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError(file + ":" + std::to_string(lineno) +
                         ": expected key=value");
      }
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.rfind("--", 0) == 0) key.erase(0, 2);
      if (key.empty() || key == "config") {
        throw ParseError(file + ":" + std::to_string(lineno) + ": bad key");
      }
      if (!given(key)) extra.push_back("--" + key + "=" + value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string years = "1930:1999";
  std::string config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
    cmd->add_option("--threads", threads,
                    "Worker threads (0: RANKSMITH_THREADS or all cores)")
        ->capture_default_str();
    cmd->add_option("--years", years, "Admissible year span FIRST:LAST")
        ->capture_default_str();
    cmd->add_option("--config", config, "Flat key=value defaults file");
  }
  YearSpan span() const { return parse_span(years); }
  unsigned workers() const { return resolve_threads(threads); }
};

struct RelevanceFlags {
  std::string kind = "clipped";
  double gamma = 10.0;
  int positive_gap = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--relevance", kind,
                    "clipped | inverse | exp")->capture_default_str();
    cmd->add_option("--gamma", gamma, "Clipped-linear cutoff")->capture_default_str();
    cmd->add_option("--positive-gap", positive_gap,
                    "Max year gap counted as an AP positive")
        ->capture_default_str();
  }
  RelevanceSpec spec() const {
    RelevanceSpec r;
    r.kind = parse_relevance_kind(kind);
    r.gamma = gamma;
    r.validate();
    if (positive_gap < 0) throw UsageError("--positive-gap must be >= 0");
    return r;
  }
};

// ---------------------------------------------------------------------------

struct GenFlags {
  Common common;
  std::size_t n = 2000;
  std::string out;
  std::size_t dim = 32;
  double noise = 0.1;
  std::size_t distractors = 8;
  bool csv = false;
  std::string test_out;
  std::size_t test_per_year = 2;
  std::string val_out;
  std::size_t val_per_year = 2;
};

inline int cmd_gen(const GenFlags& f, std::ostream& out) {
  SyntheticSpec spec;
  spec.n_items = f.n;
  spec.span = f.common.span();
  spec.dim = f.dim;
  spec.noise_sigma = f.noise;
  spec.distractor_dims = f.distractors;
  spec.seed = f.common.seed + seeds::kData;
  spec.validate();
  PathPlan plan;
  plan.output(f.out);
  plan.output(f.test_out);
  plan.output(f.val_out);

  const Dataset items = generate(spec);
  const auto save = [&](const Dataset& d, const std::string& path) {
    if (f.csv) {
      save_features_csv(d, path);
    } else {
      save_features(d, path);
    }
    out << "wrote " << d.size() << " items to " << path << "\n";
  };
  if (f.test_out.empty() && f.val_out.empty()) {
    save(items, f.out);
    return 0;
  }
  SplitConfig sc;
  sc.balanced = true;
  sc.span = spec.span;
  sc.test_per_year = f.test_out.empty() ? 0 : f.test_per_year;
  sc.val_per_year = f.val_out.empty() ? 0 : f.val_per_year;
  sc.seed = f.common.seed + seeds::kSplit;
  const Split parts = split(items, sc);
  save(parts.train, f.out);
  if (!f.test_out.empty()) save(parts.test, f.test_out);
  if (!f.val_out.empty()) save(parts.val, f.val_out);
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainFlags {
  Common common;
  RelevanceFlags rel;
  std::string data;
  std::string val;
  std::string out;
  std::string log;
  std::string encoder = "affine";
  std::size_t dim_out = 16;
  std::size_t batch = 64;
  std::size_t iters = 2000;
  std::size_t eval_every = 100;
  std::size_t eval_k = kDefaultK;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double momentum = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::string loss = "smooth-ndcg";
  double tau = 0.01;
  bool normalize = false;
};

inline int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  const YearSpan span = f.common.span();
  const std::string log_path = f.log.empty() ? f.out + ".log.csv" : f.log;
  TrainConfig cfg;
  cfg.batch_size = f.batch;
  cfg.max_iterations = f.iters;
  cfg.eval_every = f.eval_every;
  cfg.eval_k = f.eval_k;
  cfg.optimizer.kind = parse_optimizer(f.optimizer);
  cfg.optimizer.lr = f.lr;
  cfg.optimizer.momentum = f.momentum;
  cfg.optimizer.beta1 = f.beta1;
  cfg.optimizer.beta2 = f.beta2;
  cfg.loss.objective = parse_objective(f.loss);
  cfg.loss.tau = f.tau;
  cfg.loss.relevance = f.rel.spec();
  cfg.loss.positive_gap = f.rel.positive_gap;
  cfg.seed = f.common.seed + seeds::kBatches;
  cfg.threads = f.common.workers();
  cfg.validate();
  if (f.encoder != "affine" && f.encoder != "free") {
    throw UsageError("--encoder must be affine or free");
  }
  if (f.encoder == "free" && !f.val.empty()) {
    throw UsageError("--val needs an affine encoder (a free table has no "
                     "rows for unseen items)");
  }
  PathPlan plan;
  plan.input(f.data);
  plan.input(f.val);
  plan.output(f.out);
  plan.output(log_path);

  const Dataset items = load_features(f.data, span);
  if (items.empty()) throw ValidationError("training set '" + f.data + "' is empty");
  Dataset validation;
  if (!f.val.empty()) validation = load_features(f.val, span);

  const std::uint64_t init_seed = f.common.seed + seeds::kEncoder;
  Encoder enc = f.encoder == "free"
                    ? Encoder::free_table(ids_of(items), f.dim_out, init_seed)
                    : Encoder::affine(items.front().features.size(), f.dim_out,
                                      init_seed);
  enc.set_normalize(f.normalize);

  TrainResult result;
  try {
    result = train(items, cfg, std::move(enc),
                   validation.empty() ? nullptr : &validation);
  } catch (const TrainingDiverged& e) {
    e.last_good().save(f.out);
    err << "training diverged at iteration " << e.iteration()
        << "; last good model written to " << f.out << "\n";
    throw;
  }
  result.encoder.save(f.out);
  write_text(log_path, result.log.to_csv());

  out << "final iteration=" << f.iters;
  if (!result.log.records.empty()) {
    const TrainRecord& last = result.log.records.back();
    out << " loss=" << format_double(last.loss)
        << " ndcg=" << format_double(last.train_ndcg);
    if (!std::isnan(last.val_mae)) {
      out << " val_mae=" << format_double(last.val_mae)
          << " val_ndcg=" << format_double(last.val_ndcg);
    }
  } else {
    out << " loss=" << format_double(result.log.losses.back());
  }
  out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AnnFlags {
  std::uint32_t trees = 16;
  std::uint32_t leaf = 32;
  std::uint32_t budget = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "ANN tree count")->capture_default_str();
    cmd->add_option("--leaf", leaf, "ANN leaf capacity")->capture_default_str();
    cmd->add_option("--budget", budget,
                    "ANN candidates per query (0: automatic)")
        ->capture_default_str();
  }
  AnnParams params(const Common& c) const {
    AnnParams p;
    p.tree_count = trees;
    p.leaf_capacity = leaf;
    p.search_budget = budget;
    p.seed = c.seed + seeds::kAnn;
    p.threads = c.workers();
    return p;
  }
};

inline void check_model_fits(const Encoder& enc, const Dataset& items,
                             const std::string& path) {
  if (enc.mode() != EncoderMode::kAffine || items.empty()) return;
  for (const auto& it : items) {
    if (it.features.size() != enc.d_in()) {
      throw ValidationError("'" + path + "' has " +
                            std::to_string(it.features.size()) +
                            " features per item, model expects " +
                            std::to_string(enc.d_in()));
    }
  }
}

inline SupportSet support_of(const Encoder& enc, const Dataset& items) {
  return SupportSet(ids_of(items), years_of(items), enc.encode(items));
}

struct EvalFlags {
  Common common;
  RelevanceFlags rel;
  AnnFlags ann_flags;
  std::string model;
  std::string train;
  std::string test;
  std::size_t k = kDefaultK;
  std::string support = "full";
  bool ann = false;
  std::string curve;
  std::string curve_out;
  bool curve_weighted = false;
  std::string bin_sim;
  Year bin_width = 5;
  std::string report;
};

inline int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const YearSpan span = f.common.span();
  const RelevanceSpec rel = f.rel.spec();
  const unsigned threads = f.common.workers();
  if (f.k == 0) throw UsageError("--k must be at least 1");
  std::optional<std::size_t> sample_size;
  if (f.support != "full" && f.support != "test") {
    std::string n = f.support;
    if (n.rfind("random:", 0) == 0) n.erase(0, 7);
    std::size_t v = 0;
    const auto res = std::from_chars(n.data(), n.data() + n.size(), v);
    if (res.ec != std::errc() || res.ptr != n.data() + n.size() || v == 0) {
      throw UsageError("--support must be full, test or a positive count");
    }
    sample_size = v;
  }
  const std::vector<std::size_t> ks =
      f.curve.empty() ? std::vector<std::size_t>{} : parse_k_list(f.curve);
  if (!f.curve_out.empty() && ks.empty()) {
    throw UsageError("--curve-out needs --curve");
  }
  PathPlan plan;
  plan.input(f.model);
  plan.input(f.train);
  plan.input(f.test);
  plan.output(f.curve_out);
  plan.output(f.bin_sim);
  plan.output(f.report);

  const Encoder enc = Encoder::load(f.model);
  const Dataset train_items = load_features(f.train, span);
  const Dataset test_items = load_features(f.test, span);
  if (test_items.empty()) throw ValidationError("test split is empty");
  check_model_fits(enc, train_items, f.train);
  check_model_fits(enc, test_items, f.test);

  const Matrix h_test = enc.encode(test_items);
  const std::vector<Year> truths = years_of(test_items);
  const std::vector<ItemId> test_ids = ids_of(test_items);
  SupportSet support = f.support == "test" ? support_of(enc, test_items)
                                           : support_of(enc, train_items);
  if (sample_size) {
    support = support.sample(*sample_size, f.common.seed + seeds::kSupport);
  }

  const auto mae_of = [&](const NeighborSearch& search, bool weighted) {
    const auto preds = predict_all(h_test, support, search, f.k, weighted, threads);
    std::vector<Year> years;
    years.reserve(preds.size());
    for (const auto& p : preds) years.push_back(p.year);
    return mean_absolute_error(years, truths);
  };

  const LabeledView view{test_ids, truths, &h_test};
  RetrievalOptions ropt;
  ropt.relevance = rel;
  ropt.positive_gap = f.rel.positive_gap;
  ropt.threads = threads;
  MetricReport report = retrieval_report(view, view, ropt);
  report.mae = mae_of(exact_search(support), false);

  nlohmann::json j = report.to_json();
  j["mae_weighted"] = mae_of(exact_search(support), true);
  j["k"] = f.k;
  j["support"] = f.support;
  j["support_size"] = support.size();
  j["n_test"] = test_items.size();

  std::optional<AnnIndex> index;
  if (f.ann) {
    index = AnnIndex::build(support, f.ann_flags.params(f.common));
    j["mae_ann"] = mae_of(index->search(), false);
    j["mae_ann_weighted"] = mae_of(index->search(), true);
  }

  const MetricReport random = random_baseline_metrics(
      view, view, ropt, f.common.seed + seeds::kBaseline);
  j["random_map"] = random.map;
  j["random_ndcg"] = random.ndcg;
  j["random_mae"] = random.mae;

  if (!ks.empty()) {
    const NeighborSearch search = index ? index->search() : exact_search(support);
    const auto curve =
        mae_vs_k_curve(h_test, truths, support, ks, f.curve_weighted, search, threads);
    if (f.curve_out.empty()) {
      nlohmann::json c = nlohmann::json::array();
      for (const auto& [k, mae] : curve) c.push_back({{"k", k}, {"mae", mae}});
      j["curve"] = c;
    } else {
      write_text(f.curve_out, curve_csv(curve));
    }
  }

  if (!f.bin_sim.empty()) {
    BinSimilarityOptions bopt;
    bopt.bin_width = f.bin_width;
    bopt.span = span;
    bopt.seed = f.common.seed + seeds::kBins;
    const BinSimilarityMatrix m = bin_similarity(view, bopt);
    write_text(f.bin_sim, m.to_csv());
    j["bin_spearman"] = bin_distance_correlation(m);
  }

  const std::string text = j.dump(2) + "\n";
  if (f.report.empty()) {
    out << text;
  } else {
    write_text(f.report, text);
    out << "wrote report to " << f.report << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictFlags {
  Common common;
  std::string model;
  std::string support;
  std::string queries;
  std::string ann;
  std::size_t k = kDefaultK;
  bool weighted = false;
  std::string out;
};

inline int cmd_predict(const PredictFlags& f, std::ostream& out) {
  const YearSpan span = f.common.span();
  if (f.k == 0) throw UsageError("--k must be at least 1");
  if (f.support.empty() && f.ann.empty()) {
    throw UsageError("predict needs --support or --ann");
  }
  PathPlan plan;
  plan.input(f.model);
  plan.input(f.support);
  plan.input(f.queries);
  plan.input(f.ann);
  plan.output(f.out);

  const Encoder enc = Encoder::load(f.model);
  Dataset queries = load_features(f.queries, span);
  check_model_fits(enc, queries, f.queries);
  std::sort(queries.begin(), queries.end(),
            [](const LabeledItem& a, const LabeledItem& b) { return a.id < b.id; });

  std::optional<AnnIndex> index;
  SupportSet support;
  if (!f.ann.empty()) {
    index = AnnIndex::load(f.ann);
    if (index->support().dim() != enc.d_out()) {
      throw ValidationError("ANN index has dimension " +
                            std::to_string(index->support().dim()) +
                            ", model produces " + std::to_string(enc.d_out()));
    }
  } else {
    const Dataset items = load_features(f.support, span);
    check_model_fits(enc, items, f.support);
    support = support_of(enc, items);
  }
  const SupportSet& active = index ? index->support() : support;
  const NeighborSearch search = index ? index->search() : exact_search(active);
  const Matrix h = enc.encode(queries);
  const auto preds =
      predict_all(h, active, search, f.k, f.weighted, f.common.workers());

  std::string csv = "id,predicted_year,neighbor_ids,neighbor_similarities\n";
  for (std::size_t r = 0; r < queries.size(); ++r) {
    csv += std::to_string(queries[r].id) + "," + std::to_string(preds[r].year) + ",";
    for (std::size_t n = 0; n < preds[r].neighbor_ids.size(); ++n) {
      if (n > 0) csv += ";";
      csv += std::to_string(preds[r].neighbor_ids[n]);
    }
    csv += ",";
    for (std::size_t n = 0; n < preds[r].neighbor_similarities.size(); ++n) {
      if (n > 0) csv += ";";
      csv += format_double(preds[r].neighbor_similarities[n]);
    }
    csv += "\n";
  }
  if (f.out.empty()) {
    out << csv;
  } else {
    write_text(f.out, csv);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct AnnBuildFlags {
  Common common;
  AnnFlags ann;
  std::string model;
  std::string support;
  std::string out;
};

inline int cmd_ann_build(const AnnBuildFlags& f, std::ostream& out) {
  const YearSpan span = f.common.span();
  const AnnParams params = f.ann.params(f.common);
  PathPlan plan;
  plan.input(f.model);
  plan.input(f.support);
  plan.output(f.out);

  const Encoder enc = Encoder::load(f.model);
  const Dataset items = load_features(f.support, span);
  check_model_fits(enc, items, f.support);
  const AnnIndex index = AnnIndex::build(support_of(enc, items), params);
  index.save(f.out);
  out << "indexed " << items.size() << " items in " << params.tree_count
      << " trees to " << f.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BinSimFlags {
  Common common;
  std::string model;
  std::string data;
  Year width = 5;
  std::size_t max_pairs = 100000;
  std::string out;
};

inline int cmd_bin_sim(const BinSimFlags& f, std::ostream& out, std::ostream& err) {
  BinSimilarityOptions opt;
  opt.bin_width = f.width;
  opt.span = f.common.span();
  opt.max_pairs = f.max_pairs;
  opt.seed = f.common.seed + seeds::kBins;
  if (opt.bin_width <= 0) throw UsageError("--width must be positive");
  if (opt.max_pairs == 0) throw UsageError("--max-pairs must be positive");
  PathPlan plan;
  plan.input(f.model);
  plan.input(f.data);
  plan.output(f.out);

  const Encoder enc = Encoder::load(f.model);
  const Dataset items = load_features(f.data, opt.span);
  check_model_fits(enc, items, f.data);
  const Matrix h = enc.encode(items);
  const auto ids = ids_of(items);
  const auto years = years_of(items);
  const BinSimilarityMatrix m = bin_similarity(LabeledView{ids, years, &h}, opt);
  const double rho = bin_distance_correlation(m);
  if (f.out.empty()) {
    out << m.to_csv();
    err << "spearman(bin distance, similarity) = " << format_double(rho) << "\n";
  } else {
    write_text(f.out, m.to_csv());
    out << "spearman(bin distance, similarity) = " << format_double(rho) << "\n";
  }
  return 0;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name. Returns the exit code.
inline int run(std::vector<std::string> args, std::ostream& out,
               std::ostream& err) {
  using namespace detail;
  CLI::App app{"ranksmith: rank-based embedding training and year estimation"};
  app.name("ranksmith");
  app.require_subcommand(1);

  GenFlags gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic feature file");
  gen.common.attach(g);
  g->add_option("--n", gen.n, "Number of items")->capture_default_str();
  g->add_option("--out", gen.out, "Output feature file (train part when splitting)")
      ->required();
  g->add_option("--dim", gen.dim, "Feature dimension")->capture_default_str();
  g->add_option("--noise", gen.noise, "Gaussian noise sigma")->capture_default_str();
  g->add_option("--distractors", gen.distractors, "Nuisance dimensions")
      ->capture_default_str();
  g->add_flag("--csv", gen.csv, "Write CSV instead of binary");
  g->add_option("--test-out", gen.test_out, "Write a balanced test split here");
  g->add_option("--test-per-year", gen.test_per_year)->capture_default_str();
  g->add_option("--val-out", gen.val_out, "Write a balanced validation split here");
  g->add_option("--val-per-year", gen.val_per_year)->capture_default_str();

  TrainFlags tr;
  auto* t = app.add_subcommand("train", "Train an encoder");
  tr.common.attach(t);
  tr.rel.attach(t);
  t->add_option("--data", tr.data, "Training feature file")->required();
  t->add_option("--out", tr.out, "Output model file")->required();
  t->add_option("--log", tr.log, "Training log CSV (default: <out>.log.csv)");
  t->add_option("--val", tr.val, "Validation feature file");
  t->add_option("--encoder", tr.encoder, "affine | free")->capture_default_str();
  t->add_option("--dim-out", tr.dim_out, "Embedding dimension")->capture_default_str();
  t->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  t->add_option("--iters", tr.iters, "Iterations")->capture_default_str();
  t->add_option("--eval-every", tr.eval_every, "Log interval")->capture_default_str();
  t->add_option("--eval-k", tr.eval_k, "k for validation MAE")->capture_default_str();
  t->add_option("--optimizer", tr.optimizer, "adam | sgd")->capture_default_str();
  t->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  t->add_option("--momentum", tr.momentum, "SGD momentum")->capture_default_str();
  t->add_option("--beta1", tr.beta1, "Adam beta1")->capture_default_str();
  t->add_option("--beta2", tr.beta2, "Adam beta2")->capture_default_str();
  t->add_option("--loss", tr.loss, "smooth-ndcg | smooth-ap")->capture_default_str();
  t->add_option("--tau", tr.tau, "Sigmoid temperature")->capture_default_str();
  t->add_flag("--normalize", tr.normalize, "L2-normalize encoder outputs");

  EvalFlags ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model on a test split");
  ev.common.attach(e);
  ev.rel.attach(e);
  ev.ann_flags.attach(e);
  e->add_option("--model", ev.model, "Model file")->required();
  e->add_option("--train", ev.train, "Train split (support set)")->required();
  e->add_option("--test", ev.test, "Test split (queries)")->required();
  e->add_option("--k", ev.k, "Neighbours")->capture_default_str();
  e->add_option("--support", ev.support,
                "full | test | N (random sample of N train items)")
      ->capture_default_str();
  e->add_flag("--ann", ev.ann, "Also evaluate approximate search");
  e->add_option("--curve", ev.curve, "MAE-vs-k sweep, e.g. k=1,2,5,10");
  e->add_option("--curve-out", ev.curve_out, "Write the sweep as CSV here");
  e->add_flag("--curve-weighted", ev.curve_weighted, "Sweep weighted k-NN");
  e->add_option("--bin-sim", ev.bin_sim, "Write the year-bin similarity CSV here");
  e->add_option("--bin-width", ev.bin_width, "Years per bin")->capture_default_str();
  e->add_option("--report", ev.report, "Write the JSON report here (default stdout)");

  PredictFlags pr;
  auto* p = app.add_subcommand("predict", "Predict years for query items");
  pr.common.attach(p);
  p->add_option("--model", pr.model, "Model file")->required();
  p->add_option("--support", pr.support, "Support feature file");
  p->add_option("--queries", pr.queries, "Query feature file")->required();
  p->add_option("--ann", pr.ann, "Search this ANN index instead of --support");
  p->add_option("--k", pr.k, "Neighbours")->capture_default_str();
  p->add_flag("--weighted", pr.weighted, "Similarity-weighted mean");
  p->add_option("--out", pr.out, "Output CSV (default stdout)");

  AnnBuildFlags ab;
  auto* a = app.add_subcommand("ann-build", "Build an ANN index over a support set");
  ab.common.attach(a);
  ab.ann.attach(a);
  a->add_option("--model", ab.model, "Model file")->required();
  a->add_option("--support", ab.support, "Support feature file")->required();
  a->add_option("--out", ab.out, "Output index file")->required();

  BinSimFlags bs;
  auto* b = app.add_subcommand("bin-sim", "Year-bin cosine similarity matrix");
  bs.common.attach(b);
  b->add_option("--model", bs.model, "Model file")->required();
  b->add_option("--data", bs.data, "Feature file")->required();
  b->add_option("--width", bs.width, "Years per bin")->capture_default_str();
  b->add_option("--max-pairs", bs.max_pairs, "Pair cap per bin pair")
      ->capture_default_str();
  b->add_option("--out", bs.out, "Output CSV (default stdout)");

  try {
    args = apply_config(std::move(args));
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return static_cast<int>(ex.code());
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    if (const auto subs = app.get_subcommands(); !subs.empty()) {
      err << "see 'ranksmith " << subs.front()->get_name() << " --help'\n";
    }
    return static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (e->parsed()) return cmd_eval(ev, out);
    if (p->parsed()) return cmd_predict(pr, out);
    if (a->parsed()) return cmd_ann_build(ab, out);
    if (b->parsed()) return cmd_bin_sim(bs, out, err);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return static_cast<int>(ex.code());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return static_cast<int>(ExitCode::kNumeric);
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return 1;
  }
  return static_cast<int>(ExitCode::kUsage);
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run(std::move(args), std::cout, std::cerr);
}

}  // namespace ranksmith::cli

#endif  // RANKSMITH_CLI_HPP_
