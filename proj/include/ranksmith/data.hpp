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

// Year-labelled items: synthetic generation, feature files and splits.
//
// Feature file (binary, little-endian):
//   "RSFT1" | u32 dim | u32 count | count x (i64 id | i32 year | dim x f64)
// CSV import/export uses the header "id,year,f0,...,f{dim-1}".

#ifndef RANKSMITH_DATA_HPP_
#define RANKSMITH_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ranksmith/binary_io.hpp"
#include "ranksmith/core.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/metrics.hpp"

namespace ranksmith {

/// Inclusive range of admissible years.
struct YearSpan {
  Year first = 1930;
  Year last = 1999;

  std::size_t size() const {
    return static_cast<std::size_t>(last - first + 1);
  }
  bool contains(Year y) const { return y >= first && y <= last; }
  void validate() const {
    if (last < first) {
      throw UsageError("year span " + std::to_string(first) + ":" +
                       std::to_string(last) + " is empty");
    }
  }
};

struct LabeledItem {
  ItemId id = 0;
  Year year = 0;
  Vector features;
  /// Set after encoding; empty otherwise.
  Vector embedding;

  friend bool operator==(const LabeledItem&, const LabeledItem&) = default;
};

using Dataset = std::vector<LabeledItem>;

inline Matrix feature_matrix(const Dataset& items) {
  if (items.empty()) return {};
  Matrix m(items.size(), items.front().features.size());
  for (std::size_t r = 0; r < items.size(); ++r) {
    if (items[r].features.size() != m.cols()) {
      throw UsageError("items have mixed feature dimensions");
    }
    std::copy(items[r].features.begin(), items[r].features.end(),
              m.row(r).begin());
  }
  return m;
}

inline std::vector<Year> years_of(const Dataset& items) {
  std::vector<Year> ys;
  ys.reserve(items.size());
  for (const auto& it : items) ys.push_back(it.year);
  return ys;
}

inline std::vector<ItemId> ids_of(const Dataset& items) {
  std::vector<ItemId> ids;
  ids.reserve(items.size());
  for (const auto& it : items) ids.push_back(it.id);
  return ids;
}

/// Checks unique ids, a common finite feature dimension and that every year
/// lies in `span`. Offending ids are listed in the message.
inline void validate_items(const Dataset& items, const YearSpan& span) {
  std::unordered_set<ItemId> seen;
  std::vector<std::string> out_of_span;
  const std::size_t dim = items.empty() ? 0 : items.front().features.size();
  for (const auto& it : items) {
    if (!seen.insert(it.id).second) {
      throw ValidationError("duplicate item id " + std::to_string(it.id));
    }
    if (it.features.size() != dim) {
      throw ValidationError("item " + std::to_string(it.id) + " has " +
                            std::to_string(it.features.size()) +
                            " features, expected " + std::to_string(dim));
    }
    for (const double f : it.features) {
      if (!std::isfinite(f)) {
        throw ValidationError("item " + std::to_string(it.id) +
                              " has a non-finite feature");
      }
    }
    if (!span.contains(it.year)) {
      out_of_span.push_back("id " + std::to_string(it.id) + " (year " +
                            std::to_string(it.year) + ")");
    }
  }
  if (!out_of_span.empty()) {
    std::string msg = "years outside " + std::to_string(span.first) + "-" +
                      std::to_string(span.last) + ":";
    for (const auto& s : out_of_span) msg += " " + s;
    throw ValidationError(msg);
  }
}

// ---------------------------------------------------------------------------
// Synthetic generator

/// Items lie on a 3-D helix indexed by year, lifted into `dim` dimensions by a
/// fixed random orthogonal map, plus year-independent clustered nuisance
/// directions and isotropic Gaussian noise.
struct SyntheticSpec {
  std::size_t n_items = 2000;
  YearSpan span;
  std::size_t dim = 32;
  double noise_sigma = 0.1;
  std::size_t distractor_dims = 8;
  std::size_t distractor_clusters = 6;
  /// Norm of the nuisance cluster centres; the helix has radius 1.
  double distractor_scale = 4.0;
  double distractor_spread = 2.0;
  /// Helix angle swept over the span, radians.
  double helix_sweep = 1.5 * std::numbers::pi;
  /// Half-height of the helix axis.
  double helix_pitch = 1.0;
  std::uint64_t seed = 0;
  /// Seeds the orthogonal lift and the cluster centres, so datasets drawn
  /// with different `seed`s share one geometry.
  std::uint64_t manifold_seed = 0x5eedULL;

  void validate() const {
    span.validate();
    if (n_items < span.size()) {
      throw UsageError("n_items (" + std::to_string(n_items) +
                       ") must be at least the span size (" +
                       std::to_string(span.size()) + ")");
    }
    if (!(noise_sigma >= 0.0)) throw UsageError("noise_sigma must be >= 0");
    if (dim < 3 + distractor_dims) {
      throw UsageError("dim must be at least 3 + distractor_dims");
    }
    if (distractor_dims > 0 && distractor_clusters == 0) {
      throw UsageError("distractor_clusters must be positive");
    }
  }
};

namespace detail {

// dim x k matrix with orthonormal columns (modified Gram-Schmidt on a
// Gaussian draw).
inline Matrix random_orthonormal_columns(std::size_t dim, std::size_t k,
                                         std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix q(dim, k);
  for (std::size_t c = 0; c < k; ++c) {
    for (;;) {
      std::vector<double> v(dim);
      for (auto& x : v) x = normal(rng);
      for (std::size_t p = 0; p < c; ++p) {
        double proj = 0.0;
        for (std::size_t r = 0; r < dim; ++r) proj += q(r, p) * v[r];
        for (std::size_t r = 0; r < dim; ++r) v[r] -= proj * q(r, p);
      }
      const double n = norm(v);
      if (n < 1e-8) continue;
      for (std::size_t r = 0; r < dim; ++r) q(r, c) = v[r] / n;
      break;
    }
  }
  return q;
}

}  // namespace detail

inline Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t latent_dim = 3 + spec.distractor_dims;

  std::mt19937_64 geometry_rng(spec.manifold_seed);
  const Matrix lift =
      detail::random_orthonormal_columns(spec.dim, latent_dim, geometry_rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centres(spec.distractor_clusters, spec.distractor_dims);
  for (std::size_t c = 0; c < centres.rows(); ++c) {
    auto row = centres.row(c);
    for (auto& x : row) x = normal(geometry_rng);
    const double n = norm(row);
    for (auto& x : row) x *= spec.distractor_scale / n;
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<Year> year_dist(spec.span.first,
                                                spec.span.last);
  std::uniform_int_distribution<std::size_t> cluster_dist(
      0, spec.distractor_clusters == 0 ? 0 : spec.distractor_clusters - 1);
  const double denom =
      spec.span.size() > 1 ? static_cast<double>(spec.span.size() - 1) : 1.0;

  Dataset items(spec.n_items);
  std::vector<double> latent(latent_dim);
  for (std::size_t n = 0; n < spec.n_items; ++n) {
    LabeledItem& item = items[n];
    item.id = static_cast<ItemId>(n);
    item.year = year_dist(rng);
    const double u = (item.year - spec.span.first) / denom;
    const double angle = spec.helix_sweep * u;
    latent[0] = std::cos(angle);
    latent[1] = std::sin(angle);
    latent[2] = spec.helix_pitch * (2.0 * u - 1.0);
    if (spec.distractor_dims > 0) {
      const auto centre = centres.row(cluster_dist(rng));
      for (std::size_t k = 0; k < spec.distractor_dims; ++k) {
        latent[3 + k] = centre[k] + spec.distractor_spread * normal(rng);
      }
    }
    item.features.assign(spec.dim, 0.0);
    for (std::size_t r = 0; r < spec.dim; ++r) {
      double v = 0.0;
      for (std::size_t c = 0; c < latent_dim; ++c) v += lift(r, c) * latent[c];
      item.features[r] = v;
    }
    if (spec.noise_sigma > 0.0) {
      for (auto& f : item.features) f += spec.noise_sigma * normal(rng);
    }
  }
  return items;
}

// ---------------------------------------------------------------------------
// Feature files

inline constexpr std::string_view kFeatureMagic = "RSFT1";

inline void save_features(const Dataset& items, const std::string& path) {
  const std::size_t dim = items.empty() ? 0 : items.front().features.size();
  io::Writer w(path);
  w.magic(kFeatureMagic);
  w.u32(static_cast<std::uint32_t>(dim));
  w.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& it : items) {
    if (it.features.size() != dim) {
      throw UsageError("save_features: mixed feature dimensions");
    }
    w.i64(it.id);
    w.i32(it.year);
    for (const double f : it.features) w.f64(f);
  }
  w.close();
}

inline void save_features_csv(const Dataset& items, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::size_t dim = items.empty() ? 0 : items.front().features.size();
  out << "id,year";
  for (std::size_t k = 0; k < dim; ++k) out << ",f" << k;
  out << '\n';
  char buf[64];
  for (const auto& it : items) {
    out << it.id << ',' << it.year;
    for (const double f : it.features) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), f);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace detail {

inline Dataset load_features_binary(const std::string& path) {
  io::Reader r(path);
  r.expect_magic(kFeatureMagic);
  const std::uint32_t dim = r.u32("dimension");
  const std::uint32_t count = r.u32("item count");
  if (count > 0 && dim == 0) r.fail("zero feature dimension");
  Dataset items;
  items.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    LabeledItem it;
    it.id = r.i64("item id");
    it.year = r.i32("year");
    it.features.resize(dim);
    for (auto& f : it.features) f = r.f64("feature");
    items.push_back(std::move(it));
  }
  r.expect_end();
  return items;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view field, const std::string& where) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError(where + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

inline Dataset load_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path + ":1: missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "id" || header[1] != "year") {
    throw ParseError(path + ":1: header must start with 'id,year'");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k + 2] != "f" + std::to_string(k)) {
      throw ParseError(path + ":1: expected column 'f" + std::to_string(k) +
                       "'");
    }
  }
  Dataset items;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto fields = split_commas(line);
    if (fields.size() != dim + 2) {
      throw ParseError(where + ": expected " + std::to_string(dim + 2) +
                       " fields, got " + std::to_string(fields.size()));
    }
    LabeledItem it;
    it.id = parse_field<ItemId>(fields[0], where);
    it.year = parse_field<Year>(fields[1], where);
    it.features.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      it.features[k] = parse_field<double>(fields[k + 2], where);
    }
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace detail

/// Reads a binary feature file, or a CSV file when the magic is absent, and
/// validates the items against `span`.
inline Dataset load_features(const std::string& path,
                             const YearSpan& span = {}) {
  std::string head(kFeatureMagic.size(), '\0');
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open '" + path + "' for reading");
    probe.read(head.data(), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(probe.gcount()));
  }
  Dataset items = head == kFeatureMagic ? detail::load_features_binary(path)
                                        : detail::load_features_csv(path);
  validate_items(items, span);
  return items;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitConfig {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  /// Balanced mode draws an equal number of items per year of `span` into
  /// validation and test; every remaining item goes to train.
  bool balanced = false;
  std::size_t val_per_year = 0;
  std::size_t test_per_year = 0;
  YearSpan span;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

inline Split split(const Dataset& items, const SplitConfig& cfg) {
  for (const double f : {cfg.train, cfg.val, cfg.test}) {
    if (!(f >= 0.0)) throw UsageError("split fractions must be >= 0");
  }
  if (cfg.train + cfg.val + cfg.test > 1.0 + 1e-12) {
    throw UsageError("split fractions sum to more than 1");
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> slot(items.size(), -1);  // 0 train, 1 val, 2 test

  if (cfg.balanced) {
    std::map<Year, std::vector<std::size_t>> by_year;
    for (std::size_t i = 0; i < items.size(); ++i) {
      by_year[items[i].year].push_back(i);
    }
    const std::size_t need = cfg.val_per_year + cfg.test_per_year;
    for (Year y = cfg.span.first; y <= cfg.span.last; ++y) {
      auto& pool = by_year[y];
      if (pool.size() < need) {
        throw ValidationError("balanced split infeasible: year " +
                              std::to_string(y) + " has " +
                              std::to_string(pool.size()) + " items, needs " +
                              std::to_string(need));
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t k = 0; k < pool.size(); ++k) {
        slot[pool[k]] = k < cfg.test_per_year ? 2 : (k < need ? 1 : 0);
      }
    }
    for (auto& s : slot) {
      if (s < 0 && cfg.train > 0.0) s = 0;
    }
  } else {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto count = [&](double f) {
      return static_cast<std::size_t>(
          std::floor(f * static_cast<double>(items.size()) + 1e-9));
    };
    const std::size_t n_test = count(cfg.test);
    const std::size_t n_val = count(cfg.val);
    const std::size_t n_train =
        std::min(items.size() - n_test - n_val, count(cfg.train));
    std::size_t k = 0;
    for (std::size_t c = 0; c < n_test; ++c) slot[order[k++]] = 2;
    for (std::size_t c = 0; c < n_val; ++c) slot[order[k++]] = 1;
    for (std::size_t c = 0; c < n_train; ++c) slot[order[k++]] = 0;
  }

  Split out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    switch (slot[i]) {
      case 0: out.train.push_back(items[i]); break;
      case 1: out.val.push_back(items[i]); break;
      case 2: out.test.push_back(items[i]); break;
      default: break;
    }
  }
  return out;
}

}  // namespace ranksmith

#endif  // RANKSMITH_DATA_HPP_
