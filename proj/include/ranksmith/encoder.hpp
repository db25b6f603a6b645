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

// Trainable maps from items to embeddings.
//
// Model file (little-endian):
//   "RSMK1" | u32 mode | u32 d_in | u32 d_out | u32 item_count |
//   u8 normalize | item_count x i64 id | parameter block (f64)
// The parameter block is the FreeTable rows (item_count x d_out) or the
// Affine weights (d_in x d_out, row-major) followed by the bias (d_out).

#ifndef RANKSMITH_ENCODER_HPP_
#define RANKSMITH_ENCODER_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ranksmith/binary_io.hpp"
#include "ranksmith/core.hpp"
#include "ranksmith/data.hpp"
#include "ranksmith/error.hpp"

namespace ranksmith {

enum class EncoderMode : std::uint32_t { kFreeTable = 0, kAffine = 1 };

class Encoder {
 public:
  Encoder() = default;

  /// One free embedding row per id, drawn uniform in [-0.1, 0.1].
  static Encoder free_table(std::span<const ItemId> ids, std::size_t d_out,
                            std::uint64_t seed) {
    check_output_dim(d_out);
    Encoder e;
    e.mode_ = EncoderMode::kFreeTable;
    e.d_out_ = d_out;
    e.ids_.assign(ids.begin(), ids.end());
    for (std::size_t r = 0; r < e.ids_.size(); ++r) {
      if (!e.row_of_.emplace(e.ids_[r], r).second) {
        throw UsageError("free table: duplicate id " + std::to_string(e.ids_[r]));
      }
    }
    e.params_.resize(e.ids_.size() * d_out);
    e.init_uniform(seed, e.params_);
    return e;
  }

  /// h = x W + b with W uniform in [-0.1, 0.1] and b = 0.
  static Encoder affine(std::size_t d_in, std::size_t d_out,
                        std::uint64_t seed) {
    check_output_dim(d_out);
    if (d_in == 0) throw UsageError("affine encoder needs d_in >= 1");
    Encoder e;
    e.mode_ = EncoderMode::kAffine;
    e.d_in_ = d_in;
    e.d_out_ = d_out;
    e.params_.assign(d_in * d_out + d_out, 0.0);
    e.init_uniform(seed, std::span(e.params_).first(d_in * d_out));
    return e;
  }

  EncoderMode mode() const noexcept { return mode_; }
  std::size_t d_in() const noexcept { return d_in_; }
  std::size_t d_out() const noexcept { return d_out_; }
  bool normalize() const noexcept { return normalize_; }
  /// Scale outputs to unit length. Cosine similarity is unchanged; only the
  /// gradient path differs.
  void set_normalize(bool on) noexcept { normalize_ = on; }
  const std::vector<ItemId>& ids() const noexcept { return ids_; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  /// Affine weight entry W(i, o).
  double& weight(std::size_t i, std::size_t o) { return params_[i * d_out_ + o]; }
  double& bias(std::size_t o) { return params_[d_in_ * d_out_ + o]; }

  Matrix encode(const Dataset& batch) const {
    Matrix h = encode_raw(batch);
    if (normalize_) h = normalized_rows(h, nullptr);
    return h;
  }

  /// d loss / d parameters given d loss / d encode(batch).
  std::vector<double> chain_gradient(const Matrix& d_embedding,
                                     const Dataset& batch) const {
    if (d_embedding.rows() != batch.size() || d_embedding.cols() != d_out_) {
      throw UsageError("chain_gradient: gradient shape does not match batch");
    }
    Matrix g = d_embedding;
    if (normalize_) {
      // d/dh of h/|h| is (I - u u^T) / |h|.
      std::vector<double> norms;
      const Matrix unit = normalized_rows(encode_raw(batch), &norms);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        const double along = dot(gr, unit.row(r));
        for (std::size_t c = 0; c < d_out_; ++c) {
          gr[c] = (gr[c] - along * unit(r, c)) / norms[r];
        }
      }
    }
    std::vector<double> grad(params_.size(), 0.0);
    if (mode_ == EncoderMode::kFreeTable) {
      for (std::size_t r = 0; r < batch.size(); ++r) {
        const std::size_t row = row_index(batch[r].id);
        for (std::size_t c = 0; c < d_out_; ++c) {
          grad[row * d_out_ + c] += g(r, c);
        }
      }
    } else {
      for (std::size_t r = 0; r < batch.size(); ++r) {
        check_features(batch[r]);
        const auto& x = batch[r].features;
        const auto gr = g.row(r);
        for (std::size_t i = 0; i < d_in_; ++i) {
          if (x[i] == 0.0) continue;
          double* w = grad.data() + i * d_out_;
          for (std::size_t c = 0; c < d_out_; ++c) w[c] += x[i] * gr[c];
        }
        double* b = grad.data() + d_in_ * d_out_;
        for (std::size_t c = 0; c < d_out_; ++c) b[c] += gr[c];
      }
    }
    return grad;
  }

  void save(const std::string& path) const {
    io::Writer w(path);
    w.magic("RSMK1");
    w.u32(static_cast<std::uint32_t>(mode_));
    w.u32(static_cast<std::uint32_t>(d_in_));
    w.u32(static_cast<std::uint32_t>(d_out_));
    w.u32(static_cast<std::uint32_t>(ids_.size()));
    w.u8(normalize_ ? 1 : 0);
    for (const ItemId id : ids_) w.i64(id);
    for (const double p : params_) w.f64(p);
    w.close();
  }

  static Encoder load(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("RSMK1");
    Encoder e;
    const std::uint32_t mode = r.u32("mode");
    if (mode > 1) r.fail("unknown encoder mode " + std::to_string(mode));
    e.mode_ = static_cast<EncoderMode>(mode);
    e.d_in_ = r.u32("d_in");
    e.d_out_ = r.u32("d_out");
    const std::uint32_t count = r.u32("item count");
    e.normalize_ = r.u8("normalize flag") != 0;
    if (e.d_out_ < 2) r.fail("d_out must be at least 2");
    if (e.mode_ == EncoderMode::kAffine && (e.d_in_ == 0 || count != 0)) {
      r.fail("inconsistent affine header");
    }
    for (std::uint32_t k = 0; k < count; ++k) {
      const ItemId id = r.i64("item id");
      if (!e.row_of_.emplace(id, e.ids_.size()).second) r.fail("duplicate id");
      e.ids_.push_back(id);
    }
    const std::size_t n_params = e.mode_ == EncoderMode::kFreeTable
                                     ? count * e.d_out_
                                     : e.d_in_ * e.d_out_ + e.d_out_;
    e.params_.resize(n_params);
    for (auto& p : e.params_) {
      p = r.f64("parameter");
      if (!std::isfinite(p)) r.fail("non-finite parameter");
    }
    r.expect_end();
    return e;
  }

  bool all_finite() const {
    for (const double p : params_) {
      if (!std::isfinite(p)) return false;
    }
    return true;
  }

  friend bool operator==(const Encoder& a, const Encoder& b) {
    return a.mode_ == b.mode_ && a.d_in_ == b.d_in_ && a.d_out_ == b.d_out_ &&
           a.normalize_ == b.normalize_ && a.ids_ == b.ids_ &&
           a.params_ == b.params_;
  }

 private:
  static void check_output_dim(std::size_t d_out) {
    if (d_out < 2) throw UsageError("embedding dimension must be at least 2");
  }

  void init_uniform(std::uint64_t seed, std::span<double> out) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (auto& p : out) p = u(rng);
  }

  std::size_t row_index(ItemId id) const {
    const auto it = row_of_.find(id);
    if (it == row_of_.end()) {
      throw UsageError("free table has no row for item " + std::to_string(id));
    }
    return it->second;
  }

  void check_features(const LabeledItem& item) const {
    if (item.features.size() != d_in_) {
      throw UsageError("item " + std::to_string(item.id) + " has " +
                       std::to_string(item.features.size()) +
                       " features, encoder expects " + std::to_string(d_in_));
    }
  }

  Matrix encode_raw(const Dataset& batch) const {
    Matrix h(batch.size(), d_out_);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      auto out = h.row(r);
      if (mode_ == EncoderMode::kFreeTable) {
        const std::size_t row = row_index(batch[r].id);
        std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(row * d_out_),
                    d_out_, out.begin());
      } else {
        check_features(batch[r]);
        const auto& x = batch[r].features;
        std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(d_in_ * d_out_),
                    d_out_, out.begin());
        for (std::size_t i = 0; i < d_in_; ++i) {
          if (x[i] == 0.0) continue;
          const double* w = params_.data() + i * d_out_;
          for (std::size_t c = 0; c < d_out_; ++c) out[c] += x[i] * w[c];
        }
      }
    }
    return h;
  }

  EncoderMode mode_ = EncoderMode::kAffine;
  std::size_t d_in_ = 0;
  std::size_t d_out_ = 0;
  bool normalize_ = false;
  std::vector<ItemId> ids_;
  std::unordered_map<ItemId, std::size_t> row_of_;
  std::vector<double> params_;
};

inline Matrix encode(const Encoder& enc, const Dataset& items) {
  return enc.encode(items);
}

inline std::vector<double> chain_gradient(const Matrix& d_embedding,
                                          const Encoder& enc,
                                          const Dataset& batch) {
  return enc.chain_gradient(d_embedding, batch);
}

}  // namespace ranksmith

#endif  // RANKSMITH_ENCODER_HPP_
