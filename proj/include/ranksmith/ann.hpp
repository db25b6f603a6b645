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

// Random projection forest for approximate cosine nearest neighbours.
//
// Each tree splits unit vectors by the side of the bisecting hyperplane of
// two random members until a node holds at most leaf_capacity items. A
// query walks all trees best-first, ordered by the smallest margin seen on
// the path, until search_budget candidates have been gathered; the
// candidates are then rescored exactly.
//
// Index file (little-endian):
//   "RSAN1" | u32 tree_count | u32 leaf_capacity | u32 search_budget |
//   u64 seed | u32 dim | u32 n | n x (i64 id | i32 year | dim x f64) |
//   tree_count x (u32 node_count | nodes)
//   node: u8 is_leaf, then u32 count | count x u32 item   (leaf)
//                      or u32 left | u32 right | dim x f64 (split)

#ifndef RANKSMITH_ANN_HPP_
#define RANKSMITH_ANN_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "ranksmith/binary_io.hpp"
#include "ranksmith/core.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/knn.hpp"
#include "ranksmith/parallel.hpp"

namespace ranksmith {

struct AnnParams {
  std::uint32_t tree_count = 16;
  std::uint32_t leaf_capacity = 32;
  /// Candidates gathered per query; 0 selects max(2048, 64 k).
  std::uint32_t search_budget = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline std::size_t effective_budget(std::uint32_t budget, std::size_t k) {
  return budget > 0 ? budget : std::max<std::size_t>(2048, 64 * k);
}

class AnnIndex {
 public:
  struct Node {
    bool leaf = true;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::vector<double> normal;
    std::vector<std::uint32_t> items;
  };
  using Tree = std::vector<Node>;  // node 0 is the root

  AnnIndex() = default;

  static AnnIndex build(SupportSet support, const AnnParams& params) {
    if (params.tree_count == 0) throw UsageError("tree_count must be >= 1");
    if (params.leaf_capacity == 0) {
      throw UsageError("leaf_capacity must be >= 1");
    }
    AnnIndex index;
    index.params_ = params;
    index.support_ = std::move(support);
    index.trees_.resize(params.tree_count);
    parallel_for(params.tree_count, params.threads, [&](std::size_t t) {
      std::mt19937_64 rng(params.seed + 0x9E3779B97F4A7C15ULL * (t + 1));
      index.trees_[t] = index.grow_tree(rng);
    });
    return index;
  }

  const SupportSet& support() const noexcept { return support_; }
  const AnnParams& params() const noexcept { return params_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  /// Candidate support positions for `query`, deduplicated, unsorted.
  std::vector<std::size_t> candidates(std::span<const double> query,
                                      std::size_t budget) const {
    const std::size_t n = support_.size();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> out;
    using Entry = std::tuple<double, std::uint32_t, std::uint32_t>;
    std::priority_queue<Entry> frontier;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (std::uint32_t t = 0; t < trees_.size(); ++t) frontier.emplace(kInf, t, 0);
    while (!frontier.empty() && out.size() < budget) {
      const auto [priority, t, node_id] = frontier.top();
      frontier.pop();
      const Node& node = trees_[t][node_id];
      if (node.leaf) {
        for (const std::uint32_t item : node.items) {
          if (!seen[item]) {
            seen[item] = 1;
            out.push_back(item);
          }
        }
        continue;
      }
      const double margin = dot(query, node.normal);
      frontier.emplace(std::min(priority, margin), t, node.right);
      frontier.emplace(std::min(priority, -margin), t, node.left);
    }
    return out;
  }

  /// Top-k support items by exact cosine similarity among the candidates.
  std::vector<Neighbor> query(std::span<const double> q, std::size_t k) const {
    if (k == 0) throw UsageError("k must be at least 1");
    if (support_.size() == 0) throw UsageError("ANN index is empty");
    if (q.size() != support_.dim()) {
      throw UsageError("query has dimension " + std::to_string(q.size()) +
                       ", index has " + std::to_string(support_.dim()));
    }
    const double qn = norm(q);
    if (!(qn > 0.0)) throw DomainError("query embedding has zero norm");
    const auto cand = candidates(q, effective_budget(params_.search_budget, k));
    std::vector<Neighbor> scored;
    scored.reserve(cand.size());
    for (const std::size_t i : cand) {
      scored.push_back({i, support_.id(i),
                        std::clamp(dot(q, support_.unit(i)) / qn, -1.0, 1.0)});
    }
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(),
                      scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), neighbor_before);
    scored.resize(k);
    return scored;
  }

  NeighborSearch search() const {
    return [this](std::span<const double> q, std::size_t k) {
      return query(q, k);
    };
  }

  void set_search_budget(std::uint32_t budget) {
    params_.search_budget = budget;
  }

  void save(const std::string& path) const {
    io::Writer w(path);
    w.magic("RSAN1");
    w.u32(params_.tree_count);
    w.u32(params_.leaf_capacity);
    w.u32(params_.search_budget);
    w.u64(params_.seed);
    const std::size_t dim = support_.dim();
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(support_.size()));
    for (std::size_t i = 0; i < support_.size(); ++i) {
      w.i64(support_.id(i));
      w.i32(support_.year(i));
      for (const double v : support_.embeddings().row(i)) w.f64(v);
    }
    for (const Tree& tree : trees_) {
      w.u32(static_cast<std::uint32_t>(tree.size()));
      for (const Node& node : tree) {
        w.u8(node.leaf ? 1 : 0);
        if (node.leaf) {
          w.u32(static_cast<std::uint32_t>(node.items.size()));
          for (const auto item : node.items) w.u32(item);
        } else {
          w.u32(node.left);
          w.u32(node.right);
          for (const double v : node.normal) w.f64(v);
        }
      }
    }
    w.close();
  }

  static AnnIndex load(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("RSAN1");
    AnnIndex index;
    index.params_.tree_count = r.u32("tree count");
    index.params_.leaf_capacity = r.u32("leaf capacity");
    index.params_.search_budget = r.u32("search budget");
    index.params_.seed = r.u64("seed");
    const std::uint32_t dim = r.u32("dimension");
    const std::uint32_t n = r.u32("item count");
    if (index.params_.tree_count == 0) r.fail("zero tree count");
    if (n == 0 || dim == 0) r.fail("empty index");
    std::vector<ItemId> ids(n);
    std::vector<Year> years(n);
    Matrix emb(n, dim);
    for (std::uint32_t i = 0; i < n; ++i) {
      ids[i] = r.i64("item id");
      years[i] = r.i32("year");
      for (auto& v : emb.row(i)) v = r.f64("embedding");
    }
    index.support_ = SupportSet(std::move(ids), std::move(years), std::move(emb));
    index.trees_.resize(index.params_.tree_count);
    for (Tree& tree : index.trees_) {
      const std::uint32_t count = r.u32("node count");
      if (count == 0) r.fail("empty tree");
      tree.resize(count);
      for (Node& node : tree) {
        node.leaf = r.u8("node kind") != 0;
        if (node.leaf) {
          node.items.resize(r.u32("leaf size"));
          for (auto& item : node.items) {
            item = r.u32("leaf item");
            if (item >= n) r.fail("leaf item out of range");
          }
        } else {
          node.left = r.u32("left child");
          node.right = r.u32("right child");
          if (node.left >= count || node.right >= count) {
            r.fail("child index out of range");
          }
          node.normal.resize(dim);
          for (auto& v : node.normal) v = r.f64("split normal");
        }
      }
    }
    r.expect_end();
    return index;
  }

 private:
  Tree grow_tree(std::mt19937_64& rng) const {
    Tree tree;
    std::vector<std::uint32_t> all(support_.size());
    std::iota(all.begin(), all.end(), 0u);
    tree.emplace_back();
    // Explicit stack of (node id, members).
    std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> work;
    work.emplace_back(0, std::move(all));
    while (!work.empty()) {
      auto [node_id, members] = std::move(work.back());
      work.pop_back();
      Node node;
      std::vector<std::uint32_t> left;
      std::vector<std::uint32_t> right;
      if (members.size() > params_.leaf_capacity &&
          try_split(members, rng, node.normal, left, right)) {
        node.leaf = false;
        node.left = static_cast<std::uint32_t>(tree.size());
        node.right = node.left + 1;
        tree.emplace_back();
        tree.emplace_back();
        work.emplace_back(node.left, std::move(left));
        work.emplace_back(node.right, std::move(right));
      } else {
        node.items = std::move(members);
      }
      tree[node_id] = std::move(node);
    }
    return tree;
  }

  bool try_split(const std::vector<std::uint32_t>& members,
                 std::mt19937_64& rng, std::vector<double>& normal,
                 std::vector<std::uint32_t>& left,
                 std::vector<std::uint32_t>& right) const {
    constexpr int kAttempts = 8;
    const std::size_t dim = support_.dim();
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const std::size_t a = members[pick(rng)];
      const std::size_t b = members[pick(rng)];
      normal.assign(dim, 0.0);
      const auto ua = support_.unit(a);
      const auto ub = support_.unit(b);
      for (std::size_t c = 0; c < dim; ++c) normal[c] = ua[c] - ub[c];
      if (norm(normal) < 1e-12) continue;
      left.clear();
      right.clear();
      for (const std::uint32_t m : members) {
        (dot(support_.unit(m), normal) > 0.0 ? right : left).push_back(m);
      }
      if (!left.empty() && !right.empty()) return true;
    }
    left.clear();
    right.clear();
    normal.clear();
    return false;
  }

  AnnParams params_;
  SupportSet support_;
  std::vector<Tree> trees_;
};

inline AnnIndex build_ann(SupportSet support, std::uint32_t tree_count,
                          std::uint32_t leaf_capacity, std::uint64_t seed,
                          std::uint32_t search_budget = 0,
                          unsigned threads = 1) {
  AnnParams p;
  p.tree_count = tree_count;
  p.leaf_capacity = leaf_capacity;
  p.seed = seed;
  p.search_budget = search_budget;
  p.threads = threads;
  return AnnIndex::build(std::move(support), p);
}

inline std::vector<Neighbor> ann_query(const AnnIndex& index,
                                       std::span<const double> query,
                                       std::size_t k) {
  return index.query(query, k);
}

}  // namespace ranksmith

#endif  // RANKSMITH_ANN_HPP_
