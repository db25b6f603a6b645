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

#ifndef RANKSMITH_RELEVANCE_HPP_
#define RANKSMITH_RELEVANCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>

#include "ranksmith/core.hpp"
#include "ranksmith/error.hpp"

namespace ranksmith {

enum class RelevanceKind {
  kClippedLinear,  // max(0, gamma - |dy|)
  kInverseLinear,  // 1 / (1 + |dy|)
  kExpInverse,     // exp(1 / (1 + |dy|))
};

/// Graded relevance of a candidate given its year gap to the query.
struct RelevanceSpec {
  RelevanceKind kind = RelevanceKind::kClippedLinear;
  double gamma = 10.0;

  void validate() const {
    if (kind == RelevanceKind::kClippedLinear &&
        (!(gamma > 0.0) || !std::isfinite(gamma))) {
      throw UsageError("relevance: gamma must be positive");
    }
  }
};

inline double relevance(const RelevanceSpec& spec, Year y_query, Year y_item) {
  const double gap = std::abs(static_cast<double>(y_query) - y_item);
  switch (spec.kind) {
    case RelevanceKind::kClippedLinear:
      return std::max(0.0, spec.gamma - gap);
    case RelevanceKind::kInverseLinear:
      return 1.0 / (1.0 + gap);
    case RelevanceKind::kExpInverse:
      return std::exp(1.0 / (1.0 + gap));
  }
  return 0.0;
}

inline RelevanceKind parse_relevance_kind(std::string_view name) {
  if (name == "clipped" || name == "clipped-linear") {
    return RelevanceKind::kClippedLinear;
  }
  if (name == "inverse" || name == "inverse-linear") {
    return RelevanceKind::kInverseLinear;
  }
  if (name == "exp" || name == "exp-inverse") return RelevanceKind::kExpInverse;
  throw UsageError("unknown relevance kind '" + std::string(name) +
                   "' (expected clipped, inverse or exp)");
}

inline std::string_view relevance_kind_name(RelevanceKind kind) {
  switch (kind) {
    case RelevanceKind::kClippedLinear:
      return "clipped";
    case RelevanceKind::kInverseLinear:
      return "inverse";
    case RelevanceKind::kExpInverse:
      return "exp";
  }
  return "?";
}

}  // namespace ranksmith

#endif  // RANKSMITH_RELEVANCE_HPP_
