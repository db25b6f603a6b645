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

#include <cmath>
#include <numbers>

#include <catch_amalgamated.hpp>

#include "ranksmith/relevance.hpp"

using namespace ranksmith;
using Catch::Approx;

namespace {
RelevanceSpec spec_of(RelevanceKind kind, double gamma = 10.0) {
  RelevanceSpec s;
  s.kind = kind;
  s.gamma = gamma;
  return s;
}
}  // namespace

TEST_CASE("relevance examples", "[relevance]") {
  const RelevanceSpec clipped;
  CHECK(clipped.kind == RelevanceKind::kClippedLinear);
  CHECK(clipped.gamma == 10.0);
  CHECK(relevance(clipped, 1950, 1950) == 10.0);
  CHECK(relevance(clipped, 1950, 1960) == 0.0);
  CHECK(relevance(clipped, 1950, 1925) == 0.0);
  CHECK(relevance(clipped, 1950, 1947) == 7.0);
  CHECK(relevance(spec_of(RelevanceKind::kInverseLinear), 1970, 1970) == 1.0);
  CHECK(relevance(spec_of(RelevanceKind::kInverseLinear), 1970, 1973) == 0.25);
  CHECK(relevance(spec_of(RelevanceKind::kExpInverse), 1970, 1970) ==
        Approx(std::numbers::e).margin(1e-15));
  CHECK(relevance(spec_of(RelevanceKind::kExpInverse), 1970, 1970) ==
        Approx(2.718282).margin(1e-6));
}

TEST_CASE("relevance properties over all gaps", "[relevance][property]") {
  for (const auto kind : {RelevanceKind::kClippedLinear, RelevanceKind::kInverseLinear,
                          RelevanceKind::kExpInverse}) {
    for (const double gamma : {1.0, 2.5, 10.0, 40.0}) {
      const RelevanceSpec s = spec_of(kind, gamma);
      for (Year a = 1930; a <= 1999; a += 3) {
        double prev = INFINITY;
        for (Year gap = 0; gap <= 69; ++gap) {
          const double r = relevance(s, a, a + gap);
          CHECK(r >= 0.0);
          CHECK(r <= prev);
          CHECK(r == relevance(s, a + gap, a));
          CHECK(r == relevance(s, a, a - gap));
          if (kind == RelevanceKind::kClippedLinear) CHECK((r > 0.0) == (gap < gamma));
          if (kind == RelevanceKind::kExpInverse) {
            CHECK(r > 1.0);
            CHECK(r <= std::numbers::e);
          }
          prev = r;
        }
      }
    }
  }
}

TEST_CASE("relevance spec validation and parsing", "[relevance]") {
  CHECK_THROWS_AS(spec_of(RelevanceKind::kClippedLinear, 0.0).validate(), UsageError);
  CHECK_THROWS_AS(spec_of(RelevanceKind::kClippedLinear, -3.0).validate(), UsageError);
  CHECK_NOTHROW(spec_of(RelevanceKind::kInverseLinear, 0.0).validate());
  CHECK(parse_relevance_kind("clipped") == RelevanceKind::kClippedLinear);
  CHECK(parse_relevance_kind("inverse-linear") == RelevanceKind::kInverseLinear);
  CHECK(parse_relevance_kind("exp") == RelevanceKind::kExpInverse);
  CHECK_THROWS_AS(parse_relevance_kind("cubic"), UsageError);
  for (const auto k : {RelevanceKind::kClippedLinear, RelevanceKind::kInverseLinear,
                       RelevanceKind::kExpInverse}) {
    CHECK(parse_relevance_kind(relevance_kind_name(k)) == k);
  }
}
