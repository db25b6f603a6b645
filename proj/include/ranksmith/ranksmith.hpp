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

#ifndef RANKSMITH_RANKSMITH_HPP_
#define RANKSMITH_RANKSMITH_HPP_

#include "ranksmith/analysis.hpp"
#include "ranksmith/ann.hpp"
#include "ranksmith/core.hpp"
#include "ranksmith/data.hpp"
#include "ranksmith/encoder.hpp"
#include "ranksmith/error.hpp"
#include "ranksmith/knn.hpp"
#include "ranksmith/losses.hpp"
#include "ranksmith/metrics.hpp"
#include "ranksmith/relevance.hpp"
#include "ranksmith/train.hpp"

#endif  // RANKSMITH_RANKSMITH_HPP_
