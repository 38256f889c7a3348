// Copyright 2026 the tabver authors
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

#pragma once

#include <span>
#include <string>
#include <vector>

#include "tabver/metrics.h"
#include "tabver/model.h"
#include "tabver/trainer.h"

namespace tabver {

struct AblationVariant {
  std::string name;
  bool use_attention = true;
  HeadKind head = HeadKind::joint;
};

/// full, no_attention, no_joint_objective, neither; in that order.
std::vector<AblationVariant> ablation_variants();

struct AblationResult {
  AblationVariant variant;
  MetricsReport report;
};

/// Trains and evaluates every variant on the same data with the same seed.
/// `base.use_attention` and `base.head` are overridden per variant.
std::vector<AblationResult> ablate(std::span<const Claim> train_claims,
                                   std::span<const Claim> eval_claims,
                                   const Corpus& corpus, const CellIndex& index,
                                   const ModelConfig& base, const TrainConfig& config,
                                   std::span<const Claim> dev = {});

}  // namespace tabver
