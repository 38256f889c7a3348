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

#include "tabver/ablation.h"

namespace tabver {

std::vector<AblationVariant> ablation_variants() {
  return {{"full", true, HeadKind::joint},
          {"no_attention", false, HeadKind::joint},
          {"no_joint_objective", true, HeadKind::binary_uniform},
          {"neither", false, HeadKind::binary_uniform}};
}

std::vector<AblationResult> ablate(std::span<const Claim> train_claims,
                                   std::span<const Claim> eval_claims,
                                   const Corpus& corpus, const CellIndex& index,
                                   const ModelConfig& base, const TrainConfig& config,
                                   std::span<const Claim> dev) {
  std::vector<AblationResult> out;
  for (const AblationVariant& v : ablation_variants()) {
    ModelConfig model = base;
    model.use_attention = v.use_attention;
    model.head = v.head;
    const TrainOutcome trained = train(train_claims, corpus, index, model, config, dev);
    EvalOptions options;
    options.k = config.k;
    options.threads = config.threads;
    const Evaluation ev =
        evaluate_checkpoint(trained.checkpoint.params, eval_claims, corpus, index, options);
    out.push_back({v, make_report(ev)});
  }
  return out;
}

}  // namespace tabver
