// Copyright 2026 the pointface authors
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

#ifndef POINTFACE_TRAIN_HPP
#define POINTFACE_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "pointface/losses.hpp"
#include "pointface/network.hpp"

namespace pointface {

struct TrainConfig {
    double scale = 30.0;                         // s in the angular loss
    MarginForm margin_form = MarginForm::kAdditive;
    double margin = 0.3;                         // radians (additive) or factor (multiplicative)
    double learning_rate = 1e-3;
    int lr_decay_epochs = 20;
    double lr_decay_factor = 0.1;
    int batch_size = 32;
    int epochs = 60;
    std::uint64_t seed = 0;

    // Triplet fine-tuning.
    double triplet_margin = 0.2;
    int triplet_steps = 200;
    int triplet_batch = 8;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct ClassifierTraining {
    FaceNetParams params;
    std::vector<EpochStats> log;
    std::vector<int> class_identities;  // class index -> identity label
};

/// Adam state over the same tensor layout as the parameters.
struct AdamState {
    FaceNetParams first_moment;
    FaceNetParams second_moment;
    std::int64_t step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};
AdamState make_adam_state(const FaceNetParams& params);
void adam_step(FaceNetParams& params, FaceNetParams& grads, AdamState& state, double lr);

/// Classification pre-training on labeled clouds with the angular margin
/// loss. Deterministic per config.seed. Throws on non-finite loss.
ClassifierTraining train_classifier(const std::vector<PointCloud>& dataset,
                                    const FaceNetConfig& net_config, const TrainConfig& config);

/// Triplet fine-tuning on a small labeled set: uniformly samples valid
/// (anchor, positive, negative) triples with a seeded generator, updates all
/// network weights with frozen batch-norm statistics, and leaves the
/// classifier matrix untouched.
FaceNetParams fine_tune_triplets(const FaceNetParams& params, const std::vector<PointCloud>& scans,
                                 const TrainConfig& config);

/// Batch-norm running-stats momentum schedule: starts at 0.5 and halves the
/// gap to 1 each epoch, capped at 0.99.
double bn_momentum_for_epoch(int epoch);

}  // namespace pointface

#endif  // POINTFACE_TRAIN_HPP
