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

#ifndef POINTFACE_LOSSES_HPP
#define POINTFACE_LOSSES_HPP

#include <Eigen/Dense>
#include <vector>

namespace pointface {

/// Margin placement on the target logit: additive penalizes the angle
/// (cos(theta + m)), multiplicative scales it (cos(m * theta)).
enum class MarginForm { kAdditive, kMultiplicative };

struct AngularMarginLoss {
    double loss = 0.0;
    Eigen::MatrixXd d_embeddings;  // N x D
    Eigen::MatrixXd d_classifier;  // D x C
    Eigen::MatrixXd cosines;       // N x C, pre-margin, for accuracy reporting
};

/// Softmax cross-entropy over scale * cos(theta_j) logits with the margin
/// applied to the target class only; bias-free. Cosines are computed against
/// explicitly normalized inputs, so gradients are valid for arbitrary
/// non-zero embeddings and classifier columns.
AngularMarginLoss angular_margin_loss(const Eigen::MatrixXd& embeddings,
                                      const std::vector<int>& labels,
                                      const Eigen::MatrixXd& classifier, double scale,
                                      double margin, MarginForm form);

struct TripletLoss {
    double loss = 0.0;
    Eigen::MatrixXd d_anchor, d_positive, d_negative;  // T x D each
};

/// Hinged cosine triplet loss, mean over rows:
/// max(0, (1 - cos(a,p)) - (1 - cos(a,n)) + margin).
TripletLoss triplet_loss_cosine(const Eigen::MatrixXd& anchor, const Eigen::MatrixXd& positive,
                                const Eigen::MatrixXd& negative, double margin);

}  // namespace pointface

#endif  // POINTFACE_LOSSES_HPP
