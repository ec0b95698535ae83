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

// Dense layer primitives with explicit backward passes. Rows are points (or
// batch entries), columns are channels; gradients are exact so the whole
// network checks out against central finite differences.

#ifndef POINTFACE_LAYERS_HPP
#define POINTFACE_LAYERS_HPP

#include <Eigen/Dense>
#include <vector>

namespace pointface {

enum class BnMode { kTrain, kEval };

struct DenseLayer {
    Eigen::MatrixXd W;  // in x out
    Eigen::MatrixXd b;  // 1 x out
};

struct BatchNormLayer {
    Eigen::MatrixXd gamma;         // 1 x C
    Eigen::MatrixXd beta;          // 1 x C
    Eigen::MatrixXd running_mean;  // 1 x C
    Eigen::MatrixXd running_var;   // 1 x C
    double eps = 1e-5;
};

/// One shared pointwise block: linear, optional batch norm, optional relu.
struct MlpLayer {
    DenseLayer dense;
    BatchNormLayer bn;
    bool use_bn = true;
    bool relu = true;
};

/// Shared MLP applied to every row independently (batch norm couples rows in
/// train mode only).
struct PointwiseMlp {
    std::vector<MlpLayer> layers;
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().dense.W.cols()); }
};

struct MlpLayerCache {
    Eigen::MatrixXd input;     // rows x in
    Eigen::MatrixXd xhat;      // rows x out, bn-normalized input to the affine
    Eigen::RowVectorXd invstd; // 1 x out
    Eigen::MatrixXd pre_act;   // rows x out, value entering the relu
};

struct MlpCache {
    std::vector<MlpLayerCache> layers;
    Eigen::MatrixXd output;
};

/// Batch norm over rows. Train mode uses batch statistics and, when
/// update_running is set, folds them into the running stats with the given
/// momentum; eval mode applies the frozen running statistics.
Eigen::MatrixXd batchnorm_forward(BatchNormLayer& bn, const Eigen::MatrixXd& X, BnMode mode,
                                  bool update_running, double momentum, MlpLayerCache* cache);
Eigen::MatrixXd batchnorm_backward(const BatchNormLayer& bn, const MlpLayerCache& cache, BnMode mode,
                                   const Eigen::MatrixXd& d_out, BatchNormLayer& grads);

/// Forward through the shared MLP. In train mode batch statistics normalize
/// each channel and, when update_running is set, fold into the running stats
/// with the given momentum. Pass a cache to enable backward.
Eigen::MatrixXd mlp_forward(PointwiseMlp& mlp, const Eigen::MatrixXd& X, BnMode mode,
                            bool update_running, double bn_momentum, MlpCache* cache);

/// Backward through the MLP. Accumulates parameter gradients into `grads`
/// (same structure as the mlp) and returns the gradient w.r.t. the input.
Eigen::MatrixXd mlp_backward(const PointwiseMlp& mlp, const MlpCache& cache, BnMode mode,
                             const Eigen::MatrixXd& d_output, PointwiseMlp& grads);

/// Contiguous row groups: group g spans rows [offsets[g], offsets[g+1]).
struct GroupSpec {
    std::vector<Eigen::Index> offsets;
    Eigen::Index num_groups() const { return static_cast<Eigen::Index>(offsets.size()) - 1; }
};

/// Column-wise max over each group; ties keep the first (lowest) row.
Eigen::MatrixXd maxpool_forward(const Eigen::MatrixXd& X, const GroupSpec& groups,
                                Eigen::MatrixXi* argmax);
Eigen::MatrixXd maxpool_backward(const Eigen::MatrixXd& d_pooled, const Eigen::MatrixXi& argmax,
                                 Eigen::Index input_rows);

/// Row-wise L2 normalization and its backward pass.
Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& X, Eigen::VectorXd* norms);
Eigen::MatrixXd l2_normalize_backward(const Eigen::MatrixXd& d_out, const Eigen::MatrixXd& normalized,
                                      const Eigen::VectorXd& norms);

/// He-style random initialization; biases zero, batch norm identity.
PointwiseMlp make_mlp(int input_dim, const std::vector<int>& widths, std::uint64_t seed,
                      bool final_relu = true, bool use_bn = true);
DenseLayer make_dense(int input_dim, int output_dim, std::uint64_t seed);
BatchNormLayer make_batchnorm(int dim);

/// Same-shaped copies with every tensor zeroed, for gradient accumulation.
DenseLayer zeros_like(const DenseLayer& layer);
BatchNormLayer zeros_like(const BatchNormLayer& bn);
PointwiseMlp zeros_like(const PointwiseMlp& mlp);

}  // namespace pointface

#endif  // POINTFACE_LAYERS_HPP
