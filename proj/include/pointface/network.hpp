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

// The embedding network: three set-abstraction stages (sample centroids,
// group neighbors in a ball, shared MLP, max-pool per group) followed by a
// dense head and L2 normalization. Sampling and grouping depend on positions
// only, so each cloud's structure is planned once and reused across epochs.

#ifndef POINTFACE_NETWORK_HPP
#define POINTFACE_NETWORK_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pointface/layers.hpp"
#include "pointface/sampling.hpp"
#include "pointface/types.hpp"

namespace pointface {

enum class SamplerKind { kFps, kCps };

struct SetAbstractionConfig {
    int num_centroids = 0;       // ignored when group_all
    double ball_radius = 0.2;    // normalized units
    int max_group_size = 32;
    std::vector<int> mlp_widths;
    SamplerKind sampler = SamplerKind::kCps;
    double lambda = 0.1;                          // CPS curvature exponent
    double region_radius = kUnboundedRadius;      // candidate filter, normalized units
    Aggregation aggregation = Aggregation::kMinDistance;
    StartRule start_rule = StartRule::kNoseTip;
    bool group_all = false;      // final global stage
};

struct FaceNetConfig {
    std::array<SetAbstractionConfig, 3> stages;
    int embed_dim = 512;
    int input_points = 4096;         // every cloud is resampled/padded to this
    std::uint64_t resample_seed = 0;

    /// Desk-scale defaults: 512/128 centroids, radii 0.2/0.4, MLPs
    /// (64,64,128)/(128,128,256)/(256,512,1024), head to 512.
    static FaceNetConfig desk();
    /// Reduced widths for fast experiments and tests.
    static FaceNetConfig small();

    /// Applies one sampler setting to all stages.
    void set_sampler(SamplerKind kind, double lambda, double region_radius);
};

/// All trainable state. The classifier matrix (embed_dim x C, unit-norm
/// columns) exists during classification training only and may be empty.
struct FaceNetParams {
    FaceNetConfig config;
    std::array<PointwiseMlp, 3> stage_mlps;
    DenseLayer head;
    BatchNormLayer head_bn;
    Eigen::MatrixXd classifier;

    int num_classes() const { return static_cast<int>(classifier.cols()); }

    struct TensorRef {
        std::string name;
        Eigen::MatrixXd* tensor;
        bool trainable;
    };
    /// Fixed-order enumeration of every tensor (running stats included).
    std::vector<TensorRef> tensor_refs();
    FaceNetParams zeros_like() const;
};

FaceNetParams init_facenet(const FaceNetConfig& config, int num_classes, std::uint64_t seed);

/// Precomputed structure of one cloud: normalized positions, 7-dim input
/// features, and per-stage centroid/grouping indices.
struct StagePlan {
    std::vector<int> centroids;            // into the stage's input point list
    std::vector<int> members;              // concatenated group members
    GroupSpec groups;                      // offsets into members
    Eigen::MatrixXd centroid_positions;    // m x 3
};

struct CloudPlan {
    Eigen::MatrixXd positions;  // P x 3, normalized frame
    Eigen::MatrixXd features;   // P x 7: xyz, normal, curvature
    std::array<StagePlan, 3> stages;
    std::array<Eigen::MatrixXd, 3> level_positions;  // input points per stage
};

/// Requires normals and curvature; normalizes internally.
CloudPlan build_cloud_plan(const PointCloud& cloud, const FaceNetConfig& config);

/// One set-abstraction stage on a single cloud with eval-mode batch norm:
/// sample centroids (curvature required for the CPS sampler), group neighbors
/// with ball queries, run the shared MLP, max-pool per group. Returns
/// (centroid positions m x 3, centroid features m x F').
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> set_abstraction(const Eigen::MatrixXd& positions,
                                                            const Eigen::MatrixXd& features,
                                                            const Eigen::VectorXd& curvature,
                                                            const SetAbstractionConfig& config,
                                                            PointwiseMlp& mlp);

struct StageCache {
    MlpCache mlp;
    Eigen::MatrixXi argmax;
    Eigen::Index grouped_rows = 0;
    GroupSpec groups;                          // merged over the batch
    std::vector<Eigen::Index> member_sources;  // grouped row -> pooled row of previous stage (-1 for stage 0)
};

struct ForwardCache {
    std::array<StageCache, 3> stages;
    Eigen::MatrixXd head_in;         // B x last stage width
    MlpLayerCache head_bn_cache;
    Eigen::MatrixXd embeddings;      // unit rows
    Eigen::VectorXd emb_norms;
};

/// Batch forward. Train mode normalizes with batch statistics (optionally
/// updating the running stats); eval mode uses the frozen running statistics.
/// Returns B x embed_dim unit-norm embeddings.
Eigen::MatrixXd facenet_forward(const std::vector<const CloudPlan*>& batch, FaceNetParams& params,
                                BnMode mode, bool update_running, double bn_momentum,
                                ForwardCache* cache);

/// Accumulates parameter gradients for the embeddings produced by the cached
/// forward pass. The classifier gradient is not touched here; it comes from
/// the loss directly.
void facenet_backward(const std::vector<const CloudPlan*>& batch, const FaceNetParams& params,
                      const ForwardCache& cache, BnMode mode, const Eigen::MatrixXd& d_embeddings,
                      FaceNetParams& grads);

/// Single-cloud inference: plan, eval-mode forward, unit embedding.
Eigen::VectorXd forward(const PointCloud& cloud, FaceNetParams& params);

/// Deterministic resampling to config.input_points; `salt` separates clouds.
PointCloud prepare_cloud(const PointCloud& cloud, const FaceNetConfig& config, std::uint64_t salt);

/// prepare_cloud + forward: the full inference pipeline for one raw cloud.
Eigen::VectorXd embed_cloud(const PointCloud& cloud, FaceNetParams& params, std::uint64_t salt);

}  // namespace pointface

#endif  // POINTFACE_NETWORK_HPP
