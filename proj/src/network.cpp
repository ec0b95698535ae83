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

#include "pointface/network.hpp"

#include <random>
#include <stdexcept>

#include "pointface/kdtree.hpp"

namespace pointface {

FaceNetConfig FaceNetConfig::desk() {
    FaceNetConfig c;
    c.stages[0] = SetAbstractionConfig{512, 0.2, 32, {64, 64, 128}};
    c.stages[1] = SetAbstractionConfig{128, 0.4, 64, {128, 128, 256}};
    c.stages[2] = SetAbstractionConfig{0, 0.0, 0, {256, 512, 1024}};
    c.stages[2].group_all = true;
    c.embed_dim = 512;
    c.input_points = 4096;
    return c;
}

FaceNetConfig FaceNetConfig::small() {
    FaceNetConfig c;
    c.stages[0] = SetAbstractionConfig{256, 0.25, 16, {32, 32, 64}};
    c.stages[1] = SetAbstractionConfig{64, 0.45, 32, {64, 64, 128}};
    c.stages[2] = SetAbstractionConfig{0, 0.0, 0, {128, 256, 512}};
    c.stages[2].group_all = true;
    c.embed_dim = 512;
    c.input_points = 2048;
    return c;
}

void FaceNetConfig::set_sampler(SamplerKind kind, double lambda, double region_radius) {
    for (auto& stage : stages) {
        stage.sampler = kind;
        stage.lambda = lambda;
        stage.region_radius = region_radius;
    }
}

namespace {

int stage_input_dim(const FaceNetConfig& config, int stage) {
    if (stage == 0) return 3 + 7;
    return 3 + config.stages[static_cast<std::size_t>(stage - 1)].mlp_widths.back();
}

// Derived point set for sampling at levels > 0: centroid positions inherit
// the source points' curvature; the nose reference is the point nearest the
// previous reference.
PointCloud level_cloud(const Eigen::MatrixXd& positions, const std::vector<double>& curvature,
                       const Vec3& reference) {
    PointCloud cloud;
    cloud.points.resize(static_cast<std::size_t>(positions.rows()));
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < positions.rows(); ++i) {
        auto& p = cloud.points[static_cast<std::size_t>(i)];
        p.position = positions.row(i).transpose();
        p.curvature = curvature[static_cast<std::size_t>(i)];
        double d2 = (p.position - reference).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(i);
        }
    }
    cloud.nose_tip_index = best;
    cloud.has_curvature = true;
    return cloud;
}

}  // namespace

CloudPlan build_cloud_plan(const PointCloud& raw, const FaceNetConfig& config) {
    if (raw.empty()) throw std::invalid_argument("empty cloud");
    if (!raw.has_normals || !raw.has_curvature)
        throw std::invalid_argument("missing features: run normal and curvature estimation first");

    PointCloud cloud = normalize_cloud(raw);
    const int n = cloud.size();

    CloudPlan plan;
    plan.positions.resize(n, 3);
    plan.features.resize(n, 7);
    for (int i = 0; i < n; ++i) {
        const auto& p = cloud.points[static_cast<std::size_t>(i)];
        plan.positions.row(i) << p.position.x(), p.position.y(), p.position.z();
        plan.features.row(i) << p.position.x(), p.position.y(), p.position.z(), p.normal.x(),
            p.normal.y(), p.normal.z(), p.curvature;
    }

    Eigen::MatrixXd level_pos = plan.positions;
    std::vector<double> level_curv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) level_curv[static_cast<std::size_t>(i)] = cloud.points[static_cast<std::size_t>(i)].curvature;
    PointCloud level = cloud;

    for (int s = 0; s < 3; ++s) {
        const SetAbstractionConfig& sc = config.stages[static_cast<std::size_t>(s)];
        StagePlan& sp = plan.stages[static_cast<std::size_t>(s)];
        plan.level_positions[static_cast<std::size_t>(s)] = level_pos;

        if (sc.group_all) {
            sp.centroids.clear();
            sp.centroid_positions = level_pos.colwise().mean();
            sp.members.resize(static_cast<std::size_t>(level_pos.rows()));
            for (Eigen::Index i = 0; i < level_pos.rows(); ++i) sp.members[static_cast<std::size_t>(i)] = static_cast<int>(i);
            sp.groups.offsets = {0, level_pos.rows()};
            continue;
        }

        SamplingConfig sampling;
        sampling.num_samples = sc.num_centroids;
        sampling.lambda = sc.lambda;
        sampling.region_radius = sc.region_radius;
        sampling.aggregation = sc.aggregation;
        sampling.start_rule = sc.start_rule;
        SampleResult picked = sc.sampler == SamplerKind::kCps
                                  ? curvature_aware_sampling(level, sampling)
                                  : farthest_point_sampling(level, sampling);
        sp.centroids = picked.selected;

        sp.centroid_positions.resize(sc.num_centroids, 3);
        SpatialIndex index(level_pos);
        sp.groups.offsets.assign(1, 0);
        sp.members.clear();
        for (int ci = 0; ci < sc.num_centroids; ++ci) {
            Vec3 cpos = level_pos.row(sp.centroids[static_cast<std::size_t>(ci)]).transpose();
            sp.centroid_positions.row(ci) = cpos.transpose();
            auto group = index.ball_query(cpos, sc.ball_radius, sc.max_group_size);
            sp.members.insert(sp.members.end(), group.begin(), group.end());
            sp.groups.offsets.push_back(static_cast<Eigen::Index>(sp.members.size()));
        }

        // Next level: the selected centroids.
        Eigen::MatrixXd next_pos(sc.num_centroids, 3);
        std::vector<double> next_curv(static_cast<std::size_t>(sc.num_centroids));
        for (int ci = 0; ci < sc.num_centroids; ++ci) {
            next_pos.row(ci) = level_pos.row(sp.centroids[static_cast<std::size_t>(ci)]);
            next_curv[static_cast<std::size_t>(ci)] = level_curv[static_cast<std::size_t>(sp.centroids[static_cast<std::size_t>(ci)])];
        }
        level_pos = std::move(next_pos);
        level_curv = std::move(next_curv);
        level = level_cloud(level_pos, level_curv, cloud.reference_point());
    }
    return plan;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> set_abstraction(const Eigen::MatrixXd& positions,
                                                            const Eigen::MatrixXd& features,
                                                            const Eigen::VectorXd& curvature,
                                                            const SetAbstractionConfig& config,
                                                            PointwiseMlp& mlp) {
    if (positions.rows() == 0) throw std::invalid_argument("empty cloud");
    if (positions.rows() != features.rows())
        throw std::invalid_argument("positions and features row counts differ");

    const Eigen::Index n = positions.rows();
    std::vector<int> centroids;
    Eigen::MatrixXd centroid_positions;
    std::vector<int> members;
    GroupSpec groups;
    groups.offsets = {0};

    if (config.group_all) {
        centroid_positions = positions.colwise().mean();
        for (Eigen::Index i = 0; i < n; ++i) members.push_back(static_cast<int>(i));
        groups.offsets.push_back(n);
    } else {
        std::vector<double> curv(static_cast<std::size_t>(n), 0.0);
        if (curvature.size() == n)
            for (Eigen::Index i = 0; i < n; ++i) curv[static_cast<std::size_t>(i)] = curvature[i];
        else if (config.sampler == SamplerKind::kCps)
            throw std::invalid_argument("run estimate_curvature first");
        PointCloud level = level_cloud(positions, curv, Vec3::Zero());
        if (curvature.size() != n) level.has_curvature = false;

        SamplingConfig sampling;
        sampling.num_samples = config.num_centroids;
        sampling.lambda = config.lambda;
        sampling.region_radius = config.region_radius;
        sampling.aggregation = config.aggregation;
        sampling.start_rule = config.start_rule;
        SampleResult picked = config.sampler == SamplerKind::kCps
                                  ? curvature_aware_sampling(level, sampling)
                                  : farthest_point_sampling(level, sampling);
        centroids = picked.selected;

        centroid_positions.resize(config.num_centroids, 3);
        SpatialIndex index(positions);
        for (int ci = 0; ci < config.num_centroids; ++ci) {
            Vec3 cpos = positions.row(centroids[static_cast<std::size_t>(ci)]).transpose();
            centroid_positions.row(ci) = cpos.transpose();
            auto group = index.ball_query(cpos, config.ball_radius, config.max_group_size);
            members.insert(members.end(), group.begin(), group.end());
            groups.offsets.push_back(static_cast<Eigen::Index>(members.size()));
        }
    }

    Eigen::MatrixXd X(static_cast<Eigen::Index>(members.size()), 3 + features.cols());
    Eigen::Index row = 0;
    for (Eigen::Index g = 0; g < groups.num_groups(); ++g) {
        for (Eigen::Index k = groups.offsets[static_cast<std::size_t>(g)];
             k < groups.offsets[static_cast<std::size_t>(g) + 1]; ++k, ++row) {
            int member = members[static_cast<std::size_t>(k)];
            X.block(row, 0, 1, 3) = positions.row(member) - centroid_positions.row(g);
            X.block(row, 3, 1, features.cols()) = features.row(member);
        }
    }
    Eigen::MatrixXd activated = mlp_forward(mlp, X, BnMode::kEval, false, 0.0, nullptr);
    Eigen::MatrixXd pooled = maxpool_forward(activated, groups, nullptr);
    return {centroid_positions, pooled};
}

std::vector<FaceNetParams::TensorRef> FaceNetParams::tensor_refs() {
    std::vector<TensorRef> refs;
    for (int s = 0; s < 3; ++s) {
        auto& mlp = stage_mlps[static_cast<std::size_t>(s)];
        for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
            std::string base = "sa" + std::to_string(s + 1) + ".mlp" + std::to_string(li);
            auto& layer = mlp.layers[li];
            refs.push_back({base + ".W", &layer.dense.W, true});
            refs.push_back({base + ".b", &layer.dense.b, true});
            if (layer.use_bn) {
                refs.push_back({base + ".bn_gamma", &layer.bn.gamma, true});
                refs.push_back({base + ".bn_beta", &layer.bn.beta, true});
                refs.push_back({base + ".bn_rmean", &layer.bn.running_mean, false});
                refs.push_back({base + ".bn_rvar", &layer.bn.running_var, false});
            }
        }
    }
    refs.push_back({"head.W", &head.W, true});
    refs.push_back({"head.b", &head.b, true});
    refs.push_back({"head.bn_gamma", &head_bn.gamma, true});
    refs.push_back({"head.bn_beta", &head_bn.beta, true});
    refs.push_back({"head.bn_rmean", &head_bn.running_mean, false});
    refs.push_back({"head.bn_rvar", &head_bn.running_var, false});
    if (classifier.size() > 0) refs.push_back({"classifier.W", &classifier, true});
    return refs;
}

FaceNetParams FaceNetParams::zeros_like() const {
    FaceNetParams out;
    out.config = config;
    for (int s = 0; s < 3; ++s)
        out.stage_mlps[static_cast<std::size_t>(s)] = pointface::zeros_like(stage_mlps[static_cast<std::size_t>(s)]);
    out.head = pointface::zeros_like(head);
    out.head_bn = pointface::zeros_like(head_bn);
    out.classifier = Eigen::MatrixXd::Zero(classifier.rows(), classifier.cols());
    return out;
}

FaceNetParams init_facenet(const FaceNetConfig& config, int num_classes, std::uint64_t seed) {
    FaceNetParams params;
    params.config = config;
    for (int s = 0; s < 3; ++s)
        params.stage_mlps[static_cast<std::size_t>(s)] =
            make_mlp(stage_input_dim(config, s), config.stages[static_cast<std::size_t>(s)].mlp_widths,
                     mix_seed(seed, static_cast<std::uint64_t>(s)));
    params.head = make_dense(config.stages[2].mlp_widths.back(), config.embed_dim, mix_seed(seed, 10));
    params.head_bn = make_batchnorm(config.embed_dim);
    if (num_classes > 0) {
        std::mt19937_64 rng(mix_seed(seed, 11));
        std::normal_distribution<double> gauss(0.0, 1.0);
        params.classifier.resize(config.embed_dim, num_classes);
        for (Eigen::Index j = 0; j < params.classifier.cols(); ++j) {
            for (Eigen::Index i = 0; i < params.classifier.rows(); ++i) params.classifier(i, j) = gauss(rng);
            params.classifier.col(j).normalize();
        }
    }
    return params;
}

Eigen::MatrixXd facenet_forward(const std::vector<const CloudPlan*>& batch, FaceNetParams& params,
                                BnMode mode, bool update_running, double bn_momentum,
                                ForwardCache* cache) {
    if (batch.empty()) throw std::invalid_argument("empty batch");

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;

    // Features of the current level, concatenated over the batch. Pooling
    // emits the next level's concatenation directly, so no per-cloud
    // splitting happens between stages.
    Eigen::Index total_pts = 0;
    for (const CloudPlan* plan : batch) total_pts += plan->features.rows();
    Eigen::MatrixXd feats(total_pts, batch[0]->features.cols());
    {
        Eigen::Index at = 0;
        for (const CloudPlan* plan : batch) {
            feats.middleRows(at, plan->features.rows()) = plan->features;
            at += plan->features.rows();
        }
    }

    for (int s = 0; s < 3; ++s) {
        StageCache& sc = fc.stages[static_cast<std::size_t>(s)];

        Eigen::Index total_rows = 0, total_level = 0, total_cents = 0;
        for (const CloudPlan* plan : batch) {
            const StagePlan& sp = plan->stages[static_cast<std::size_t>(s)];
            total_rows += static_cast<Eigen::Index>(sp.members.size());
            total_level += plan->level_positions[static_cast<std::size_t>(s)].rows();
            total_cents += sp.centroid_positions.rows();
        }

        // Merged gather tables: source level row and centroid row per grouped row.
        Eigen::MatrixXd pos(total_level, 3), cpos(total_cents, 3);
        std::vector<Eigen::Index>& src = sc.member_sources;
        src.resize(static_cast<std::size_t>(total_rows));
        std::vector<Eigen::Index> cen(static_cast<std::size_t>(total_rows));
        sc.groups.offsets.assign(1, 0);
        Eigen::Index at_pos = 0, at_cen = 0, row = 0;
        for (const CloudPlan* plan : batch) {
            const StagePlan& sp = plan->stages[static_cast<std::size_t>(s)];
            const Eigen::MatrixXd& level_pos = plan->level_positions[static_cast<std::size_t>(s)];
            pos.middleRows(at_pos, level_pos.rows()) = level_pos;
            cpos.middleRows(at_cen, sp.centroid_positions.rows()) = sp.centroid_positions;
            for (Eigen::Index g = 0; g < sp.groups.num_groups(); ++g) {
                for (Eigen::Index k = sp.groups.offsets[static_cast<std::size_t>(g)];
                     k < sp.groups.offsets[static_cast<std::size_t>(g) + 1]; ++k, ++row) {
                    src[static_cast<std::size_t>(row)] = at_pos + sp.members[static_cast<std::size_t>(k)];
                    cen[static_cast<std::size_t>(row)] = at_cen + g;
                }
                sc.groups.offsets.push_back(row);
            }
            at_pos += level_pos.rows();
            at_cen += sp.centroid_positions.rows();
        }
        sc.grouped_rows = total_rows;

        // Column-wise gather keeps writes contiguous.
        Eigen::MatrixXd X(total_rows, 3 + feats.cols());
        for (int c = 0; c < 3; ++c)
            for (Eigen::Index r = 0; r < total_rows; ++r)
                X(r, c) = pos(src[static_cast<std::size_t>(r)], c) - cpos(cen[static_cast<std::size_t>(r)], c);
        for (Eigen::Index c = 0; c < feats.cols(); ++c)
            for (Eigen::Index r = 0; r < total_rows; ++r)
                X(r, 3 + c) = feats(src[static_cast<std::size_t>(r)], c);

        Eigen::MatrixXd activated = mlp_forward(params.stage_mlps[static_cast<std::size_t>(s)], X, mode,
                                                update_running, bn_momentum, &sc.mlp);
        feats = maxpool_forward(activated, sc.groups, &sc.argmax);
    }

    // The global stage leaves one pooled row per cloud, in batch order.
    fc.head_in = feats;
    Eigen::MatrixXd z;
    z.noalias() = feats * params.head.W;
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j).array() += params.head.b(0, j);
    Eigen::MatrixXd normed =
        batchnorm_forward(params.head_bn, z, mode, update_running, bn_momentum, &fc.head_bn_cache);
    fc.embeddings = l2_normalize_rows(normed, &fc.emb_norms);
    return fc.embeddings;
}

void facenet_backward(const std::vector<const CloudPlan*>& batch, const FaceNetParams& params,
                      const ForwardCache& cache, BnMode mode, const Eigen::MatrixXd& d_embeddings,
                      FaceNetParams& grads) {
    Eigen::MatrixXd d_head_out = l2_normalize_backward(d_embeddings, cache.embeddings, cache.emb_norms);
    Eigen::MatrixXd dz = batchnorm_backward(params.head_bn, cache.head_bn_cache, mode, d_head_out,
                                            grads.head_bn);
    grads.head.W.noalias() += cache.head_in.transpose() * dz;
    grads.head.b.row(0) += dz.colwise().sum();
    Eigen::MatrixXd d_pooled;
    d_pooled.noalias() = dz * params.head.W.transpose();

    // d_pooled holds gradients for the stage-2 pooled rows (one per cloud).
    // Walk the stages backwards.
    for (int s = 2; s >= 0; --s) {
        const StageCache& sc = cache.stages[static_cast<std::size_t>(s)];
        Eigen::MatrixXd d_act = maxpool_backward(d_pooled, sc.argmax, sc.grouped_rows);
        Eigen::MatrixXd d_input = mlp_backward(params.stage_mlps[static_cast<std::size_t>(s)], sc.mlp,
                                               mode, d_act, grads.stage_mlps[static_cast<std::size_t>(s)]);
        if (s == 0) break;

        // Scatter the feature part of the grouped-row gradients back to the
        // previous stage's pooled rows; the relative-position part has no
        // upstream parameters. Row order is fixed, so sums are deterministic.
        Eigen::Index prev_rows = 0;
        for (const CloudPlan* plan : batch)
            prev_rows += plan->stages[static_cast<std::size_t>(s - 1)].groups.num_groups();
        Eigen::MatrixXd d_prev = Eigen::MatrixXd::Zero(prev_rows, d_input.cols() - 3);
        const auto& src = sc.member_sources;
        for (Eigen::Index c = 3; c < d_input.cols(); ++c)
            for (Eigen::Index r = 0; r < d_input.rows(); ++r)
                d_prev(src[static_cast<std::size_t>(r)], c - 3) += d_input(r, c);
        d_pooled = std::move(d_prev);
    }
}

PointCloud prepare_cloud(const PointCloud& cloud, const FaceNetConfig& config, std::uint64_t salt) {
    if (!cloud.has_normals || !cloud.has_curvature)
        throw std::invalid_argument("missing features: run normal and curvature estimation first");
    return resample_cloud(cloud, config.input_points, mix_seed(config.resample_seed, salt));
}

Eigen::VectorXd forward(const PointCloud& cloud, FaceNetParams& params) {
    CloudPlan plan = build_cloud_plan(cloud, params.config);
    std::vector<const CloudPlan*> batch{&plan};
    Eigen::MatrixXd emb = facenet_forward(batch, params, BnMode::kEval, false, 0.0, nullptr);
    return emb.row(0).transpose();
}

Eigen::VectorXd embed_cloud(const PointCloud& cloud, FaceNetParams& params, std::uint64_t salt) {
    PointCloud prepared = prepare_cloud(cloud, params.config, salt);
    return forward(prepared, params);
}

}  // namespace pointface
