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

#include "pointface/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace pointface {

double bn_momentum_for_epoch(int epoch) {
    return std::min(0.99, 1.0 - std::pow(0.5, epoch + 1));
}

AdamState make_adam_state(const FaceNetParams& params) {
    AdamState state;
    state.first_moment = params.zeros_like();
    state.second_moment = params.zeros_like();
    return state;
}

void adam_step(FaceNetParams& params, FaceNetParams& grads, AdamState& state, double lr) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    auto prefs = params.tensor_refs();
    auto grefs = grads.tensor_refs();
    auto mrefs = state.first_moment.tensor_refs();
    auto vrefs = state.second_moment.tensor_refs();
    for (std::size_t i = 0; i < prefs.size(); ++i) {
        if (!prefs[i].trainable) continue;
        Eigen::MatrixXd& p = *prefs[i].tensor;
        Eigen::MatrixXd& g = *grefs[i].tensor;
        Eigen::MatrixXd& m = *mrefs[i].tensor;
        Eigen::MatrixXd& v = *vrefs[i].tensor;
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v.array().matrix() + (1.0 - state.beta2) * g.array().square().matrix();
        Eigen::ArrayXXd mhat = m.array() / bc1;
        Eigen::ArrayXXd vhat = v.array() / bc2;
        p.array() -= lr * mhat / (vhat.sqrt() + state.eps);
    }
}

namespace {

struct PreparedDataset {
    std::vector<CloudPlan> plans;
    std::vector<int> labels;            // class indices
    std::vector<int> class_identities;  // class index -> identity label
};

PreparedDataset prepare_dataset(const std::vector<PointCloud>& dataset,
                                const FaceNetConfig& net_config, bool need_labels) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    PreparedDataset out;
    std::map<int, int> class_of;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const PointCloud& cloud = dataset[i];
        if (need_labels) {
            if (!cloud.identity) throw std::invalid_argument("dataset cloud without identity label");
            auto [it, inserted] = class_of.emplace(*cloud.identity, static_cast<int>(class_of.size()));
            if (inserted) out.class_identities.push_back(*cloud.identity);
            out.labels.push_back(it->second);
        }
        PointCloud prepared = prepare_cloud(cloud, net_config, static_cast<std::uint64_t>(i));
        out.plans.push_back(build_cloud_plan(prepared, net_config));
    }
    return out;
}

}  // namespace

ClassifierTraining train_classifier(const std::vector<PointCloud>& dataset,
                                    const FaceNetConfig& net_config, const TrainConfig& config) {
    if (config.batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
    if (config.margin_form == MarginForm::kMultiplicative && config.margin < 1.0)
        throw std::invalid_argument("multiplicative margin must be >= 1");
    if (config.margin_form == MarginForm::kAdditive &&
        (config.margin < 0.0 || config.margin >= M_PI / 2))
        throw std::invalid_argument("additive margin must lie in [0, pi/2)");
    PreparedDataset prepared = prepare_dataset(dataset, net_config, /*need_labels=*/true);
    const int num_classes = static_cast<int>(prepared.class_identities.size());
    if (num_classes < 2) throw std::invalid_argument("classification training needs >= 2 classes");

    ClassifierTraining result;
    result.params = init_facenet(net_config, num_classes, config.seed);
    result.class_identities = prepared.class_identities;
    FaceNetParams& params = result.params;

    AdamState adam = make_adam_state(params);
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0xC1A55));
    std::vector<std::size_t> order(prepared.plans.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const int n = static_cast<int>(prepared.plans.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const double lr =
            config.learning_rate * std::pow(config.lr_decay_factor, epoch / config.lr_decay_epochs);
        const double momentum = bn_momentum_for_epoch(epoch);

        double epoch_loss = 0.0;
        int correct = 0, seen = 0;
        for (int begin = 0; begin < n; begin += config.batch_size) {
            const int count = std::min(config.batch_size, n - begin);
            std::vector<const CloudPlan*> batch;
            std::vector<int> labels;
            batch.reserve(static_cast<std::size_t>(count));
            for (int k = 0; k < count; ++k) {
                batch.push_back(&prepared.plans[order[static_cast<std::size_t>(begin + k)]]);
                labels.push_back(prepared.labels[order[static_cast<std::size_t>(begin + k)]]);
            }

            ForwardCache cache;
            Eigen::MatrixXd embeddings =
                facenet_forward(batch, params, BnMode::kTrain, /*update_running=*/true, momentum, &cache);
            AngularMarginLoss loss = angular_margin_loss(embeddings, labels, params.classifier,
                                                         config.scale, config.margin, config.margin_form);
            if (!std::isfinite(loss.loss))
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch));

            FaceNetParams grads = params.zeros_like();
            grads.classifier = loss.d_classifier;
            facenet_backward(batch, params, cache, BnMode::kTrain, loss.d_embeddings, grads);
            adam_step(params, grads, adam, lr);
            // Keep the classifier columns on the unit sphere.
            for (Eigen::Index j = 0; j < params.classifier.cols(); ++j)
                params.classifier.col(j).normalize();

            epoch_loss += loss.loss * count;
            for (int k = 0; k < count; ++k) {
                Eigen::Index best;
                loss.cosines.row(k).maxCoeff(&best);
                if (static_cast<int>(best) == labels[static_cast<std::size_t>(k)]) ++correct;
            }
            seen += count;
        }
        result.log.push_back(
            {epoch, epoch_loss / seen, static_cast<double>(correct) / static_cast<double>(seen)});
    }
    return result;
}

FaceNetParams fine_tune_triplets(const FaceNetParams& params, const std::vector<PointCloud>& scans,
                                 const TrainConfig& config) {
    if (config.triplet_batch < 1) throw std::invalid_argument("need >= 1 triplet per step");
    if (config.triplet_margin <= 0.0 || config.triplet_margin >= 2.0)
        throw std::invalid_argument("triplet margin must lie in (0, 2)");
    PreparedDataset prepared = prepare_dataset(scans, params.config, /*need_labels=*/true);

    // Identity -> scan indices; triplets need one identity with >= 2 scans
    // plus at least one other identity.
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < prepared.labels.size(); ++i)
        by_class[prepared.labels[i]].push_back(static_cast<int>(i));
    std::vector<int> anchor_classes;
    for (const auto& [cls, members] : by_class)
        if (members.size() >= 2) anchor_classes.push_back(cls);
    if (anchor_classes.empty() || by_class.size() < 2)
        throw std::invalid_argument("need >=2 scans of one identity and >=1 other identity");

    FaceNetParams tuned = params;
    AdamState adam = make_adam_state(tuned);
    std::mt19937_64 rng(mix_seed(config.seed, 0x7121));

    auto uniform = [&rng](int n) {
        std::uniform_int_distribution<int> dist(0, n - 1);
        return dist(rng);
    };

    for (int step = 0; step < config.triplet_steps; ++step) {
        // Sample the batch of triplets as scan indices.
        std::vector<std::array<int, 3>> triplets;
        for (int t = 0; t < config.triplet_batch; ++t) {
            int cls = anchor_classes[static_cast<std::size_t>(uniform(static_cast<int>(anchor_classes.size())))];
            const auto& members = by_class[cls];
            int a = members[static_cast<std::size_t>(uniform(static_cast<int>(members.size())))];
            int p = a;
            while (p == a) p = members[static_cast<std::size_t>(uniform(static_cast<int>(members.size())))];
            int neg_cls = cls;
            auto it = by_class.begin();
            while (neg_cls == cls) {
                it = by_class.begin();
                std::advance(it, uniform(static_cast<int>(by_class.size())));
                neg_cls = it->first;
            }
            const auto& neg_members = it->second;
            int ng = neg_members[static_cast<std::size_t>(uniform(static_cast<int>(neg_members.size())))];
            triplets.push_back({a, p, ng});
        }

        // Forward the distinct clouds once.
        std::vector<int> distinct;
        std::map<int, int> row_of;
        for (const auto& tri : triplets)
            for (int idx : tri)
                if (row_of.emplace(idx, static_cast<int>(distinct.size())).second) distinct.push_back(idx);

        std::vector<const CloudPlan*> batch;
        batch.reserve(distinct.size());
        for (int idx : distinct) batch.push_back(&prepared.plans[static_cast<std::size_t>(idx)]);

        ForwardCache cache;
        Eigen::MatrixXd embeddings =
            facenet_forward(batch, tuned, BnMode::kEval, false, 0.0, &cache);

        const auto t = static_cast<Eigen::Index>(triplets.size());
        Eigen::MatrixXd anchor(t, embeddings.cols()), positive(t, embeddings.cols()),
            negative(t, embeddings.cols());
        for (Eigen::Index i = 0; i < t; ++i) {
            anchor.row(i) = embeddings.row(row_of[triplets[static_cast<std::size_t>(i)][0]]);
            positive.row(i) = embeddings.row(row_of[triplets[static_cast<std::size_t>(i)][1]]);
            negative.row(i) = embeddings.row(row_of[triplets[static_cast<std::size_t>(i)][2]]);
        }

        TripletLoss loss = triplet_loss_cosine(anchor, positive, negative, config.triplet_margin);
        if (!std::isfinite(loss.loss))
            throw std::runtime_error("fine-tuning diverged: non-finite loss at step " +
                                     std::to_string(step));

        Eigen::MatrixXd d_embeddings = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
        for (Eigen::Index i = 0; i < t; ++i) {
            d_embeddings.row(row_of[triplets[static_cast<std::size_t>(i)][0]]) += loss.d_anchor.row(i);
            d_embeddings.row(row_of[triplets[static_cast<std::size_t>(i)][1]]) += loss.d_positive.row(i);
            d_embeddings.row(row_of[triplets[static_cast<std::size_t>(i)][2]]) += loss.d_negative.row(i);
        }

        FaceNetParams grads = tuned.zeros_like();
        facenet_backward(batch, tuned, cache, BnMode::kEval, d_embeddings, grads);
        // The classifier stays untouched during fine-tuning: its gradient is
        // identically zero, so Adam leaves it exactly in place.
        adam_step(tuned, grads, adam, config.learning_rate);
    }
    return tuned;
}

}  // namespace pointface
