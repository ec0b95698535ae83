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

#ifndef POINTFACE_RECOGNITION_HPP
#define POINTFACE_RECOGNITION_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pointface/network.hpp"

namespace pointface {

struct GalleryEntry {
    int identity = 0;
    Eigen::VectorXd embedding;  // unit norm
    std::string source;
};

struct Gallery {
    std::vector<GalleryEntry> entries;
};

struct RocPoint {
    double far = 0.0;  // false-accept rate
    double tar = 0.0;  // true-accept rate
};

struct EvalReport {
    double rank1 = 0.0;
    std::vector<RocPoint> roc;  // FAR ascending
    double auc = 0.0;
    std::map<std::string, double> subset_rank1;
    std::map<std::string, int> subset_probes;
    int num_probes = 0;
    int num_gallery = 0;
};

enum class Protocol { kFirstScanGallery, kSubsetBreakdown };

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Identities ranked by their best cosine score against the probe,
/// descending, score ties broken by the lower identity label.
std::vector<std::pair<int, double>> identify(const Eigen::VectorXd& probe, const Gallery& gallery);

/// Threshold sweep over every distinct score (plus the +/- infinity
/// endpoints) when num_thresholds <= 0; otherwise an evenly thinned subset.
/// AUC by trapezoidal integration over FAR.
void roc_curve(const std::vector<double>& genuine, const std::vector<double>& impostor,
               int num_thresholds, EvalReport& report);

/// One embedding per scan in dataset order.
struct EmbeddingRecord {
    std::string source;
    int identity = -1;
    int expression = -1;
    Eigen::VectorXd embedding;
};

std::vector<EmbeddingRecord> embed_dataset(const std::vector<PointCloud>& dataset,
                                           FaceNetParams& params);

/// First-scan-per-identity gallery, the rest as probes; rank-1, full ROC from
/// probe-vs-gallery pairs, per-subset rank-1 when tags are given (one per
/// dataset entry, empty string = untagged).
EvalReport evaluate_embeddings(const std::vector<EmbeddingRecord>& records, Protocol protocol,
                               const std::vector<std::string>& subset_tags = {});

/// Embeds the dataset, then evaluates.
EvalReport evaluate_protocol(const std::vector<PointCloud>& dataset, FaceNetParams& params,
                             Protocol protocol, const std::vector<std::string>& subset_tags = {});

}  // namespace pointface

#endif  // POINTFACE_RECOGNITION_HPP
