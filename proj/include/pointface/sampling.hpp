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

#ifndef POINTFACE_SAMPLING_HPP
#define POINTFACE_SAMPLING_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "pointface/types.hpp"

namespace pointface {

/// Passing this as the region radius disables candidate filtering.
inline constexpr double kUnboundedRadius = std::numeric_limits<double>::infinity();

/// How the distances to the already-selected set are aggregated per candidate.
/// kMinDistance is standard farthest point sampling; kSumDistance maximizes
/// the summed distance instead.
enum class Aggregation { kMinDistance, kSumDistance };

/// Seed point rule: lowest candidate index, or the candidate nearest the
/// cloud's reference point (nose tip when present).
enum class StartRule { kIndexZero, kNoseTip };

struct SamplingConfig {
    int num_samples = 0;
    double lambda = 0.1;                       // curvature exponent
    double region_radius = kUnboundedRadius;   // candidate filter around the nose tip
    Aggregation aggregation = Aggregation::kMinDistance;
    StartRule start_rule = StartRule::kIndexZero;
};

struct SampleResult {
    std::vector<int> selected;               // in selection order, distinct
    std::vector<std::uint8_t> candidate_mask;
};

/// Candidate mask: true iff |p - nose_tip| <= r. Filtered points stay valid
/// grouping neighbors downstream; they just never become centroids. Throws if
/// the mask would be all-false.
std::vector<std::uint8_t> region_filter(const PointCloud& cloud, const Vec3& nose_tip, double r);

/// Farthest point sampling over the region-filtered candidates. The first
/// point follows config.start_rule; every later pick maximizes the aggregated
/// distance to the selected set, ties resolved by lower index. Uses positions
/// only; config.lambda is ignored.
SampleResult farthest_point_sampling(const PointCloud& cloud, const SamplingConfig& config);

/// Curvature-aware sampling: identical to FPS except each candidate's
/// aggregated distance is scaled by pow(candidate curvature, lambda) before
/// the argmax. lambda = 0 reproduces FPS index for index. Requires curvature.
SampleResult curvature_aware_sampling(const PointCloud& cloud, const SamplingConfig& config);

}  // namespace pointface

#endif  // POINTFACE_SAMPLING_HPP
