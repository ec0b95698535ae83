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

#include "pointface/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace pointface {

namespace {

std::vector<std::uint8_t> candidate_mask_for(const PointCloud& cloud, const SamplingConfig& config) {
    if (std::isinf(config.region_radius)) return std::vector<std::uint8_t>(cloud.points.size(), 1);
    return region_filter(cloud, cloud.reference_point(), config.region_radius);
}

int pick_start(const PointCloud& cloud, const std::vector<std::uint8_t>& mask, StartRule rule) {
    if (rule == StartRule::kIndexZero) {
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) return static_cast<int>(i);
        return -1;
    }
    Vec3 ref = cloud.reference_point();
    int best = -1;
    double best_d2 = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        double d2 = (cloud.points[i].position - ref).squaredNorm();
        if (best < 0 || d2 < best_d2) {
            best = static_cast<int>(i);
            best_d2 = d2;
        }
    }
    return best;
}

// Shared greedy loop. `use_curvature` switches CPS scoring on; with it off (or
// lambda == 0) the score is exactly the aggregated distance, so CPS(lambda=0)
// is bit-identical to FPS.
SampleResult greedy_sample(const PointCloud& cloud, const SamplingConfig& config, bool use_curvature) {
    if (cloud.empty()) throw std::invalid_argument("empty cloud");
    if (config.num_samples <= 0) throw std::invalid_argument("num_samples must be positive");
    if (config.lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (use_curvature && !cloud.has_curvature)
        throw std::invalid_argument("run estimate_curvature first");

    SampleResult result;
    result.candidate_mask = candidate_mask_for(cloud, config);
    const auto& mask = result.candidate_mask;
    int num_candidates = 0;
    for (auto m : mask) num_candidates += m;
    if (config.num_samples > num_candidates)
        throw std::invalid_argument("num_samples exceeds candidate count");

    const int n = cloud.size();
    const bool weight = use_curvature && config.lambda != 0.0;
    std::vector<double> curv_pow(weight ? static_cast<std::size_t>(n) : 0);
    if (weight)
        for (int i = 0; i < n; ++i)
            curv_pow[static_cast<std::size_t>(i)] = std::pow(cloud.points[static_cast<std::size_t>(i)].curvature, config.lambda);

    const bool min_mode = config.aggregation == Aggregation::kMinDistance;
    std::vector<double> agg(static_cast<std::size_t>(n),
                            min_mode ? std::numeric_limits<double>::infinity() : 0.0);
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(n), 0);

    int current = pick_start(cloud, mask, config.start_rule);
    result.selected.push_back(current);
    taken[static_cast<std::size_t>(current)] = 1;

    while (static_cast<int>(result.selected.size()) < config.num_samples) {
        const Vec3& last = cloud.points[static_cast<std::size_t>(current)].position;
        int best = -1;
        double best_score = -1.0;
        for (int i = 0; i < n; ++i) {
            if (!mask[static_cast<std::size_t>(i)] || taken[static_cast<std::size_t>(i)]) {
                continue;
            }
            double d = (cloud.points[static_cast<std::size_t>(i)].position - last).norm();
            double& a = agg[static_cast<std::size_t>(i)];
            a = min_mode ? std::min(a, d) : a + d;
            double score = weight ? a * curv_pow[static_cast<std::size_t>(i)] : a;
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        current = best;
        result.selected.push_back(current);
        taken[static_cast<std::size_t>(current)] = 1;
    }
    return result;
}

}  // namespace

std::vector<std::uint8_t> region_filter(const PointCloud& cloud, const Vec3& nose_tip, double r) {
    if (cloud.empty()) throw std::invalid_argument("empty cloud");
    if (!(r > 0.0)) throw std::invalid_argument("region radius must be positive");
    std::vector<std::uint8_t> mask(cloud.points.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if ((cloud.points[i].position - nose_tip).norm() <= r) {
            mask[i] = 1;
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("region radius excludes every point");
    return mask;
}

SampleResult farthest_point_sampling(const PointCloud& cloud, const SamplingConfig& config) {
    return greedy_sample(cloud, config, /*use_curvature=*/false);
}

SampleResult curvature_aware_sampling(const PointCloud& cloud, const SamplingConfig& config) {
    return greedy_sample(cloud, config, /*use_curvature=*/true);
}

}  // namespace pointface
