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

#include "pointface/features.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "pointface/kdtree.hpp"

namespace pointface {

namespace {

struct LocalFrame {
    Vec3 eigenvalues;   // ascending, clamped to >= 0
    Vec3 normal;        // eigenvector of the smallest eigenvalue
    bool degenerate;    // rank of the neighborhood < 2
};

LocalFrame analyze_neighborhood(const std::vector<Vec3>& pts, const SpatialIndex& index, const Vec3& p, int k) {
    auto nn = index.k_nearest(p, k);
    Vec3 mean = Vec3::Zero();
    for (const auto& [idx, dist] : nn) mean += pts[static_cast<std::size_t>(idx)];
    mean /= static_cast<double>(k);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& [idx, dist] : nn) {
        Vec3 d = pts[static_cast<std::size_t>(idx)] - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(k);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    LocalFrame f;
    f.eigenvalues = es.eigenvalues().cwiseMax(0.0);
    f.normal = es.eigenvectors().col(0);
    f.degenerate = f.eigenvalues[2] <= 0.0 || f.eigenvalues[1] <= 1e-12 * f.eigenvalues[2];
    return f;
}

void check_args(const PointCloud& cloud, int k) {
    if (cloud.empty()) throw std::invalid_argument("empty cloud");
    if (k < 3) throw std::invalid_argument("need >=3 neighbors for a plane fit");
    if (k > cloud.size()) throw std::invalid_argument("k exceeds cloud size");
}

}  // namespace

PointCloud compute_features(const PointCloud& cloud, int k, const Vec3& viewpoint,
                            std::vector<std::uint8_t>* degenerate) {
    check_args(cloud, k);
    SpatialIndex index(cloud);
    std::vector<Vec3> pts;
    pts.reserve(cloud.points.size());
    for (const auto& p : cloud.points) pts.push_back(p.position);

    PointCloud out = cloud;
    if (degenerate) degenerate->assign(cloud.points.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        LocalFrame f = analyze_neighborhood(pts, index, pts[i], k);
        if (f.degenerate) {
            out.points[i].normal = Vec3(0, 0, 1);
            out.points[i].curvature = 0.0;
            if (degenerate) (*degenerate)[i] = 1;
            continue;
        }
        Vec3 n = f.normal;
        if (n.dot(viewpoint - pts[i]) < 0.0) n = -n;
        out.points[i].normal = n;
        out.points[i].curvature = f.eigenvalues[0] / f.eigenvalues.sum();
    }
    out.has_normals = true;
    out.has_curvature = true;
    return out;
}

PointCloud estimate_normals(const PointCloud& cloud, int k, const Vec3& viewpoint,
                            std::vector<std::uint8_t>* degenerate) {
    check_args(cloud, k);
    SpatialIndex index(cloud);
    std::vector<Vec3> pts;
    pts.reserve(cloud.points.size());
    for (const auto& p : cloud.points) pts.push_back(p.position);

    PointCloud out = cloud;
    if (degenerate) degenerate->assign(cloud.points.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        LocalFrame f = analyze_neighborhood(pts, index, pts[i], k);
        if (f.degenerate) {
            out.points[i].normal = Vec3(0, 0, 1);
            if (degenerate) (*degenerate)[i] = 1;
            continue;
        }
        Vec3 n = f.normal;
        if (n.dot(viewpoint - pts[i]) < 0.0) n = -n;
        out.points[i].normal = n;
    }
    out.has_normals = true;
    return out;
}

PointCloud estimate_curvature(const PointCloud& cloud, int k, std::vector<std::uint8_t>* degenerate) {
    check_args(cloud, k);
    SpatialIndex index(cloud);
    std::vector<Vec3> pts;
    pts.reserve(cloud.points.size());
    for (const auto& p : cloud.points) pts.push_back(p.position);

    PointCloud out = cloud;
    if (degenerate) degenerate->assign(cloud.points.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        LocalFrame f = analyze_neighborhood(pts, index, pts[i], k);
        if (f.degenerate) {
            out.points[i].curvature = 0.0;
            if (degenerate) (*degenerate)[i] = 1;
            continue;
        }
        out.points[i].curvature = f.eigenvalues[0] / f.eigenvalues.sum();
    }
    out.has_curvature = true;
    return out;
}

}  // namespace pointface
