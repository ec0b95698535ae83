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

#ifndef POINTFACE_MORPHABLE_HPP
#define POINTFACE_MORPHABLE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "pointface/types.hpp"

namespace pointface {

/// Linear statistical face model: separate shape and expression subspaces
/// with orthonormal bases, stored as flat 3m vectors with interleaved xyz.
struct MorphableModel {
    Eigen::VectorXd mean_shape;   // 3m
    Eigen::VectorXd shape_std;    // n_s, positive
    Eigen::MatrixXd shape_basis;  // 3m x n_s, orthonormal columns
    Eigen::VectorXd mean_expr;    // 3m
    Eigen::VectorXd expr_std;     // n_e, positive
    Eigen::MatrixXd expr_basis;   // 3m x n_e, orthonormal columns
    int vertex_count = 0;
    int nose_tip_vertex = 0;

    int shape_dims() const { return static_cast<int>(shape_std.size()); }
    int expr_dims() const { return static_cast<int>(expr_std.size()); }

    /// max |U^T U - I| over both bases.
    double orthonormality_error() const;
};

struct FaceCoefficients {
    Eigen::VectorXd alpha;  // identity
    Eigen::VectorXd beta;   // expression
};

/// Builds a desk-scale synthetic model: mean shape is a smooth face-like dome
/// sampled on an m-vertex grid with a protruding nose, bases are orthonormal
/// low-frequency displacement fields, stds decay geometrically. Deterministic
/// per seed.
MorphableModel make_toy_model(int vertex_count, int n_s, int n_e, std::uint64_t seed);

/// positions = mean_shape + mean_expr + U_s diag(s_s) alpha + U_e diag(s_e) beta.
/// Labels are unset; nose_tip_index is copied from the model.
PointCloud synthesize(const MorphableModel& model, const FaceCoefficients& coeffs);

/// All identity/expression coefficients for a generated dataset, drawn
/// up-front from one seeded stream: first num_identities alpha vectors, then
/// num_expressions beta vectors.
struct DatasetCoefficients {
    std::vector<Eigen::VectorXd> alphas;
    std::vector<Eigen::VectorXd> betas;
};
DatasetCoefficients draw_dataset_coefficients(const MorphableModel& model, int num_identities,
                                              int num_expressions, std::uint64_t seed);

/// One labeled cloud per (identity, expression) pair with optional isotropic
/// Gaussian position noise. Noise streams are derived per pair, so any subset
/// may be generated in any order with identical results.
PointCloud generate_face(const MorphableModel& model, const DatasetCoefficients& coeffs,
                         int identity, int expression, std::uint64_t seed, double noise_std);

/// The full cartesian product, identity-major.
std::vector<PointCloud> generate_dataset(const MorphableModel& model, int num_identities,
                                         int num_expressions, std::uint64_t seed, double noise_std);

/// Streaming variant for scales where the full dataset does not fit in memory.
void for_each_generated_face(const MorphableModel& model, int num_identities, int num_expressions,
                             std::uint64_t seed, double noise_std,
                             const std::function<void(const PointCloud&)>& fn);

}  // namespace pointface

#endif  // POINTFACE_MORPHABLE_HPP
