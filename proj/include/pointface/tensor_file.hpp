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

// Binary container for named double tensors: an 8-byte magic, a length-
// prefixed JSON manifest (names, shapes, dtype, byte offsets, free-form
// meta), then the flat little-endian 64-bit float payload. Both the
// morphable-model file and the network checkpoint use it; round trips are
// bit-identical.

#ifndef POINTFACE_TENSOR_FILE_HPP
#define POINTFACE_TENSOR_FILE_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pointface/morphable.hpp"
#include "pointface/network.hpp"

namespace pointface {

/// Flat row-major tensor as stored on disk.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t s : shape) n *= s;
        return n;
    }
};

struct TensorFile {
    std::map<std::string, Tensor> tensors;  // sorted: deterministic layout
    nlohmann::json meta = nlohmann::json::object();

    void save(const std::filesystem::path& path) const;
    static TensorFile load(const std::filesystem::path& path);
};

Tensor tensor_from_matrix_rowmajor(const Eigen::MatrixXd& m);
Tensor tensor_from_matrix_colmajor(const Eigen::MatrixXd& m);
Tensor tensor_from_vector(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_tensor_rowmajor(const Tensor& t);
Eigen::MatrixXd matrix_from_tensor_colmajor(const Tensor& t);
Eigen::VectorXd vector_from_tensor(const Tensor& t);

/// Model file: mean/std/basis for both subspaces (bases column-major) plus
/// the nose tip vertex.
void save_morphable_model(const MorphableModel& model, const std::filesystem::path& path);
MorphableModel load_morphable_model(const std::filesystem::path& path);

/// Network checkpoint: every parameter tensor (row-major) plus the
/// architecture and pipeline settings in the manifest meta.
void save_facenet(FaceNetParams& params, const std::filesystem::path& path);
FaceNetParams load_facenet(const std::filesystem::path& path);

}  // namespace pointface

#endif  // POINTFACE_TENSOR_FILE_HPP
