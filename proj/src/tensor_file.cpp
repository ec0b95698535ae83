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

#include "pointface/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pointface/io_error.hpp"

namespace pointface {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'T', 'E', 'N', 'S', '1', '\n'};

void write_u64_le(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles_le(std::ostream& out, const std::vector<double>& values) {
    for (double d : values) write_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

std::vector<double> read_doubles_le(std::istream& in, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<double>(read_u64_le(in));
    return out;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw FormatError(path.string() + ": " + what);
}

nlohmann::json radius_to_json(double r) {
    if (std::isinf(r)) return "unbounded";
    return r;
}

double radius_from_json(const nlohmann::json& j) {
    if (j.is_string()) return kUnboundedRadius;
    return j.get<double>();
}

}  // namespace

void TensorFile::save(const std::filesystem::path& path) const {
    nlohmann::json manifest;
    manifest["meta"] = meta;
    manifest["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : tensors) {
        if (tensor.values.size() != tensor.element_count())
            fail(path, "tensor '" + name + "' value count does not match its shape");
        nlohmann::json entry;
        entry["name"] = name;
        entry["shape"] = tensor.shape;
        entry["dtype"] = "f64";
        entry["offset"] = offset;
        manifest["tensors"].push_back(entry);
        offset += tensor.values.size() * sizeof(double);
    }
    std::string manifest_text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u64_le(out, manifest_text.size());
    out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
    for (const auto& [name, tensor] : tensors) write_doubles_le(out, tensor.values);
    if (!out) fail(path, "write failed");
}

TensorFile TensorFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) fail(path, "not a tensor file (bad magic)");
    std::uint64_t len = read_u64_le(in);
    std::string manifest_text(len, '\0');
    in.read(manifest_text.data(), static_cast<std::streamsize>(len));
    if (!in) fail(path, "truncated manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::exception& e) {
        fail(path, std::string("manifest parse error: ") + e.what());
    }

    TensorFile file;
    file.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& entry : manifest.at("tensors")) {
        Tensor t;
        t.shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (entry.at("dtype").get<std::string>() != "f64") fail(path, "unsupported dtype");
        t.values = read_doubles_le(in, t.element_count());
        if (!in) fail(path, "truncated payload");
        file.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
    }
    return file;
}

Tensor tensor_from_matrix_rowmajor(const Eigen::MatrixXd& m) {
    Tensor t;
    t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    t.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) t.values.push_back(m(i, j));
    return t;
}

Tensor tensor_from_matrix_colmajor(const Eigen::MatrixXd& m) {
    Tensor t;
    t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    t.values.assign(m.data(), m.data() + m.size());
    return t;
}

Tensor tensor_from_vector(const Eigen::VectorXd& v) {
    Tensor t;
    t.shape = {static_cast<std::size_t>(v.size())};
    t.values.assign(v.data(), v.data() + v.size());
    return t;
}

Eigen::MatrixXd matrix_from_tensor_rowmajor(const Tensor& t) {
    if (t.shape.size() != 2) throw std::runtime_error("expected a rank-2 tensor");
    Eigen::MatrixXd m(t.shape[0], t.shape[1]);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = t.values[k++];
    return m;
}

Eigen::MatrixXd matrix_from_tensor_colmajor(const Tensor& t) {
    if (t.shape.size() != 2) throw std::runtime_error("expected a rank-2 tensor");
    return Eigen::Map<const Eigen::MatrixXd>(t.values.data(), static_cast<Eigen::Index>(t.shape[0]),
                                             static_cast<Eigen::Index>(t.shape[1]));
}

Eigen::VectorXd vector_from_tensor(const Tensor& t) {
    if (t.shape.size() != 1) throw std::runtime_error("expected a rank-1 tensor");
    return Eigen::Map<const Eigen::VectorXd>(t.values.data(), static_cast<Eigen::Index>(t.shape[0]));
}

void save_morphable_model(const MorphableModel& model, const std::filesystem::path& path) {
    TensorFile file;
    file.meta["kind"] = "morphable_model";
    file.meta["vertex_count"] = model.vertex_count;
    file.tensors["mean_shape"] = tensor_from_vector(model.mean_shape);
    file.tensors["shape_std"] = tensor_from_vector(model.shape_std);
    file.tensors["shape_basis"] = tensor_from_matrix_colmajor(model.shape_basis);
    file.tensors["mean_expr"] = tensor_from_vector(model.mean_expr);
    file.tensors["expr_std"] = tensor_from_vector(model.expr_std);
    file.tensors["expr_basis"] = tensor_from_matrix_colmajor(model.expr_basis);
    file.tensors["nose_tip_vertex"] =
        Tensor{{1}, {static_cast<double>(model.nose_tip_vertex)}};
    file.save(path);
}

MorphableModel load_morphable_model(const std::filesystem::path& path) {
    TensorFile file = TensorFile::load(path);
    if (file.meta.value("kind", "") != "morphable_model")
        fail(path, "not a morphable model file");
    MorphableModel model;
    model.vertex_count = file.meta.at("vertex_count").get<int>();
    model.mean_shape = vector_from_tensor(file.tensors.at("mean_shape"));
    model.shape_std = vector_from_tensor(file.tensors.at("shape_std"));
    model.shape_basis = matrix_from_tensor_colmajor(file.tensors.at("shape_basis"));
    model.mean_expr = vector_from_tensor(file.tensors.at("mean_expr"));
    model.expr_std = vector_from_tensor(file.tensors.at("expr_std"));
    model.expr_basis = matrix_from_tensor_colmajor(file.tensors.at("expr_basis"));
    model.nose_tip_vertex = static_cast<int>(file.tensors.at("nose_tip_vertex").values.at(0));
    if (model.mean_shape.size() != 3 * model.vertex_count) fail(path, "inconsistent dimensions");
    return model;
}

namespace {

nlohmann::json stage_to_json(const SetAbstractionConfig& s) {
    nlohmann::json j;
    j["num_centroids"] = s.num_centroids;
    j["ball_radius"] = s.ball_radius;
    j["max_group_size"] = s.max_group_size;
    j["mlp_widths"] = s.mlp_widths;
    j["sampler"] = s.sampler == SamplerKind::kCps ? "cps" : "fps";
    j["lambda"] = s.lambda;
    j["region_radius"] = radius_to_json(s.region_radius);
    j["aggregation"] = s.aggregation == Aggregation::kMinDistance ? "min" : "sum";
    j["start_rule"] = s.start_rule == StartRule::kNoseTip ? "nose_tip" : "index_zero";
    j["group_all"] = s.group_all;
    return j;
}

SetAbstractionConfig stage_from_json(const nlohmann::json& j) {
    SetAbstractionConfig s;
    s.num_centroids = j.at("num_centroids").get<int>();
    s.ball_radius = j.at("ball_radius").get<double>();
    s.max_group_size = j.at("max_group_size").get<int>();
    s.mlp_widths = j.at("mlp_widths").get<std::vector<int>>();
    s.sampler = j.at("sampler").get<std::string>() == "cps" ? SamplerKind::kCps : SamplerKind::kFps;
    s.lambda = j.at("lambda").get<double>();
    s.region_radius = radius_from_json(j.at("region_radius"));
    s.aggregation = j.at("aggregation").get<std::string>() == "min" ? Aggregation::kMinDistance
                                                                    : Aggregation::kSumDistance;
    s.start_rule = j.at("start_rule").get<std::string>() == "nose_tip" ? StartRule::kNoseTip
                                                                       : StartRule::kIndexZero;
    s.group_all = j.at("group_all").get<bool>();
    return s;
}

}  // namespace

void save_facenet(FaceNetParams& params, const std::filesystem::path& path) {
    TensorFile file;
    file.meta["kind"] = "facenet";
    file.meta["embed_dim"] = params.config.embed_dim;
    file.meta["input_points"] = params.config.input_points;
    file.meta["resample_seed"] = params.config.resample_seed;
    file.meta["num_classes"] = params.num_classes();
    file.meta["stages"] = nlohmann::json::array();
    for (const auto& stage : params.config.stages) file.meta["stages"].push_back(stage_to_json(stage));

    for (const auto& ref : params.tensor_refs())
        file.tensors[ref.name] = tensor_from_matrix_rowmajor(*ref.tensor);
    file.save(path);
}

FaceNetParams load_facenet(const std::filesystem::path& path) {
    TensorFile file = TensorFile::load(path);
    if (file.meta.value("kind", "") != "facenet") fail(path, "not a network checkpoint");

    FaceNetConfig config;
    config.embed_dim = file.meta.at("embed_dim").get<int>();
    config.input_points = file.meta.at("input_points").get<int>();
    config.resample_seed = file.meta.at("resample_seed").get<std::uint64_t>();
    for (int s = 0; s < 3; ++s)
        config.stages[static_cast<std::size_t>(s)] = stage_from_json(file.meta.at("stages").at(s));

    FaceNetParams params = init_facenet(config, file.meta.at("num_classes").get<int>(), 0);
    for (const auto& ref : params.tensor_refs()) {
        auto it = file.tensors.find(ref.name);
        if (it == file.tensors.end()) fail(path, "missing tensor '" + ref.name + "'");
        Eigen::MatrixXd loaded = matrix_from_tensor_rowmajor(it->second);
        if (loaded.rows() != ref.tensor->rows() || loaded.cols() != ref.tensor->cols())
            fail(path, "tensor '" + ref.name + "' has an unexpected shape");
        *ref.tensor = std::move(loaded);
    }
    return params;
}

}  // namespace pointface
