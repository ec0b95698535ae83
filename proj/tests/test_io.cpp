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

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pointface/cloud_io.hpp"
#include "pointface/features.hpp"
#include "pointface/morphable.hpp"
#include "pointface/tensor_file.hpp"
#include "testutil.hpp"

using namespace pointface;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "pointface_io_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cloud files round-trip bit-exactly") {
    auto dir = temp_dir();
    auto cloud = testutil::random_cloud(64, 5, 1.0, true);
    cloud = compute_features(cloud, 8);
    cloud.identity = 3;
    cloud.expression = 1;
    cloud.nose_tip_index = 12;

    auto p1 = dir / "cloud_a.xyz";
    auto p2 = dir / "cloud_b.xyz";
    write_cloud_file(cloud, p1);
    PointCloud loaded = read_cloud_file(p1);
    write_cloud_file(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));

    CHECK(*loaded.identity == 3);
    CHECK(*loaded.expression == 1);
    CHECK(*loaded.nose_tip_index == 12);
    CHECK(loaded.has_normals);
    CHECK(loaded.has_curvature);
    REQUIRE(loaded.size() == cloud.size());
    for (int i = 0; i < cloud.size(); ++i) {
        CHECK(loaded.points[static_cast<std::size_t>(i)].position ==
              cloud.points[static_cast<std::size_t>(i)].position);
        CHECK(loaded.points[static_cast<std::size_t>(i)].curvature ==
              cloud.points[static_cast<std::size_t>(i)].curvature);
    }
}

TEST_CASE("cloud parse errors carry the file and line number") {
    auto dir = temp_dir();
    auto path = dir / "bad.xyz";
    {
        std::ofstream out(path);
        out << "0 0 0 0 0 1 0\n";
        out << "not a number line\n";
    }
    try {
        read_cloud_file(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        std::string msg = e.what();
        CHECK(msg.find("bad.xyz:2") != std::string::npos);
    }

    auto path6 = dir / "six.xyz";
    {
        std::ofstream out(path6);
        out << "0 0 0 0 0 1\n";
    }
    CHECK_THROWS_AS(read_cloud_file(path6), FormatError);

    auto path_nose = dir / "nose.xyz";
    {
        std::ofstream out(path_nose);
        out << "# nose_tip_index=5\n";
        out << "0 0 0 0 0 1 0\n";
    }
    CHECK_THROWS_AS(read_cloud_file(path_nose), FormatError);
}

TEST_CASE("manifest round-trip and existence checks") {
    auto dir = temp_dir() / "manifest_case";
    fs::create_directories(dir);
    auto cloud = testutil::random_cloud(16, 2);
    write_cloud_file(cloud, dir / "c0.xyz");
    write_cloud_file(cloud, dir / "c1.xyz");

    DatasetManifest manifest;
    manifest.base_dir = dir;
    manifest.rows.push_back({"c0.xyz", 0, 0, "neutral"});
    manifest.rows.push_back({"c1.xyz", 1, 2, ""});
    auto p1 = dir / "m_a.csv";
    auto p2 = dir / "m_b.csv";
    write_manifest(manifest, p1);
    auto loaded = read_manifest(p1);
    write_manifest(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    REQUIRE(loaded.rows.size() == 2);
    CHECK(loaded.rows[0].subset == "neutral");
    CHECK(loaded.rows[1].identity == 1);

    auto clouds = load_manifest_clouds(loaded);
    CHECK(*clouds[1].identity == 1);
    CHECK(*clouds[1].expression == 2);

    DatasetManifest missing;
    missing.base_dir = dir;
    missing.rows.push_back({"nope.xyz", 0, 0, ""});
    auto p3 = dir / "m_missing.csv";
    write_manifest(missing, p3);
    CHECK_THROWS_AS(read_manifest(p3), FormatError);
}

TEST_CASE("tensor files round-trip bit-identically") {
    auto dir = temp_dir();
    TensorFile file;
    file.meta["kind"] = "test";
    file.tensors["a"] = Tensor{{2, 3}, {1.0, -2.5, 3.25, 0.0, 1e-308, -0.0}};
    file.tensors["b"] = Tensor{{4}, {0.1, 0.2, 0.3, 0.4}};
    auto p1 = dir / "t_a.bin";
    auto p2 = dir / "t_b.bin";
    file.save(p1);
    auto loaded = TensorFile::load(p1);
    loaded.save(p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.tensors.at("a").values == file.tensors.at("a").values);
    CHECK(loaded.meta.at("kind") == "test");
}

TEST_CASE("morphable model save/load preserves everything") {
    auto dir = temp_dir();
    auto model = make_toy_model(144, 5, 3, 7);
    auto path = dir / "model.bin";
    save_morphable_model(model, path);
    auto loaded = load_morphable_model(path);
    CHECK(loaded.mean_shape == model.mean_shape);
    CHECK(loaded.shape_basis == model.shape_basis);
    CHECK(loaded.expr_std == model.expr_std);
    CHECK(loaded.nose_tip_vertex == model.nose_tip_vertex);
    CHECK(loaded.orthonormality_error() < 1e-6);
}

TEST_CASE("network checkpoints reload to identical behavior") {
    auto dir = temp_dir();
    FaceNetConfig config;
    config.stages[0] = SetAbstractionConfig{6, 0.8, 4, {6, 8}};
    config.stages[1] = SetAbstractionConfig{3, 1.2, 3, {8, 10}};
    config.stages[2] = SetAbstractionConfig{0, 0.0, 0, {12, 14}};
    config.stages[2].group_all = true;
    config.embed_dim = 8;
    config.input_points = 24;
    config.set_sampler(SamplerKind::kCps, 0.1, 0.7);
    auto params = init_facenet(config, 4, 9);

    auto path = dir / "net.bin";
    save_facenet(params, path);
    auto loaded = load_facenet(path);

    auto ra = params.tensor_refs();
    auto rb = loaded.tensor_refs();
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].name == rb[i].name);
        CHECK(*ra[i].tensor == *rb[i].tensor);
    }
    CHECK(loaded.config.stages[0].region_radius == doctest::Approx(0.7));
    CHECK(loaded.config.stages[2].group_all);

    // Saving again is byte-identical.
    auto path2 = dir / "net2.bin";
    save_facenet(loaded, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("embeddings files round-trip") {
    auto dir = temp_dir();
    std::vector<EmbeddingRecord> records;
    for (int i = 0; i < 3; ++i) {
        EmbeddingRecord rec;
        rec.source = "s" + std::to_string(i);
        rec.identity = i;
        rec.expression = 2 - i;
        rec.embedding = Eigen::VectorXd::LinSpaced(8, -1.0, 1.0 + i);
        records.push_back(rec);
    }
    auto p1 = dir / "emb_a.csv";
    auto p2 = dir / "emb_b.csv";
    write_embeddings(records, p1);
    auto loaded = read_embeddings(p1);
    write_embeddings(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[1].identity == 1);
    CHECK(loaded[2].embedding == records[2].embedding);
}

TEST_CASE("report and csv writers emit deterministic text") {
    auto dir = temp_dir();
    EvalReport report;
    report.rank1 = 1.0;
    report.auc = 0.987654321;
    report.num_gallery = 5;
    report.num_probes = 10;
    report.subset_rank1["neutral"] = 0.5;
    report.subset_probes["neutral"] = 4;
    report.roc = {{0.0, 0.0}, {0.25, 0.9}, {1.0, 1.0}};

    auto rp = dir / "report.txt";
    write_report(report, rp);
    std::string text = slurp(rp);
    CHECK(text.find("rank1 = 1.0000") != std::string::npos);
    CHECK(text.find("auc = 0.987654") != std::string::npos);
    CHECK(text.find("subset neutral rank1 = 0.5000") != std::string::npos);

    auto roc_p = dir / "roc.csv";
    write_roc_csv(report.roc, roc_p);
    std::string roc_text = slurp(roc_p);
    CHECK(roc_text.rfind("far,tar\n", 0) == 0);

    std::vector<EpochStats> log = {{0, 2.5, 0.25}, {1, 1.25, 0.75}};
    auto loss_p = dir / "loss.csv";
    write_loss_csv(log, loss_p);
    CHECK(slurp(loss_p) == "epoch,loss,accuracy\n0,2.5,0.25\n1,1.25,0.75\n");
}
