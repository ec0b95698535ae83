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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "pointface/cloud_io.hpp"
#include "pointface/sampling.hpp"
#include "pointface/tensor_file.hpp"
#include "testutil.hpp"

using namespace pointface;
namespace fs = std::filesystem;

#ifndef POINTFACE_CLI_PATH
#define POINTFACE_CLI_PATH "pointface"
#endif

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(POINTFACE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "pointface_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("gen-model writes a loadable model with orthonormal bases") {
    auto dir = work_dir();
    auto out = dir / "gm.bin";
    REQUIRE(run_cli("gen-model --vertices 400 --shape-dims 8 --expr-dims 4 --seed 7 --out " +
                    out.string()) == 0);
    auto model = load_morphable_model(out);
    CHECK(model.orthonormality_error() < 1e-6);
    CHECK(model.vertex_count == 400);

    // Same flags twice: byte-identical.
    auto out2 = dir / "gm2.bin";
    REQUIRE(run_cli("gen-model --vertices 400 --shape-dims 8 --expr-dims 4 --seed 7 --out " +
                    out2.string()) == 0);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("gen-model rejects infeasible dimensions with a non-zero exit") {
    auto dir = work_dir();
    CHECK(run_cli("gen-model --vertices 100 --shape-dims 400 --expr-dims 4 --seed 1 --out " +
                  (dir / "bad.bin").string()) == 1);
}

TEST_CASE("gen-faces emits ids x exprs clouds plus a manifest") {
    auto dir = work_dir() / "faces_case";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto model_path = dir / "m.bin";
    REQUIRE(run_cli("gen-model --vertices 400 --shape-dims 6 --expr-dims 3 --seed 2 --out " +
                    model_path.string()) == 0);
    REQUIRE(run_cli("gen-faces --model " + model_path.string() +
                    " --ids 3 --exprs 2 --noise 0 --seed 4 --out-dir " + (dir / "out").string()) == 0);
    auto manifest = read_manifest(dir / "out" / "manifest.csv");
    CHECK(manifest.rows.size() == 6);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "out"))
        if (entry.path().extension() == ".xyz") ++files;
    CHECK(files == 6);
}

TEST_CASE("features on a planar cloud writes near-zero curvature") {
    auto dir = work_dir();
    PointCloud plane;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    plane.points.resize(200);
    for (auto& p : plane.points) p.position = Vec3(coord(rng), coord(rng), 0.0);
    auto in = dir / "plane.xyz";
    auto out = dir / "plane_f.xyz";
    write_cloud_file(plane, in);
    REQUIRE(run_cli("features --in " + in.string() + " --out " + out.string() + " --k 12") == 0);
    auto featured = read_cloud_file(out);
    for (const auto& p : featured.points) CHECK(p.curvature < 1e-6);
}

TEST_CASE("sample with lambda 0 matches a reference FPS run index for index") {
    auto dir = work_dir();
    auto cloud = testutil::random_cloud(300, 77, 1.0, true);
    cloud.nose_tip_index = 5;
    auto in = dir / "s.xyz";
    write_cloud_file(cloud, in);
    auto out = dir / "sel.xyz";
    auto idx_csv = dir / "sel_idx.csv";
    REQUIRE(run_cli("sample --in " + in.string() + " --n 40 --lambda 0 --r 0.7 --out " +
                    out.string() + " --indices-out " + idx_csv.string()) == 0);

    // Reference: the library FPS over the same normalized cloud.
    PointCloud loaded = read_cloud_file(in);
    PointCloud normed = normalize_cloud(loaded);
    SamplingConfig config;
    config.num_samples = 40;
    config.lambda = 0.0;
    config.region_radius = 0.7;
    config.start_rule = StartRule::kNoseTip;
    auto want = farthest_point_sampling(normed, config).selected;

    std::ifstream idx_in(idx_csv);
    std::string line;
    std::getline(idx_in, line);
    CHECK(line == "index");
    std::vector<int> got;
    while (std::getline(idx_in, line))
        if (!line.empty()) got.push_back(std::stoi(line));
    CHECK(got == want);

    // The subset cloud holds the selected points in original coordinates.
    auto subset = read_cloud_file(out);
    REQUIRE(subset.size() == 40);
    for (int j = 0; j < 40; ++j)
        CHECK(subset.points[static_cast<std::size_t>(j)].position ==
              cloud.points[static_cast<std::size_t>(want[static_cast<std::size_t>(j)])].position);
}

TEST_CASE("train writes a finite decreasing loss curve and a loadable checkpoint") {
    auto dir = work_dir() / "train_case";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(run_cli("gen-model --vertices 400 --shape-dims 6 --expr-dims 3 --seed 2 --out " +
                    (dir / "m.bin").string()) == 0);
    REQUIRE(run_cli("gen-faces --model " + (dir / "m.bin").string() +
                    " --ids 5 --exprs 4 --noise 0 --seed 4 --out-dir " + (dir / "faces").string()) == 0);
    REQUIRE(run_cli("features --manifest " + (dir / "faces" / "manifest.csv").string() +
                    " --out-dir " + (dir / "feat").string() + " --k 20") == 0);
    REQUIRE(run_cli("train --manifest " + (dir / "feat" / "manifest.csv").string() +
                    " --epochs 6 --batch 10 --points 1024 --preset small --seed 3 --out " +
                    (dir / "ckpt.bin").string()) == 0);

    std::ifstream loss_in(dir / "ckpt.bin.loss.csv");
    std::string line;
    std::getline(loss_in, line);
    CHECK(line == "epoch,loss,accuracy");
    std::vector<double> losses;
    while (std::getline(loss_in, line)) {
        if (line.empty()) continue;
        auto first_comma = line.find(',');
        auto second_comma = line.find(',', first_comma + 1);
        losses.push_back(std::stod(line.substr(first_comma + 1, second_comma - first_comma - 1)));
    }
    REQUIRE(losses.size() == 6);
    for (double l : losses) CHECK(std::isfinite(l));
    CHECK(losses.back() < losses.front());

    auto params = load_facenet(dir / "ckpt.bin");
    CHECK(params.num_classes() == 5);
    CHECK(params.config.input_points == 1024);
}

TEST_CASE("finetune on single-scan identities names the triplet precondition") {
    auto dir = work_dir() / "ft_case";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(run_cli("gen-model --vertices 400 --shape-dims 6 --expr-dims 3 --seed 2 --out " +
                    (dir / "m.bin").string()) == 0);
    REQUIRE(run_cli("gen-faces --model " + (dir / "m.bin").string() +
                    " --ids 4 --exprs 2 --noise 0 --seed 4 --out-dir " + (dir / "faces").string()) == 0);
    REQUIRE(run_cli("features --manifest " + (dir / "faces" / "manifest.csv").string() +
                    " --out-dir " + (dir / "feat").string() + " --k 20") == 0);
    REQUIRE(run_cli("train --manifest " + (dir / "feat" / "manifest.csv").string() +
                    " --epochs 2 --batch 8 --points 1024 --preset small --seed 3 --out " +
                    (dir / "ckpt.bin").string()) == 0);

    // Single scan per identity: drop every expression but the first.
    auto manifest = read_manifest(dir / "feat" / "manifest.csv");
    DatasetManifest singles;
    singles.base_dir = manifest.base_dir;
    for (const auto& row : manifest.rows)
        if (row.expression == 0) singles.rows.push_back(row);
    write_manifest(singles, dir / "feat" / "singles.csv");

    std::string cmd = std::string(POINTFACE_CLI_PATH) + " finetune --checkpoint " +
                      (dir / "ckpt.bin").string() + " --manifest " +
                      (dir / "feat" / "singles.csv").string() + " --steps 5 --out " +
                      (dir / "t.bin").string() + " 2> " + (dir / "err.txt").string();
    int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 1);
    std::string err = slurp(dir / "err.txt");
    CHECK(err.find("need >=2 scans of one identity") != std::string::npos);
}

TEST_CASE("evaluate reproduces rank-1 of 1 on duplicated probes and re-integrates its own ROC") {
    auto dir = work_dir() / "eval_case";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::vector<EmbeddingRecord> records;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    for (int id = 0; id < 4; ++id) {
        EmbeddingRecord rec;
        rec.identity = id;
        rec.expression = 0;
        rec.source = "g" + std::to_string(id);
        rec.embedding.resize(16);
        for (int i = 0; i < 16; ++i) rec.embedding[i] = gauss(rng);
        rec.embedding.normalize();
        records.push_back(rec);
        rec.expression = 1;
        rec.source = "p" + std::to_string(id);
        records.push_back(rec);  // probe duplicates its gallery embedding
    }
    write_embeddings(records, dir / "emb.csv");

    REQUIRE(run_cli("evaluate --embeddings " + (dir / "emb.csv").string() +
                    " --protocol first_scan_gallery --out-report " + (dir / "rep.txt").string() +
                    " --roc-csv " + (dir / "roc.csv").string()) == 0);
    std::string report = slurp(dir / "rep.txt");
    CHECK(report.find("rank1 = 1.0000") != std::string::npos);

    // Evaluate twice: identical reports.
    REQUIRE(run_cli("evaluate --embeddings " + (dir / "emb.csv").string() +
                    " --protocol first_scan_gallery --out-report " + (dir / "rep2.txt").string() +
                    " --roc-csv " + (dir / "roc2.csv").string()) == 0);
    CHECK(slurp(dir / "rep.txt") == slurp(dir / "rep2.txt"));
    CHECK(slurp(dir / "roc.csv") == slurp(dir / "roc2.csv"));

    // Re-integrate the emitted ROC and compare against the library AUC.
    std::ifstream roc_in(dir / "roc.csv");
    std::string line;
    std::getline(roc_in, line);
    REQUIRE(line == "far,tar");
    std::vector<RocPoint> points;
    while (std::getline(roc_in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        points.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        auc += (points[i].far - points[i - 1].far) * (points[i].tar + points[i - 1].tar) / 2.0;
    auto loaded = read_embeddings(dir / "emb.csv");
    auto expect = evaluate_embeddings(loaded, Protocol::kFirstScanGallery);
    CHECK(std::abs(auc - expect.auc) < 1e-9);
}

TEST_CASE("evaluate requires subset tags for the breakdown protocol") {
    auto dir = work_dir() / "subset_case";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(run_cli("gen-model --vertices 400 --shape-dims 6 --expr-dims 3 --seed 2 --out " +
                    (dir / "m.bin").string()) == 0);
    REQUIRE(run_cli("gen-faces --model " + (dir / "m.bin").string() +
                    " --ids 3 --exprs 2 --noise 0 --seed 4 --out-dir " + (dir / "faces").string()) == 0);
    REQUIRE(run_cli("features --manifest " + (dir / "faces" / "manifest.csv").string() +
                    " --out-dir " + (dir / "feat").string() + " --k 20") == 0);
    REQUIRE(run_cli("train --manifest " + (dir / "feat" / "manifest.csv").string() +
                    " --epochs 2 --batch 6 --points 1024 --preset small --seed 3 --out " +
                    (dir / "ckpt.bin").string()) == 0);
    CHECK(run_cli("evaluate --checkpoint " + (dir / "ckpt.bin").string() + " --manifest " +
                  (dir / "feat" / "manifest.csv").string() +
                  " --protocol subset_breakdown --out-report " + (dir / "rep.txt").string()) == 2);

    // Tag the manifest and retry.
    auto manifest = read_manifest(dir / "feat" / "manifest.csv");
    for (auto& row : manifest.rows) row.subset = row.expression == 0 ? "neutral" : "expressive";
    write_manifest(manifest, dir / "feat" / "tagged.csv");
    REQUIRE(run_cli("evaluate --checkpoint " + (dir / "ckpt.bin").string() + " --manifest " +
                    (dir / "feat" / "tagged.csv").string() +
                    " --protocol subset_breakdown --out-report " + (dir / "rep.txt").string()) == 0);
    std::string report = slurp(dir / "rep.txt");
    CHECK(report.find("subset expressive rank1") != std::string::npos);
}
