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

// Command-line surface for the full pipeline: toy model generation, face
// synthesis, feature estimation, sampling, training, fine-tuning, embedding
// and evaluation. Every command is deterministic under fixed seeds.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "pointface/cloud_io.hpp"
#include "pointface/features.hpp"
#include "pointface/morphable.hpp"
#include "pointface/recognition.hpp"
#include "pointface/sampling.hpp"
#include "pointface/tensor_file.hpp"
#include "pointface/train.hpp"

namespace fs = std::filesystem;
using namespace pointface;

namespace {

double parse_radius(const std::string& text) {
    if (text == "unbounded" || text == "inf" || text == "all") return kUnboundedRadius;
    double value = std::stod(text);
    if (value <= 0.0) throw CLI::ValidationError("--r must be positive or 'unbounded'");
    return value;
}

std::string face_filename(int identity, int expression) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "face_i%05d_e%03d.xyz", identity, expression);
    return buf;
}

FaceNetConfig config_from_flags(const std::string& preset, int points, const std::string& sampler,
                                double lambda, const std::string& radius_text, std::uint64_t seed) {
    FaceNetConfig config = preset == "desk" ? FaceNetConfig::desk() : FaceNetConfig::small();
    config.input_points = points;
    config.resample_seed = seed;
    config.set_sampler(sampler == "fps" ? SamplerKind::kFps : SamplerKind::kCps, lambda,
                       parse_radius(radius_text));
    return config;
}

std::vector<EmbeddingRecord> embed_manifest(const fs::path& manifest_path, FaceNetParams& params) {
    DatasetManifest manifest = read_manifest(manifest_path);
    auto clouds = load_manifest_clouds(manifest);
    std::vector<EmbeddingRecord> records;
    records.reserve(clouds.size());
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        EmbeddingRecord rec;
        rec.source = manifest.rows[i].path;
        rec.identity = manifest.rows[i].identity;
        rec.expression = manifest.rows[i].expression;
        rec.embedding = embed_cloud(clouds[i], params, static_cast<std::uint64_t>(i));
        records.push_back(std::move(rec));
    }
    return records;
}

int run(int argc, char** argv) {
    CLI::App app{"point-cloud face recognition toolkit"};
    app.require_subcommand(1);

    // ---- gen-model ----
    auto* gen_model = app.add_subcommand("gen-model", "generate a toy morphable model");
    int gm_vertices = 1024, gm_shape_dims = 20, gm_expr_dims = 10;
    std::uint64_t gm_seed = 7;
    std::string gm_out;
    gen_model->add_option("--vertices", gm_vertices, "vertex count");
    gen_model->add_option("--shape-dims", gm_shape_dims, "identity basis size");
    gen_model->add_option("--expr-dims", gm_expr_dims, "expression basis size");
    gen_model->add_option("--seed", gm_seed, "random seed");
    gen_model->add_option("--out", gm_out, "output model file")->required();
    gen_model->callback([&] {
        MorphableModel model = make_toy_model(gm_vertices, gm_shape_dims, gm_expr_dims, gm_seed);
        save_morphable_model(model, gm_out);
        std::cout << "model: " << model.vertex_count << " vertices, " << model.shape_dims()
                  << " shape dims, " << model.expr_dims() << " expression dims, nose tip vertex "
                  << model.nose_tip_vertex << "\n";
    });

    // ---- gen-faces ----
    auto* gen_faces = app.add_subcommand("gen-faces", "synthesize labeled face clouds");
    std::string gf_model, gf_out_dir;
    int gf_ids = 10, gf_exprs = 5;
    double gf_noise = 0.0;
    std::uint64_t gf_seed = 1;
    gen_faces->add_option("--model", gf_model, "morphable model file")->required();
    gen_faces->add_option("--ids", gf_ids, "number of identities");
    gen_faces->add_option("--exprs", gf_exprs, "expressions per identity");
    gen_faces->add_option("--noise", gf_noise, "position noise std");
    gen_faces->add_option("--seed", gf_seed, "random seed");
    gen_faces->add_option("--out-dir", gf_out_dir, "output directory")->required();
    gen_faces->callback([&] {
        MorphableModel model = load_morphable_model(gf_model);
        fs::create_directories(gf_out_dir);
        DatasetManifest manifest;
        manifest.base_dir = gf_out_dir;
        for_each_generated_face(model, gf_ids, gf_exprs, gf_seed, gf_noise,
                                [&](const PointCloud& cloud) {
                                    std::string name = face_filename(*cloud.identity, *cloud.expression);
                                    write_cloud_file(cloud, fs::path(gf_out_dir) / name);
                                    manifest.rows.push_back(
                                        {name, *cloud.identity, *cloud.expression, ""});
                                });
        write_manifest(manifest, fs::path(gf_out_dir) / "manifest.csv");
        std::cout << "wrote " << manifest.rows.size() << " clouds + manifest to " << gf_out_dir
                  << "\n";
    });

    // ---- features ----
    auto* features = app.add_subcommand("features", "estimate normals and curvature");
    std::string ft_in, ft_out, ft_manifest, ft_out_dir;
    int ft_k = kDefaultFeatureNeighbors;
    features->add_option("--in", ft_in, "input cloud file");
    features->add_option("--out", ft_out, "output cloud file");
    features->add_option("--manifest", ft_manifest, "process every cloud in a manifest");
    features->add_option("--out-dir", ft_out_dir, "output directory for manifest mode");
    features->add_option("--k", ft_k, "neighborhood size");
    features->callback([&] {
        if (!ft_manifest.empty()) {
            if (ft_out_dir.empty())
                throw CLI::ValidationError("--manifest mode requires --out-dir");
            DatasetManifest manifest = read_manifest(ft_manifest);
            fs::create_directories(ft_out_dir);
            auto clouds = load_manifest_clouds(manifest);
            for (std::size_t i = 0; i < clouds.size(); ++i) {
                PointCloud featured = compute_features(clouds[i], ft_k);
                write_cloud_file(featured, fs::path(ft_out_dir) / manifest.rows[i].path);
            }
            DatasetManifest out_manifest = manifest;
            out_manifest.base_dir = ft_out_dir;
            write_manifest(out_manifest, fs::path(ft_out_dir) / "manifest.csv");
            std::cout << "featured " << clouds.size() << " clouds into " << ft_out_dir << "\n";
            return;
        }
        if (ft_in.empty() || ft_out.empty())
            throw CLI::ValidationError("need --in and --out, or --manifest and --out-dir");
        PointCloud cloud = read_cloud_file(ft_in);
        write_cloud_file(compute_features(cloud, ft_k), ft_out);
        std::cout << "featured " << cloud.size() << " points\n";
    });

    // ---- sample ----
    auto* sample = app.add_subcommand("sample", "curvature-aware / farthest point sampling");
    std::string sm_in, sm_out, sm_indices, sm_r = "0.7", sm_agg = "min", sm_start = "nose_tip";
    int sm_n = 512;
    double sm_lambda = 0.1;
    sample->add_option("--in", sm_in, "input cloud file")->required();
    sample->add_option("--n", sm_n, "points to select");
    sample->add_option("--lambda", sm_lambda, "curvature exponent (0 = plain FPS)");
    sample->add_option("--r", sm_r, "candidate region radius (normalized units) or 'unbounded'");
    sample->add_option("--aggregation", sm_agg, "min or sum")
        ->check(CLI::IsMember({"min", "sum"}));
    sample->add_option("--start", sm_start, "start rule")
        ->check(CLI::IsMember({"nose_tip", "index_zero"}));
    sample->add_option("--out", sm_out, "selected subset cloud file")->required();
    sample->add_option("--indices-out", sm_indices, "index CSV (default: <out>.indices.csv)");
    sample->callback([&] {
        PointCloud cloud = read_cloud_file(sm_in);
        PointCloud normed = normalize_cloud(cloud);
        SamplingConfig config;
        config.num_samples = sm_n;
        config.lambda = sm_lambda;
        config.region_radius = parse_radius(sm_r);
        config.aggregation = sm_agg == "min" ? Aggregation::kMinDistance : Aggregation::kSumDistance;
        config.start_rule = sm_start == "nose_tip" ? StartRule::kNoseTip : StartRule::kIndexZero;
        SampleResult result = sm_lambda == 0.0 ? farthest_point_sampling(normed, config)
                                               : curvature_aware_sampling(normed, config);

        PointCloud subset;
        subset.identity = cloud.identity;
        subset.expression = cloud.expression;
        for (std::size_t j = 0; j < result.selected.size(); ++j) {
            int idx = result.selected[j];
            subset.points.push_back(cloud.points[static_cast<std::size_t>(idx)]);
            if (cloud.nose_tip_index && idx == *cloud.nose_tip_index)
                subset.nose_tip_index = static_cast<int>(j);
        }
        write_cloud_file(subset, sm_out);
        std::string indices_path = sm_indices.empty() ? sm_out + ".indices.csv" : sm_indices;
        write_indices_csv(result.selected, indices_path);
        std::cout << "selected " << result.selected.size() << " of " << cloud.size() << " points\n";
    });

    // ---- train ----
    auto* train = app.add_subcommand("train", "classification pre-training");
    std::string tr_manifest, tr_out, tr_loss_csv, tr_sampler = "cps", tr_r = "0.7",
                tr_margin_form = "additive", tr_preset = "desk";
    TrainConfig tr_config;
    tr_config.epochs = 60;
    int tr_points = 4096;
    double tr_lambda = 0.1;
    train->add_option("--manifest", tr_manifest, "training manifest")->required();
    train->add_option("--epochs", tr_config.epochs, "training epochs");
    train->add_option("--batch", tr_config.batch_size, "batch size");
    train->add_option("--lr", tr_config.learning_rate, "initial learning rate");
    train->add_option("--lr-decay-epochs", tr_config.lr_decay_epochs, "decay interval");
    train->add_option("--scale", tr_config.scale, "cosine scale s");
    train->add_option("--margin", tr_config.margin, "angular margin");
    train->add_option("--margin-form", tr_margin_form, "additive or multiplicative")
        ->check(CLI::IsMember({"additive", "multiplicative"}));
    train->add_option("--points", tr_points, "network input point count");
    train->add_option("--sampler", tr_sampler, "fps or cps")->check(CLI::IsMember({"fps", "cps"}));
    train->add_option("--lambda", tr_lambda, "CPS curvature exponent");
    train->add_option("--r", tr_r, "candidate region radius or 'unbounded'");
    train->add_option("--preset", tr_preset, "architecture preset")
        ->check(CLI::IsMember({"desk", "small"}));
    train->add_option("--seed", tr_config.seed, "random seed");
    train->add_option("--out", tr_out, "checkpoint file")->required();
    train->add_option("--loss-csv", tr_loss_csv, "loss log (default: <out>.loss.csv)");
    train->callback([&] {
        tr_config.margin_form =
            tr_margin_form == "additive" ? MarginForm::kAdditive : MarginForm::kMultiplicative;
        FaceNetConfig net =
            config_from_flags(tr_preset, tr_points, tr_sampler, tr_lambda, tr_r, tr_config.seed);
        DatasetManifest manifest = read_manifest(tr_manifest);
        auto clouds = load_manifest_clouds(manifest);
        auto result = train_classifier(clouds, net, tr_config);
        save_facenet(result.params, tr_out);
        write_loss_csv(result.log, tr_loss_csv.empty() ? tr_out + ".loss.csv" : tr_loss_csv);
        std::cout << "trained " << result.class_identities.size() << " classes for "
                  << tr_config.epochs << " epochs; final loss "
                  << format_double(result.log.back().loss) << ", accuracy "
                  << format_double(result.log.back().accuracy) << "\n";
    });

    // ---- finetune ----
    auto* finetune = app.add_subcommand("finetune", "triplet fine-tuning on gallery scans");
    std::string fn_checkpoint, fn_manifest, fn_out;
    TrainConfig fn_config;
    fn_config.learning_rate = 1e-5;
    finetune->add_option("--checkpoint", fn_checkpoint, "input checkpoint")->required();
    finetune->add_option("--manifest", fn_manifest, "fine-tuning manifest")->required();
    finetune->add_option("--lr", fn_config.learning_rate, "learning rate");
    finetune->add_option("--triplet-margin", fn_config.triplet_margin, "cosine triplet margin");
    finetune->add_option("--steps", fn_config.triplet_steps, "triplet steps");
    finetune->add_option("--batch", fn_config.triplet_batch, "triplets per step");
    finetune->add_option("--seed", fn_config.seed, "random seed");
    finetune->add_option("--out", fn_out, "output checkpoint")->required();
    finetune->callback([&] {
        FaceNetParams params = load_facenet(fn_checkpoint);
        DatasetManifest manifest = read_manifest(fn_manifest);
        auto clouds = load_manifest_clouds(manifest);
        FaceNetParams tuned = fine_tune_triplets(params, clouds, fn_config);
        save_facenet(tuned, fn_out);
        std::cout << "fine-tuned for " << fn_config.triplet_steps << " steps on " << clouds.size()
                  << " scans\n";
    });

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "compute embeddings for a manifest");
    std::string em_checkpoint, em_manifest, em_out;
    embed->add_option("--checkpoint", em_checkpoint, "checkpoint file")->required();
    embed->add_option("--manifest", em_manifest, "dataset manifest")->required();
    embed->add_option("--out", em_out, "embeddings CSV")->required();
    embed->callback([&] {
        FaceNetParams params = load_facenet(em_checkpoint);
        auto records = embed_manifest(em_manifest, params);
        write_embeddings(records, em_out);
        std::cout << "embedded " << records.size() << " scans\n";
    });

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "verification / identification report");
    std::string ev_embeddings, ev_checkpoint, ev_manifest, ev_protocol = "first_scan_gallery",
                ev_report, ev_roc;
    evaluate->add_option("--embeddings", ev_embeddings, "embeddings CSV");
    evaluate->add_option("--checkpoint", ev_checkpoint, "checkpoint (with --manifest)");
    evaluate->add_option("--manifest", ev_manifest, "dataset manifest (with --checkpoint)");
    evaluate->add_option("--protocol", ev_protocol, "evaluation protocol")
        ->check(CLI::IsMember({"first_scan_gallery", "subset_breakdown"}));
    evaluate->add_option("--out-report", ev_report, "report text file")->required();
    evaluate->add_option("--roc-csv", ev_roc, "ROC points CSV (default: <report>.roc.csv)");
    evaluate->callback([&] {
        Protocol protocol = ev_protocol == "first_scan_gallery" ? Protocol::kFirstScanGallery
                                                                : Protocol::kSubsetBreakdown;
        std::vector<EmbeddingRecord> records;
        std::vector<std::string> tags;
        if (!ev_embeddings.empty()) {
            records = read_embeddings(ev_embeddings);
        } else {
            if (ev_checkpoint.empty() || ev_manifest.empty())
                throw CLI::ValidationError("need --embeddings, or --checkpoint with --manifest");
            FaceNetParams params = load_facenet(ev_checkpoint);
            records = embed_manifest(ev_manifest, params);
        }
        if (!ev_manifest.empty()) tags = manifest_subset_tags(read_manifest(ev_manifest));
        if (protocol == Protocol::kSubsetBreakdown) {
            bool any_tag = false;
            for (const auto& t : tags) any_tag = any_tag || !t.empty();
            if (!any_tag)
                throw FormatError("subset_breakdown requires subset tags in the manifest");
        }
        EvalReport report = evaluate_embeddings(records, protocol, tags);
        write_report(report, ev_report);
        write_roc_csv(report.roc, ev_roc.empty() ? ev_report + ".roc.csv" : ev_roc);
        std::cout << format_report(report);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
