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

#include <random>

#include "pointface/recognition.hpp"
#include "testutil.hpp"

using namespace pointface;

namespace {

Eigen::VectorXd unit_vec(int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = gauss(rng);
    v.normalize();
    return v;
}

/// Exhaustive pairwise AUC estimator: P(g > i) + 0.5 P(g = i).
double pairwise_auc(const std::vector<double>& genuine, const std::vector<double>& impostor) {
    double total = 0.0;
    for (double g : genuine)
        for (double i : impostor) total += g > i ? 1.0 : (g == i ? 0.5 : 0.0);
    return total / (static_cast<double>(genuine.size()) * static_cast<double>(impostor.size()));
}

}  // namespace

TEST_CASE("cosine similarity basics") {
    Eigen::VectorXd a = unit_vec(16, 1);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0));
    Eigen::VectorXd b(2), c(2);
    b << 1, 0;
    c << 0, 1;
    CHECK(cosine_similarity(b, c) == doctest::Approx(0.0));
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
    CHECK_THROWS_AS(cosine_similarity(a, zero), std::invalid_argument);
}

TEST_CASE("identify ranks the matching gallery identity first") {
    Gallery gallery;
    for (int id = 0; id < 4; ++id) gallery.entries.push_back({id, unit_vec(32, 10 + static_cast<std::uint64_t>(id)), ""});
    auto ranked = identify(gallery.entries[2].embedding, gallery);
    CHECK(ranked.front().first == 2);
    CHECK(ranked.front().second == doctest::Approx(1.0));
    CHECK(ranked.size() == 4);
}

TEST_CASE("identify matches brute-force all-pairs scoring") {
    Gallery gallery;
    std::vector<Eigen::VectorXd> probes;
    for (int id = 0; id < 10; ++id) {
        gallery.entries.push_back({id, unit_vec(24, 100 + static_cast<std::uint64_t>(id)), ""});
        gallery.entries.push_back({id, unit_vec(24, 200 + static_cast<std::uint64_t>(id)), ""});
    }
    for (int q = 0; q < 50; ++q) probes.push_back(unit_vec(24, 300 + static_cast<std::uint64_t>(q)));

    for (const auto& probe : probes) {
        auto ranked = identify(probe, gallery);
        // Reference: best score per identity, sorted descending, ties by id.
        std::map<int, double> best;
        for (const auto& e : gallery.entries) {
            double s = probe.dot(e.embedding) / (probe.norm() * e.embedding.norm());
            auto [it, fresh] = best.emplace(e.identity, s);
            if (!fresh && s > it->second) it->second = s;
        }
        std::vector<std::pair<int, double>> want(best.begin(), best.end());
        std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
            return a.second > b.second || (a.second == b.second && a.first < b.first);
        });
        REQUIRE(ranked.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(ranked[i].first == want[i].first);
            CHECK(ranked[i].second == doctest::Approx(want[i].second));
        }
    }
}

TEST_CASE("identify is invariant to gallery entry order") {
    Gallery gallery;
    for (int id = 0; id < 6; ++id) gallery.entries.push_back({id, unit_vec(16, 40 + static_cast<std::uint64_t>(id)), ""});
    Eigen::VectorXd probe = unit_vec(16, 99);
    auto a = identify(probe, gallery);
    std::reverse(gallery.entries.begin(), gallery.entries.end());
    auto b = identify(probe, gallery);
    CHECK(a == b);
}

TEST_CASE("perfectly separated scores give AUC 1") {
    std::vector<double> genuine = {0.9, 0.8, 0.95};
    std::vector<double> impostor = {0.1, 0.3, 0.2, 0.05};
    EvalReport report;
    roc_curve(genuine, impostor, 0, report);
    CHECK(report.auc == doctest::Approx(1.0));
}

TEST_CASE("identical score distributions sit at chance level") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> genuine, impostor;
    for (int i = 0; i < 2000; ++i) {
        double v = u(rng);
        genuine.push_back(v);
        impostor.push_back(v);
    }
    EvalReport report;
    roc_curve(genuine, impostor, 0, report);
    CHECK(report.auc == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("trapezoidal AUC equals the pairwise estimator, ties included") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> grid(0, 19);  // coarse grid forces ties
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> genuine, impostor;
        for (int i = 0; i < 120; ++i) genuine.push_back(grid(rng) / 19.0);
        for (int i = 0; i < 150; ++i) impostor.push_back(grid(rng) / 19.0 - 0.1);
        EvalReport report;
        roc_curve(genuine, impostor, 0, report);
        CHECK(std::abs(report.auc - pairwise_auc(genuine, impostor)) < 1e-9);
    }
}

TEST_CASE("ROC is monotone with FAR ascending") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g1(0.6, 0.2), g0(0.2, 0.2);
    std::vector<double> genuine, impostor;
    for (int i = 0; i < 300; ++i) {
        genuine.push_back(g1(rng));
        impostor.push_back(g0(rng));
    }
    EvalReport report;
    roc_curve(genuine, impostor, 0, report);
    for (std::size_t i = 1; i < report.roc.size(); ++i) {
        CHECK(report.roc[i].far >= report.roc[i - 1].far);
        CHECK(report.roc[i].tar >= report.roc[i - 1].tar);
    }
    CHECK(report.roc.front().far == doctest::Approx(0.0));
    CHECK(report.roc.back().far == doctest::Approx(1.0));
}

TEST_CASE("empty score sets are rejected") {
    EvalReport report;
    std::vector<double> some = {0.5};
    CHECK_THROWS_AS(roc_curve({}, some, 0, report), std::invalid_argument);
    CHECK_THROWS_AS(roc_curve(some, {}, 0, report), std::invalid_argument);
}

TEST_CASE("probes duplicating the gallery give rank-1 of exactly 1") {
    std::vector<EmbeddingRecord> records;
    for (int id = 0; id < 5; ++id) {
        EmbeddingRecord rec;
        rec.source = "g" + std::to_string(id);
        rec.identity = id;
        rec.expression = 0;
        rec.embedding = unit_vec(32, 60 + static_cast<std::uint64_t>(id));
        records.push_back(rec);        // gallery scan
        rec.source = "p" + std::to_string(id);
        rec.expression = 1;
        records.push_back(rec);        // identical probe
    }
    auto report = evaluate_embeddings(records, Protocol::kFirstScanGallery);
    CHECK(report.rank1 == doctest::Approx(1.0));
    CHECK(report.num_gallery == 5);
    CHECK(report.num_probes == 5);
    CHECK(report.auc == doctest::Approx(1.0));
}

TEST_CASE("evaluation is a pure function of the embeddings") {
    std::vector<EmbeddingRecord> records;
    for (int id = 0; id < 4; ++id)
        for (int e = 0; e < 3; ++e) {
            EmbeddingRecord rec;
            rec.source = std::to_string(id) + "_" + std::to_string(e);
            rec.identity = id;
            rec.expression = e;
            rec.embedding = unit_vec(16, 77 + static_cast<std::uint64_t>(4 * id + e));
            records.push_back(rec);
        }
    auto a = evaluate_embeddings(records, Protocol::kFirstScanGallery);
    auto b = evaluate_embeddings(records, Protocol::kFirstScanGallery);
    CHECK(a.rank1 == b.rank1);
    CHECK(a.auc == b.auc);
    REQUIRE(a.roc.size() == b.roc.size());
}

TEST_CASE("subset breakdown reports per-tag rank-1") {
    std::vector<EmbeddingRecord> records;
    std::vector<std::string> tags;
    for (int id = 0; id < 3; ++id) {
        EmbeddingRecord rec;
        rec.identity = id;
        rec.expression = 0;
        rec.source = "g";
        rec.embedding = unit_vec(16, 500 + static_cast<std::uint64_t>(id));
        records.push_back(rec);
        tags.emplace_back("");  // gallery rows carry no subset
        rec.source = "p";
        rec.expression = 1;
        records.push_back(rec);  // duplicate probe: guaranteed hit
        tags.emplace_back(id == 0 ? "neutral" : "expressive");
    }
    auto report = evaluate_embeddings(records, Protocol::kSubsetBreakdown, tags);
    CHECK(report.subset_rank1.at("neutral") == doctest::Approx(1.0));
    CHECK(report.subset_rank1.at("expressive") == doctest::Approx(1.0));
    CHECK(report.subset_probes.at("neutral") == 1);
    CHECK(report.subset_probes.at("expressive") == 2);

    CHECK_THROWS_AS(evaluate_embeddings(records, Protocol::kSubsetBreakdown), std::invalid_argument);
}
