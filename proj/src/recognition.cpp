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

#include "pointface/recognition.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace pointface {

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double na = a.norm(), nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("zero vector in cosine similarity");
    return a.dot(b) / (na * nb);
}

std::vector<std::pair<int, double>> identify(const Eigen::VectorXd& probe, const Gallery& gallery) {
    if (gallery.entries.empty()) throw std::invalid_argument("empty gallery");
    std::map<int, double> best;
    for (const auto& entry : gallery.entries) {
        double score = cosine_similarity(probe, entry.embedding);
        auto [it, inserted] = best.emplace(entry.identity, score);
        if (!inserted && score > it->second) it->second = score;
    }
    std::vector<std::pair<int, double>> ranked(best.begin(), best.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    return ranked;
}

void roc_curve(const std::vector<double>& genuine, const std::vector<double>& impostor,
               int num_thresholds, EvalReport& report) {
    if (genuine.empty() || impostor.empty())
        throw std::invalid_argument("genuine and impostor score sets must be non-empty");

    std::set<double> distinct(genuine.begin(), genuine.end());
    distinct.insert(impostor.begin(), impostor.end());
    std::vector<double> thresholds(distinct.begin(), distinct.end());
    if (num_thresholds > 0 && static_cast<int>(thresholds.size()) > num_thresholds) {
        std::vector<double> thinned;
        for (int i = 0; i < num_thresholds; ++i) {
            std::size_t pick = static_cast<std::size_t>(
                (static_cast<double>(i) * (thresholds.size() - 1)) / (num_thresholds - 1));
            thinned.push_back(thresholds[pick]);
        }
        thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
        thresholds = std::move(thinned);
    }

    auto frac_at_least = [](const std::vector<double>& scores, double t) {
        int count = 0;
        for (double s : scores) count += s >= t;
        return static_cast<double>(count) / static_cast<double>(scores.size());
    };

    report.roc.clear();
    report.roc.push_back({0.0, 0.0});  // threshold above every score
    for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it)
        report.roc.push_back({frac_at_least(impostor, *it), frac_at_least(genuine, *it)});
    report.roc.push_back({1.0, 1.0});  // threshold below every score

    double auc = 0.0;
    for (std::size_t i = 1; i < report.roc.size(); ++i)
        auc += (report.roc[i].far - report.roc[i - 1].far) *
               (report.roc[i].tar + report.roc[i - 1].tar) / 2.0;
    report.auc = auc;
}

std::vector<EmbeddingRecord> embed_dataset(const std::vector<PointCloud>& dataset,
                                           FaceNetParams& params) {
    std::vector<EmbeddingRecord> out;
    out.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        EmbeddingRecord rec;
        rec.source = "scan" + std::to_string(i);
        rec.identity = dataset[i].identity.value_or(-1);
        rec.expression = dataset[i].expression.value_or(-1);
        rec.embedding = embed_cloud(dataset[i], params, static_cast<std::uint64_t>(i));
        out.push_back(std::move(rec));
    }
    return out;
}

EvalReport evaluate_embeddings(const std::vector<EmbeddingRecord>& records, Protocol protocol,
                               const std::vector<std::string>& subset_tags) {
    if (records.empty()) throw std::invalid_argument("no embeddings to evaluate");
    if (!subset_tags.empty() && subset_tags.size() != records.size())
        throw std::invalid_argument("subset tags must match the dataset size");
    if (protocol == Protocol::kSubsetBreakdown && subset_tags.empty())
        throw std::invalid_argument("subset breakdown requires subset tags");

    // First scan of each identity goes to the gallery, the rest become probes.
    Gallery gallery;
    std::set<int> enrolled;
    std::vector<std::size_t> probe_rows;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].identity < 0) throw std::invalid_argument("embedding without identity label");
        if (enrolled.insert(records[i].identity).second)
            gallery.entries.push_back({records[i].identity, records[i].embedding, records[i].source});
        else
            probe_rows.push_back(i);
    }
    if (probe_rows.empty())
        throw std::invalid_argument("protocol infeasible: no identity has a second scan");

    EvalReport report;
    report.num_probes = static_cast<int>(probe_rows.size());
    report.num_gallery = static_cast<int>(gallery.entries.size());

    std::vector<double> genuine, impostor;
    int hits = 0;
    std::map<std::string, std::pair<int, int>> subset_counts;  // tag -> (hits, total)
    for (std::size_t row : probe_rows) {
        const EmbeddingRecord& probe = records[row];
        auto ranked = identify(probe.embedding, gallery);
        bool hit = ranked.front().first == probe.identity;
        hits += hit;
        if (!subset_tags.empty() && !subset_tags[row].empty()) {
            auto& entry = subset_counts[subset_tags[row]];
            entry.first += hit;
            entry.second += 1;
        }
        for (const auto& g : gallery.entries) {
            double score = cosine_similarity(probe.embedding, g.embedding);
            (g.identity == probe.identity ? genuine : impostor).push_back(score);
        }
    }
    report.rank1 = static_cast<double>(hits) / static_cast<double>(probe_rows.size());
    for (const auto& [tag, counts] : subset_counts) {
        report.subset_rank1[tag] = static_cast<double>(counts.first) / counts.second;
        report.subset_probes[tag] = counts.second;
    }
    if (!impostor.empty() && !genuine.empty()) roc_curve(genuine, impostor, 0, report);
    return report;
}

EvalReport evaluate_protocol(const std::vector<PointCloud>& dataset, FaceNetParams& params,
                             Protocol protocol, const std::vector<std::string>& subset_tags) {
    auto records = embed_dataset(dataset, params);
    return evaluate_embeddings(records, protocol, subset_tags);
}

}  // namespace pointface
