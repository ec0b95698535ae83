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

#include "pointface/cloud_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pointface {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw FormatError(path.string() + ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    return out;
}

bool parse_double(const std::string& text, std::size_t& pos, double* out) {
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE) return false;
    pos = static_cast<std::size_t>(end - text.c_str());
    *out = v;
    return true;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_cloud_file(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    if (cloud.identity) out << "# identity=" << *cloud.identity << "\n";
    if (cloud.expression) out << "# expression=" << *cloud.expression << "\n";
    if (cloud.nose_tip_index) out << "# nose_tip_index=" << *cloud.nose_tip_index << "\n";
    for (const auto& p : cloud.points) {
        out << format_double(p.position.x()) << ' ' << format_double(p.position.y()) << ' '
            << format_double(p.position.z()) << ' ' << format_double(p.normal.x()) << ' '
            << format_double(p.normal.y()) << ' ' << format_double(p.normal.z()) << ' '
            << format_double(p.curvature) << "\n";
    }
    if (!out) fail(path, "write failed");
}

PointCloud read_cloud_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    PointCloud cloud;
    std::string line;
    std::size_t line_no = 0;
    bool any_normal = false, any_curv = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;  // free-form comment
            std::string key = body.substr(0, eq);
            key.erase(0, key.find_first_not_of(' '));
            key.erase(key.find_last_not_of(' ') + 1);
            int value = 0;
            try {
                value = std::stoi(body.substr(eq + 1));
            } catch (const std::exception&) {
                fail(path, line_no, "malformed header value");
            }
            if (key == "identity") cloud.identity = value;
            else if (key == "expression") cloud.expression = value;
            else if (key == "nose_tip_index") cloud.nose_tip_index = value;
            continue;
        }
        double v[7];
        std::size_t pos = 0;
        for (int i = 0; i < 7; ++i) {
            if (!parse_double(line, pos, &v[i]))
                fail(path, line_no, "expected 7 space-separated floats");
            if (!std::isfinite(v[i])) fail(path, line_no, "non-finite value");
        }
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\r' || line[pos] == '\t')) ++pos;
        if (pos != line.size()) fail(path, line_no, "trailing characters after 7 floats");

        Point7 p;
        p.position = Vec3(v[0], v[1], v[2]);
        p.normal = Vec3(v[3], v[4], v[5]);
        p.curvature = v[6];
        any_normal = any_normal || p.normal.squaredNorm() > 0.0;
        any_curv = any_curv || p.curvature != 0.0;
        cloud.points.push_back(p);
    }
    if (cloud.points.empty()) fail(path, "empty cloud");
    if (cloud.nose_tip_index &&
        (*cloud.nose_tip_index < 0 || *cloud.nose_tip_index >= cloud.size()))
        fail(path, "nose_tip_index out of range");
    // Features count as populated when any value is set; written files carry
    // normals and curvature together.
    cloud.has_normals = any_normal;
    cloud.has_curvature = any_curv || any_normal;
    return cloud;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "path,identity,expression,subset\n";
    for (const auto& row : manifest.rows)
        out << row.path << ',' << row.identity << ',' << row.expression << ',' << row.subset << "\n";
    if (!out) fail(path, "write failed");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    DatasetManifest manifest;
    manifest.base_dir = path.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "path,identity,expression,subset")
                fail(path, line_no, "unexpected manifest header");
            continue;
        }
        auto fields = split_csv(line);
        if (fields.size() != 4) fail(path, line_no, "expected 4 comma-separated fields");
        ManifestRow row;
        row.path = fields[0];
        try {
            row.identity = std::stoi(fields[1]);
            row.expression = std::stoi(fields[2]);
        } catch (const std::exception&) {
            fail(path, line_no, "identity and expression must be integers");
        }
        if (row.identity < 0) fail(path, line_no, "identity must be non-negative");
        row.subset = fields[3];
        if (!std::filesystem::exists(manifest.resolve(row)))
            fail(path, line_no, "listed file does not exist: " + row.path);
        manifest.rows.push_back(std::move(row));
    }
    return manifest;
}

std::vector<PointCloud> load_manifest_clouds(const DatasetManifest& manifest) {
    std::vector<PointCloud> out;
    out.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        PointCloud cloud = read_cloud_file(manifest.resolve(row));
        cloud.identity = row.identity;
        cloud.expression = row.expression;
        out.push_back(std::move(cloud));
    }
    return out;
}

std::vector<std::string> manifest_subset_tags(const DatasetManifest& manifest) {
    std::vector<std::string> out;
    out.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) out.push_back(row.subset);
    return out;
}

void write_embeddings(const std::vector<EmbeddingRecord>& records,
                      const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "source,identity,expression,embedding...\n";
    for (const auto& rec : records) {
        out << rec.source << ',' << rec.identity << ',' << rec.expression;
        for (Eigen::Index i = 0; i < rec.embedding.size(); ++i)
            out << ',' << format_double(rec.embedding[i]);
        out << "\n";
    }
    if (!out) fail(path, "write failed");
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::vector<EmbeddingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) continue;  // header
        auto fields = split_csv(line);
        if (fields.size() < 4) fail(path, line_no, "expected source,identity,expression,floats...");
        EmbeddingRecord rec;
        rec.source = fields[0];
        try {
            rec.identity = std::stoi(fields[1]);
            rec.expression = std::stoi(fields[2]);
        } catch (const std::exception&) {
            fail(path, line_no, "identity and expression must be integers");
        }
        rec.embedding.resize(static_cast<Eigen::Index>(fields.size()) - 3);
        for (std::size_t i = 3; i < fields.size(); ++i) {
            std::size_t pos = 0;
            if (!parse_double(fields[i], pos, &rec.embedding[static_cast<Eigen::Index>(i - 3)]))
                fail(path, line_no, "malformed embedding value");
        }
        if (!out.empty() && out.back().embedding.size() != rec.embedding.size())
            fail(path, line_no, "inconsistent embedding dimension");
        out.push_back(std::move(rec));
    }
    if (out.empty()) fail(path, "no embedding records");
    return out;
}

void write_loss_csv(const std::vector<EpochStats>& log, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "epoch,loss,accuracy\n";
    for (const auto& row : log)
        out << row.epoch << ',' << format_double(row.loss) << ',' << format_double(row.accuracy)
            << "\n";
    if (!out) fail(path, "write failed");
}

void write_roc_csv(const std::vector<RocPoint>& roc, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "far,tar\n";
    for (const auto& p : roc) out << format_double(p.far) << ',' << format_double(p.tar) << "\n";
    if (!out) fail(path, "write failed");
}

void write_indices_csv(const std::vector<int>& indices, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "index\n";
    for (int i : indices) out << i << "\n";
    if (!out) fail(path, "write failed");
}

std::string format_report(const EvalReport& report) {
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", report.rank1);
    out << "rank1 = " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.6f", report.auc);
    out << "auc = " << buf << "\n";
    out << "gallery = " << report.num_gallery << "\n";
    out << "probes = " << report.num_probes << "\n";
    for (const auto& [tag, rank1] : report.subset_rank1) {
        std::snprintf(buf, sizeof(buf), "%.4f", rank1);
        out << "subset " << tag << " rank1 = " << buf
            << " (probes = " << report.subset_probes.at(tag) << ")\n";
    }
    return out.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << format_report(report);
    if (!out) fail(path, "write failed");
}

}  // namespace pointface
