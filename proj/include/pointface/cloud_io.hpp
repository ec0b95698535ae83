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

// Text formats: the 7-column ASCII cloud file, the dataset manifest CSV, the
// embeddings CSV, and the loss/ROC report outputs. Floats are written with 17
// significant digits so every format round-trips bit-exactly.

#ifndef POINTFACE_CLOUD_IO_HPP
#define POINTFACE_CLOUD_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "pointface/io_error.hpp"
#include "pointface/recognition.hpp"
#include "pointface/train.hpp"
#include "pointface/types.hpp"

namespace pointface {

/// One point per line, `x y z nx ny nz c`, with optional `#` header lines
/// carrying identity=, expression= and nose_tip_index=.
void write_cloud_file(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_cloud_file(const std::filesystem::path& path);

struct ManifestRow {
    std::string path;  // relative to the manifest's directory
    int identity = 0;
    int expression = 0;
    std::string subset;
};

struct DatasetManifest {
    std::vector<ManifestRow> rows;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const ManifestRow& row) const { return base_dir / row.path; }
};

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
/// Loads and verifies that every listed path exists.
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Reads every listed cloud; manifest labels override file headers.
std::vector<PointCloud> load_manifest_clouds(const DatasetManifest& manifest);
std::vector<std::string> manifest_subset_tags(const DatasetManifest& manifest);

void write_embeddings(const std::vector<EmbeddingRecord>& records,
                      const std::filesystem::path& path);
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);

void write_loss_csv(const std::vector<EpochStats>& log, const std::filesystem::path& path);
void write_roc_csv(const std::vector<RocPoint>& roc, const std::filesystem::path& path);
void write_indices_csv(const std::vector<int>& indices, const std::filesystem::path& path);
void write_report(const EvalReport& report, const std::filesystem::path& path);
std::string format_report(const EvalReport& report);

/// Shortest-exact decimal form of a double (17 significant digits).
std::string format_double(double v);

}  // namespace pointface

#endif  // POINTFACE_CLOUD_IO_HPP
