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

#include "pointface/morphable.hpp"

#include <Eigen/QR>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pointface {

namespace {

constexpr double kStdDecay = 0.8;
constexpr double kShapeSigma1 = 1.0;
constexpr double kExprSigma1 = 0.4;

Eigen::VectorXd geometric_stds(double sigma1, int n) {
    Eigen::VectorXd out(n);
    double s = sigma1;
    for (int i = 0; i < n; ++i) {
        out[i] = s;
        s *= kStdDecay;
    }
    return out;
}

// Random low-frequency displacement fields over the grid parameterization,
// orthonormalized. Columns of the result are smooth because they are linear
// combinations of cos(k pi u) cos(l pi v) products.
Eigen::MatrixXd smooth_orthonormal_basis(const Eigen::VectorXd& u, const Eigen::VectorXd& v, int n,
                                         std::mt19937_64& rng) {
    const int m = static_cast<int>(u.size());
    int max_freq = 3;
    while (3 * (max_freq + 1) * (max_freq + 1) < n + 8) ++max_freq;

    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd fields(3 * m, n);
    for (int col = 0; col < n; ++col) {
        Eigen::Vector3d coeff;
        Eigen::VectorXd fx = Eigen::VectorXd::Zero(m), fy = fx, fz = fx;
        for (int k = 0; k <= max_freq; ++k) {
            for (int l = 0; l <= max_freq; ++l) {
                double damp = 1.0 / (1.0 + k + l);
                coeff << gauss(rng), gauss(rng), gauss(rng);
                coeff *= damp;
                for (int i = 0; i < m; ++i) {
                    double h = std::cos(k * M_PI * u[i]) * std::cos(l * M_PI * v[i]);
                    fx[i] += coeff[0] * h;
                    fy[i] += coeff[1] * h;
                    fz[i] += coeff[2] * h;
                }
            }
        }
        for (int i = 0; i < m; ++i) {
            fields(3 * i + 0, col) = fx[i];
            fields(3 * i + 1, col) = fy[i];
            fields(3 * i + 2, col) = fz[i];
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(fields);
    return qr.householderQ() * Eigen::MatrixXd::Identity(3 * m, n);
}

}  // namespace

double MorphableModel::orthonormality_error() const {
    auto err = [](const Eigen::MatrixXd& basis) {
        Eigen::MatrixXd g = basis.transpose() * basis;
        g.diagonal().array() -= 1.0;
        return g.cwiseAbs().maxCoeff();
    };
    return std::max(err(shape_basis), err(expr_basis));
}

MorphableModel make_toy_model(int vertex_count, int n_s, int n_e, std::uint64_t seed) {
    if (vertex_count < 100) throw std::invalid_argument("need at least 100 vertices");
    if (n_s < 1 || n_e < 1) throw std::invalid_argument("basis dimensions must be >= 1");
    if (3 * vertex_count <= n_s + n_e)
        throw std::invalid_argument("basis dimensions exceed the model's degrees of freedom");

    const int m = vertex_count;
    const int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m))));
    const int cols = (m + rows - 1) / rows;

    MorphableModel model;
    model.vertex_count = m;
    model.mean_shape.resize(3 * m);
    Eigen::VectorXd u(m), v(m);  // grid parameters in [0, 1]

    double best_z = -1e300;
    for (int i = 0; i < m; ++i) {
        int r = i / cols, c = i % cols;
        double uu = cols > 1 ? static_cast<double>(c) / (cols - 1) : 0.5;
        double vv = rows > 1 ? static_cast<double>(r) / (rows - 1) : 0.5;
        u[i] = uu;
        v[i] = vv;
        double x = -1.2 + 2.4 * uu;
        double y = -1.4 + 2.8 * vv;
        // Dome plus a sharp nose bump and two shallow depressions.
        double z = 0.8 - 0.35 * x * x - 0.25 * y * y;
        z += 0.45 * std::exp(-(x * x + (y - 0.05) * (y - 0.05)) / (2.0 * 0.12 * 0.12));
        z -= 0.10 * std::exp(-((x - 0.45) * (x - 0.45) + (y - 0.45) * (y - 0.45)) / (2.0 * 0.15 * 0.15));
        z -= 0.10 * std::exp(-((x + 0.45) * (x + 0.45) + (y - 0.45) * (y - 0.45)) / (2.0 * 0.15 * 0.15));
        model.mean_shape[3 * i + 0] = x;
        model.mean_shape[3 * i + 1] = y;
        model.mean_shape[3 * i + 2] = z;
        if (z > best_z) {
            best_z = z;
            model.nose_tip_vertex = i;
        }
    }

    std::mt19937_64 rng(seed);
    model.shape_basis = smooth_orthonormal_basis(u, v, n_s, rng);
    model.expr_basis = smooth_orthonormal_basis(u, v, n_e, rng);
    model.shape_std = geometric_stds(kShapeSigma1, n_s);
    model.expr_std = geometric_stds(kExprSigma1, n_e);
    model.mean_expr = Eigen::VectorXd::Zero(3 * m);
    return model;
}

PointCloud synthesize(const MorphableModel& model, const FaceCoefficients& coeffs) {
    if (coeffs.alpha.size() != model.shape_std.size() || coeffs.beta.size() != model.expr_std.size())
        throw std::invalid_argument("coefficient dimensions do not match the model");

    Eigen::VectorXd flat = model.mean_shape + model.mean_expr +
                           model.shape_basis * (model.shape_std.asDiagonal() * coeffs.alpha) +
                           model.expr_basis * (model.expr_std.asDiagonal() * coeffs.beta);
    PointCloud cloud;
    cloud.points.resize(static_cast<std::size_t>(model.vertex_count));
    for (int i = 0; i < model.vertex_count; ++i)
        cloud.points[static_cast<std::size_t>(i)].position = flat.segment<3>(3 * i);
    cloud.nose_tip_index = model.nose_tip_vertex;
    return cloud;
}

DatasetCoefficients draw_dataset_coefficients(const MorphableModel& model, int num_identities,
                                              int num_expressions, std::uint64_t seed) {
    if (num_identities < 1 || num_expressions < 1)
        throw std::invalid_argument("identity and expression counts must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DatasetCoefficients out;
    out.alphas.reserve(static_cast<std::size_t>(num_identities));
    out.betas.reserve(static_cast<std::size_t>(num_expressions));
    for (int i = 0; i < num_identities; ++i) {
        Eigen::VectorXd a(model.shape_dims());
        for (int d = 0; d < a.size(); ++d) a[d] = gauss(rng);
        out.alphas.push_back(std::move(a));
    }
    for (int e = 0; e < num_expressions; ++e) {
        Eigen::VectorXd b(model.expr_dims());
        for (int d = 0; d < b.size(); ++d) b[d] = gauss(rng);
        out.betas.push_back(std::move(b));
    }
    return out;
}

PointCloud generate_face(const MorphableModel& model, const DatasetCoefficients& coeffs,
                         int identity, int expression, std::uint64_t seed, double noise_std) {
    PointCloud cloud = synthesize(
        model, FaceCoefficients{coeffs.alphas[static_cast<std::size_t>(identity)],
                                coeffs.betas[static_cast<std::size_t>(expression)]});
    cloud.identity = identity;
    cloud.expression = expression;
    if (noise_std > 0.0) {
        std::uint64_t pair_index =
            static_cast<std::uint64_t>(identity) * static_cast<std::uint64_t>(coeffs.betas.size()) +
            static_cast<std::uint64_t>(expression);
        std::mt19937_64 rng(mix_seed(seed, pair_index));
        std::normal_distribution<double> gauss(0.0, noise_std);
        for (auto& p : cloud.points)
            p.position += Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    return cloud;
}

std::vector<PointCloud> generate_dataset(const MorphableModel& model, int num_identities,
                                         int num_expressions, std::uint64_t seed, double noise_std) {
    std::vector<PointCloud> out;
    out.reserve(static_cast<std::size_t>(num_identities) * static_cast<std::size_t>(num_expressions));
    for_each_generated_face(model, num_identities, num_expressions, seed, noise_std,
                            [&](const PointCloud& c) { out.push_back(c); });
    return out;
}

void for_each_generated_face(const MorphableModel& model, int num_identities, int num_expressions,
                             std::uint64_t seed, double noise_std,
                             const std::function<void(const PointCloud&)>& fn) {
    DatasetCoefficients coeffs = draw_dataset_coefficients(model, num_identities, num_expressions, seed);
    for (int i = 0; i < num_identities; ++i)
        for (int e = 0; e < num_expressions; ++e)
            fn(generate_face(model, coeffs, i, e, seed, noise_std));
}

}  // namespace pointface
