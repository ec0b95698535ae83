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

#include "pointface/layers.hpp"

#include <random>
#include <stdexcept>

namespace pointface {

// Column-at-a-time passes: contiguous for column-major storage and free of
// broadcast-expression overhead, which dominates at 100k+ rows.
Eigen::MatrixXd batchnorm_forward(BatchNormLayer& bn, const Eigen::MatrixXd& X, BnMode mode,
                                  bool update_running, double momentum, MlpLayerCache* cache) {
    const Eigen::Index rows = X.rows(), cols = X.cols();
    const double n = static_cast<double>(rows);
    Eigen::MatrixXd xhat(rows, cols), out(rows, cols);
    Eigen::RowVectorXd invstd(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        double mu, is;
        if (mode == BnMode::kTrain) {
            mu = X.col(j).mean();
            double var = (X.col(j).array() - mu).square().sum() / n;
            is = 1.0 / std::sqrt(var + bn.eps);
            if (update_running) {
                bn.running_mean(0, j) = momentum * bn.running_mean(0, j) + (1.0 - momentum) * mu;
                bn.running_var(0, j) = momentum * bn.running_var(0, j) + (1.0 - momentum) * var;
            }
        } else {
            mu = bn.running_mean(0, j);
            is = 1.0 / std::sqrt(bn.running_var(0, j) + bn.eps);
        }
        invstd[j] = is;
        xhat.col(j) = (X.col(j).array() - mu) * is;
        out.col(j) = xhat.col(j).array() * bn.gamma(0, j) + bn.beta(0, j);
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->invstd = invstd;
    }
    return out;
}

// Standard train-mode batch norm backward; eval mode reduces to an affine map
// with constant mean/var.
Eigen::MatrixXd batchnorm_backward(const BatchNormLayer& bn, const MlpLayerCache& cache, BnMode mode,
                                   const Eigen::MatrixXd& d_out, BatchNormLayer& grads) {
    const Eigen::Index rows = d_out.rows(), cols = d_out.cols();
    const double n = static_cast<double>(rows);
    Eigen::MatrixXd dx(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        auto dy = d_out.col(j).array();
        auto xh = cache.xhat.col(j).array();
        const double sum_dy = dy.sum();
        const double sum_dy_xh = (dy * xh).sum();
        grads.gamma(0, j) += sum_dy_xh;
        grads.beta(0, j) += sum_dy;

        const double gamma = bn.gamma(0, j), is = cache.invstd[j];
        if (mode == BnMode::kEval) {
            dx.col(j) = dy * (gamma * is);
        } else {
            dx.col(j) = (n * dy - sum_dy - xh * sum_dy_xh) * (gamma * is / n);
        }
    }
    return dx;
}

Eigen::MatrixXd mlp_forward(PointwiseMlp& mlp, const Eigen::MatrixXd& X, BnMode mode,
                            bool update_running, double bn_momentum, MlpCache* cache) {
    Eigen::MatrixXd cur = X;
    if (cache) cache->layers.resize(mlp.layers.size());
    for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
        MlpLayer& layer = mlp.layers[li];
        MlpLayerCache* lc = cache ? &cache->layers[li] : nullptr;
        if (lc) lc->input = cur;

        Eigen::MatrixXd z;
        z.noalias() = cur * layer.dense.W;
        for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j).array() += layer.dense.b(0, j);
        if (layer.use_bn) z = batchnorm_forward(layer.bn, z, mode, update_running, bn_momentum, lc);
        if (lc) lc->pre_act = z;
        if (layer.relu) z = z.cwiseMax(0.0);
        cur = std::move(z);
    }
    if (cache) cache->output = cur;
    return cur;
}

Eigen::MatrixXd mlp_backward(const PointwiseMlp& mlp, const MlpCache& cache, BnMode mode,
                             const Eigen::MatrixXd& d_output, PointwiseMlp& grads) {
    Eigen::MatrixXd d = d_output;
    for (std::size_t li = mlp.layers.size(); li-- > 0;) {
        const MlpLayer& layer = mlp.layers[li];
        const MlpLayerCache& lc = cache.layers[li];
        MlpLayer& g = grads.layers[li];

        if (layer.relu)
            for (Eigen::Index j = 0; j < d.cols(); ++j)
                d.col(j).array() *= (lc.pre_act.col(j).array() > 0.0).cast<double>();
        if (layer.use_bn) d = batchnorm_backward(layer.bn, lc, mode, d, g.bn);
        g.dense.W.noalias() += lc.input.transpose() * d;
        g.dense.b.row(0) += d.colwise().sum();
        Eigen::MatrixXd dprev;
        dprev.noalias() = d * layer.dense.W.transpose();
        d = std::move(dprev);
    }
    return d;
}

Eigen::MatrixXd maxpool_forward(const Eigen::MatrixXd& X, const GroupSpec& groups,
                                Eigen::MatrixXi* argmax) {
    const Eigen::Index m = groups.num_groups();
    const Eigen::Index cols = X.cols();
    Eigen::MatrixXd out(m, cols);
    if (argmax) argmax->resize(m, cols);
    for (Eigen::Index g = 0; g < m; ++g) {
        Eigen::Index begin = groups.offsets[static_cast<std::size_t>(g)];
        Eigen::Index end = groups.offsets[static_cast<std::size_t>(g) + 1];
        if (begin >= end) throw std::invalid_argument("empty group");
        for (Eigen::Index c = 0; c < cols; ++c) {
            Eigen::Index best = begin;
            double best_v = X(begin, c);
            for (Eigen::Index r = begin + 1; r < end; ++r) {
                if (X(r, c) > best_v) {
                    best_v = X(r, c);
                    best = r;
                }
            }
            out(g, c) = best_v;
            if (argmax) (*argmax)(g, c) = static_cast<int>(best);
        }
    }
    return out;
}

Eigen::MatrixXd maxpool_backward(const Eigen::MatrixXd& d_pooled, const Eigen::MatrixXi& argmax,
                                 Eigen::Index input_rows) {
    Eigen::MatrixXd dX = Eigen::MatrixXd::Zero(input_rows, d_pooled.cols());
    for (Eigen::Index g = 0; g < d_pooled.rows(); ++g)
        for (Eigen::Index c = 0; c < d_pooled.cols(); ++c)
            dX(argmax(g, c), c) += d_pooled(g, c);
    return dX;
}

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& X, Eigen::VectorXd* norms) {
    Eigen::VectorXd n = X.rowwise().norm();
    if ((n.array() <= 0.0).any()) throw std::runtime_error("cannot normalize a zero vector");
    if (norms) *norms = n;
    return X.array().colwise() / n.array();
}

Eigen::MatrixXd l2_normalize_backward(const Eigen::MatrixXd& d_out, const Eigen::MatrixXd& normalized,
                                      const Eigen::VectorXd& norms) {
    // dx = (dy - y (y . dy)) / |x| per row
    Eigen::VectorXd dots = (d_out.array() * normalized.array()).rowwise().sum();
    Eigen::MatrixXd dx = d_out - (normalized.array().colwise() * dots.array()).matrix();
    dx.array().colwise() /= norms.array();
    return dx;
}

DenseLayer make_dense(int input_dim, int output_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / input_dim));
    DenseLayer layer;
    layer.W.resize(input_dim, output_dim);
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
        for (Eigen::Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = gauss(rng);
    layer.b = Eigen::MatrixXd::Zero(1, output_dim);
    return layer;
}

BatchNormLayer make_batchnorm(int dim) {
    BatchNormLayer bn;
    bn.gamma = Eigen::MatrixXd::Ones(1, dim);
    bn.beta = Eigen::MatrixXd::Zero(1, dim);
    bn.running_mean = Eigen::MatrixXd::Zero(1, dim);
    bn.running_var = Eigen::MatrixXd::Ones(1, dim);
    return bn;
}

PointwiseMlp make_mlp(int input_dim, const std::vector<int>& widths, std::uint64_t seed,
                      bool final_relu, bool use_bn) {
    if (widths.empty()) throw std::invalid_argument("mlp needs at least one layer");
    PointwiseMlp mlp;
    int in = input_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        MlpLayer layer;
        layer.dense = make_dense(in, widths[i], seed + 101 * i);
        layer.bn = make_batchnorm(widths[i]);
        layer.use_bn = use_bn;
        layer.relu = (i + 1 < widths.size()) || final_relu;
        mlp.layers.push_back(std::move(layer));
        in = widths[i];
    }
    return mlp;
}

DenseLayer zeros_like(const DenseLayer& layer) {
    return DenseLayer{Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()),
                      Eigen::MatrixXd::Zero(layer.b.rows(), layer.b.cols())};
}

BatchNormLayer zeros_like(const BatchNormLayer& bn) {
    BatchNormLayer out;
    out.gamma = Eigen::MatrixXd::Zero(bn.gamma.rows(), bn.gamma.cols());
    out.beta = out.gamma;
    out.running_mean = out.gamma;
    out.running_var = out.gamma;
    out.eps = bn.eps;
    return out;
}

PointwiseMlp zeros_like(const PointwiseMlp& mlp) {
    PointwiseMlp out;
    out.layers.reserve(mlp.layers.size());
    for (const auto& layer : mlp.layers) {
        MlpLayer z;
        z.dense = zeros_like(layer.dense);
        z.bn = zeros_like(layer.bn);
        z.use_bn = layer.use_bn;
        z.relu = layer.relu;
        out.layers.push_back(std::move(z));
    }
    return out;
}

}  // namespace pointface
