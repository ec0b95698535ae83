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

#include "pointface/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace pointface {

namespace {

// phi(c) = cos(theta + m) resp. cos(m * theta) for c = cos(theta), plus its
// derivative in c. Exact identity at m = 0 (additive) and m = 1
// (multiplicative).
void margin_transform(double c, double margin, MarginForm form, double* phi, double* dphi) {
    if (form == MarginForm::kAdditive) {
        double cm = std::cos(margin), sm = std::sin(margin);
        double c2 = std::min(std::max(c, -1.0 + 1e-12), 1.0 - 1e-12);
        double s = std::sqrt(1.0 - c2 * c2);
        *phi = c2 * cm - s * sm;
        *dphi = cm + c2 / s * sm;
    } else {
        if (margin == 1.0) {
            *phi = c;
            *dphi = 1.0;
            return;
        }
        double c2 = std::min(std::max(c, -1.0 + 1e-12), 1.0 - 1e-12);
        double theta = std::acos(c2);
        double s = std::sin(theta);
        *phi = std::cos(margin * theta);
        *dphi = s > 1e-9 ? margin * std::sin(margin * theta) / s : margin * margin;
    }
}

}  // namespace

AngularMarginLoss angular_margin_loss(const Eigen::MatrixXd& embeddings,
                                      const std::vector<int>& labels,
                                      const Eigen::MatrixXd& classifier, double scale,
                                      double margin, MarginForm form) {
    const Eigen::Index n = embeddings.rows();
    const Eigen::Index dim = embeddings.cols();
    const Eigen::Index classes = classifier.cols();
    if (classifier.rows() != dim) throw std::invalid_argument("classifier dimension mismatch");
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("one label per embedding required");
    for (int y : labels)
        if (y < 0 || y >= classes) throw std::invalid_argument("label out of range");

    Eigen::VectorXd emb_norms = embeddings.rowwise().norm();
    Eigen::RowVectorXd w_norms = classifier.colwise().norm();
    if ((emb_norms.array() <= 0.0).any() || (w_norms.array() <= 0.0).any())
        throw std::invalid_argument("zero vector in angular margin loss");

    Eigen::MatrixXd U = embeddings.array().colwise() / emb_norms.array();         // N x D
    Eigen::MatrixXd V = classifier.array().rowwise() / w_norms.array();           // D x C
    Eigen::MatrixXd cosines = U * V;                                              // N x C

    // Logits with the margin on the target column.
    Eigen::MatrixXd logits = scale * cosines;
    Eigen::VectorXd dphi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double phi, dp;
        margin_transform(cosines(i, labels[static_cast<std::size_t>(i)]), margin, form, &phi, &dp);
        logits(i, labels[static_cast<std::size_t>(i)]) = scale * phi;
        dphi[i] = dp;
    }

    // Stable softmax cross-entropy.
    AngularMarginLoss out;
    Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd shifted = logits.colwise() - row_max;
    Eigen::MatrixXd expz = shifted.array().exp();
    Eigen::VectorXd denom = expz.rowwise().sum();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        loss += std::log(denom[i]) - shifted(i, labels[static_cast<std::size_t>(i)]);
    out.loss = loss / static_cast<double>(n);

    // d loss / d logits = (softmax - onehot) / n, then back to cosines.
    Eigen::MatrixXd dlogits = expz.array().colwise() / denom.array();
    for (Eigen::Index i = 0; i < n; ++i) dlogits(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    dlogits /= static_cast<double>(n);

    Eigen::MatrixXd dcos = scale * dlogits;
    for (Eigen::Index i = 0; i < n; ++i) dcos(i, labels[static_cast<std::size_t>(i)]) *= dphi[i];

    // cos = u . v with u = x/|x|, v = w/|w|:
    //   dx = (G V^T - diag(rowsum(G o cos)) U) / |x| rowwise
    //   dW = (U^T G - V diag(colsum(G o cos))) / |w| colwise
    Eigen::VectorXd row_gc = (dcos.array() * cosines.array()).rowwise().sum();
    Eigen::RowVectorXd col_gc = (dcos.array() * cosines.array()).colwise().sum();
    out.d_embeddings = (dcos * V.transpose() - (U.array().colwise() * row_gc.array()).matrix())
                           .array()
                           .colwise() /
                       emb_norms.array();
    out.d_classifier = (U.transpose() * dcos - (V.array().rowwise() * col_gc.array()).matrix())
                           .array()
                           .rowwise() /
                       w_norms.array();
    out.cosines = std::move(cosines);
    return out;
}

TripletLoss triplet_loss_cosine(const Eigen::MatrixXd& anchor, const Eigen::MatrixXd& positive,
                                const Eigen::MatrixXd& negative, double margin) {
    const Eigen::Index t = anchor.rows();
    if (positive.rows() != t || negative.rows() != t)
        throw std::invalid_argument("triplet batch sizes differ");

    auto norms = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd(X.rowwise().norm()); };
    Eigen::VectorXd na = norms(anchor), np = norms(positive), nn = norms(negative);
    if ((na.array() <= 0.0).any() || (np.array() <= 0.0).any() || (nn.array() <= 0.0).any())
        throw std::invalid_argument("zero vector in triplet loss");

    Eigen::MatrixXd ua = anchor.array().colwise() / na.array();
    Eigen::MatrixXd up = positive.array().colwise() / np.array();
    Eigen::MatrixXd un = negative.array().colwise() / nn.array();
    Eigen::VectorXd cos_ap = (ua.array() * up.array()).rowwise().sum();
    Eigen::VectorXd cos_an = (ua.array() * un.array()).rowwise().sum();

    TripletLoss out;
    out.d_anchor = Eigen::MatrixXd::Zero(t, anchor.cols());
    out.d_positive = out.d_anchor;
    out.d_negative = out.d_anchor;

    double total = 0.0;
    for (Eigen::Index i = 0; i < t; ++i) {
        double hinge = (1.0 - cos_ap[i]) - (1.0 - cos_an[i]) + margin;
        if (hinge <= 0.0) continue;
        total += hinge;
        // d hinge = -d cos_ap + d cos_an; d cos(a,b)/da = (u_b - cos u_a)/|a|.
        double w = 1.0 / static_cast<double>(t);
        out.d_anchor.row(i) =
            w * (-(up.row(i) - cos_ap[i] * ua.row(i)) + (un.row(i) - cos_an[i] * ua.row(i))) /
            na[i];
        out.d_positive.row(i) = w * (-(ua.row(i) - cos_ap[i] * up.row(i))) / np[i];
        out.d_negative.row(i) = w * (ua.row(i) - cos_an[i] * un.row(i)) / nn[i];
    }
    out.loss = total / static_cast<double>(t);
    return out;
}

}  // namespace pointface
