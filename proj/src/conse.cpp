#include "phantom/conse.hpp"

#include "phantom/kernels.hpp"
#include "phantom/synthesis.hpp"

#include <algorithm>
#include <numeric>

namespace phantom {

Vector ProbabilisticClassifierSet::probabilities(const Vector& x) const {
    require_dims(x.size(), weights.cols(), "feature dimension");
    Vector s = weights * x + biases;
    s.array() -= s.maxCoeff();
    s = s.array().exp();
    return s / s.sum();
}

double logistic_objective(const ProbabilisticClassifierSet& clf, const LabeledDataset& data, double l2_reg,
                          Matrix* grad) {
    require_dims(data.dim(), clf.weights.cols(), "feature dimension");
    require_shape(clf.size() == data.num_classes, "one logistic model per seen class required");
    Matrix scores = kernels::omp::scores(data.features, clf.weights);
    scores.rowwise() += clf.biases.transpose();
    const kernels::LossGrad lg = kernels::omp::xent_loss_grad(data.features, data.labels, scores);
    if (grad) {
        grad->resize(clf.size(), clf.weights.cols() + 1);
        grad->leftCols(clf.weights.cols()) = lg.grad + l2_reg * clf.weights;
        grad->col(clf.weights.cols()) = lg.bias_grad;
    }
    return lg.loss + 0.5 * l2_reg * clf.weights.squaredNorm();
}

ProbabilisticFit train_seen_probabilistic(const LabeledDataset& data, double l2_reg, const TrainConfig& train_cfg) {
    train_cfg.validate();
    data.validate();
    if (data.num_classes < 2) fail(ErrorKind::InvalidArgument, "logistic regression needs at least 2 classes");
    if (!(l2_reg >= 0.0)) fail(ErrorKind::InvalidArgument, "l2_reg must be >= 0");
    const Index d = data.dim();
    Matrix packed = Matrix::Zero(data.num_classes, d + 1);
    const ObjectiveFn f = [&](const Matrix& x, Matrix& grad) {
        const ProbabilisticClassifierSet clf{x.leftCols(d), x.col(d)};
        return logistic_objective(clf, data, l2_reg, &grad);
    };
    ProbabilisticFit out;
    out.report = gradient_descent(f, packed, descent_options(train_cfg));
    out.model.weights = packed.leftCols(d);
    out.model.biases = packed.col(d);
    return out;
}

namespace {

std::vector<Index> top_indices(const Vector& p, int T) {
    std::vector<Index> order(static_cast<std::size_t>(p.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + T, order.end(),
                      [&](Index a, Index b) { return p(a) > p(b) || (p(a) == p(b) && a < b); });
    order.resize(static_cast<std::size_t>(T));
    return order;
}

} // namespace

Vector conse_embed(const Vector& x, const ProbabilisticClassifierSet& clf, const EmbeddingTable& seen, int T) {
    require_shape(seen.size() == clf.size(), "seen embeddings must match the classifier count");
    if (T < 1 || T > clf.size()) fail(ErrorKind::KTooLarge, "T=" + std::to_string(T) + " with " +
                                                                std::to_string(clf.size()) + " seen classes");
    const Vector p = clf.probabilities(x);
    const auto top = top_indices(p, T);
    double mass = 0.0;
    for (Index c : top) mass += p(c);
    Vector out = Vector::Zero(seen.dim());
    for (Index c : top) out += (p(c) / mass) * seen.vectors().row(c).transpose();
    return out;
}

namespace {

Vector cosine_to_unseen(const Vector& e, const EmbeddingTable& unseen) {
    require_dims(unseen.dim(), e.size(), "unseen embedding dimension");
    const double n = e.norm();
    if (n < 1e-12) fail(ErrorKind::ZeroVector, "combined embedding has zero norm");
    Vector sims(unseen.size());
    for (Index u = 0; u < unseen.size(); ++u) {
        const double un = unseen.vectors().row(u).norm();
        sims(u) = un > 0.0 ? unseen.vectors().row(u).dot(e) / (un * n) : 0.0;
    }
    return sims;
}

} // namespace

std::vector<Index> conse_predict(const Vector& x, const ProbabilisticClassifierSet& clf, const EmbeddingTable& seen,
                                 const EmbeddingTable& unseen, int T, Index k) {
    const Matrix row = cosine_to_unseen(conse_embed(x, clf, seen, T), unseen).transpose();
    return top_k_row(row, 0, k);
}

Matrix conse_scores(const Matrix& features, const ProbabilisticClassifierSet& clf, const EmbeddingTable& seen,
                    const EmbeddingTable& unseen, int T) {
    Matrix out(features.rows(), unseen.size());
    for (Index n = 0; n < features.rows(); ++n)
        out.row(n) = cosine_to_unseen(conse_embed(features.row(n).transpose(), clf, seen, T), unseen).transpose();
    return out;
}

} // namespace phantom
