#include "phantom/synthesis.hpp"

#include "phantom/kernels.hpp"

#include <algorithm>
#include <numeric>

namespace phantom {

ClassifierSet synthesize(const SimilarityMatrix& weights, const BaseClassifierSet& bases) {
    require_shape(weights.num_phantom() == bases.size(),
                  "synthesize: similarity has " + std::to_string(weights.num_phantom()) + " phantom columns, " +
                      std::to_string(bases.size()) + " base classifiers given");
    ClassifierSet out;
    out.class_ids = weights.row_classes;
    out.vectors.noalias() = weights.weights * bases.vectors;
    return out;
}

Matrix decision_values(const ClassifierSet& models, const Matrix& features) {
    require_dims(features.cols(), models.feature_dim(), "feature dimension");
    return kernels::omp::scores(features, models.vectors);
}

Index argmax_row(const Matrix& scores, Index row) {
    Index best = 0;
    for (Index c = 1; c < scores.cols(); ++c)
        if (scores(row, c) > scores(row, best)) best = c;
    return best;
}

std::vector<Index> top_k_row(const Matrix& scores, Index row, Index k) {
    if (k < 1 || k > scores.cols())
        fail(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " with " + std::to_string(scores.cols()) + " classes");
    std::vector<Index> order(static_cast<std::size_t>(scores.cols()));
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
        const double sa = scores(row, a), sb = scores(row, b);
        return sa > sb || (sa == sb && a < b);
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

Index predict(const ClassifierSet& models, const Vector& x) {
    require_dims(x.size(), models.feature_dim(), "feature dimension");
    if (models.size() < 1) fail(ErrorKind::ShapeMismatch, "empty classifier set");
    const Matrix s = models.vectors * x;
    // s is C x 1 here; reuse the row helpers on its transpose.
    const Matrix row = s.transpose();
    return argmax_row(row, 0);
}

std::vector<Index> rank_classes(const ClassifierSet& models, const Vector& x, Index k) {
    require_dims(x.size(), models.feature_dim(), "feature dimension");
    const Matrix row = (models.vectors * x).transpose();
    return top_k_row(row, 0, k);
}

std::vector<Index> predict_all(const ClassifierSet& models, const Matrix& features) {
    const Matrix s = decision_values(models, features);
    std::vector<Index> out(static_cast<std::size_t>(s.rows()));
    for (Index n = 0; n < s.rows(); ++n) out[static_cast<std::size_t>(n)] = argmax_row(s, n);
    return out;
}

} // namespace phantom
