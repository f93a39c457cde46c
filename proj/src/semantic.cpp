#include "phantom/semantic.hpp"

#include "phantom/kernels.hpp"

#include <cmath>

namespace phantom {

EmbeddingTable::EmbeddingTable(std::vector<std::string> class_ids, Matrix vectors, bool normalized)
    : class_ids_(std::move(class_ids)), vectors_(std::move(vectors)), normalized_(normalized) {
    require_shape(static_cast<Index>(class_ids_.size()) == vectors_.rows(),
                  "embedding table: " + std::to_string(class_ids_.size()) + " ids for " +
                      std::to_string(vectors_.rows()) + " rows");
    if (vectors_.rows() > 0 && vectors_.cols() < 1)
        fail(ErrorKind::DimensionMismatch, "embedding table: dimension must be >= 1");
    if (!vectors_.allFinite()) fail(ErrorKind::NonFinite, "embedding table contains non-finite values");
    if (normalized_) {
        for (Index r = 0; r < vectors_.rows(); ++r) {
            if (std::abs(vectors_.row(r).norm() - 1.0) > 1e-9)
                fail(ErrorKind::InvalidArgument, "embedding '" + class_ids_[r] + "' flagged normalized but norm != 1");
        }
    }
}

Index EmbeddingTable::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < class_ids_.size(); ++i)
        if (class_ids_[i] == id) return static_cast<Index>(i);
    return -1;
}

EmbeddingTable EmbeddingTable::select(std::span<const Index> rows) const {
    std::vector<std::string> ids;
    Matrix out(static_cast<Index>(rows.size()), dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Index r = rows[i];
        if (r < 0 || r >= size()) fail(ErrorKind::InvalidArgument, "embedding row out of range");
        ids.push_back(class_ids_[static_cast<std::size_t>(r)]);
        out.row(static_cast<Index>(i)) = vectors_.row(r);
    }
    return EmbeddingTable(std::move(ids), std::move(out), normalized_);
}

Metric::Metric(ScaledIdentity s) : v_(s) {
    if (!(s.sigma > 0.0) || !std::isfinite(s.sigma))
        fail(ErrorKind::InvalidArgument, "sigma must be positive and finite");
}

Metric::Metric(Diagonal d) : v_(std::move(d)) {
    const auto& m = std::get<Diagonal>(v_).m;
    if (m.size() < 1) fail(ErrorKind::DimensionMismatch, "diagonal metric needs at least one entry");
    if (!m.allFinite()) fail(ErrorKind::NonFinite, "diagonal metric has non-finite entries");
}

Index Metric::dim() const noexcept {
    if (const auto* d = std::get_if<Diagonal>(&v_)) return d->m.size();
    return -1;
}

Vector Metric::weights(Index dim) const {
    if (const auto* s = std::get_if<ScaledIdentity>(&v_))
        return Vector::Constant(dim, 1.0 / (s->sigma * s->sigma));
    const auto& m = std::get<Diagonal>(v_).m;
    require_dims(dim, m.size(), "metric dimension");
    return m.array().square();
}

EmbeddingTable normalize_embeddings(const EmbeddingTable& table) {
    Matrix out = table.vectors();
    for (Index r = 0; r < out.rows(); ++r) {
        const double n = out.row(r).norm();
        if (n < 1e-12) fail(ErrorKind::ZeroVector, "class '" + table.class_ids()[r] + "' has a zero embedding");
        out.row(r) /= n;
    }
    return EmbeddingTable(table.class_ids(), std::move(out), true);
}

double mahalanobis_distance(const Vector& a, const Vector& b, const Metric& metric) {
    require_dims(b.size(), a.size(), "distance operand");
    if (metric.dim() >= 0) require_dims(metric.dim(), a.size(), "metric dimension");
    const Vector q = metric.weights(a.size());
    return (q.array() * (a - b).array().square()).sum();
}

Matrix distance_matrix(const EmbeddingTable& real, const EmbeddingTable& phantom, const Metric& metric) {
    require_dims(phantom.dim(), real.dim(), "phantom embedding dimension");
    if (metric.dim() >= 0) require_dims(metric.dim(), real.dim(), "metric dimension");
    return kernels::omp::weighted_sq_distances(real.vectors(), phantom.vectors(), metric.weights(real.dim()));
}

SimilarityMatrix similarity_weights(const EmbeddingTable& real, const EmbeddingTable& phantom,
                                    const Metric& metric) {
    if (phantom.size() < 1) fail(ErrorKind::ShapeMismatch, "phantom table is empty");
    SimilarityMatrix s;
    s.weights = kernels::omp::softmax_neg_rows(distance_matrix(real, phantom, metric));
    s.row_classes = real.class_ids();
    return s;
}

SimilarityMatrix blend_similarities(std::span<const SimilarityMatrix> mats, std::span<const double> coeffs) {
    if (mats.empty()) fail(ErrorKind::ShapeMismatch, "nothing to blend");
    if (coeffs.size() != mats.size())
        fail(ErrorKind::InvalidCoefficients, "one coefficient per matrix required");
    double total = 0.0;
    for (double c : coeffs) {
        if (!(c >= 0.0) || !std::isfinite(c)) fail(ErrorKind::InvalidCoefficients, "coefficients must be >= 0");
        total += c;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::InvalidCoefficients, "coefficients must sum to 1");

    SimilarityMatrix out;
    out.row_classes = mats.front().row_classes;
    out.weights = Matrix::Zero(mats.front().weights.rows(), mats.front().weights.cols());
    for (std::size_t i = 0; i < mats.size(); ++i) {
        require_shape(mats[i].weights.rows() == out.weights.rows() && mats[i].weights.cols() == out.weights.cols(),
                      "blend: similarity matrices differ in shape");
        require_shape(mats[i].row_classes == out.row_classes, "blend: row orderings differ");
        out.weights += coeffs[i] * mats[i].weights;
    }
    return out;
}

} // namespace phantom
