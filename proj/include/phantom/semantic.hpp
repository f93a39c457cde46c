#pragma once

#include "phantom/core.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace phantom {

// Per-class semantic vectors (attributes or word vectors), one row per class.
// Class ids are opaque strings; their load order defines the dense index.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::vector<std::string> class_ids, Matrix vectors, bool normalized = false);

    const std::vector<std::string>& class_ids() const noexcept { return class_ids_; }
    const Matrix& vectors() const noexcept { return vectors_; }
    bool normalized() const noexcept { return normalized_; }
    Index size() const noexcept { return vectors_.rows(); }
    Index dim() const noexcept { return vectors_.cols(); }

    // Dense index of `id`, or -1.
    Index index_of(const std::string& id) const;
    // Sub-table with the given rows, in the given order.
    EmbeddingTable select(std::span<const Index> rows) const;

private:
    std::vector<std::string> class_ids_;
    Matrix vectors_;
    bool normalized_ = false;
};

struct ScaledIdentity {
    double sigma = 1.0;
};

// Sigma^{-1} = M^T M with M = diag(m).
struct Diagonal {
    Vector m;
};

class Metric {
public:
    Metric(ScaledIdentity s);
    Metric(Diagonal d);

    static Metric scaled_identity(double sigma) { return Metric(ScaledIdentity{sigma}); }
    static Metric diagonal(Vector m) { return Metric(Diagonal{std::move(m)}); }

    const std::variant<ScaledIdentity, Diagonal>& variant() const noexcept { return v_; }
    bool is_diagonal() const noexcept { return std::holds_alternative<Diagonal>(v_); }

    // Per-dimension weights q with d(a, b) = sum_i q_i (a_i - b_i)^2.
    Vector weights(Index dim) const;
    // -1 for ScaledIdentity (any dimension).
    Index dim() const noexcept;

private:
    std::variant<ScaledIdentity, Diagonal> v_;
};

// Row-stochastic real-class -> phantom-class weights.
struct SimilarityMatrix {
    Matrix weights; // C x R
    std::vector<std::string> row_classes;

    Index num_phantom() const noexcept { return weights.cols(); }
    Index num_rows() const noexcept { return weights.rows(); }
};

// Divides every row by its l2 norm. Throws ZeroVector naming the offending class.
EmbeddingTable normalize_embeddings(const EmbeddingTable& table);

// (a - b)^T Sigma^{-1} (a - b). ScaledIdentity{sigma} uses Sigma = sigma^2 I.
double mahalanobis_distance(const Vector& a, const Vector& b, const Metric& metric);

// C x R matrix of metric distances between every real and phantom row.
Matrix distance_matrix(const EmbeddingTable& real, const EmbeddingTable& phantom, const Metric& metric);

// s_cr = exp(-d(a_c, b_r)) / sum_r' exp(-d(a_c, b_r')), with per-row max
// shifting so no row underflows to all zeros.
SimilarityMatrix similarity_weights(const EmbeddingTable& real, const EmbeddingTable& phantom,
                                    const Metric& metric);

// Entrywise convex combination of same-shaped similarity matrices.
SimilarityMatrix blend_similarities(std::span<const SimilarityMatrix> mats, std::span<const double> coeffs);

} // namespace phantom
