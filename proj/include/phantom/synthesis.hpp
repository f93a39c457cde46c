#pragma once

#include "phantom/semantic.hpp"

#include <string>
#include <vector>

namespace phantom {

// The R base (virtual) classifiers, one row per phantom class.
struct BaseClassifierSet {
    Matrix vectors; // R x D

    Index size() const noexcept { return vectors.rows(); }
    Index feature_dim() const noexcept { return vectors.cols(); }
};

// Linear classifiers for real classes. No bias term: append a constant
// feature to the inputs if one is needed.
struct ClassifierSet {
    std::vector<std::string> class_ids;
    Matrix vectors; // C x D

    Index size() const noexcept { return vectors.rows(); }
    Index feature_dim() const noexcept { return vectors.cols(); }
};

// w_c = sum_r s_cr v_r.
ClassifierSet synthesize(const SimilarityMatrix& weights, const BaseClassifierSet& bases);

// N x C matrix of w_c^T x_n.
Matrix decision_values(const ClassifierSet& models, const Matrix& features);

// Index (into models.class_ids) of the largest decision value; ties go to the lowest index.
Index predict(const ClassifierSet& models, const Vector& x);

// Top-k class indices by decision value, descending, ties by lowest index.
std::vector<Index> rank_classes(const ClassifierSet& models, const Vector& x, Index k);

// Argmax / top-k over rows of a precomputed score matrix, same tie rule.
Index argmax_row(const Matrix& scores, Index row);
std::vector<Index> top_k_row(const Matrix& scores, Index row, Index k);

// predict() applied to every row of `features`.
std::vector<Index> predict_all(const ClassifierSet& models, const Matrix& features);

} // namespace phantom
