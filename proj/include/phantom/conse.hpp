#pragma once

// Convex-combination-of-semantic-embeddings baseline: a softmax classifier
// over seen classes maps an input to the probability-weighted mean of its
// top-T seen-class embeddings; unseen classes are ranked by cosine similarity
// to that point.

#include "phantom/training.hpp"

#include <vector>

namespace phantom {

struct ProbabilisticClassifierSet {
    Matrix weights; // S x D
    Vector biases;  // S

    Index size() const noexcept { return weights.rows(); }
    // Softmax class distribution for one input.
    Vector probabilities(const Vector& x) const;
};

struct ConseConfig {
    int T = 10;
    double l2_reg = 1.0;
};

struct ProbabilisticFit {
    ProbabilisticClassifierSet model;
    DescentReport report;
};

// Multinomial logistic regression, sum of NLL + (l2_reg/2)||W||_F^2 (biases
// unregularized), by full-batch gradient descent with line search from zero.
ProbabilisticFit train_seen_probabilistic(const LabeledDataset& data, double l2_reg, const TrainConfig& train_cfg);

// Objective and gradient of the above, for checking. The gradient packs
// [W | b] as an S x (D + 1) matrix.
double logistic_objective(const ProbabilisticClassifierSet& clf, const LabeledDataset& data, double l2_reg,
                          Matrix* grad = nullptr);

// Convex combination of the top-T seen embeddings weighted by renormalized
// class probabilities.
Vector conse_embed(const Vector& x, const ProbabilisticClassifierSet& clf, const EmbeddingTable& seen, int T);

// Unseen class indices ranked by cosine similarity to conse_embed(x), top k.
std::vector<Index> conse_predict(const Vector& x, const ProbabilisticClassifierSet& clf, const EmbeddingTable& seen,
                                 const EmbeddingTable& unseen, int T, Index k);

// Cosine similarities (N x U) for a batch, used for evaluation.
Matrix conse_scores(const Matrix& features, const ProbabilisticClassifierSet& clf, const EmbeddingTable& seen,
                    const EmbeddingTable& unseen, int T);

} // namespace phantom
