#pragma once

#include "phantom/optimize.hpp"
#include "phantom/semantic.hpp"
#include "phantom/synthesis.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace phantom {

// Seen-class training data: row n of `features` carries label `labels[n]`,
// an index in [0, num_classes).
struct LabeledDataset {
    Matrix features; // N x D
    std::vector<int> labels;
    int num_classes = 0;

    Index size() const noexcept { return features.rows(); }
    Index dim() const noexcept { return features.cols(); }

    // Checks label range, alignment and finiteness. `allow_empty` admits N = 0.
    void validate(bool allow_empty = false) const;
    LabeledDataset subset(std::span<const Index> rows) const;
};

struct OneVsOther {};
struct CrammerSinger {};
// Crammer-Singer with margin Delta(c, y) = ||a_c - a_y||_2 over the seen embeddings.
struct CrammerSingerStruct {
    EmbeddingTable seen_embeddings;
};

using LossKind = std::variant<OneVsOther, CrammerSinger, CrammerSingerStruct>;

std::string_view loss_name(const LossKind& loss);

// Which vectors the ridge term (lambda/2)||.||^2 is applied to. The base
// objective regularizes the synthesized w_c; metric learning regularizes v_r.
enum class RegTarget { Synthesized, Bases };

struct TrainConfig {
    double lambda = 1e-3;
    int max_iters = 500;
    double grad_tol = 1e-6;
    // Step rule is fixed: BB trial step + Armijo backtracking (shrink 0.5, c = 1e-4).
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    BaseClassifierSet bases;
    DescentReport report;
};

// Value and gradients of a training objective at V.
struct ObjectiveValue {
    double value = 0.0;
    Matrix grad_bases;       // R x D
    Matrix grad_synthesized; // S x D, d/dW of data term + any W-regularizer
    Matrix synthesized;      // W = S V
};

ObjectiveValue training_objective(const Matrix& bases, const LabeledDataset& data, const Matrix& sim,
                                  const LossKind& loss, double lambda, RegTarget reg = RegTarget::Synthesized);

// sum_c sum_n max(0, 1 - I_{y_n,c} w_c^T x_n)^2 + (lambda/2) sum_c ||w_c||^2, W = S V.
double ovo_objective(const BaseClassifierSet& bases, const LabeledDataset& data, const SimilarityMatrix& weights,
                     double lambda);
Matrix ovo_gradient(const BaseClassifierSet& bases, const LabeledDataset& data, const SimilarityMatrix& weights,
                    double lambda);

// max(0, max_{c != y} delta(c, y) + scores_c - scores_y).
double cs_loss(const Vector& scores, int y, const std::function<double(int, int)>& delta);

// Margin matrix delta(c, y) for a Crammer-Singer loss kind (ones off the
// diagonal, or embedding distances for the structured variant).
Matrix margin_matrix(const LossKind& loss, int num_classes);

// Learns V with S fixed, starting from zeros (or `init` if given).
TrainResult train_base_classifiers(const LabeledDataset& data, const SimilarityMatrix& weights, const LossKind& loss,
                                   const TrainConfig& config, const Matrix* init = nullptr,
                                   RegTarget reg = RegTarget::Synthesized);

DescentOptions descent_options(const TrainConfig& config);

} // namespace phantom
