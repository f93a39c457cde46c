#pragma once

#include "phantom/training.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace phantom {

// b_r = sum_c beta_rc a_c over the seen embeddings.
struct BetaMatrix {
    Matrix coeffs; // R x S
};

enum class InitStrategy { Identity, RandomSubset, KMeansCentroids, Mixed };

std::string_view to_string(InitStrategy s);
InitStrategy parse_init_strategy(std::string_view s);

struct PhantomConfig {
    double eta = 0.0;   // L1 weight on beta
    double gamma = 0.0; // weight of (||b_r||^2 - h^2)^2
    double h = 1.0;
    int outer_rounds = 3;
    InitStrategy init = InitStrategy::Identity;
    Index num_phantom = 0; // 0: same as the number of seen classes
    std::uint64_t seed = 0;
    int beta_iters = 100;
    double beta_tol = 1e-6;

    void validate() const;
};

struct MetricLearnConfig {
    double gamma_m = 1.0;
    double sigma0 = 1.0;
    int folds = 5;
    int outer_rounds = 3;
    int m_iters = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

EmbeddingTable phantom_embeddings_from_beta(const BetaMatrix& beta, const EmbeddingTable& seen);

// Training objective (squared hinge data term + (lambda/2) sum_c ||w_c||^2)
// with s recomputed from beta, plus eta * ||beta||_1 and
// (gamma/2) sum_r (||b_r||^2 - h^2)^2.
double phantom_objective(const BaseClassifierSet& bases, const BetaMatrix& beta, const LabeledDataset& data,
                         const EmbeddingTable& seen, const Metric& metric, double lambda, double eta, double gamma,
                         double h);

// Gradient w.r.t. beta of the smooth part (everything except the L1 term).
Matrix phantom_smooth_gradient(const BaseClassifierSet& bases, const BetaMatrix& beta, const LabeledDataset& data,
                               const EmbeddingTable& seen, const Metric& metric, double lambda, double gamma,
                               double h, double* smooth_value = nullptr);

// dL/d(dist) for s = softmax(-dist) row-wise, given dL/ds.
Matrix softmax_distance_backprop(const Matrix& sim, const Matrix& grad_sim);

struct PhantomResult {
    BaseClassifierSet bases;
    BetaMatrix beta;
    std::vector<double> objective_trace; // full objective after each outer round
};

// Alternating minimization. Round 1 fits V at the initial beta; each later
// round takes a proximal-gradient beta step then refits V (warm started).
PhantomResult learn_phantom_embeddings(const LabeledDataset& data, const EmbeddingTable& seen,
                                       const PhantomConfig& config, const TrainConfig& train_cfg, double lambda,
                                       const Metric& metric);

// Lloyd's algorithm with k-means++ seeding. Returns a cluster id per row.
std::vector<int> kmeans_clusters(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100);

BetaMatrix init_phantoms(InitStrategy strategy, const EmbeddingTable& seen, Index num_phantom, std::uint64_t seed);

// Squared hinge data term with s from Diagonal{m}, + (lambda/2) sum_r ||v_r||^2
// + (gamma_m/2) ||diag(m) - sigma0 I||_F^2.
double metric_objective(const Vector& m, const BaseClassifierSet& bases, const LabeledDataset& data,
                        const EmbeddingTable& seen, const EmbeddingTable& phantom, double lambda, double gamma_m,
                        double sigma0);
Vector metric_gradient(const Vector& m, const BaseClassifierSet& bases, const LabeledDataset& data,
                       const EmbeddingTable& seen, const EmbeddingTable& phantom, double lambda, double gamma_m,
                       double sigma0, double* value = nullptr);

struct MetricResult {
    Metric metric = Metric::scaled_identity(1.0);
    BaseClassifierSet bases;
    // metric_objective on the M-step subset before and after each M-step.
    std::vector<std::pair<double, double>> m_steps;
};

// Samples are split into `folds` folds; V is fit on the first folds-1 and m
// on the last folds-1, alternately, after an initial V fit at m = sigma0 * 1.
MetricResult learn_metric(const LabeledDataset& data, const EmbeddingTable& seen, const EmbeddingTable& phantom,
                          const MetricLearnConfig& cfg, const TrainConfig& train_cfg, double lambda);

} // namespace phantom
