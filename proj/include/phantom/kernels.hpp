#pragma once

// Data-parallel inner loops shared by the training, synthesis and baseline
// modules. Every kernel exists twice:
//
//   kernels::serial  plain loops, no Eigen expression templates; the reference
//                    the tests check the parallel versions against.
//   kernels::omp     OpenMP versions used by the library.
//
// The OpenMP kernels partition rows into fixed-size blocks (kBlockRows) that do
// not depend on the thread count, and reduce block partials in block order, so
// their output is bitwise identical for any number of threads.

#include "phantom/core.hpp"

#include <span>

namespace phantom::kernels {

inline constexpr Index kBlockRows = 64;

struct LossGrad {
    double loss = 0.0;
    Matrix grad;      // gradient w.r.t. the classifier matrix (C x D)
    Vector bias_grad; // only filled by xent_loss_grad
};

namespace serial {

// out(c, r) = sum_i q_i (a_ci - b_ri)^2
Matrix weighted_sq_distances(const Matrix& a, const Matrix& b, const Vector& q);
// Row-wise softmax of -dist, max-shifted.
Matrix softmax_neg_rows(const Matrix& dist);
// out(n, c) = <x_n, w_c>
Matrix scores(const Matrix& x, const Matrix& w);
// One-vs-other squared hinge, summed over classes and samples (no regularizer).
LossGrad ovo_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores);
// Crammer-Singer with margin matrix delta(c, y); subgradient picks the lowest
// violating class index on ties.
LossGrad cs_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores,
                      const Matrix& delta);
// Multinomial logistic negative log-likelihood; scores must already include biases.
LossGrad xent_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores);

} // namespace serial

namespace omp {

Matrix weighted_sq_distances(const Matrix& a, const Matrix& b, const Vector& q);
Matrix softmax_neg_rows(const Matrix& dist);
Matrix scores(const Matrix& x, const Matrix& w);
LossGrad ovo_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores);
LossGrad cs_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores,
                      const Matrix& delta);
LossGrad xent_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores);

} // namespace omp

} // namespace phantom::kernels

namespace phantom {

// Applies PHANTOM_SYNC_THREADS (if set and positive) as the OpenMP thread cap.
// Returns the resulting worker count.
int configure_threads_from_env();
int worker_count();
void set_worker_count(int n);

} // namespace phantom
