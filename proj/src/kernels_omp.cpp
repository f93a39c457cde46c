#include "phantom/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phantom {

namespace {
int g_workers = 0;
}

int worker_count() {
#ifdef _OPENMP
    return g_workers > 0 ? g_workers : omp_get_max_threads();
#else
    return 1;
#endif
}

void set_worker_count(int n) {
    g_workers = std::max(1, n);
#ifdef _OPENMP
    omp_set_num_threads(g_workers);
#endif
}

int configure_threads_from_env() {
    if (const char* env = std::getenv("PHANTOM_SYNC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) set_worker_count(n);
    }
    return worker_count();
}

} // namespace phantom

namespace phantom::kernels::omp {

namespace {

Index block_count(Index rows) { return (rows + kBlockRows - 1) / kBlockRows; }

struct BlockPartial {
    double loss = 0.0;
    Matrix grad;
    Vector bias_grad;
};

// Sums per-block partials in block order; thread count never changes the
// association order.
LossGrad reduce_partials(std::vector<BlockPartial>& parts, Index classes, Index dim, bool with_bias) {
    LossGrad out;
    out.grad = Matrix::Zero(classes, dim);
    if (with_bias) out.bias_grad = Vector::Zero(classes);
    for (auto& p : parts) {
        out.loss += p.loss;
        out.grad += p.grad;
        if (with_bias) out.bias_grad += p.bias_grad;
    }
    return out;
}

} // namespace

Matrix weighted_sq_distances(const Matrix& a, const Matrix& b, const Vector& q) {
    const Index rows = a.rows(), cols = b.rows();
    Matrix out(rows, cols);
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < rows; ++c) {
        for (Index r = 0; r < cols; ++r)
            out(c, r) = (q.array() * (a.row(c) - b.row(r)).transpose().array().square()).sum();
    }
    return out;
}

Matrix softmax_neg_rows(const Matrix& dist) {
    Matrix out(dist.rows(), dist.cols());
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < dist.rows(); ++c) {
        const double lo = dist.row(c).minCoeff();
        out.row(c) = (-(dist.row(c).array() - lo)).exp();
        out.row(c) /= out.row(c).sum();
    }
    return out;
}

Matrix scores(const Matrix& x, const Matrix& w) {
    Matrix out(x.rows(), w.rows());
    const Index blocks = block_count(x.rows());
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kBlockRows;
        const Index len = std::min(kBlockRows, x.rows() - start);
        out.middleRows(start, len).noalias() = x.middleRows(start, len) * w.transpose();
    }
    return out;
}

LossGrad ovo_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores) {
    const Index classes = scores.cols();
    const Index blocks = block_count(x.rows());
    std::vector<BlockPartial> parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kBlockRows;
        const Index len = std::min(kBlockRows, x.rows() - start);
        Matrix coef = Matrix::Zero(len, classes);
        double loss = 0.0;
        for (Index i = 0; i < len; ++i) {
            const Index n = start + i;
            for (Index c = 0; c < classes; ++c) {
                const double sign = labels[n] == c ? 1.0 : -1.0;
                const double slack = 1.0 - sign * scores(n, c);
                if (slack <= 0.0) continue;
                loss += slack * slack;
                coef(i, c) = -2.0 * slack * sign;
            }
        }
        auto& p = parts[static_cast<std::size_t>(b)];
        p.loss = loss;
        p.grad.noalias() = coef.transpose() * x.middleRows(start, len);
    }
    return reduce_partials(parts, classes, x.cols(), false);
}

LossGrad cs_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores,
                      const Matrix& delta) {
    const Index classes = scores.cols();
    const Index blocks = block_count(x.rows());
    std::vector<BlockPartial> parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kBlockRows;
        const Index len = std::min(kBlockRows, x.rows() - start);
        Matrix coef = Matrix::Zero(len, classes);
        double loss = 0.0;
        for (Index i = 0; i < len; ++i) {
            const Index n = start + i;
            const int y = labels[n];
            Index worst = -1;
            double worst_val = 0.0;
            for (Index c = 0; c < classes; ++c) {
                if (c == y) continue;
                const double v = delta(c, y) + scores(n, c) - scores(n, y);
                if (worst < 0 || v > worst_val) {
                    worst = c;
                    worst_val = v;
                }
            }
            if (worst < 0 || worst_val <= 0.0) continue;
            loss += worst_val;
            coef(i, worst) += 1.0;
            coef(i, y) -= 1.0;
        }
        auto& p = parts[static_cast<std::size_t>(b)];
        p.loss = loss;
        p.grad.noalias() = coef.transpose() * x.middleRows(start, len);
    }
    return reduce_partials(parts, classes, x.cols(), false);
}

LossGrad xent_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores) {
    const Index classes = scores.cols();
    const Index blocks = block_count(x.rows());
    std::vector<BlockPartial> parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kBlockRows;
        const Index len = std::min(kBlockRows, x.rows() - start);
        Matrix coef(len, classes);
        double loss = 0.0;
        for (Index i = 0; i < len; ++i) {
            const Index n = start + i;
            const double hi = scores.row(n).maxCoeff();
            coef.row(i) = (scores.row(n).array() - hi).exp();
            const double z = coef.row(i).sum();
            loss += std::log(z) + hi - scores(n, labels[n]);
            coef.row(i) /= z;
            coef(i, labels[n]) -= 1.0;
        }
        auto& p = parts[static_cast<std::size_t>(b)];
        p.loss = loss;
        p.grad.noalias() = coef.transpose() * x.middleRows(start, len);
        p.bias_grad = coef.colwise().sum().transpose();
    }
    return reduce_partials(parts, classes, x.cols(), true);
}

} // namespace phantom::kernels::omp
