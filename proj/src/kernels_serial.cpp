#include "phantom/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace phantom::kernels::serial {

Matrix weighted_sq_distances(const Matrix& a, const Matrix& b, const Vector& q) {
    const Index rows = a.rows(), cols = b.rows(), d = a.cols();
    Matrix out(rows, cols);
    for (Index c = 0; c < rows; ++c) {
        for (Index r = 0; r < cols; ++r) {
            double acc = 0.0;
            for (Index i = 0; i < d; ++i) {
                const double diff = a(c, i) - b(r, i);
                acc += q(i) * diff * diff;
            }
            out(c, r) = acc;
        }
    }
    return out;
}

Matrix softmax_neg_rows(const Matrix& dist) {
    Matrix out(dist.rows(), dist.cols());
    for (Index c = 0; c < dist.rows(); ++c) {
        double lo = dist(c, 0);
        for (Index r = 1; r < dist.cols(); ++r) lo = std::min(lo, dist(c, r));
        double z = 0.0;
        for (Index r = 0; r < dist.cols(); ++r) {
            out(c, r) = std::exp(-(dist(c, r) - lo));
            z += out(c, r);
        }
        for (Index r = 0; r < dist.cols(); ++r) out(c, r) /= z;
    }
    return out;
}

Matrix scores(const Matrix& x, const Matrix& w) {
    Matrix out(x.rows(), w.rows());
    for (Index n = 0; n < x.rows(); ++n) {
        for (Index c = 0; c < w.rows(); ++c) {
            double acc = 0.0;
            for (Index j = 0; j < x.cols(); ++j) acc += x(n, j) * w(c, j);
            out(n, c) = acc;
        }
    }
    return out;
}

LossGrad ovo_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores) {
    const Index classes = scores.cols();
    LossGrad out;
    out.grad = Matrix::Zero(classes, x.cols());
    for (Index n = 0; n < x.rows(); ++n) {
        for (Index c = 0; c < classes; ++c) {
            const double sign = labels[n] == c ? 1.0 : -1.0;
            const double slack = 1.0 - sign * scores(n, c);
            if (slack <= 0.0) continue;
            out.loss += slack * slack;
            const double coef = -2.0 * slack * sign;
            for (Index j = 0; j < x.cols(); ++j) out.grad(c, j) += coef * x(n, j);
        }
    }
    return out;
}

LossGrad cs_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores,
                      const Matrix& delta) {
    const Index classes = scores.cols();
    LossGrad out;
    out.grad = Matrix::Zero(classes, x.cols());
    for (Index n = 0; n < x.rows(); ++n) {
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
        out.loss += worst_val;
        for (Index j = 0; j < x.cols(); ++j) {
            out.grad(worst, j) += x(n, j);
            out.grad(y, j) -= x(n, j);
        }
    }
    return out;
}

LossGrad xent_loss_grad(const Matrix& x, std::span<const int> labels, const Matrix& scores) {
    const Index classes = scores.cols();
    LossGrad out;
    out.grad = Matrix::Zero(classes, x.cols());
    out.bias_grad = Vector::Zero(classes);
    std::vector<double> p(static_cast<std::size_t>(classes));
    for (Index n = 0; n < x.rows(); ++n) {
        double hi = scores(n, 0);
        for (Index c = 1; c < classes; ++c) hi = std::max(hi, scores(n, c));
        double z = 0.0;
        for (Index c = 0; c < classes; ++c) {
            p[c] = std::exp(scores(n, c) - hi);
            z += p[c];
        }
        out.loss += std::log(z) + hi - scores(n, labels[n]);
        for (Index c = 0; c < classes; ++c) {
            const double coef = p[c] / z - (labels[n] == c ? 1.0 : 0.0);
            out.bias_grad(c) += coef;
            for (Index j = 0; j < x.cols(); ++j) out.grad(c, j) += coef * x(n, j);
        }
    }
    return out;
}

} // namespace phantom::kernels::serial
