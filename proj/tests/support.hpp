#pragma once
// Shared helpers for the test binaries: random instances and numerical
// oracles written without the library's kernels.

#include "phantom/core.hpp"
#include "phantom/random.hpp"
#include "phantom/semantic.hpp"
#include "phantom/training.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace testing {

using phantom::Index;
using phantom::Matrix;
using phantom::Rng;
using phantom::Vector;

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = scale * phantom::standard_normal(rng);
    return m;
}

inline Matrix random_unit_rows(Rng& rng, Index rows, Index cols) {
    Matrix m = random_matrix(rng, rows, cols);
    for (Index i = 0; i < rows; ++i) m.row(i) /= m.row(i).norm();
    return m;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * phantom::uniform01(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { // inclusive
    return lo + static_cast<int>(phantom::uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline std::vector<std::string> ids(const std::string& prefix, Index n) {
    std::vector<std::string> out;
    for (Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline phantom::EmbeddingTable random_table(Rng& rng, Index rows, Index dim, const std::string& prefix = "k") {
    return {ids(prefix, rows), random_unit_rows(rng, rows, dim), true};
}

// Every class gets at least one sample.
inline phantom::LabeledDataset random_dataset(Rng& rng, int classes, Index n, Index dim, double scale = 1.0) {
    phantom::LabeledDataset ds;
    ds.num_classes = classes;
    ds.features = random_matrix(rng, n, dim, scale);
    for (Index i = 0; i < n; ++i)
        ds.labels.push_back(i < classes ? static_cast<int>(i) : uniform_int(rng, 0, classes - 1));
    return ds;
}

// Central differences, h = 1e-5, one coordinate at a time.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    Matrix p = x;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
            const double keep = p(i, j);
            p(i, j) = keep + h;
            const double up = f(p);
            p(i, j) = keep - h;
            const double down = f(p);
            p(i, j) = keep;
            g(i, j) = (up - down) / (2.0 * h);
        }
    }
    return g;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
    const double denom = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / denom;
}

// Softmax of -d computed the textbook way, for rows where exp does not under/overflow.
inline Matrix naive_similarity(const Matrix& a, const Matrix& b, const Vector& q) {
    Matrix s(a.rows(), b.rows());
    for (Index c = 0; c < a.rows(); ++c) {
        double z = 0.0;
        for (Index r = 0; r < b.rows(); ++r) {
            double d = 0.0;
            for (Index i = 0; i < a.cols(); ++i) d += q(i) * (a(c, i) - b(r, i)) * (a(c, i) - b(r, i));
            s(c, r) = std::exp(-d);
            z += s(c, r);
        }
        s.row(c) /= z;
    }
    return s;
}

// Squared-hinge one-vs-other objective by direct summation.
inline double naive_ovo(const Matrix& w, const phantom::LabeledDataset& data, double lambda) {
    double total = 0.0;
    for (Index n = 0; n < data.features.rows(); ++n) {
        for (Index c = 0; c < w.rows(); ++c) {
            double score = 0.0;
            for (Index j = 0; j < w.cols(); ++j) score += w(c, j) * data.features(n, j);
            const double sign = data.labels[static_cast<std::size_t>(n)] == c ? 1.0 : -1.0;
            const double slack = std::max(0.0, 1.0 - sign * score);
            total += slack * slack;
        }
    }
    for (Index c = 0; c < w.rows(); ++c)
        for (Index j = 0; j < w.cols(); ++j) total += 0.5 * lambda * w(c, j) * w(c, j);
    return total;
}

// Independent binary squared-hinge solver: min_w sum_n max(0, 1 - t_n w.x_n)^2
// + (lambda/2)||w||^2 by generalized Newton steps on the active set, which
// terminate exactly once the active set stops changing.
inline Vector solve_squared_hinge(const Matrix& x, const std::vector<double>& t, double lambda) {
    const Index d = x.cols();
    Vector w = Vector::Zero(d);
    for (int it = 0; it < 200; ++it) {
        Matrix h = lambda * Matrix::Identity(d, d);
        Vector g = lambda * w;
        for (Index n = 0; n < x.rows(); ++n) {
            const double slack = 1.0 - t[static_cast<std::size_t>(n)] * x.row(n).dot(w);
            if (slack <= 0.0) continue;
            g -= 2.0 * slack * t[static_cast<std::size_t>(n)] * x.row(n).transpose();
            h += 2.0 * x.row(n).transpose() * x.row(n);
        }
        if (g.norm() < 1e-13) break;
        Vector step = h.ldlt().solve(g);
        // Damped by halving until the objective drops; the full step is
        // almost always accepted near the optimum.
        auto obj = [&](const Vector& v) {
            double f = 0.5 * lambda * v.squaredNorm();
            for (Index n = 0; n < x.rows(); ++n) {
                const double s = std::max(0.0, 1.0 - t[static_cast<std::size_t>(n)] * x.row(n).dot(v));
                f += s * s;
            }
            return f;
        };
        double a = 1.0;
        const double f0 = obj(w);
        while (a > 1e-10 && obj(w - a * step) > f0) a *= 0.5;
        w -= a * step;
    }
    return w;
}

// Brute-force hop distances: Floyd-Warshall on the undirected graph.
inline std::vector<std::vector<int>> all_pairs_hops(int n, const std::vector<std::pair<int, int>>& edges) {
    const int inf = 1 << 28;
    std::vector<std::vector<int>> d(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), inf));
    for (int i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [u, v] : edges) {
        if (u == v) continue;
        d[u][v] = d[v][u] = 1;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

// Smallest radius whose valid ball around `node` holds >= k nodes, read off
// the distance table. Empty when even the whole component is too small.
inline std::vector<int> ball_oracle(const std::vector<std::vector<int>>& d, const std::vector<bool>& valid, int node,
                                    int k) {
    const int n = static_cast<int>(d.size());
    for (int radius = 0; radius < n; ++radius) {
        std::vector<int> ball;
        for (int v = 0; v < n; ++v)
            if (valid[v] && d[node][v] <= radius) ball.push_back(v);
        if (static_cast<int>(ball.size()) >= k) return ball;
    }
    return {};
}

// Random DAG: each node after the first picks up to three earlier parents.
inline std::vector<std::pair<int, int>> random_dag(Rng& rng, int n, double extra_parent = 0.3) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v) {
        if (phantom::uniform01(rng) < 0.9) edges.emplace_back(uniform_int(rng, 0, v - 1), v);
        for (int e = 0; e < 2; ++e)
            if (phantom::uniform01(rng) < extra_parent) edges.emplace_back(uniform_int(rng, 0, v - 1), v);
    }
    return edges;
}

} // namespace testing
