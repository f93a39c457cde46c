#include "doctest.h"
#include "support.hpp"

#include "phantom/optimize.hpp"

using namespace phantom;

namespace {

// f(x) = 0.5 (x - c)^T A (x - c) for an SPD A
struct Quadratic {
    Matrix a;
    Matrix c;
    double operator()(const Matrix& x, Matrix& g) const {
        const Matrix r = x - c;
        g = a * r;
        return 0.5 * (r.array() * g.array()).sum();
    }
};

Quadratic make_quadratic(Rng& rng, Index n, double cond) {
    const Matrix q = testing::random_matrix(rng, n, n).householderQr().householderQ();
    Vector eig(n);
    for (Index i = 0; i < n; ++i) eig(i) = std::pow(cond, static_cast<double>(i) / static_cast<double>(n - 1));
    return {q * eig.asDiagonal() * q.transpose(), testing::random_matrix(rng, n, 1)};
}

bool non_increasing(const std::vector<double>& t) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[i - 1]) return false;
    return true;
}

} // namespace

TEST_CASE("descent converges on ill-conditioned quadratics") {
    Rng rng = make_rng(1, "quad");
    for (int memory : {0, 10}) {
        CAPTURE(memory);
        const Quadratic f = make_quadratic(rng, 12, 1e3);
        Matrix x = Matrix::Zero(12, 1);
        DescentOptions o;
        o.max_iters = 5000;
        o.grad_tol = 1e-9;
        o.memory = memory;
        o.keep_trace = true;
        const auto rep = gradient_descent(f, x, o);
        CHECK(rep.converged);
        CHECK(rep.reason == StopReason::GradientTolerance);
        CHECK((x - f.c).norm() < 1e-5);
        CHECK(non_increasing(rep.trace));
        CHECK(rep.trace.size() == static_cast<std::size_t>(rep.iterations) + 1);
        CHECK(rep.final_objective <= rep.initial_objective);
    }
}

TEST_CASE("iteration cap is reported") {
    Rng rng = make_rng(2, "cap");
    const Quadratic f = make_quadratic(rng, 8, 1e4);
    Matrix x = Matrix::Zero(8, 1);
    DescentOptions o;
    o.max_iters = 3;
    const auto rep = gradient_descent(f, x, o);
    CHECK_FALSE(rep.converged);
    CHECK(rep.reason == StopReason::MaxIterations);
    CHECK(rep.iterations == 3);
}

TEST_CASE("non-finite objectives are reported") {
    Matrix x = Matrix::Ones(2, 1);
    const ObjectiveFn nan = [](const Matrix&, Matrix& g) {
        g = Matrix::Ones(2, 1);
        return std::nan("");
    };
    try {
        gradient_descent(nan, x, {});
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFinite);
        CHECK(e.is_numeric());
    }
}

TEST_CASE("soft threshold") {
    Matrix x(1, 5);
    x << -2, -0.5, 0, 0.3, 4;
    Matrix want(1, 5);
    want << -1, 0, 0, 0, 3;
    CHECK(soft_threshold(x, 1.0) == want);
}

TEST_CASE("proximal gradient solves the lasso on an orthogonal design") {
    // min 0.5||x - c||^2 + l1 ||x||_1 has the closed form soft_threshold(c, l1)
    Rng rng = make_rng(3, "lasso");
    const Matrix c = testing::random_matrix(rng, 10, 2);
    const ObjectiveFn f = [&](const Matrix& x, Matrix& g) {
        g = x - c;
        return 0.5 * g.squaredNorm();
    };
    Matrix x = Matrix::Zero(10, 2);
    DescentOptions o;
    o.max_iters = 500;
    o.grad_tol = 1e-12;
    o.keep_trace = true;
    const auto rep = proximal_gradient(f, 0.6, x, o);
    CHECK((x - soft_threshold(c, 0.6)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(non_increasing(rep.trace));
}

TEST_CASE("proximal trace is monotone on a coupled problem") {
    Rng rng = make_rng(4, "prox");
    const Quadratic q = make_quadratic(rng, 9, 50.0);
    const ObjectiveFn f = [&](const Matrix& x, Matrix& g) { return q(x, g); };
    Matrix x = testing::random_matrix(rng, 9, 1);
    DescentOptions o;
    o.max_iters = 300;
    o.keep_trace = true;
    const auto rep = proximal_gradient(f, 0.05, x, o);
    CHECK(non_increasing(rep.trace));
    CHECK(rep.final_objective <= rep.initial_objective);
}
