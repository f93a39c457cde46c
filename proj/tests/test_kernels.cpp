#include "doctest.h"
#include "support.hpp"

#include "phantom/kernels.hpp"

#include <vector>

using namespace phantom;
namespace ks = phantom::kernels;

namespace {

std::vector<int> random_labels(Rng& rng, Index n, int classes) {
    std::vector<int> y;
    for (Index i = 0; i < n; ++i) y.push_back(testing::uniform_int(rng, 0, classes - 1));
    return y;
}

bool same(const ks::LossGrad& a, const ks::LossGrad& b) {
    return a.loss == b.loss && a.grad == b.grad && a.bias_grad.size() == b.bias_grad.size() &&
           (a.bias_grad.size() == 0 || a.bias_grad == b.bias_grad);
}

// Shapes straddling the block size.
const Index kRows[] = {1, 7, 63, 64, 65, 200};

} // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
    Rng rng = make_rng(21, "kernels");
    for (Index n : kRows) {
        CAPTURE(n);
        const Index d = 5, c = 6;
        const Matrix x = testing::random_matrix(rng, n, d);
        const Matrix w = testing::random_matrix(rng, c, d, 0.7);
        const auto y = random_labels(rng, n, static_cast<int>(c));

        const Matrix s_ser = ks::serial::scores(x, w);
        const Matrix s_omp = ks::omp::scores(x, w);
        CHECK((s_ser - s_omp).cwiseAbs().maxCoeff() < 1e-12);

        const auto o1 = ks::serial::ovo_loss_grad(x, y, s_ser);
        const auto o2 = ks::omp::ovo_loss_grad(x, y, s_ser);
        CHECK(o1.loss == doctest::Approx(o2.loss).epsilon(1e-12));
        CHECK(testing::relative_error(o1.grad, o2.grad) < 1e-12);

        Matrix delta = Matrix::Ones(c, c);
        delta.diagonal().setZero();
        const auto c1 = ks::serial::cs_loss_grad(x, y, s_ser, delta);
        const auto c2 = ks::omp::cs_loss_grad(x, y, s_ser, delta);
        CHECK(c1.loss == doctest::Approx(c2.loss).epsilon(1e-12));
        CHECK(testing::relative_error(c1.grad, c2.grad) < 1e-12);

        const auto x1 = ks::serial::xent_loss_grad(x, y, s_ser);
        const auto x2 = ks::omp::xent_loss_grad(x, y, s_ser);
        CHECK(x1.loss == doctest::Approx(x2.loss).epsilon(1e-12));
        CHECK(testing::relative_error(x1.grad, x2.grad) < 1e-12);
        CHECK(testing::relative_error(x1.bias_grad, x2.bias_grad) < 1e-12);

        const Matrix a = testing::random_matrix(rng, n, d), b = testing::random_matrix(rng, 4, d);
        const Vector q = testing::random_matrix(rng, d, 1).cwiseAbs();
        const Matrix d1 = ks::serial::weighted_sq_distances(a, b, q);
        const Matrix d2 = ks::omp::weighted_sq_distances(a, b, q);
        CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((ks::serial::softmax_neg_rows(d1) - ks::omp::softmax_neg_rows(d1)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("parallel kernels are bitwise independent of the thread count") {
    Rng rng = make_rng(22, "threads");
    const Index n = 517, d = 9, c = 11;
    const Matrix x = testing::random_matrix(rng, n, d);
    const Matrix w = testing::random_matrix(rng, c, d, 0.5);
    const auto y = random_labels(rng, n, static_cast<int>(c));
    Matrix delta = Matrix::Ones(c, c);
    delta.diagonal().setZero();

    const int before = worker_count();
    set_worker_count(1);
    const Matrix s1 = ks::omp::scores(x, w);
    const auto o1 = ks::omp::ovo_loss_grad(x, y, s1);
    const auto c1 = ks::omp::cs_loss_grad(x, y, s1, delta);
    const auto x1 = ks::omp::xent_loss_grad(x, y, s1);
    for (int t : {2, 3, 8}) {
        set_worker_count(t);
        CAPTURE(t);
        const Matrix st = ks::omp::scores(x, w);
        CHECK(st == s1);
        CHECK(same(ks::omp::ovo_loss_grad(x, y, st), o1));
        CHECK(same(ks::omp::cs_loss_grad(x, y, st, delta), c1));
        CHECK(same(ks::omp::xent_loss_grad(x, y, st), x1));
    }
    set_worker_count(before);
}

TEST_CASE("ovo kernel on a hand case") {
    // x = [2], classes 0 and 1, truth 0; w_1 x = 2 gives a negative-class slack of 3
    Matrix x(1, 1);
    x << 2.0;
    Matrix scores(1, 2);
    scores << 2.0, 2.0;
    const std::vector<int> y = {0};
    const auto lg = ks::serial::ovo_loss_grad(x, y, scores);
    CHECK(lg.loss == 9.0);
    CHECK(lg.grad(0, 0) == 0.0);
    CHECK(lg.grad(1, 0) == 12.0); // d/dw (1 + 2w)^2 = 4(1 + 2w) at w = 1
}

TEST_CASE("crammer-singer subgradient picks the lowest violating class") {
    Matrix x(1, 1);
    x << 1.0;
    Matrix scores(1, 3);
    scores << 0.0, 0.5, 0.5; // classes 1 and 2 tie
    Matrix delta = Matrix::Ones(3, 3);
    delta.diagonal().setZero();
    const std::vector<int> y = {0};
    for (auto lg : {ks::serial::cs_loss_grad(x, y, scores, delta), ks::omp::cs_loss_grad(x, y, scores, delta)}) {
        CHECK(lg.loss == 1.5);
        CHECK(lg.grad(0, 0) == -1.0);
        CHECK(lg.grad(1, 0) == 1.0);
        CHECK(lg.grad(2, 0) == 0.0);
    }
}

TEST_CASE("thread cap from the environment") {
    const int before = worker_count();
    ::setenv("PHANTOM_SYNC_THREADS", "3", 1);
    CHECK(configure_threads_from_env() == 3);
    ::setenv("PHANTOM_SYNC_THREADS", "junk", 1);
    CHECK(configure_threads_from_env() == 3); // ignored
    ::unsetenv("PHANTOM_SYNC_THREADS");
    set_worker_count(before);
}
