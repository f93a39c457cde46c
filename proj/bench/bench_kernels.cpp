// Serial reference kernels against their OpenMP counterparts.
// Run with PHANTOM_SYNC_THREADS=1 to see the blocking overhead alone.

#include "phantom/kernels.hpp"
#include "phantom/random.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace phantom;

namespace {

Matrix noise(Index rows, Index cols, std::uint64_t seed) {
    Rng rng = make_rng(seed, "bench");
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = 2.0 * uniform01(rng) - 1.0;
    return m;
}

struct Problem {
    Matrix x, w, s;
    std::vector<int> y;
    Problem(Index n, Index d, Index c) : x(noise(n, d, 1)), w(noise(c, d, 2)) {
        for (Index i = 0; i < n; ++i) y.push_back(static_cast<int>(i % c));
        s = kernels::serial::scores(x, w);
    }
};

template <Matrix (*F)(const Matrix&, const Matrix&)>
void bm_scores(benchmark::State& st) {
    const Problem p(st.range(0), 64, 50);
    for (auto _ : st) benchmark::DoNotOptimize(F(p.x, p.w));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <kernels::LossGrad (*F)(const Matrix&, std::span<const int>, const Matrix&)>
void bm_loss(benchmark::State& st) {
    const Problem p(st.range(0), 64, 50);
    for (auto _ : st) benchmark::DoNotOptimize(F(p.x, p.y, p.s));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <Matrix (*F)(const Matrix&, const Matrix&, const Vector&)>
void bm_distances(benchmark::State& st) {
    const Matrix a = noise(st.range(0), 100, 3), b = noise(st.range(0), 100, 4);
    const Vector q = Vector::Ones(100);
    for (auto _ : st) benchmark::DoNotOptimize(F(a, b, q));
}

} // namespace

BENCHMARK(bm_scores<kernels::serial::scores>)->Name("scores/serial")->Arg(1000)->Arg(20000);
BENCHMARK(bm_scores<kernels::omp::scores>)->Name("scores/omp")->Arg(1000)->Arg(20000);
BENCHMARK(bm_loss<kernels::serial::ovo_loss_grad>)->Name("ovo/serial")->Arg(1000)->Arg(20000);
BENCHMARK(bm_loss<kernels::omp::ovo_loss_grad>)->Name("ovo/omp")->Arg(1000)->Arg(20000);
BENCHMARK(bm_loss<kernels::serial::xent_loss_grad>)->Name("xent/serial")->Arg(1000)->Arg(20000);
BENCHMARK(bm_loss<kernels::omp::xent_loss_grad>)->Name("xent/omp")->Arg(1000)->Arg(20000);
BENCHMARK(bm_distances<kernels::serial::weighted_sq_distances>)->Name("distances/serial")->Arg(100)->Arg(1000);
BENCHMARK(bm_distances<kernels::omp::weighted_sq_distances>)->Name("distances/omp")->Arg(100)->Arg(1000);

int main(int argc, char** argv) {
    configure_threads_from_env();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
