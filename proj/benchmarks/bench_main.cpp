#include "sinbad/descriptor_model.hpp"
#include "sinbad/gaussian_model.hpp"
#include "sinbad/knn.hpp"
#include "sinbad/window_pyramid.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace sinbad;

namespace {

template <class M>
M random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    M m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = typename M::Scalar(normal(rng));
    return m;
}

// Set of N elements in D dims described with P projections x 20 bins.
void BM_Describe(benchmark::State& state) {
    const auto n = state.range(0), d = state.range(1), p = state.range(2);
    std::vector<ElementMatrix> training{random_matrix<ElementMatrix>(n, d, 1),
                                        random_matrix<ElementMatrix>(n, d, 2)};
    DescriptorParams params;
    params.projections = p;
    const auto model = fit_descriptor_model(training, params).model;
    for (auto _ : state) benchmark::DoNotOptimize(model.describe(training.front()));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Describe)->Args({200, 90, 100})->Args({1000, 270, 100})->Args({256, 512, 1000});

void BM_MahalanobisScore(benchmark::State& state) {
    const auto n = state.range(0), d = state.range(1);
    const auto x = random_matrix<Eigen::MatrixXd>(n, d, 3);
    const auto model = fit_gaussian(x);
    const Eigen::VectorXd h = random_matrix<Eigen::MatrixXd>(d, 1, 4).col(0);
    for (auto _ : state) benchmark::DoNotOptimize(mahalanobis_score(model, h));
}
BENCHMARK(BM_MahalanobisScore)->Args({200, 2000})->Args({2000, 2000})->Args({500, 5000});

void BM_FitGaussian(benchmark::State& state) {
    const auto x = random_matrix<Eigen::MatrixXd>(state.range(0), state.range(1), 5);
    for (auto _ : state) benchmark::DoNotOptimize(fit_gaussian(x));
}
BENCHMARK(BM_FitGaussian)->Args({200, 2000})->Args({1000, 500})->Unit(benchmark::kMillisecond);

void BM_KnnScore(benchmark::State& state) {
    const auto n = state.range(0), d = state.range(1);
    const auto x = random_matrix<Eigen::MatrixXd>(n, d, 6);
    const auto model = fit_gaussian(x);
    const auto bank = build_bank(model, x, 1);
    const Eigen::VectorXd h = random_matrix<Eigen::MatrixXd>(d, 1, 7).col(0);
    for (auto _ : state) benchmark::DoNotOptimize(knn_score(bank, model, h));
}
BENCHMARK(BM_KnnScore)->Args({200, 2000})->Args({2000, 5000});

// Series of length T with C channels, tau = 10 and L = 9.
void BM_WindowPyramid(benchmark::State& state) {
    TimeSeries ts;
    ts.values = random_matrix<Eigen::MatrixXd>(state.range(0), state.range(1), 8);
    const PyramidConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(extract_pyramid_elements(ts, config));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WindowPyramid)->Args({206, 3})->Args({1197, 3})->Args({182, 6});

}  // namespace
BENCHMARK_MAIN();
