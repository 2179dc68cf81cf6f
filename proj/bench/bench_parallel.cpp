// Serial reference vs OpenMP kernels.

#include <random>

#include <benchmark/benchmark.h>

#include "gpd/calibrate.hpp"
#include "gpd/gp_sparse.hpp"
#include "gpd/kernels.hpp"

namespace {

Eigen::MatrixXd random_inputs(Eigen::Index n, Eigen::Index d, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = z(rng);
    return X;
}

const gpd::KernelParams kParams = gpd::KernelParams::from_natural(1.0, 1.5);

void BM_KernelMatrix(benchmark::State& state) {
    const auto X = random_inputs(state.range(0), 8, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gpd::kernel_matrix(X, X, kParams));
}

void BM_KernelMatrixSerial(benchmark::State& state) {
    const auto X = random_inputs(state.range(0), 8, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gpd::kernel_matrix_serial(X, X, kParams));
}

void BM_Softmax(benchmark::State& state) {
    const auto means = random_inputs(state.range(0), 3, 2);
    const Eigen::MatrixXd vars = Eigen::MatrixXd::Constant(means.rows(), 3, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(gpd::softmax_expectation(means, vars, 1000, 7));
}

void BM_SoftmaxSerial(benchmark::State& state) {
    const auto means = random_inputs(state.range(0), 3, 2);
    const Eigen::MatrixXd vars = Eigen::MatrixXd::Constant(means.rows(), 3, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(gpd::softmax_expectation_serial(means, vars, 1000, 7));
}

void BM_NearestCentroid(benchmark::State& state) {
    const auto X = random_inputs(state.range(0), 8, 3);
    const auto Z = random_inputs(100, 8, 4);
    for (auto _ : state) benchmark::DoNotOptimize(gpd::nearest_centroid(X, Z));
}

void BM_NearestCentroidSerial(benchmark::State& state) {
    const auto X = random_inputs(state.range(0), 8, 3);
    const auto Z = random_inputs(100, 8, 4);
    for (auto _ : state) benchmark::DoNotOptimize(gpd::nearest_centroid_serial(X, Z));
}

}  // namespace

BENCHMARK(BM_KernelMatrix)->Arg(500)->Arg(2000);
BENCHMARK(BM_KernelMatrixSerial)->Arg(500)->Arg(2000);
BENCHMARK(BM_Softmax)->Arg(1000)->Arg(5000);
BENCHMARK(BM_SoftmaxSerial)->Arg(1000)->Arg(5000);
BENCHMARK(BM_NearestCentroid)->Arg(10000);
BENCHMARK(BM_NearestCentroidSerial)->Arg(10000);

BENCHMARK_MAIN();
