#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "dps/metrics.hpp"
#include "dps/operators.hpp"
#include "dps/prior.hpp"
#include "dps/rng.hpp"
#include "dps/sampler.hpp"
#include "dps/schedule.hpp"

namespace {

using dps::Covariance;
using dps::NoiseSchedule;
using dps::NoiseStream;
using Eigen::VectorXd;

void BM_ScheduleBuild(benchmark::State& state) {
    int steps = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto s = NoiseSchedule::linear(steps);
        benchmark::DoNotOptimize(s.alpha_bar(steps));
    }
}
BENCHMARK(BM_ScheduleBuild)->Arg(250)->Arg(1000)->Arg(2000);

void BM_GaussianScoreDiag(benchmark::State& state) {
    Eigen::Index d = state.range(0);
    NoiseStream stream(1);
    dps::GaussianPrior prior(stream.normal_vector(d), Covariance::identity(d));
    auto schedule = NoiseSchedule::linear(1000);
    VectorXd x = stream.normal_vector(d);
    for (auto _ : state) {
        benchmark::DoNotOptimize(prior.score(x, 500, schedule));
    }
}
BENCHMARK(BM_GaussianScoreDiag)->Arg(8)->Arg(64)->Arg(4096);

void BM_MixtureScore(benchmark::State& state) {
    Eigen::Index d = state.range(0);
    NoiseStream stream(2);
    std::vector<dps::MixtureComponent> comps;
    for (int k = 0; k < 3; ++k) {
        comps.push_back({1.0, stream.normal_vector(d), Covariance::identity(d)});
    }
    dps::GaussianMixturePrior prior(std::move(comps));
    auto schedule = NoiseSchedule::linear(1000);
    VectorXd x = stream.normal_vector(d);
    for (auto _ : state) {
        benchmark::DoNotOptimize(prior.score(x, 500, schedule));
    }
}
BENCHMARK(BM_MixtureScore)->Arg(8)->Arg(64);

void BM_DpsChain(benchmark::State& state) {
    Eigen::Index d = 8;
    int steps = static_cast<int>(state.range(0));
    auto schedule = NoiseSchedule::linear(steps);
    dps::GaussianPrior prior(VectorXd::Zero(d), Covariance::identity(d));
    dps::IdentityOperator op({1, 1, static_cast<int>(d)});
    NoiseStream stream(3);
    VectorXd y = stream.normal_vector(d);

    dps::SamplerConfig config;
    config.step_count = steps;
    config.conditioning = {dps::Variant::dps, dps::StepSizeMode::residual_normalized,
                           1.0, false};
    std::uint64_t seed = 0;
    for (auto _ : state) {
        config.seed = seed++;
        benchmark::DoNotOptimize(
            dps::run_chain(config, schedule, prior, op, y).reconstruction);
    }
}
BENCHMARK(BM_DpsChain)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DownsampleApply(benchmark::State& state) {
    dps::DownsampleAvg op({256, 256, 3}, 4);
    NoiseStream stream(4);
    VectorXd x = stream.normal_vector(op.input_size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(op.apply(x));
    }
}
BENCHMARK(BM_DownsampleApply);

void BM_Ssim(benchmark::State& state) {
    int side = static_cast<int>(state.range(0));
    NoiseStream stream(5);
    dps::TensorShape shape{side, side, 1};
    VectorXd a(shape.size()), b(shape.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a[i] = stream.uniform();
        b[i] = stream.uniform();
    }
    dps::ImageTensor x(shape, a), ref(shape, b);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dps::ssim(x, ref));
    }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_FrechetDistance(benchmark::State& state) {
    Eigen::Index d = state.range(0);
    NoiseStream stream(6);
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = stream.normal();
    }
    dps::Moments a{stream.normal_vector(d),
                   m * m.transpose() + Eigen::MatrixXd::Identity(d, d)};
    dps::Moments b{stream.normal_vector(d),
                   0.5 * (m * m.transpose()) + Eigen::MatrixXd::Identity(d, d)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(dps::frechet_distance(a, b));
    }
}
BENCHMARK(BM_FrechetDistance)->Arg(64)->Arg(192);

}  // namespace

BENCHMARK_MAIN();
