#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace dps {

/// Deterministic Gaussian noise source.
///
/// Chains, dataset items and repeats each own an independent stream derived
/// from (global seed, stream id), so results never depend on thread
/// scheduling. Normal variates come from an explicit Box-Muller transform on
/// top of mt19937_64 so the byte-level output is identical across standard
/// library implementations.
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed);

    /// Independent stream for a (seed, stream_id) pair.
    static NoiseStream derive(std::uint64_t seed, std::uint64_t stream_id);

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal variate.
    double normal();

    Eigen::VectorXd normal_vector(Eigen::Index n);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 mixing step; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace dps
