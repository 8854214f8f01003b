#include "dps/rng.hpp"

#include <cmath>
#include <numbers>

namespace dps {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

NoiseStream::NoiseStream(std::uint64_t seed) : engine_(seed) {}

NoiseStream NoiseStream::derive(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t state = seed ^ (0xd1342543de82ef95ULL * (stream_id + 1));
    std::uint64_t mixed = splitmix64(state);
    mixed ^= splitmix64(state);
    return NoiseStream(mixed);
}

double NoiseStream::uniform() {
    // 53 mantissa bits of the raw draw.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 shifted into (0, 1] so log() is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Eigen::VectorXd NoiseStream::normal_vector(Eigen::Index n) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = normal();
    }
    return out;
}

}  // namespace dps
