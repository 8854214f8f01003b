#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dps/operators.hpp"
#include "dps/prior.hpp"
#include "dps/schedule.hpp"

namespace dps {

enum class Variant { vanilla, dps, mcg };

enum class StepSizeMode {
    constant,             // zeta_t = zeta
    residual_normalized,  // zeta_t = zeta / ||y - A xhat0||
};

struct ConditioningMethod {
    Variant variant = Variant::vanilla;
    StepSizeMode step_size_mode = StepSizeMode::residual_normalized;
    double zeta = 1.0;
    bool projection = true;  // MCG only: explicit range-space projection
};

struct SamplerConfig {
    int step_count = 1000;
    ConditioningMethod conditioning;
    std::uint64_t seed = 0;
    bool deterministic_noise = false;  // forces z = 0 in the reverse update
    bool record_trajectory = false;
};

struct ChainResult {
    Eigen::VectorXd reconstruction;
    std::vector<double> residuals;  // ||y - A xhat0|| per step, t = T..1
    std::vector<Eigen::VectorXd> trajectory;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

struct DdpmStep {
    Eigen::VectorXd next;      // x'_{t-1}
    Eigen::VectorXd denoised;  // xhat0 via Tweedie
};

/// One unconditional reverse update:
///   x'_{t-1} = sqrt(alpha_t)(1 - abar_{t-1})/(1 - abar_t) x_t
///            + sqrt(abar_{t-1}) beta_t / (1 - abar_t)      xhat0
///            + sigma_tilde_t z
/// sigma_tilde_1 = 0, so the t = 1 step is noiseless regardless of z.
DdpmStep ddpm_step(const Eigen::VectorXd& x_t, int t, const NoiseSchedule& schedule,
                   const ScoreModel& model, const Eigen::VectorXd& z);

/// ||y - A xhat0|| (the norm itself; its square only appears inside gradients).
double residual_norm(const Eigen::VectorXd& y, const LinearOperator& op,
                     const Eigen::VectorXd& denoised);

/// Resolves the per-step conditioning strength for the configured mode.
double effective_step_size(const ConditioningMethod& method, double residual);

/// Measurement-gradient correction:
///   x_{t-1} = x'_{t-1} - zeta_t grad_{x_t} ||y - A xhat0||^2,
/// with the gradient taken through the denoiser:
///   grad = -2 vjp(cotangent = A^T (y - A xhat0)).
Eigen::VectorXd dps_correct(const Eigen::VectorXd& x_prime, const Eigen::VectorXd& x_t,
                            const Eigen::VectorXd& denoised, int t,
                            const Eigen::VectorXd& y, const LinearOperator& op,
                            const ScoreModel& model, const NoiseSchedule& schedule,
                            double zeta_t);

/// Same gradient step as dps_correct; with projection on, the iterate is then
/// projected onto measurement consistency against the noise-level-scaled
/// target sqrt(abar_{t-1}) y, so A x_{t-1} = sqrt(abar_{t-1}) y exactly.
Eigen::VectorXd mcg_correct(const Eigen::VectorXd& x_prime, const Eigen::VectorXd& x_t,
                            const Eigen::VectorXd& denoised, int t,
                            const Eigen::VectorXd& y, const LinearOperator& op,
                            const ScoreModel& model, const NoiseSchedule& schedule,
                            double zeta_t, bool projection);

/// Full reverse chain from x_T ~ N(0, I), fully deterministic given the seed.
/// Throws DivergenceError naming the timestep if an iterate goes non-finite.
ChainResult run_chain(const SamplerConfig& config, const NoiseSchedule& schedule,
                      const ScoreModel& model, const LinearOperator& op,
                      const Eigen::VectorXd& y);

}  // namespace dps
