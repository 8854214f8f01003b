#include "dps/sampler.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "dps/errors.hpp"

namespace dps {

DdpmStep ddpm_step(const Eigen::VectorXd& x_t, int t, const NoiseSchedule& schedule,
                   const ScoreModel& model, const Eigen::VectorXd& z) {
    if (z.size() != x_t.size()) {
        throw DimensionError("noise vector size does not match the iterate");
    }
    double alpha = schedule.alpha(t);
    double abar = schedule.alpha_bar(t);
    double abar_prev = schedule.alpha_bar_prev(t);
    double beta = schedule.beta(t);

    Eigen::VectorXd denoised = tweedie_denoise(model, x_t, t, schedule);
    double coeff_current = std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar);
    double coeff_denoised = std::sqrt(abar_prev) * beta / (1.0 - abar);

    DdpmStep out;
    out.next = coeff_current * x_t + coeff_denoised * denoised +
               schedule.posterior_sigma(t) * z;
    out.denoised = std::move(denoised);
    return out;
}

double residual_norm(const Eigen::VectorXd& y, const LinearOperator& op,
                     const Eigen::VectorXd& denoised) {
    if (y.size() != op.output_size()) {
        throw DimensionError("measurement size does not match operator output");
    }
    return (y - op.apply(denoised)).norm();
}

double effective_step_size(const ConditioningMethod& method, double residual) {
    if (method.step_size_mode == StepSizeMode::constant) {
        return method.zeta;
    }
    return residual > 1e-12 ? method.zeta / residual : 0.0;
}

Eigen::VectorXd dps_correct(const Eigen::VectorXd& x_prime, const Eigen::VectorXd& x_t,
                            const Eigen::VectorXd& denoised, int t,
                            const Eigen::VectorXd& y, const LinearOperator& op,
                            const ScoreModel& model, const NoiseSchedule& schedule,
                            double zeta_t) {
    if (zeta_t < 0.0) {
        throw ConfigError("conditioning step size must be >= 0");
    }
    if (zeta_t == 0.0) {
        return x_prime;
    }
    Eigen::VectorXd cotangent = op.adjoint(y - op.apply(denoised));
    Eigen::VectorXd gradient = -2.0 * model.denoiser_vjp(x_t, t, schedule, cotangent);
    return x_prime - zeta_t * gradient;
}

Eigen::VectorXd mcg_correct(const Eigen::VectorXd& x_prime, const Eigen::VectorXd& x_t,
                            const Eigen::VectorXd& denoised, int t,
                            const Eigen::VectorXd& y, const LinearOperator& op,
                            const ScoreModel& model, const NoiseSchedule& schedule,
                            double zeta_t, bool projection) {
    Eigen::VectorXd corrected =
        dps_correct(x_prime, x_t, denoised, t, y, op, model, schedule, zeta_t);
    if (!projection) {
        return corrected;
    }
    // Consistency target at the incoming noise level: the signal component of
    // x_{t-1} carries a factor sqrt(abar_{t-1}), so the measurement it must
    // reproduce is scaled the same way.
    double scale = std::sqrt(schedule.alpha_bar_prev(t));
    return op.project(corrected, scale * y);
}

ChainResult run_chain(const SamplerConfig& config, const NoiseSchedule& schedule,
                      const ScoreModel& model, const LinearOperator& op,
                      const Eigen::VectorXd& y) {
    if (config.step_count != schedule.step_count()) {
        throw ConfigError("sampler step_count disagrees with the schedule");
    }
    if (model.dimension() != op.input_size()) {
        throw DimensionError("model dimension does not match operator input");
    }
    if (y.size() != op.output_size()) {
        throw DimensionError("measurement size does not match operator output");
    }

    auto start = std::chrono::steady_clock::now();
    NoiseStream stream(config.seed);
    Eigen::Index d = model.dimension();
    Eigen::VectorXd x = stream.normal_vector(d);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);

    ChainResult result;
    result.seed = config.seed;
    result.residuals.reserve(config.step_count);
    if (config.record_trajectory) {
        result.trajectory.reserve(config.step_count);
    }

    const ConditioningMethod& method = config.conditioning;
    for (int t = config.step_count; t >= 1; --t) {
        Eigen::VectorXd z =
            config.deterministic_noise ? zero : stream.normal_vector(d);
        DdpmStep step = ddpm_step(x, t, schedule, model, z);
        double resid = residual_norm(y, op, step.denoised);
        result.residuals.push_back(resid);

        switch (method.variant) {
            case Variant::vanilla:
                x = std::move(step.next);
                break;
            case Variant::dps:
                x = dps_correct(step.next, x, step.denoised, t, y, op, model,
                                schedule, effective_step_size(method, resid));
                break;
            case Variant::mcg:
                x = mcg_correct(step.next, x, step.denoised, t, y, op, model,
                                schedule, effective_step_size(method, resid),
                                method.projection);
                break;
        }

        if (!x.allFinite()) {
            throw DivergenceError("chain diverged at timestep " + std::to_string(t), t);
        }
        if (config.record_trajectory) {
            result.trajectory.push_back(x);
        }
    }

    result.reconstruction = std::move(x);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace dps
