#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <functional>
#include <memory>
#include <vector>

#include "dps/operators.hpp"
#include "dps/rng.hpp"
#include "dps/schedule.hpp"

namespace dps {

/// Symmetric positive-definite covariance with either diagonal or dense
/// storage. Validated at construction.
class Covariance {
public:
    Covariance() = default;  // empty; fill via the factories below
    static Covariance diagonal(Eigen::VectorXd variances);
    static Covariance dense(Eigen::MatrixXd matrix);
    static Covariance identity(Eigen::Index dim);

    Eigen::Index dim() const;
    bool is_diagonal() const { return diagonal_; }
    const Eigen::VectorXd& diag() const { return diag_; }
    const Eigen::MatrixXd& matrix() const { return dense_; }
    Eigen::MatrixXd to_dense() const;
    /// Lower Cholesky factor of the stored covariance.
    Eigen::MatrixXd chol_lower() const;

private:
    bool diagonal_ = true;
    Eigen::VectorXd diag_;
    Eigen::MatrixXd dense_;
};

enum class VjpMode { exact, finite_difference };

/// Pluggable prior over x0 exposing the score of the diffused marginal
/// p_t(x_t) and a vector-Jacobian product through the Tweedie denoiser.
/// Implementations are immutable; score and VJP evaluations are pure and may
/// run concurrently from independent chains.
class ScoreModel {
public:
    virtual ~ScoreModel() = default;

    virtual Eigen::Index dimension() const = 0;

    /// grad_x log p_t(x_t) for the diffused marginal at timestep t.
    virtual Eigen::VectorXd score(const Eigen::VectorXd& x_t, int t,
                                  const NoiseSchedule& schedule) const = 0;

    virtual VjpMode vjp_mode() const { return VjpMode::finite_difference; }

    /// (d xhat0 / d x_t)^T cotangent. The default is a central finite
    /// difference through the Tweedie denoiser with step
    /// h = 1e-4 (1 + |x_t|_inf); exact-capability models override it.
    virtual Eigen::VectorXd denoiser_vjp(const Eigen::VectorXd& x_t, int t,
                                         const NoiseSchedule& schedule,
                                         const Eigen::VectorXd& cotangent) const;

    /// Draw x0 from the prior. Throws UnsupportedError unless the model has a
    /// sampleable closed form.
    virtual Eigen::VectorXd draw_sample(NoiseStream& stream) const;

protected:
    void check_eval(const Eigen::VectorXd& x_t) const;
    void check_cotangent(const Eigen::VectorXd& cotangent) const;
};

/// Tweedie posterior-mean denoiser
/// xhat0 = (x_t + (1 - alpha_bar_t) score(x_t, t)) / sqrt(alpha_bar_t).
Eigen::VectorXd tweedie_denoise(const ScoreModel& model, const Eigen::VectorXd& x_t,
                                int t, const NoiseSchedule& schedule);

/// N(mean, covariance) prior. Diffused marginal at t is
/// N(sqrt(abar) mean, abar Sigma + (1 - abar) I); score and denoiser VJP are
/// closed-form.
class GaussianPrior final : public ScoreModel {
public:
    GaussianPrior(Eigen::VectorXd mean, Covariance covariance);

    Eigen::Index dimension() const override { return mean_.size(); }
    Eigen::VectorXd score(const Eigen::VectorXd& x_t, int t,
                          const NoiseSchedule& schedule) const override;
    VjpMode vjp_mode() const override { return VjpMode::exact; }
    Eigen::VectorXd denoiser_vjp(const Eigen::VectorXd& x_t, int t,
                                 const NoiseSchedule& schedule,
                                 const Eigen::VectorXd& cotangent) const override;
    Eigen::VectorXd draw_sample(NoiseStream& stream) const override;

    const Eigen::VectorXd& mean() const { return mean_; }
    const Covariance& covariance() const { return covariance_; }

private:
    Eigen::VectorXd mean_;
    Covariance covariance_;
};

struct MixtureComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Covariance covariance;
};

/// Finite Gaussian mixture prior. Responsibilities of the diffused mixture
/// are computed with log-sum-exp stabilization so they stay finite at small
/// alpha_bar. A one-component mixture takes the same code path as
/// GaussianPrior and reproduces its outputs bit-for-bit.
class GaussianMixturePrior final : public ScoreModel {
public:
    explicit GaussianMixturePrior(std::vector<MixtureComponent> components);

    Eigen::Index dimension() const override;
    Eigen::VectorXd score(const Eigen::VectorXd& x_t, int t,
                          const NoiseSchedule& schedule) const override;
    VjpMode vjp_mode() const override { return VjpMode::exact; }
    Eigen::VectorXd denoiser_vjp(const Eigen::VectorXd& x_t, int t,
                                 const NoiseSchedule& schedule,
                                 const Eigen::VectorXd& cotangent) const override;
    Eigen::VectorXd draw_sample(NoiseStream& stream) const override;

    const std::vector<MixtureComponent>& components() const { return components_; }

private:
    std::vector<MixtureComponent> components_;
};

/// Wraps an externally supplied black-box xhat0 predictor as a ScoreModel;
/// the score is recovered by inverting Tweedie's formula and the VJP falls
/// back to the finite-difference capability. This is the seam where a real
/// denoising network plugs in.
class DenoiserAdapter final : public ScoreModel {
public:
    using DenoiseFn = std::function<Eigen::VectorXd(
        const Eigen::VectorXd& x_t, int t, const NoiseSchedule& schedule)>;

    DenoiserAdapter(Eigen::Index dimension, DenoiseFn denoiser);

    Eigen::Index dimension() const override { return dimension_; }
    Eigen::VectorXd score(const Eigen::VectorXd& x_t, int t,
                          const NoiseSchedule& schedule) const override;

private:
    Eigen::Index dimension_;
    DenoiseFn denoiser_;
};

struct GaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Closed-form posterior of x0 given y = A x0 + N(0, noise_sigma^2 I) under a
/// Gaussian prior:
///   covariance = (Sigma0^{-1} + A^T A / sigma^2)^{-1}
///   mean       = covariance (Sigma0^{-1} mu0 + A^T y / sigma^2)
/// Materializes A, so oracle scale only.
GaussianMoments analytic_posterior(const GaussianPrior& prior,
                                   const LinearOperator& op,
                                   const Eigen::VectorXd& y, double noise_sigma);

}  // namespace dps
