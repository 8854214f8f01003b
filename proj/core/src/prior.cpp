#include "dps/prior.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dps/errors.hpp"

namespace dps {

namespace {

// Diffused component N(sqrt(abar) mu, C) with C = abar Sigma + (1 - abar) I.
struct DiffusedGaussian {
    Eigen::VectorXd mean;
    bool diagonal;
    Eigen::VectorXd var;     // diagonal case
    Eigen::LLT<Eigen::MatrixXd> llt;  // dense case
    double log_det = 0.0;

    Eigen::VectorXd solve(const Eigen::VectorXd& r) const {
        if (diagonal) return (r.array() / var.array()).matrix();
        return llt.solve(r);
    }

    Eigen::VectorXd score_at(const Eigen::VectorXd& x) const {
        return -solve(x - mean);
    }

    double logpdf(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r = x - mean;
        double quad = r.dot(solve(r));
        double d = static_cast<double>(x.size());
        return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + quad);
    }
};

DiffusedGaussian diffuse(const Eigen::VectorXd& mu, const Covariance& cov,
                         double abar) {
    DiffusedGaussian g;
    g.mean = std::sqrt(abar) * mu;
    g.diagonal = cov.is_diagonal();
    if (g.diagonal) {
        g.var = (abar * cov.diag().array() + (1.0 - abar)).matrix();
        g.log_det = g.var.array().log().sum();
    } else {
        Eigen::MatrixXd c = abar * cov.matrix();
        c.diagonal().array() += 1.0 - abar;
        g.llt.compute(c);
        if (g.llt.info() != Eigen::Success) {
            throw NumericError("diffused covariance is not positive-definite");
        }
        g.log_det = 2.0 * g.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    return g;
}

// (c - (1 - abar) C^{-1} c) / sqrt(abar): VJP of the linear Tweedie denoiser
// of a single Gaussian.
Eigen::VectorXd linear_gaussian_vjp(const DiffusedGaussian& g, double abar,
                                    const Eigen::VectorXd& cotangent) {
    return (cotangent - (1.0 - abar) * g.solve(cotangent)) / std::sqrt(abar);
}

Eigen::VectorXd draw_component(const Eigen::VectorXd& mu, const Covariance& cov,
                               NoiseStream& stream) {
    Eigen::VectorXd z = stream.normal_vector(mu.size());
    if (cov.is_diagonal()) {
        return mu + (cov.diag().array().sqrt() * z.array()).matrix();
    }
    return mu + cov.chol_lower() * z;
}

}  // namespace

Covariance Covariance::diagonal(Eigen::VectorXd variances) {
    if (variances.size() == 0 || (variances.array() <= 0.0).any()) {
        throw ConfigError("diagonal covariance requires strictly positive variances");
    }
    Covariance c;
    c.diagonal_ = true;
    c.diag_ = std::move(variances);
    return c;
}

Covariance Covariance::dense(Eigen::MatrixXd matrix) {
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols()) {
        throw ConfigError("dense covariance must be square and non-empty");
    }
    double scale = matrix.cwiseAbs().maxCoeff();
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + scale)) {
        throw ConfigError("dense covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() != Eigen::Success) {
        throw ConfigError("dense covariance is not positive-definite");
    }
    Covariance c;
    c.diagonal_ = false;
    c.dense_ = std::move(matrix);
    return c;
}

Covariance Covariance::identity(Eigen::Index dim) {
    return diagonal(Eigen::VectorXd::Ones(dim));
}

Eigen::Index Covariance::dim() const {
    return diagonal_ ? diag_.size() : dense_.rows();
}

Eigen::MatrixXd Covariance::to_dense() const {
    if (diagonal_) return diag_.asDiagonal();
    return dense_;
}

Eigen::MatrixXd Covariance::chol_lower() const {
    if (diagonal_) {
        return Eigen::MatrixXd(diag_.array().sqrt().matrix().asDiagonal());
    }
    return Eigen::LLT<Eigen::MatrixXd>(dense_).matrixL();
}

void ScoreModel::check_eval(const Eigen::VectorXd& x_t) const {
    if (x_t.size() != dimension()) {
        throw DimensionError("score input has size " + std::to_string(x_t.size()) +
                             ", model dimension is " + std::to_string(dimension()));
    }
    if (!x_t.allFinite()) {
        throw NumericError("score input contains non-finite values");
    }
}

void ScoreModel::check_cotangent(const Eigen::VectorXd& cotangent) const {
    if (cotangent.size() != dimension()) {
        throw DimensionError("cotangent has size " + std::to_string(cotangent.size()) +
                             ", model dimension is " + std::to_string(dimension()));
    }
}

Eigen::VectorXd ScoreModel::denoiser_vjp(const Eigen::VectorXd& x_t, int t,
                                         const NoiseSchedule& schedule,
                                         const Eigen::VectorXd& cotangent) const {
    check_eval(x_t);
    check_cotangent(cotangent);
    double h = 1e-4 * (1.0 + x_t.cwiseAbs().maxCoeff());
    Eigen::VectorXd grad(x_t.size());
    Eigen::VectorXd probe = x_t;
    for (Eigen::Index i = 0; i < x_t.size(); ++i) {
        probe[i] = x_t[i] + h;
        double up = cotangent.dot(tweedie_denoise(*this, probe, t, schedule));
        probe[i] = x_t[i] - h;
        double down = cotangent.dot(tweedie_denoise(*this, probe, t, schedule));
        probe[i] = x_t[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

Eigen::VectorXd ScoreModel::draw_sample(NoiseStream&) const {
    throw UnsupportedError("this score model has no sampleable prior form");
}

Eigen::VectorXd tweedie_denoise(const ScoreModel& model, const Eigen::VectorXd& x_t,
                                int t, const NoiseSchedule& schedule) {
    double abar = schedule.alpha_bar(t);
    return (x_t + (1.0 - abar) * model.score(x_t, t, schedule)) / std::sqrt(abar);
}

GaussianPrior::GaussianPrior(Eigen::VectorXd mean, Covariance covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (mean_.size() != covariance_.dim()) {
        throw DimensionError("prior mean and covariance dimensions disagree");
    }
}

Eigen::VectorXd GaussianPrior::score(const Eigen::VectorXd& x_t, int t,
                                     const NoiseSchedule& schedule) const {
    check_eval(x_t);
    return diffuse(mean_, covariance_, schedule.alpha_bar(t)).score_at(x_t);
}

Eigen::VectorXd GaussianPrior::denoiser_vjp(const Eigen::VectorXd& x_t, int t,
                                            const NoiseSchedule& schedule,
                                            const Eigen::VectorXd& cotangent) const {
    check_eval(x_t);
    check_cotangent(cotangent);
    double abar = schedule.alpha_bar(t);
    return linear_gaussian_vjp(diffuse(mean_, covariance_, abar), abar, cotangent);
}

Eigen::VectorXd GaussianPrior::draw_sample(NoiseStream& stream) const {
    return draw_component(mean_, covariance_, stream);
}

GaussianMixturePrior::GaussianMixturePrior(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    if (components_.empty()) {
        throw ConfigError("mixture prior needs at least one component");
    }
    double total = 0.0;
    Eigen::Index d = components_.front().mean.size();
    for (const auto& c : components_) {
        if (c.weight <= 0.0) {
            throw ConfigError("mixture weights must be strictly positive");
        }
        if (c.mean.size() != d || c.covariance.dim() != d) {
            throw DimensionError("mixture components have inconsistent dimensions");
        }
        total += c.weight;
    }
    for (auto& c : components_) c.weight /= total;
}

Eigen::Index GaussianMixturePrior::dimension() const {
    return components_.front().mean.size();
}

Eigen::VectorXd GaussianMixturePrior::score(const Eigen::VectorXd& x_t, int t,
                                            const NoiseSchedule& schedule) const {
    check_eval(x_t);
    double abar = schedule.alpha_bar(t);
    if (components_.size() == 1) {
        const auto& c = components_.front();
        return diffuse(c.mean, c.covariance, abar).score_at(x_t);
    }

    size_t k = components_.size();
    std::vector<Eigen::VectorXd> scores(k);
    Eigen::VectorXd log_terms(k);
    for (size_t i = 0; i < k; ++i) {
        DiffusedGaussian g = diffuse(components_[i].mean, components_[i].covariance, abar);
        scores[i] = g.score_at(x_t);
        log_terms[i] = std::log(components_[i].weight) + g.logpdf(x_t);
    }
    double peak = log_terms.maxCoeff();
    Eigen::VectorXd resp = (log_terms.array() - peak).exp();
    resp /= resp.sum();

    Eigen::VectorXd out = Eigen::VectorXd::Zero(x_t.size());
    for (size_t i = 0; i < k; ++i) out += resp[i] * scores[i];
    return out;
}

Eigen::VectorXd GaussianMixturePrior::denoiser_vjp(
    const Eigen::VectorXd& x_t, int t, const NoiseSchedule& schedule,
    const Eigen::VectorXd& cotangent) const {
    check_eval(x_t);
    check_cotangent(cotangent);
    double abar = schedule.alpha_bar(t);
    if (components_.size() == 1) {
        const auto& c = components_.front();
        return linear_gaussian_vjp(diffuse(c.mean, c.covariance, abar), abar, cotangent);
    }

    // Score Jacobian of the mixture:
    //   J = sum_k r_k (s_k s_k^T - C_k^{-1}) - s s^T
    // applied to the cotangent, then chained through the Tweedie map
    // xhat0 = (x + (1 - abar) s) / sqrt(abar).
    size_t k = components_.size();
    std::vector<DiffusedGaussian> comps;
    comps.reserve(k);
    Eigen::VectorXd log_terms(k);
    for (size_t i = 0; i < k; ++i) {
        comps.push_back(diffuse(components_[i].mean, components_[i].covariance, abar));
        log_terms[i] = std::log(components_[i].weight) + comps[i].logpdf(x_t);
    }
    double peak = log_terms.maxCoeff();
    Eigen::VectorXd resp = (log_terms.array() - peak).exp();
    resp /= resp.sum();

    Eigen::VectorXd s = Eigen::VectorXd::Zero(x_t.size());
    std::vector<Eigen::VectorXd> scores(k);
    for (size_t i = 0; i < k; ++i) {
        scores[i] = comps[i].score_at(x_t);
        s += resp[i] * scores[i];
    }

    Eigen::VectorXd jc = Eigen::VectorXd::Zero(x_t.size());
    for (size_t i = 0; i < k; ++i) {
        jc += resp[i] * (scores[i] * scores[i].dot(cotangent) - comps[i].solve(cotangent));
    }
    jc -= s * s.dot(cotangent);
    return (cotangent + (1.0 - abar) * jc) / std::sqrt(abar);
}

Eigen::VectorXd GaussianMixturePrior::draw_sample(NoiseStream& stream) const {
    size_t pick = 0;
    if (components_.size() > 1) {
        double u = stream.uniform();
        double cum = 0.0;
        for (size_t i = 0; i < components_.size(); ++i) {
            cum += components_[i].weight;
            if (u < cum) {
                pick = i;
                break;
            }
            pick = i;
        }
    }
    return draw_component(components_[pick].mean, components_[pick].covariance, stream);
}

DenoiserAdapter::DenoiserAdapter(Eigen::Index dimension, DenoiseFn denoiser)
    : dimension_(dimension), denoiser_(std::move(denoiser)) {
    if (dimension_ < 1 || !denoiser_) {
        throw ConfigError("denoiser adapter needs a positive dimension and a callable");
    }
}

Eigen::VectorXd DenoiserAdapter::score(const Eigen::VectorXd& x_t, int t,
                                       const NoiseSchedule& schedule) const {
    check_eval(x_t);
    double abar = schedule.alpha_bar(t);
    Eigen::VectorXd xhat0 = denoiser_(x_t, t, schedule);
    if (xhat0.size() != dimension_) {
        throw DimensionError("black-box denoiser returned wrong dimension");
    }
    // Tweedie inverted: s = (sqrt(abar) xhat0 - x_t) / (1 - abar).
    return (std::sqrt(abar) * xhat0 - x_t) / (1.0 - abar);
}

GaussianMoments analytic_posterior(const GaussianPrior& prior,
                                   const LinearOperator& op,
                                   const Eigen::VectorXd& y, double noise_sigma) {
    if (noise_sigma <= 0.0) {
        throw ConfigError("analytic posterior requires noise_sigma > 0");
    }
    if (y.size() != op.output_size() || prior.dimension() != op.input_size()) {
        throw DimensionError("posterior oracle shapes disagree");
    }
    Eigen::Index d = prior.dimension();
    Eigen::MatrixXd sigma0 = prior.covariance().to_dense();
    Eigen::LLT<Eigen::MatrixXd> prior_llt(sigma0);
    if (prior_llt.info() != Eigen::Success) {
        throw NumericError("prior covariance is singular");
    }
    Eigen::MatrixXd prior_precision = prior_llt.solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::MatrixXd a = op.materialize();
    double inv_var = 1.0 / (noise_sigma * noise_sigma);

    Eigen::MatrixXd posterior_precision = prior_precision + inv_var * a.transpose() * a;
    Eigen::LLT<Eigen::MatrixXd> post_llt(posterior_precision);
    if (post_llt.info() != Eigen::Success) {
        throw NumericError("posterior precision is singular");
    }
    GaussianMoments out;
    out.covariance = post_llt.solve(Eigen::MatrixXd::Identity(d, d));
    out.mean = post_llt.solve(prior_precision * prior.mean() + inv_var * a.transpose() * y);
    return out;
}

}  // namespace dps
