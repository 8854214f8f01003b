#include "dps/operators.hpp"

#include <string>

#include "dps/errors.hpp"
#include "separable_filter.hpp"

namespace dps {

Eigen::VectorXd LinearOperator::project(const Eigen::VectorXd&,
                                        const Eigen::VectorXd&) const {
    throw UnsupportedError("operator '" + name() +
                           "' does not support range-space projection");
}

Eigen::MatrixXd LinearOperator::materialize() const {
    Eigen::Index d = input_size();
    Eigen::Index n = output_size();
    Eigen::MatrixXd dense(n, d);
    Eigen::VectorXd basis = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        basis[j] = 1.0;
        dense.col(j) = apply(basis);
        basis[j] = 0.0;
    }
    return dense;
}

void LinearOperator::check_input(const Eigen::VectorXd& x) const {
    if (x.size() != input_size()) {
        throw DimensionError("operator '" + name() + "' expects input of size " +
                             std::to_string(input_size()) + ", got " +
                             std::to_string(x.size()));
    }
}

void LinearOperator::check_output(const Eigen::VectorXd& u) const {
    if (u.size() != output_size()) {
        throw DimensionError("operator '" + name() + "' expects output of size " +
                             std::to_string(output_size()) + ", got " +
                             std::to_string(u.size()));
    }
}

Eigen::VectorXd IdentityOperator::apply(const Eigen::VectorXd& x) const {
    check_input(x);
    return x;
}

Eigen::VectorXd IdentityOperator::adjoint(const Eigen::VectorXd& u) const {
    check_output(u);
    return u;
}

Eigen::VectorXd IdentityOperator::project(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& y) const {
    check_input(x);
    check_output(y);
    return y;
}

DownsampleAvg::DownsampleAvg(TensorShape input, int factor)
    : in_(input), factor_(factor) {
    if (factor < 1) {
        throw ConfigError("downsample factor must be >= 1, got " +
                          std::to_string(factor));
    }
    if (input.height % factor != 0 || input.width % factor != 0) {
        throw ConfigError("downsample factor " + std::to_string(factor) +
                          " does not divide " + std::to_string(input.height) +
                          "x" + std::to_string(input.width));
    }
    out_ = TensorShape{input.height / factor, input.width / factor, input.channels};
}

std::string DownsampleAvg::name() const {
    return "downsample_avg(" + std::to_string(factor_) + ")";
}

Eigen::VectorXd DownsampleAvg::apply(const Eigen::VectorXd& x) const {
    check_input(x);
    ImageTensor out = ImageTensor::zero(out_);
    double inv = 1.0 / (static_cast<double>(factor_) * factor_);
    auto idx = [&](int y, int xx, int c) {
        return (static_cast<Eigen::Index>(y) * in_.width + xx) * in_.channels + c;
    };
    for (int y = 0; y < out_.height; ++y) {
        for (int xx = 0; xx < out_.width; ++xx) {
            for (int c = 0; c < out_.channels; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < factor_; ++dy) {
                    for (int dx = 0; dx < factor_; ++dx) {
                        acc += x[idx(y * factor_ + dy, xx * factor_ + dx, c)];
                    }
                }
                out.at(y, xx, c) = acc * inv;
            }
        }
    }
    return out.flat();
}

Eigen::VectorXd DownsampleAvg::adjoint(const Eigen::VectorXd& u) const {
    check_output(u);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(in_.size());
    double inv = 1.0 / (static_cast<double>(factor_) * factor_);
    auto idx = [&](int y, int xx, int c) {
        return (static_cast<Eigen::Index>(y) * in_.width + xx) * in_.channels + c;
    };
    for (int y = 0; y < out_.height; ++y) {
        for (int xx = 0; xx < out_.width; ++xx) {
            for (int c = 0; c < out_.channels; ++c) {
                double v = u[(static_cast<Eigen::Index>(y) * out_.width + xx) * out_.channels + c] * inv;
                for (int dy = 0; dy < factor_; ++dy) {
                    for (int dx = 0; dx < factor_; ++dx) {
                        out[idx(y * factor_ + dy, xx * factor_ + dx, c)] = v;
                    }
                }
            }
        }
    }
    return out;
}

Eigen::VectorXd DownsampleAvg::project(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& y) const {
    check_input(x);
    check_output(y);
    // A A^T = (1/p^2) I, so A^T (A A^T)^{-1} r broadcasts r to each block.
    Eigen::VectorXd r = y - apply(x);
    Eigen::VectorXd out = x;
    for (int yy = 0; yy < out_.height; ++yy) {
        for (int xx = 0; xx < out_.width; ++xx) {
            for (int c = 0; c < out_.channels; ++c) {
                double v = r[(static_cast<Eigen::Index>(yy) * out_.width + xx) * out_.channels + c];
                for (int dy = 0; dy < factor_; ++dy) {
                    for (int dx = 0; dx < factor_; ++dx) {
                        auto i = (static_cast<Eigen::Index>(yy * factor_ + dy) * in_.width +
                                  (xx * factor_ + dx)) * in_.channels + c;
                        out[i] += v;
                    }
                }
            }
        }
    }
    return out;
}

GaussianBlur::GaussianBlur(TensorShape shape, int radius, double sigma)
    : shape_(shape), radius_(radius), sigma_(sigma) {
    if (radius < 1 || sigma <= 0.0) {
        throw ConfigError("gaussian blur needs radius >= 1 and sigma > 0");
    }
    kernel_ = detail::gaussian_kernel(radius, sigma);
}

std::string GaussianBlur::name() const {
    return "gaussian_blur(r=" + std::to_string(radius_) + ")";
}

Eigen::VectorXd GaussianBlur::apply(const Eigen::VectorXd& x) const {
    check_input(x);
    return detail::filter2d(x, shape_, kernel_);
}

Eigen::VectorXd GaussianBlur::adjoint(const Eigen::VectorXd& u) const {
    check_output(u);
    return detail::filter2d_adjoint(u, shape_, kernel_);
}

Eigen::VectorXd degrade(const LinearOperator& op, const Eigen::VectorXd& x0,
                        double noise_sigma, NoiseStream& stream) {
    if (noise_sigma < 0.0) {
        throw ConfigError("noise_sigma must be >= 0, got " +
                          std::to_string(noise_sigma));
    }
    Eigen::VectorXd y = op.apply(x0);
    if (noise_sigma > 0.0) {
        y += noise_sigma * stream.normal_vector(y.size());
    }
    return y;
}

}  // namespace dps
