#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "dps/image.hpp"
#include "dps/rng.hpp"

namespace dps {

/// Linear degradation A with an exact adjoint. Operators are immutable and
/// concurrently usable; they act on flat value vectors, with the shape
/// metadata describing the image layout where one exists.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual std::string name() const = 0;
    virtual TensorShape input_shape() const = 0;
    virtual TensorShape output_shape() const = 0;
    Eigen::Index input_size() const { return input_shape().size(); }
    Eigen::Index output_size() const { return output_shape().size(); }

    virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd adjoint(const Eigen::VectorXd& u) const = 0;

    /// True when A A^T is invertible and project() is available.
    virtual bool supports_projection() const { return false; }

    /// Range-space projection x + A^T (A A^T)^{-1} (y - A x). The result
    /// satisfies A(result) = y. Throws UnsupportedError unless
    /// supports_projection().
    virtual Eigen::VectorXd project(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y) const;

    /// Dense matrix built column-by-column. Oracle-scale only.
    Eigen::MatrixXd materialize() const;

protected:
    void check_input(const Eigen::VectorXd& x) const;
    void check_output(const Eigen::VectorXd& u) const;
};

class IdentityOperator final : public LinearOperator {
public:
    explicit IdentityOperator(TensorShape shape) : shape_(shape) {}

    std::string name() const override { return "identity"; }
    TensorShape input_shape() const override { return shape_; }
    TensorShape output_shape() const override { return shape_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& u) const override;
    bool supports_projection() const override { return true; }
    Eigen::VectorXd project(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) const override;

private:
    TensorShape shape_;
};

/// Non-overlapping p x p block averaging per channel. A A^T = (1/p^2) I, so
/// the range-space projection is exact and cheap.
class DownsampleAvg final : public LinearOperator {
public:
    DownsampleAvg(TensorShape input, int factor);

    std::string name() const override;
    TensorShape input_shape() const override { return in_; }
    TensorShape output_shape() const override { return out_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& u) const override;
    bool supports_projection() const override { return true; }
    Eigen::VectorXd project(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) const override;
    int factor() const { return factor_; }

private:
    TensorShape in_;
    TensorShape out_;
    int factor_;
};

/// Separable Gaussian convolution with half-sample symmetric (reflect)
/// padding. Same input and output shape. No projection support: reflect
/// padding makes A A^T non-trivial to invert, and the spec for projection
/// only covers operators with diagonal A A^T.
class GaussianBlur final : public LinearOperator {
public:
    GaussianBlur(TensorShape shape, int radius, double sigma);

    std::string name() const override;
    TensorShape input_shape() const override { return shape_; }
    TensorShape output_shape() const override { return shape_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& u) const override;

private:
    TensorShape shape_;
    int radius_;
    double sigma_;
    std::vector<double> kernel_;
};

/// A(x0) + n, n elementwise Gaussian with standard deviation noise_sigma.
/// noise_sigma = 0 returns exactly apply(x0) and does not consume the stream.
Eigen::VectorXd degrade(const LinearOperator& op, const Eigen::VectorXd& x0,
                        double noise_sigma, NoiseStream& stream);

}  // namespace dps
