#pragma once

#include <Eigen/Core>

namespace dps {

/// Height x width x channels, channel-last, row-major. A plain vector of
/// dimension d is represented as {1, 1, d}.
struct TensorShape {
    int height = 1;
    int width = 1;
    int channels = 1;

    Eigen::Index size() const {
        return static_cast<Eigen::Index>(height) * width * channels;
    }
    bool operator==(const TensorShape&) const = default;
};

/// Shaped view over a flat value vector. Values are nominally in [0,1] for
/// image data; nothing clamps mid-pipeline, clamping happens only when a
/// final image is written out.
class ImageTensor {
public:
    ImageTensor() = default;
    ImageTensor(TensorShape shape, Eigen::VectorXd values);
    static ImageTensor zero(TensorShape shape);
    static ImageTensor constant(TensorShape shape, double value);

    const TensorShape& shape() const { return shape_; }
    Eigen::Index size() const { return values_.size(); }

    double at(int y, int x, int c) const { return values_[index(y, x, c)]; }
    double& at(int y, int x, int c) { return values_[index(y, x, c)]; }

    const Eigen::VectorXd& flat() const { return values_; }
    Eigen::VectorXd& flat() { return values_; }

private:
    Eigen::Index index(int y, int x, int c) const {
        return (static_cast<Eigen::Index>(y) * shape_.width + x) * shape_.channels + c;
    }

    TensorShape shape_;
    Eigen::VectorXd values_;
};

}  // namespace dps
