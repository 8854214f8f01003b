#include "dps/image.hpp"

#include <string>

#include "dps/errors.hpp"

namespace dps {

ImageTensor::ImageTensor(TensorShape shape, Eigen::VectorXd values)
    : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.size()) {
        throw DimensionError("tensor shape " + std::to_string(shape_.height) + "x" +
                             std::to_string(shape_.width) + "x" +
                             std::to_string(shape_.channels) + " needs " +
                             std::to_string(shape_.size()) + " values, got " +
                             std::to_string(values_.size()));
    }
    if (!values_.allFinite()) {
        throw NumericError("tensor contains non-finite values");
    }
}

ImageTensor ImageTensor::zero(TensorShape shape) {
    return ImageTensor(shape, Eigen::VectorXd::Zero(shape.size()));
}

ImageTensor ImageTensor::constant(TensorShape shape, double value) {
    return ImageTensor(shape, Eigen::VectorXd::Constant(shape.size(), value));
}

}  // namespace dps
