#pragma once

#include <Eigen/Core>
#include <vector>

#include "dps/image.hpp"

namespace dps::detail {

/// Normalized Gaussian taps exp(-k^2 / 2 sigma^2), k = -radius..radius.
std::vector<double> gaussian_kernel(int radius, double sigma);

/// Half-sample symmetric reflection of index i into [0, n).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

/// Separable correlation along rows then columns, per channel, with reflect
/// padding. Kernel must have odd length.
Eigen::VectorXd filter2d(const Eigen::VectorXd& x, const TensorShape& shape,
                         const std::vector<double>& kernel);

/// Exact adjoint of filter2d (scatter form, passes in reverse order).
Eigen::VectorXd filter2d_adjoint(const Eigen::VectorXd& u,
                                 const TensorShape& shape,
                                 const std::vector<double>& kernel);

}  // namespace dps::detail
