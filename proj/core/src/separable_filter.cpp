#include "separable_filter.hpp"

#include <cmath>

namespace dps::detail {

std::vector<double> gaussian_kernel(int radius, double sigma) {
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
        taps[k + radius] = w;
        sum += w;
    }
    for (double& w : taps) w /= sum;
    return taps;
}

namespace {

// out[i] = sum_k w[k+r] x[reflect(i+k)] along one axis of the (h,w,c) layout.
// stride selects the axis, count is its length; base indexes the orthogonal
// position.
void correlate_axis(const double* in, double* out, Eigen::Index base,
                    Eigen::Index stride, int count,
                    const std::vector<double>& kernel) {
    int radius = static_cast<int>(kernel.size() / 2);
    for (int i = 0; i < count; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            int j = reflect_index(i + k, count);
            acc += kernel[k + radius] * in[base + j * stride];
        }
        out[base + i * stride] = acc;
    }
}

void correlate_axis_adjoint(const double* in, double* out, Eigen::Index base,
                            Eigen::Index stride, int count,
                            const std::vector<double>& kernel) {
    int radius = static_cast<int>(kernel.size() / 2);
    for (int i = 0; i < count; ++i) {
        double v = in[base + i * stride];
        for (int k = -radius; k <= radius; ++k) {
            int j = reflect_index(i + k, count);
            out[base + j * stride] += kernel[k + radius] * v;
        }
    }
}

enum class Pass { forward, adjoint };

Eigen::VectorXd filter_rows(const Eigen::VectorXd& x, const TensorShape& s,
                            const std::vector<double>& kernel, Pass pass) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    Eigen::Index row_stride = static_cast<Eigen::Index>(s.width) * s.channels;
    for (int y = 0; y < s.height; ++y) {
        for (int c = 0; c < s.channels; ++c) {
            Eigen::Index base = y * row_stride + c;
            if (pass == Pass::forward) {
                correlate_axis(x.data(), out.data(), base, s.channels, s.width, kernel);
            } else {
                correlate_axis_adjoint(x.data(), out.data(), base, s.channels, s.width, kernel);
            }
        }
    }
    return out;
}

Eigen::VectorXd filter_cols(const Eigen::VectorXd& x, const TensorShape& s,
                            const std::vector<double>& kernel, Pass pass) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    Eigen::Index row_stride = static_cast<Eigen::Index>(s.width) * s.channels;
    for (int x_pos = 0; x_pos < s.width; ++x_pos) {
        for (int c = 0; c < s.channels; ++c) {
            Eigen::Index base = static_cast<Eigen::Index>(x_pos) * s.channels + c;
            if (pass == Pass::forward) {
                correlate_axis(x.data(), out.data(), base, row_stride, s.height, kernel);
            } else {
                correlate_axis_adjoint(x.data(), out.data(), base, row_stride, s.height, kernel);
            }
        }
    }
    return out;
}

}  // namespace

Eigen::VectorXd filter2d(const Eigen::VectorXd& x, const TensorShape& shape,
                         const std::vector<double>& kernel) {
    return filter_cols(filter_rows(x, shape, kernel, Pass::forward), shape,
                       kernel, Pass::forward);
}

Eigen::VectorXd filter2d_adjoint(const Eigen::VectorXd& u,
                                 const TensorShape& shape,
                                 const std::vector<double>& kernel) {
    return filter_rows(filter_cols(u, shape, kernel, Pass::adjoint), shape,
                       kernel, Pass::adjoint);
}

}  // namespace dps::detail
