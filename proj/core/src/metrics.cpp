#include "dps/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dps/errors.hpp"
#include "separable_filter.hpp"

namespace dps {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_same_shape(const ImageTensor& x, const ImageTensor& ref) {
    if (!(x.shape() == ref.shape())) {
        throw DimensionError("metric inputs have different shapes");
    }
}

double mse(const ImageTensor& x, const ImageTensor& ref) {
    return (x.flat() - ref.flat()).squaredNorm() / static_cast<double>(x.size());
}

// Positive-semidefinite square root via symmetric eigendecomposition,
// negative eigenvalues clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

Aggregate aggregate_of(const std::vector<double>& values) {
    Aggregate a;
    double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / n;
    if (values.size() > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(acc / (n - 1.0));
    }
    return a;
}

}  // namespace

double psnr(const ImageTensor& x, const ImageTensor& ref, double max_value) {
    check_same_shape(x, ref);
    if (max_value <= 0.0) {
        throw ConfigError("psnr max_value must be > 0");
    }
    double err = mse(x, ref);
    if (err == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(max_value * max_value / err);
}

double rmse(const ImageTensor& x, const ImageTensor& ref) {
    check_same_shape(x, ref);
    return std::sqrt(mse(x, ref));
}

double ssim(const ImageTensor& x, const ImageTensor& ref) {
    check_same_shape(x, ref);
    const int window = 11;
    const TensorShape& s = x.shape();
    if (s.height < window || s.width < window) {
        throw ConfigError("ssim needs images at least " + std::to_string(window) +
                          " pixels on each side");
    }
    const double c1 = 0.01 * 0.01;  // (0.01 L)^2, L = 1
    const double c2 = 0.03 * 0.03;

    auto kernel = detail::gaussian_kernel(window / 2, 1.5);
    auto filt = [&](const Eigen::VectorXd& v) {
        return detail::filter2d(v, s, kernel);
    };

    const Eigen::VectorXd& a = x.flat();
    const Eigen::VectorXd& b = ref.flat();
    Eigen::VectorXd mu_a = filt(a);
    Eigen::VectorXd mu_b = filt(b);
    Eigen::VectorXd var_a = filt(a.cwiseProduct(a)) - mu_a.cwiseProduct(mu_a);
    Eigen::VectorXd var_b = filt(b.cwiseProduct(b)) - mu_b.cwiseProduct(mu_b);
    Eigen::VectorXd cov_ab = filt(a.cwiseProduct(b)) - mu_a.cwiseProduct(mu_b);

    Eigen::ArrayXd numer = (2.0 * mu_a.cwiseProduct(mu_b).array() + c1) *
                           (2.0 * cov_ab.array() + c2);
    Eigen::ArrayXd denom = (mu_a.array().square() + mu_b.array().square() + c1) *
                           (var_a.array() + var_b.array() + c2);
    return (numer / denom).mean();
}

double kaggle_score(double psnr_db, double ssim_value) {
    if (std::isinf(psnr_db) && psnr_db > 0.0) {
        psnr_db = kPsnrClampDb;
    }
    if (!std::isfinite(psnr_db) || !std::isfinite(ssim_value)) {
        throw NumericError("kaggle score inputs must be finite");
    }
    return psnr_db / 40.0 + ssim_value;
}

double frechet_distance(const Moments& a, const Moments& b) {
    if (a.mean.size() != b.mean.size() ||
        a.covariance.rows() != b.covariance.rows() ||
        a.covariance.rows() != a.mean.size()) {
        throw DimensionError("frechet moments have mismatched dimensions");
    }
    Eigen::MatrixXd root_a = psd_sqrt(a.covariance);
    Eigen::MatrixXd inner = root_a * b.covariance * root_a;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
    double trace_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double value = (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
                   b.covariance.trace() - 2.0 * trace_sqrt;
    return std::max(value, 0.0);
}

Eigen::VectorXd pooled_pixel_features(const ImageTensor& image) {
    const TensorShape& s = image.shape();
    int oh = std::min(8, s.height);
    int ow = std::min(8, s.width);
    Eigen::VectorXd features(static_cast<Eigen::Index>(oh) * ow * s.channels);
    Eigen::Index idx = 0;
    for (int y = 0; y < oh; ++y) {
        int y0 = y * s.height / oh;
        int y1 = (y + 1) * s.height / oh;
        for (int x = 0; x < ow; ++x) {
            int x0 = x * s.width / ow;
            int x1 = (x + 1) * s.width / ow;
            for (int c = 0; c < s.channels; ++c) {
                double acc = 0.0;
                for (int yy = y0; yy < y1; ++yy) {
                    for (int xx = x0; xx < x1; ++xx) {
                        acc += image.at(yy, xx, c);
                    }
                }
                features[idx++] = acc / ((y1 - y0) * (x1 - x0));
            }
        }
    }
    return features;
}

Moments fit_feature_moments(const std::vector<ImageTensor>& images,
                            const FeatureExtractor& extractor) {
    if (images.size() < 2) {
        throw ConfigError("feature moments need at least 2 images, got " +
                          std::to_string(images.size()));
    }
    const FeatureExtractor& fe =
        extractor ? extractor : FeatureExtractor(pooled_pixel_features);

    Eigen::VectorXd first = fe(images.front());
    Eigen::Index dim = first.size();
    Eigen::MatrixXd feats(dim, static_cast<Eigen::Index>(images.size()));
    feats.col(0) = first;
    for (size_t i = 1; i < images.size(); ++i) {
        Eigen::VectorXd f = fe(images[i]);
        if (f.size() != dim) {
            throw DimensionError("feature dimensions differ across images");
        }
        feats.col(static_cast<Eigen::Index>(i)) = f;
    }

    Moments m;
    m.mean = feats.rowwise().mean();
    Eigen::MatrixXd centered = feats.colwise() - m.mean;
    m.covariance =
        centered * centered.transpose() / static_cast<double>(images.size() - 1);
    return m;
}

MetricsReport evaluate_batch(const std::vector<ImageTensor>& recons,
                             const std::vector<ImageTensor>& refs) {
    if (recons.size() != refs.size()) {
        throw DimensionError("reconstruction and reference lists differ in length");
    }
    if (recons.empty()) {
        throw ConfigError("evaluate_batch needs at least one image pair");
    }
    const TensorShape& shape = recons.front().shape();
    for (size_t i = 0; i < recons.size(); ++i) {
        check_same_shape(recons[i], refs[i]);
        if (!(recons[i].shape() == shape)) {
            throw DimensionError("all images in a batch must share one shape");
        }
    }

    bool ssim_capable = shape.height >= 11 && shape.width >= 11;

    MetricsReport report;
    report.per_image.reserve(recons.size());
    std::vector<double> psnrs, ssims, rmses, ks;
    for (size_t i = 0; i < recons.size(); ++i) {
        PerImageMetrics m;
        m.psnr_db = std::min(psnr(recons[i], refs[i]), kPsnrClampDb);
        m.rmse = rmse(recons[i], refs[i]);
        m.ssim = ssim_capable ? ssim(recons[i], refs[i]) : kNan;
        m.k = ssim_capable ? kaggle_score(m.psnr_db, m.ssim) : kNan;
        psnrs.push_back(m.psnr_db);
        ssims.push_back(m.ssim);
        rmses.push_back(m.rmse);
        ks.push_back(m.k);
        report.per_image.push_back(m);
    }

    report.psnr = aggregate_of(psnrs);
    report.ssim = aggregate_of(ssims);
    report.rmse = aggregate_of(rmses);
    report.k = aggregate_of(ks);
    report.k_of_means = report.psnr.mean / 40.0 + report.ssim.mean;
    report.frechet =
        recons.size() < 2
            ? kNan
            : frechet_distance(fit_feature_moments(recons), fit_feature_moments(refs));
    return report;
}

}  // namespace dps
