#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "dps/image.hpp"

namespace dps {

/// PSNR of a perfect reconstruction is +inf; reports clamp it here so
/// Table-style aggregate means and the Kaggle score stay finite.
inline constexpr double kPsnrClampDb = 100.0;

/// 10 log10(max_value^2 / MSE); returns +inf when MSE = 0.
double psnr(const ImageTensor& x, const ImageTensor& ref, double max_value = 1.0);

double rmse(const ImageTensor& x, const ImageTensor& ref);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), reflect
/// padding, L = 1, C1 = (0.01 L)^2, C2 = (0.03 L)^2. Channels are averaged
/// after per-channel SSIM. Throws ConfigError if min(height, width) < 11.
double ssim(const ImageTensor& x, const ImageTensor& ref);

/// K = PSNR/40 + SSIM. A +inf PSNR is clamped to kPsnrClampDb first.
double kaggle_score(double psnr_db, double ssim_value);

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Frechet (Wasserstein-2) distance between two Gaussians:
/// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}); the matrix square root
/// goes through symmetric eigendecompositions with negative eigenvalues
/// clamped to zero.
double frechet_distance(const Moments& a, const Moments& b);

using FeatureExtractor = std::function<Eigen::VectorXd(const ImageTensor&)>;

/// Default FID features: per-channel adaptive average pooling to (at most)
/// 8x8, flattened. Deterministic pixel statistics, not a perceptual network;
/// distances are comparable only between runs of this artifact.
Eigen::VectorXd pooled_pixel_features(const ImageTensor& image);

/// Sample mean and unbiased sample covariance of extracted features.
/// Throws ConfigError with fewer than 2 images.
Moments fit_feature_moments(const std::vector<ImageTensor>& images,
                            const FeatureExtractor& extractor = {});

struct PerImageMetrics {
    double psnr_db = 0.0;  // clamped at kPsnrClampDb
    double ssim = 0.0;
    double rmse = 0.0;
    double k = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample std (n-1); 0 for a single image
};

struct MetricsReport {
    std::vector<PerImageMetrics> per_image;
    Aggregate psnr;
    Aggregate ssim;
    Aggregate rmse;
    Aggregate k;
    double frechet = 0.0;    // NaN when either set has < 2 images
    double k_of_means = 0.0; // K applied to the aggregate means, for comparison
    // Not computed here (needs a pretrained perceptual network); reserved so
    // externally computed values can be merged into reports.
    std::optional<Aggregate> lpips;
};

/// Per-image metrics plus aggregates and the dataset-level Frechet distance.
/// SSIM and K are NaN for shapes smaller than the SSIM window (plain
/// vectors); aggregates propagate NaN.
MetricsReport evaluate_batch(const std::vector<ImageTensor>& recons,
                             const std::vector<ImageTensor>& refs);

}  // namespace dps
