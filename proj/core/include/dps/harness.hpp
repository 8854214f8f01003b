#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dps/config.hpp"
#include "dps/image.hpp"
#include "dps/metrics.hpp"
#include "dps/prior.hpp"

namespace dps {

struct DatasetItem {
    ImageTensor x0;     // ground truth
    Eigen::VectorXd y;  // degraded measurement
};

struct Dataset {
    std::vector<DatasetItem> items;
    TensorShape x0_shape;
    TensorShape y_shape;
};

/// Decodes images or draws synthetic problems from the prior, then degrades
/// each item with the configured operator and noise level. Deterministic:
/// item i uses a stream derived from (seed, i).
Dataset ingest_dataset(const ExperimentConfig& config);

struct SweepRow {
    std::string variant;
    int step_count = 0;
    std::optional<double> zeta;  // empty for vanilla
    MetricsReport report;
    double wall_seconds = 0.0;
    int divergences = 0;
};

/// Header and one formatted line of the sweep CSV. Columns:
/// variant,step_count,zeta,psnr_mean,psnr_std,ssim_mean,ssim_std,rmse_mean,
/// rmse_std,fid,k_mean_per_image,k_of_means,divergences
std::string sweep_csv_header();
std::string sweep_csv_line(const SweepRow& row);

struct SweepResult {
    std::vector<SweepRow> rows;
    int total_divergences = 0;
};

/// Runs the (variant, step_count, zeta) grid. Writes sweep.csv incrementally
/// (flushed per row, so an interrupted run leaves a valid prefix),
/// timings.csv (wall clock, kept out of the deterministic CSV),
/// resolved_config.json, and the plot set. Chain divergences are counted per
/// row and the sweep continues. `log` receives progress lines when non-null.
SweepResult run_sweep(const ExperimentConfig& config, std::ostream* log = nullptr);

struct MomentCheck {
    std::string name;
    double observed = 0.0;
    double expected = 0.0;
    double standard_error = 0.0;
    double zscore = 0.0;
    bool pass = false;
};

struct VerificationReport {
    Eigen::VectorXd sample_mean;
    Eigen::MatrixXd sample_covariance;
    GaussianMoments analytic;
    Eigen::VectorXd measurement;
    std::vector<MomentCheck> checks;
    int chains = 0;
    int divergences = 0;
    bool passed = false;
};

/// Runs N conditioned chains against one fixed measurement and compares the
/// sample moments with analytic_posterior at the 3-sigma level (times the
/// configured slack). Gaussian priors only.
VerificationReport verify_posterior(const ExperimentConfig& config,
                                    std::ostream* log = nullptr);

/// One SVG line chart per metric: <metric>_vs_zeta.svg over the zeta grid and
/// <metric>_vs_steps.svg over the step-count grid. Charts with no plottable
/// points are skipped; empty input is a warning no-op.
void render_plots(const std::vector<SweepRow>& rows,
                  const std::filesystem::path& out_dir, std::ostream* log = nullptr);

namespace detail {
/// Index-partitioned parallel loop; results must be written by index so the
/// outcome is independent of scheduling.
void parallel_for(int count, int workers, const std::function<void(int)>& body);
std::string format_double(double v);
}  // namespace detail

}  // namespace dps
