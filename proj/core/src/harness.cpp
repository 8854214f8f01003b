#include "dps/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "dps/errors.hpp"
#include "dps/image_io.hpp"
#include "dps/operators.hpp"
#include "dps/sampler.hpp"

namespace dps {

namespace {

// Stream-id salts keep dataset, sweep and verification draws disjoint.
constexpr std::uint64_t kDatasetSalt = 0x01ull << 56;
constexpr std::uint64_t kSweepSalt = 0x02ull << 56;
constexpr std::uint64_t kVerifySalt = 0x03ull << 56;

std::uint64_t chain_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t index) {
    return NoiseStream::derive(seed, salt + index).next_u64();
}

struct ChainOutcome {
    bool diverged = false;
    Eigen::VectorXd reconstruction;
};

// Runs items x repeats chains for one sweep setting.
std::vector<ChainOutcome> run_setting(const ExperimentConfig& config,
                                      const Dataset& dataset,
                                      const ScoreModel& prior,
                                      const LinearOperator& op,
                                      const NoiseSchedule& schedule,
                                      const ConditioningMethod& method,
                                      std::uint64_t row_salt) {
    int chains = static_cast<int>(dataset.items.size()) * config.sweep.repeats;
    std::vector<ChainOutcome> outcomes(chains);
    detail::parallel_for(chains, config.workers, [&](int ci) {
        int item = ci / config.sweep.repeats;
        SamplerConfig sc;
        sc.step_count = schedule.step_count();
        sc.conditioning = method;
        sc.seed = chain_seed(config.seed, kSweepSalt + row_salt, ci);
        try {
            outcomes[ci].reconstruction =
                run_chain(sc, schedule, prior, op, dataset.items[item].y).reconstruction;
        } catch (const DivergenceError&) {
            outcomes[ci].diverged = true;
        }
    });
    return outcomes;
}

std::string zeta_label(const std::optional<double>& zeta) {
    return zeta ? detail::format_double(*zeta) : "-";
}

}  // namespace

namespace detail {

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

Dataset ingest_dataset(const ExperimentConfig& config) {
    auto prior = make_prior(config.prior);
    Dataset dataset;

    if (config.dataset.source == DatasetSpec::Source::synthetic) {
        dataset.x0_shape = config.dataset.shape;
        auto op = make_operator(config.op, dataset.x0_shape);
        dataset.y_shape = op->output_shape();
        dataset.items.reserve(config.dataset.count);
        for (int i = 0; i < config.dataset.count; ++i) {
            NoiseStream stream = NoiseStream::derive(config.seed, kDatasetSalt + i);
            Eigen::VectorXd x0 = prior->draw_sample(stream);
            Eigen::VectorXd y = degrade(*op, x0, config.noise_sigma, stream);
            dataset.items.push_back({ImageTensor(dataset.x0_shape, std::move(x0)),
                                     std::move(y)});
        }
        return dataset;
    }

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(config.dataset.directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) {
        throw ConfigError("no .png files in dataset directory: " +
                          config.dataset.directory);
    }
    std::sort(files.begin(), files.end());

    for (size_t i = 0; i < files.size(); ++i) {
        ImageTensor x0 = read_image(files[i]);
        if (i == 0) {
            dataset.x0_shape = x0.shape();
            if (static_cast<Eigen::Index>(dataset.x0_shape.size()) !=
                prior->dimension()) {
                throw ConfigError("prior dimension " + std::to_string(prior->dimension()) +
                                  " does not match image size " +
                                  std::to_string(dataset.x0_shape.size()));
            }
        } else if (!(x0.shape() == dataset.x0_shape)) {
            throw ConfigError("image shape mismatch: " + files[i].string());
        }
        NoiseStream stream = NoiseStream::derive(config.seed, kDatasetSalt + i);
        auto op = make_operator(config.op, dataset.x0_shape);
        Eigen::VectorXd y = degrade(*op, x0.flat(), config.noise_sigma, stream);
        dataset.items.push_back({std::move(x0), std::move(y)});
    }
    auto op = make_operator(config.op, dataset.x0_shape);
    dataset.y_shape = op->output_shape();
    return dataset;
}

std::string sweep_csv_header() {
    return "variant,step_count,zeta,psnr_mean,psnr_std,ssim_mean,ssim_std,"
           "rmse_mean,rmse_std,fid,k_mean_per_image,k_of_means,divergences";
}

std::string sweep_csv_line(const SweepRow& row) {
    using detail::format_double;
    std::string line = row.variant;
    line += ',';
    line += std::to_string(row.step_count);
    line += ',';
    line += zeta_label(row.zeta);
    for (double v : {row.report.psnr.mean, row.report.psnr.stddev,
                     row.report.ssim.mean, row.report.ssim.stddev,
                     row.report.rmse.mean, row.report.rmse.stddev,
                     row.report.frechet, row.report.k.mean, row.report.k_of_means}) {
        line += ',';
        line += format_double(v);
    }
    line += ',';
    line += std::to_string(row.divergences);
    return line;
}

SweepResult run_sweep(const ExperimentConfig& config, std::ostream* log) {
    auto prior = make_prior(config.prior);
    Dataset dataset = ingest_dataset(config);
    auto op = make_operator(config.op, dataset.x0_shape);
    bool clamp_output = config.dataset.source == DatasetSpec::Source::images;

    std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream echo(out_dir / "resolved_config.json");
        echo << resolved_config_json(config);
    }

    std::ofstream csv(out_dir / "sweep.csv");
    std::ofstream timings(out_dir / "timings.csv");
    csv << sweep_csv_header() << '\n' << std::flush;
    timings << "variant,step_count,zeta,wall_seconds\n" << std::flush;

    std::vector<ImageTensor> refs;
    refs.reserve(dataset.items.size() * config.sweep.repeats);
    for (const auto& item : dataset.items) {
        for (int r = 0; r < config.sweep.repeats; ++r) refs.push_back(item.x0);
    }

    SweepResult result;
    std::uint64_t row_salt = 0;
    for (Variant variant : config.sweep.variants) {
        for (int step_count : config.sweep.step_counts) {
            // vanilla ignores zeta: one row per step count
            std::vector<std::optional<double>> zetas;
            if (variant == Variant::vanilla) {
                zetas.push_back(std::nullopt);
            } else {
                for (double z : config.sweep.zetas) zetas.push_back(z);
            }
            NoiseSchedule schedule = NoiseSchedule::linear(step_count, config.schedule);

            for (const auto& zeta : zetas) {
                ConditioningMethod method;
                method.variant = variant;
                method.step_size_mode = config.step_size_mode;
                method.zeta = zeta.value_or(0.0);
                method.projection = config.mcg_projection;

                auto started = std::chrono::steady_clock::now();
                auto outcomes = run_setting(config, dataset, *prior, *op, schedule,
                                            method, row_salt * 0x10000ull);
                double wall = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();

                SweepRow row;
                row.variant = variant_name(variant);
                row.step_count = step_count;
                row.zeta = zeta;
                row.wall_seconds = wall;

                std::vector<ImageTensor> recons;
                std::vector<ImageTensor> matched_refs;
                for (size_t i = 0; i < outcomes.size(); ++i) {
                    if (outcomes[i].diverged) {
                        ++row.divergences;
                        continue;
                    }
                    Eigen::VectorXd values = std::move(outcomes[i].reconstruction);
                    if (clamp_output) {
                        values = values.cwiseMax(0.0).cwiseMin(1.0);
                    }
                    recons.emplace_back(dataset.x0_shape, std::move(values));
                    matched_refs.push_back(refs[i]);
                }
                if (!recons.empty()) {
                    row.report = evaluate_batch(recons, matched_refs);
                } else {
                    double nan = std::numeric_limits<double>::quiet_NaN();
                    row.report.psnr = {nan, nan};
                    row.report.ssim = {nan, nan};
                    row.report.rmse = {nan, nan};
                    row.report.k = {nan, nan};
                    row.report.frechet = nan;
                    row.report.k_of_means = nan;
                }

                csv << sweep_csv_line(row) << '\n' << std::flush;
                timings << row.variant << ',' << row.step_count << ','
                        << zeta_label(row.zeta) << ','
                        << detail::format_double(row.wall_seconds) << '\n'
                        << std::flush;
                if (log) {
                    *log << "sweep: " << row.variant << " T=" << row.step_count
                         << " zeta=" << zeta_label(row.zeta)
                         << " rmse=" << detail::format_double(row.report.rmse.mean)
                         << " divergences=" << row.divergences << '\n';
                }
                result.total_divergences += row.divergences;
                result.rows.push_back(std::move(row));
                ++row_salt;
            }
        }
    }

    render_plots(result.rows, out_dir, log);
    return result;
}

VerificationReport verify_posterior(const ExperimentConfig& config, std::ostream* log) {
    if (config.prior.kind != PriorSpec::Kind::gaussian) {
        throw UnsupportedError("verify-posterior requires a gaussian prior");
    }
    if (config.noise_sigma <= 0.0) {
        throw ConfigError("verify-posterior requires noise_sigma > 0");
    }
    const auto& comp = config.prior.components.front();
    GaussianPrior prior(comp.mean, comp.covariance);
    auto op = make_operator(config.op, config.dataset.shape);
    Eigen::Index d = prior.dimension();

    VerificationReport report;
    if (config.verify.measurement) {
        report.measurement = *config.verify.measurement;
        if (report.measurement.size() != op->output_size()) {
            throw ConfigError("verify.measurement length does not match the operator output");
        }
    } else {
        NoiseStream stream = NoiseStream::derive(config.seed, kVerifySalt);
        Eigen::VectorXd x0 = prior.draw_sample(stream);
        report.measurement = degrade(*op, x0, config.noise_sigma, stream);
    }

    report.analytic = analytic_posterior(prior, *op, report.measurement,
                                         config.noise_sigma);

    int chains = config.verify.chains;
    Eigen::MatrixXd samples(d, chains);
    std::vector<char> diverged(chains, 0);
    detail::parallel_for(chains, config.workers, [&](int ci) {
        SamplerConfig sc;
        sc.step_count = config.verify.step_count;
        sc.conditioning = {config.verify.variant, config.step_size_mode,
                           config.verify.zeta, config.mcg_projection};
        sc.seed = chain_seed(config.seed, kVerifySalt, 1 + ci);
        NoiseSchedule schedule = NoiseSchedule::linear(sc.step_count, config.schedule);
        try {
            samples.col(ci) =
                run_chain(sc, schedule, prior, *op, report.measurement).reconstruction;
        } catch (const DivergenceError&) {
            diverged[ci] = 1;
            samples.col(ci).setZero();
        }
    });

    int kept = 0;
    for (int ci = 0; ci < chains; ++ci) {
        if (!diverged[ci]) {
            samples.col(kept++) = samples.col(ci);
        } else {
            ++report.divergences;
        }
    }
    if (kept < 2) {
        throw NumericError("verify-posterior: fewer than 2 chains finished");
    }
    auto kept_block = samples.leftCols(kept);
    report.chains = kept;
    report.sample_mean = kept_block.rowwise().mean();
    Eigen::MatrixXd centered = kept_block.colwise() - report.sample_mean;
    report.sample_covariance = centered * centered.transpose() / double(kept - 1);

    double band = 3.0 * config.verify.slack;
    double n = static_cast<double>(kept);
    report.passed = true;
    for (Eigen::Index i = 0; i < d; ++i) {
        MomentCheck check;
        check.name = "mean[" + std::to_string(i) + "]";
        check.observed = report.sample_mean[i];
        check.expected = report.analytic.mean[i];
        check.standard_error = std::sqrt(report.analytic.covariance(i, i) / n);
        check.zscore = (check.observed - check.expected) / check.standard_error;
        check.pass = std::abs(check.zscore) <= band;
        report.passed = report.passed && check.pass;
        report.checks.push_back(check);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i; j < d; ++j) {
            MomentCheck check;
            check.name = "cov[" + std::to_string(i) + "," + std::to_string(j) + "]";
            check.observed = report.sample_covariance(i, j);
            check.expected = report.analytic.covariance(i, j);
            // asymptotic SE of a gaussian covariance entry
            check.standard_error =
                std::sqrt((report.analytic.covariance(i, i) * report.analytic.covariance(j, j) +
                           report.analytic.covariance(i, j) * report.analytic.covariance(i, j)) /
                          (n - 1.0));
            check.zscore = (check.observed - check.expected) / check.standard_error;
            check.pass = std::abs(check.zscore) <= band;
            report.passed = report.passed && check.pass;
            report.checks.push_back(check);
        }
    }

    if (log) {
        *log << "verify-posterior: " << report.checks.size() << " moment checks, "
             << (report.passed ? "PASS" : "FAIL") << '\n';
    }
    return report;
}

}  // namespace dps
