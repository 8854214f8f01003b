#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <vector>

#include "dps/config.hpp"
#include "dps/errors.hpp"
#include "dps/harness.hpp"
#include "dps/image_io.hpp"
#include "dps/metrics.hpp"
#include "dps/sampler.hpp"

namespace {

namespace fs = std::filesystem;
using dps::detail::format_double;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "override the global seed");
    cmd->add_option("--workers", flags.workers, "worker threads for chains");
    cmd->add_option("--out", flags.out, "override the output directory");
}

dps::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    dps::ExperimentConfig cfg = dps::load_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.workers) {
        if (*flags.workers < 1) throw dps::ConfigError("--workers must be >= 1");
        cfg.workers = *flags.workers;
    }
    if (flags.out) cfg.output_dir = *flags.out;
    return cfg;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_sample(const CommonFlags& flags) {
    auto cfg = load_with_overrides(flags);
    auto prior = dps::make_prior(cfg.prior);
    dps::Dataset dataset = dps::ingest_dataset(cfg);
    auto op = dps::make_operator(cfg.op, dataset.x0_shape);

    if (cfg.sample.item >= static_cast<int>(dataset.items.size())) {
        throw dps::ConfigError("sample.item " + std::to_string(cfg.sample.item) +
                               " is outside the dataset (size " +
                               std::to_string(dataset.items.size()) + ")");
    }
    const auto& item = dataset.items[cfg.sample.item];

    dps::SamplerConfig sc;
    sc.step_count = cfg.sample.step_count;
    sc.conditioning = {cfg.sample.variant, cfg.step_size_mode, cfg.sample.zeta,
                       cfg.mcg_projection};
    sc.seed = cfg.seed;
    auto schedule = dps::NoiseSchedule::linear(sc.step_count, cfg.schedule);
    auto result = dps::run_chain(sc, schedule, *prior, *op, item.y);

    fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream echo(out_dir / "resolved_config.json");
        echo << dps::resolved_config_json(cfg);
    }

    Eigen::VectorXd values = result.reconstruction;
    bool image_mode = cfg.dataset.source == dps::DatasetSpec::Source::images;
    if (image_mode) {
        values = values.cwiseMax(0.0).cwiseMin(1.0);
    }
    dps::ImageTensor recon(dataset.x0_shape, values);

    {
        std::ofstream csv(out_dir / "reconstruction.csv");
        csv << "value\n";
        for (Eigen::Index i = 0; i < recon.flat().size(); ++i) {
            csv << format_double(recon.flat()[i]) << '\n';
        }
    }
    {
        std::ofstream csv(out_dir / "residuals.csv");
        csv << "t,residual\n";
        int t = sc.step_count;
        for (double r : result.residuals) {
            csv << t-- << ',' << format_double(r) << '\n';
        }
    }
    if (image_mode) {
        dps::write_image(recon, out_dir / "reconstruction.png");
    }

    std::cout << "sample: " << dps::variant_name(cfg.sample.variant)
              << " T=" << cfg.sample.step_count << " zeta=" << cfg.sample.zeta
              << " seed=" << cfg.seed << '\n';
    std::cout << "  psnr=" << format_double(dps::psnr(recon, item.x0)) << " dB"
              << "  rmse=" << format_double(dps::rmse(recon, item.x0));
    if (dataset.x0_shape.height >= 11 && dataset.x0_shape.width >= 11) {
        double s = dps::ssim(recon, item.x0);
        std::cout << "  ssim=" << format_double(s);
    }
    std::cout << "\n  final residual=" << format_double(result.residuals.back())
              << "\n  outputs in " << out_dir.string() << '\n';
    return 0;
}

int cmd_sweep(const CommonFlags& flags) {
    auto cfg = load_with_overrides(flags);
    auto result = dps::run_sweep(cfg, &std::cout);
    std::cout << "sweep: " << result.rows.size() << " rows, "
              << result.total_divergences << " diverged chains, outputs in "
              << cfg.output_dir << '\n';
    return result.total_divergences > 0 ? 2 : 0;
}

int cmd_evaluate(const CommonFlags& flags) {
    auto cfg = load_with_overrides(flags);
    if (!cfg.evaluate) {
        throw dps::ConfigError("config has no 'evaluate' section");
    }
    auto recon_files = sorted_pngs(cfg.evaluate->reconstructions);
    auto ref_files = sorted_pngs(cfg.evaluate->references);
    if (recon_files.empty()) {
        throw dps::ConfigError("no .png files in " + cfg.evaluate->reconstructions);
    }
    if (recon_files.size() != ref_files.size()) {
        throw dps::ConfigError("evaluate: directory sizes differ (" +
                               std::to_string(recon_files.size()) + " vs " +
                               std::to_string(ref_files.size()) + ")");
    }

    std::vector<dps::ImageTensor> recons, refs;
    for (size_t i = 0; i < recon_files.size(); ++i) {
        recons.push_back(dps::read_image(recon_files[i]));
        refs.push_back(dps::read_image(ref_files[i]));
    }
    auto report = dps::evaluate_batch(recons, refs);

    fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream echo(out_dir / "resolved_config.json");
        echo << dps::resolved_config_json(cfg);
    }
    {
        // lpips stays empty unless merged from an external tool
        std::ofstream csv(out_dir / "metrics.csv");
        csv << "psnr_mean,psnr_std,ssim_mean,ssim_std,rmse_mean,rmse_std,fid,"
               "k_mean_per_image,k_of_means,lpips_mean,lpips_std\n";
        csv << format_double(report.psnr.mean) << ',' << format_double(report.psnr.stddev)
            << ',' << format_double(report.ssim.mean) << ',' << format_double(report.ssim.stddev)
            << ',' << format_double(report.rmse.mean) << ',' << format_double(report.rmse.stddev)
            << ',' << format_double(report.frechet) << ',' << format_double(report.k.mean)
            << ',' << format_double(report.k_of_means) << ',';
        if (report.lpips) {
            csv << format_double(report.lpips->mean) << ','
                << format_double(report.lpips->stddev);
        } else {
            csv << ',';
        }
        csv << '\n';
    }
    {
        std::ofstream csv(out_dir / "per_image.csv");
        csv << "file,psnr,ssim,rmse,k\n";
        for (size_t i = 0; i < recon_files.size(); ++i) {
            const auto& m = report.per_image[i];
            csv << recon_files[i].filename().string() << ',' << format_double(m.psnr_db)
                << ',' << format_double(m.ssim) << ',' << format_double(m.rmse) << ','
                << format_double(m.k) << '\n';
        }
    }

    std::cout << "evaluate: " << recons.size() << " image pairs\n"
              << "  psnr=" << format_double(report.psnr.mean) << " +- "
              << format_double(report.psnr.stddev) << " dB\n"
              << "  ssim=" << format_double(report.ssim.mean) << " +- "
              << format_double(report.ssim.stddev) << '\n'
              << "  rmse=" << format_double(report.rmse.mean) << " +- "
              << format_double(report.rmse.stddev) << '\n'
              << "  fid=" << format_double(report.frechet) << '\n'
              << "  K(per-image)=" << format_double(report.k.mean)
              << "  K(of means)=" << format_double(report.k_of_means) << '\n'
              << "  outputs in " << out_dir.string() << '\n';
    return 0;
}

int cmd_verify(const CommonFlags& flags) {
    auto cfg = load_with_overrides(flags);
    auto report = dps::verify_posterior(cfg, &std::cout);

    fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream echo(out_dir / "resolved_config.json");
        echo << dps::resolved_config_json(cfg);
    }
    {
        std::ofstream csv(out_dir / "verification.csv");
        csv << "moment,expected,observed,standard_error,zscore,pass\n";
        for (const auto& c : report.checks) {
            csv << c.name << ',' << format_double(c.expected) << ','
                << format_double(c.observed) << ',' << format_double(c.standard_error)
                << ',' << format_double(c.zscore) << ',' << (c.pass ? "yes" : "no")
                << '\n';
        }
    }

    int failed = 0;
    double worst = 0.0;
    for (const auto& c : report.checks) {
        if (!c.pass) ++failed;
        worst = std::max(worst, std::abs(c.zscore));
    }
    std::cout << "verify-posterior: " << report.chains << " chains";
    if (report.divergences > 0) std::cout << " (" << report.divergences << " diverged)";
    std::cout << '\n';
    for (const auto& c : report.checks) {
        if (c.name.rfind("mean", 0) == 0) {
            std::cout << "  " << c.name << ": expected " << format_double(c.expected)
                      << ", observed " << format_double(c.observed) << ", z="
                      << format_double(c.zscore) << (c.pass ? " PASS" : " FAIL") << '\n';
        }
    }
    std::cout << "  covariance moments: " << (report.checks.size()) - report.sample_mean.size()
              << " checks, " << failed << " total failures, worst |z|="
              << format_double(worst) << '\n'
              << "  full table in " << (out_dir / "verification.csv").string() << '\n'
              << "  overall: " << (report.passed ? "PASS" : "FAIL") << '\n';
    return report.passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion posterior sampling toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* sample = app.add_subcommand("sample", "reconstruct a single dataset item");
    auto* sweep = app.add_subcommand("sweep", "run the (variant, step count, zeta) grid");
    auto* evaluate = app.add_subcommand("evaluate", "metrics over existing image directories");
    auto* verify = app.add_subcommand("verify-posterior",
                                      "compare chain moments with the analytic posterior");
    for (auto* cmd : {sample, sweep, evaluate, verify}) add_common(cmd, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) return cmd_sample(flags);
        if (sweep->parsed()) return cmd_sweep(flags);
        if (evaluate->parsed()) return cmd_evaluate(flags);
        if (verify->parsed()) return cmd_verify(flags);
    } catch (const dps::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const dps::UnsupportedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
