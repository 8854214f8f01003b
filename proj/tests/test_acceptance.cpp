// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured quantities. Runs on the analytic Gaussian benchmarks
// (the d=8 benchmark is prior N(0,I), identity A, sigma_y = 0.05).

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dps/config.hpp"
#include "dps/harness.hpp"
#include "dps/metrics.hpp"
#include "dps/operators.hpp"
#include "dps/prior.hpp"
#include "dps/sampler.hpp"
#include "dps/schedule.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using dps::Covariance;
using dps::GaussianPrior;
using dps::IdentityOperator;
using dps::NoiseSchedule;
using dps::NoiseStream;
using dps::SamplerConfig;
using dps::StepSizeMode;
using dps::Variant;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void report(int criterion, const char* description, bool pass,
            const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
                description, detail.c_str());
    std::fflush(stdout);
}

std::string num(double v) { return dps::detail::format_double(v); }

SamplerConfig chain_config(int steps, Variant variant, double zeta,
                           std::uint64_t seed) {
    SamplerConfig config;
    config.step_count = steps;
    config.conditioning = {variant, StepSizeMode::residual_normalized, zeta, false};
    config.seed = seed;
    return config;
}

double mean_reconstruction_error(int steps, double zeta, int instances,
                                 std::uint64_t seed_base) {
    Eigen::Index d = 8;
    auto schedule = NoiseSchedule::linear(steps);
    GaussianPrior prior(VectorXd::Zero(d), Covariance::identity(d));
    IdentityOperator op({1, 1, static_cast<int>(d)});
    double acc = 0.0;
    for (int i = 0; i < instances; ++i) {
        NoiseStream stream = NoiseStream::derive(seed_base, i);
        VectorXd x0 = prior.draw_sample(stream);
        VectorXd y = dps::degrade(op, x0, 0.05, stream);
        auto config = chain_config(steps, zeta == 0.0 ? Variant::vanilla : Variant::dps,
                                   zeta, NoiseStream::derive(seed_base + 1, i).next_u64());
        auto result = dps::run_chain(config, schedule, prior, op, y);
        acc += (result.reconstruction - x0).norm();
    }
    return acc / instances;
}

}  // namespace

TEST_CASE("criterion 1: tweedie oracle") {
    NoiseStream stream(9001);
    auto schedule = NoiseSchedule::linear(100);
    double worst = 0.0;
    int checked = 0;
    for (Eigen::Index d : {1, 4, 8}) {
        VectorXd mu = stream.normal_vector(d);
        MatrixXd sigma = dps::test::random_spd(d, stream);
        GaussianPrior prior(mu, Covariance::dense(sigma));
        for (int trial = 0; trial < 40; ++trial) {
            int t = 1 + static_cast<int>(stream.uniform() * 100);
            double abar = schedule.alpha_bar(t);
            VectorXd x = 2.0 * stream.normal_vector(d);
            MatrixXd c = abar * sigma + (1.0 - abar) * MatrixXd::Identity(d, d);
            VectorXd conditional =
                mu + std::sqrt(abar) * sigma * c.llt().solve(x - std::sqrt(abar) * mu);
            VectorXd got = dps::tweedie_denoise(prior, x, t, schedule);
            worst = std::max(worst, (got - conditional).cwiseAbs().maxCoeff());
            ++checked;
        }
    }
    bool pass = checked >= 100 && worst <= 1e-10;
    report(1, "tweedie matches closed-form E[x0|xt] within 1e-10", pass,
           std::to_string(checked) + " cases, worst " + num(worst));
    CHECK(pass);
}

TEST_CASE("criterion 2: gradient fidelity") {
    NoiseStream stream(9002);
    auto schedule = NoiseSchedule::linear(60);
    Eigen::Index d = 16;
    dps::TensorShape shape{4, 4, 1};

    GaussianPrior gauss(stream.normal_vector(d),
                        Covariance::diagonal(
                            (stream.normal_vector(d).array().abs() + 0.3).matrix()));
    dps::MixtureComponent ca{0.5, VectorXd::Constant(d, -1.0), Covariance::identity(d)};
    dps::MixtureComponent cb{0.5, VectorXd::Constant(d, 1.0),
                             Covariance::diagonal(VectorXd::Constant(d, 0.6))};
    dps::GaussianMixturePrior mixture({ca, cb});

    IdentityOperator identity(shape);
    dps::DownsampleAvg down(shape, 2);
    dps::GaussianBlur blur(shape, 1, 0.9);

    const dps::ScoreModel* models[] = {&gauss, &mixture};
    const dps::LinearOperator* ops[] = {&identity, &down, &blur};

    double worst_rel = 0.0;
    int per_pair = 50;
    bool pass = true;
    for (const auto* model : models) {
        for (const auto* op : ops) {
            for (int trial = 0; trial < per_pair; ++trial) {
                int t = 1 + static_cast<int>(stream.uniform() * 60);
                VectorXd x = stream.normal_vector(d);
                VectorXd y = stream.normal_vector(op->output_size());
                VectorXd xhat = dps::tweedie_denoise(*model, x, t, schedule);
                VectorXd cot = op->adjoint(y - op->apply(xhat));
                VectorXd grad = -2.0 * model->denoiser_vjp(x, t, schedule, cot);

                auto f = [&](const VectorXd& v) {
                    return (y - op->apply(dps::tweedie_denoise(*model, v, t, schedule)))
                        .squaredNorm();
                };
                double h = 1e-5 * (1.0 + x.cwiseAbs().maxCoeff());
                VectorXd fd(d);
                VectorXd probe = x;
                for (Eigen::Index i = 0; i < d; ++i) {
                    probe[i] = x[i] + h;
                    double up = f(probe);
                    probe[i] = x[i] - h;
                    double down_v = f(probe);
                    probe[i] = x[i];
                    fd[i] = (up - down_v) / (2.0 * h);
                }
                double rel = (grad - fd).norm() / (fd.norm() + 1e-12);
                worst_rel = std::max(worst_rel, rel);
                pass = pass && rel <= 1e-4;
            }
        }
    }
    report(2, "dps gradient within 1e-4 of finite differences, 50 per pair", pass,
           "worst relative " + num(worst_rel));
    CHECK(pass);
}

TEST_CASE("criterion 3: posterior recovery") {
    // 1-D conjugate case: prior N(0,1), A = 1, sigma_y = 1, y = 2
    // => posterior N(1.0, 0.5) by the analytic oracle.
    GaussianPrior prior(VectorXd::Zero(1), Covariance::identity(1));
    IdentityOperator op({1, 1, 1});
    VectorXd y = VectorXd::Constant(1, 2.0);
    auto oracle = dps::analytic_posterior(prior, op, y, 1.0);
    REQUIRE(oracle.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(oracle.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    auto schedule = NoiseSchedule::linear(1000);
    int chains = 2000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < chains; ++i) {
        auto config = chain_config(1000, Variant::dps, 1.0,
                                   NoiseStream::derive(9003, i).next_u64());
        double v = dps::run_chain(config, schedule, prior, op, y).reconstruction[0];
        sum += v;
        sum_sq += v * v;
    }
    double mean = sum / chains;
    double variance = sum_sq / chains - mean * mean;

    bool pass = std::abs(mean - 1.0) <= 0.05 && std::abs(variance - 0.5) <= 0.1;
    std::ostringstream detail;
    detail << "mean " << mean << " vs 1.0, var " << variance << " vs 0.5";
    report(3, "dps zeta=1 recovers the conjugate posterior moments", pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 4: conditioning necessity") {
    int instances = 500;
    double vanilla_err = mean_reconstruction_error(1000, 0.0, instances, 9004);
    double dps_err = mean_reconstruction_error(1000, 1.0, instances, 9004);
    double ratio = dps_err / vanilla_err;
    bool pass = ratio <= 0.5;
    std::ostringstream detail;
    detail << "dps " << dps_err << " vs vanilla " << vanilla_err << ", ratio " << ratio;
    report(4, "dps error at most half of vanilla on the d=8 benchmark", pass,
           detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 5: zeta-zero degeneracy") {
    Eigen::Index d = 8;
    auto schedule = NoiseSchedule::linear(60);
    GaussianPrior prior(VectorXd::Zero(d), Covariance::identity(d));
    dps::DownsampleAvg op({2, 4, 1}, 2);
    NoiseStream stream(9005);
    VectorXd y = stream.normal_vector(op.output_size());

    bool pass = true;
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        auto vanilla = chain_config(60, Variant::vanilla, 0.0, seed);
        auto dps_zero = chain_config(60, Variant::dps, 0.0, seed);
        auto mcg_zero = chain_config(60, Variant::mcg, 0.0, seed);
        mcg_zero.conditioning.projection = false;

        auto a = dps::run_chain(vanilla, schedule, prior, op, y);
        auto b = dps::run_chain(dps_zero, schedule, prior, op, y);
        auto c = dps::run_chain(mcg_zero, schedule, prior, op, y);
        for (Eigen::Index i = 0; i < d; ++i) {
            pass = pass && a.reconstruction[i] == b.reconstruction[i];
            pass = pass && a.reconstruction[i] == c.reconstruction[i];
        }
        pass = pass && a.residuals == b.residuals && a.residuals == c.residuals;
    }
    report(5, "dps and mcg at zeta=0 are bitwise identical to vanilla", pass,
           "3 shared-seed chains, T=60");
    CHECK(pass);
}

TEST_CASE("criterion 6: projection exactness") {
    NoiseStream stream(9006);
    dps::DownsampleAvg down({8, 8, 1}, 4);
    IdentityOperator identity({1, 1, 12});
    const dps::LinearOperator* ops[] = {&down, &identity};

    double worst = 0.0;
    int checked = 0;
    for (const auto* op : ops) {
        for (int i = 0; i < 100; ++i) {
            VectorXd x = stream.normal_vector(op->input_size());
            VectorXd y = stream.normal_vector(op->output_size());
            VectorXd p = op->project(x, y);
            worst = std::max(worst, (op->apply(p) - y).cwiseAbs().maxCoeff());
            worst = std::max(worst, (op->project(p, y) - p).cwiseAbs().maxCoeff());
            ++checked;
        }
    }
    bool pass = worst <= 1e-10;
    report(6, "A(project(x,y)) = y and idempotence within 1e-10", pass,
           std::to_string(checked) + " pairs, worst " + num(worst));
    CHECK(pass);
}

TEST_CASE("criterion 7: metric oracles") {
    dps::TensorShape shape{16, 16, 1};
    bool pass = true;
    std::ostringstream detail;

    NoiseStream stream(9007);
    VectorXd base(shape.size());
    for (Eigen::Index i = 0; i < base.size(); ++i) base[i] = 0.4 + 0.2 * stream.uniform();
    dps::ImageTensor ref(shape, base);
    dps::ImageTensor offset(shape, (base.array() + 0.1).matrix());
    double p = dps::psnr(offset, ref);
    pass = pass && std::abs(p - 20.0) <= 1e-9;

    pass = pass && std::abs(dps::ssim(ref, ref) - 1.0) <= 1e-12;

    double a = 0.3, b = 0.8, c1 = 1e-4;
    double constant_ssim = dps::ssim(dps::ImageTensor::constant(shape, a),
                                     dps::ImageTensor::constant(shape, b));
    double closed_form = (2 * a * b + c1) / (a * a + b * b + c1);
    pass = pass && std::abs(constant_ssim - closed_form) <= 1e-10;

    dps::Moments ma{VectorXd::Zero(1), MatrixXd::Constant(1, 1, 0.3)};
    dps::Moments mb{VectorXd::Ones(1), MatrixXd::Constant(1, 1, 0.3)};
    pass = pass && dps::frechet_distance(ma, ma) <= 1e-10;
    pass = pass && std::abs(dps::frechet_distance(ma, mb) - 1.0) <= 1e-10;

    pass = pass && dps::kaggle_score(40.0, 1.0) == 2.0;

    detail << "psnr " << p << ", const-ssim " << constant_ssim << " vs " << closed_form;
    report(7, "psnr/ssim/frechet/kaggle match their closed forms", pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 8: trend reproduction") {
    int instances = 100;
    double e_zeta_03 = mean_reconstruction_error(1000, 0.3, instances, 9008);
    double e_zeta_10 = mean_reconstruction_error(1000, 1.0, instances, 9008);
    double e_zeta_30 = mean_reconstruction_error(1000, 3.0, instances, 9008);
    double e_t_250 = mean_reconstruction_error(250, 1.0, instances, 9008);
    double e_t_500 = mean_reconstruction_error(500, 1.0, instances, 9008);
    double e_t_1000 = e_zeta_10;

    double zeta_range = std::max({e_zeta_03, e_zeta_10, e_zeta_30}) -
                        std::min({e_zeta_03, e_zeta_10, e_zeta_30});
    double step_range = std::max({e_t_250, e_t_500, e_t_1000}) -
                        std::min({e_t_250, e_t_500, e_t_1000});
    double ratio = zeta_range / std::max(step_range, 1e-12);
    bool pass = ratio >= 2.0;
    std::ostringstream detail;
    detail << "zeta range " << zeta_range << " vs step range " << step_range
           << ", ratio " << ratio;
    report(8, "step size dominates step count (range ratio >= 2)", pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 9: determinism and sweep integrity") {
    fs::path base = fs::temp_directory_path() /
                    ("dps_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(base);

    dps::ExperimentConfig cfg;
    cfg.seed = 777;
    dps::MixtureComponent c;
    c.mean = VectorXd::Zero(8);
    c.covariance = Covariance::identity(8);
    cfg.prior.components = {c};
    cfg.dataset.count = 4;
    cfg.dataset.shape = {1, 1, 8};
    cfg.sweep.zetas = {0.5, 1.0};
    cfg.sweep.step_counts = {40};
    cfg.sweep.variants = {Variant::vanilla, Variant::dps};

    auto read_all = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    cfg.output_dir = (base / "w1").string();
    cfg.workers = 1;
    auto r1 = dps::run_sweep(cfg);
    std::string csv1 = read_all(base / "w1" / "sweep.csv");

    cfg.output_dir = (base / "w4").string();
    cfg.workers = 4;
    dps::run_sweep(cfg);
    std::string csv4 = read_all(base / "w4" / "sweep.csv");

    cfg.output_dir = (base / "again").string();
    cfg.workers = 1;
    dps::run_sweep(cfg);
    std::string csv_again = read_all(base / "again" / "sweep.csv");

    bool identical = csv1 == csv4 && csv1 == csv_again;

    // prefix validity: every line complete, header first, parseable row count
    bool prefix_ok = !csv1.empty() && csv1.back() == '\n';
    std::istringstream lines(csv1);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        if (count == 0) {
            prefix_ok = prefix_ok && line == dps::sweep_csv_header();
        } else {
            prefix_ok = prefix_ok && std::count(line.begin(), line.end(), ',') == 12;
        }
        ++count;
    }
    prefix_ok = prefix_ok && count == static_cast<int>(r1.rows.size()) + 1;

    bool pass = identical && prefix_ok;
    report(9, "byte-identical CSVs across reruns and worker counts", pass,
           "rows " + std::to_string(r1.rows.size()) +
               (identical ? ", identical" : ", MISMATCH") +
               (prefix_ok ? ", prefix valid" : ", prefix invalid"));
    CHECK(pass);
    fs::remove_all(base);
}
