#include <doctest.h>

#include <cmath>
#include <limits>

#include "dps/errors.hpp"
#include "dps/metrics.hpp"
#include "dps/rng.hpp"
#include "test_util.hpp"

using dps::ImageTensor;
using dps::Moments;
using dps::NoiseStream;
using dps::TensorShape;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ImageTensor random_image(TensorShape shape, NoiseStream& stream) {
    VectorXd v(shape.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = stream.uniform();
    return ImageTensor(shape, v);
}

}  // namespace

TEST_CASE("psnr at round numbers") {
    TensorShape shape{16, 16, 1};
    ImageTensor zero = ImageTensor::zero(shape);
    ImageTensor tenth = ImageTensor::constant(shape, 0.1);
    ImageTensor hundredth = ImageTensor::constant(shape, 0.01);

    CHECK(dps::psnr(tenth, zero) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(dps::psnr(hundredth, zero) == doctest::Approx(40.0).epsilon(1e-9));
    CHECK(std::isinf(dps::psnr(zero, zero)));

    NoiseStream stream(3);
    ImageTensor x = random_image(shape, stream);
    ImageTensor offset(shape, (x.flat().array() + 0.01).matrix());
    CHECK(dps::psnr(offset, x) == doctest::Approx(40.0).epsilon(1e-9));

    CHECK_THROWS_AS(dps::psnr(zero, ImageTensor::zero({8, 8, 1})),
                    dps::DimensionError);
    CHECK_THROWS_AS(dps::psnr(zero, zero, 0.0), dps::ConfigError);
}

TEST_CASE("rmse basics and the psnr relationship") {
    TensorShape shape{12, 12, 1};
    ImageTensor zero = ImageTensor::zero(shape);
    CHECK(dps::rmse(zero, zero) == 0.0);
    ImageTensor shifted = ImageTensor::constant(shape, 0.1);
    CHECK(dps::rmse(shifted, zero) == doctest::Approx(0.1).epsilon(1e-12));

    NoiseStream stream(5);
    for (int i = 0; i < 20; ++i) {
        ImageTensor a = random_image(shape, stream);
        ImageTensor b = random_image(shape, stream);
        double direct = std::sqrt((a.flat() - b.flat()).squaredNorm() / shape.size());
        CHECK(dps::rmse(a, b) == doctest::Approx(direct).epsilon(1e-12));
        // psnr = 20 log10(max / rmse) whenever rmse > 0
        double expected_psnr = 20.0 * std::log10(1.0 / dps::rmse(a, b));
        CHECK(dps::psnr(a, b) == doctest::Approx(expected_psnr).epsilon(1e-10));
    }
}

TEST_CASE("ssim on identical, constant and inverted images") {
    TensorShape shape{16, 16, 1};
    NoiseStream stream(7);
    ImageTensor x = random_image(shape, stream);
    CHECK(dps::ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));

    // constant images: contrast/structure terms cancel
    double a = 0.4, b = 0.7;
    double c1 = 1e-4;
    ImageTensor ca = ImageTensor::constant(shape, a);
    ImageTensor cb = ImageTensor::constant(shape, b);
    double expected = (2 * a * b + c1) / (a * a + b * b + c1);
    CHECK(dps::ssim(ca, cb) == doctest::Approx(expected).epsilon(1e-10));

    ImageTensor inverted(shape, (1.0 - x.flat().array()).matrix());
    CHECK(dps::ssim(x, inverted) < 1.0);

    // symmetry
    ImageTensor y = random_image(shape, stream);
    CHECK(dps::ssim(x, y) == doctest::Approx(dps::ssim(y, x)).epsilon(1e-12));
    CHECK(dps::ssim(x, y) <= 1.0);

    CHECK_THROWS_AS(dps::ssim(ImageTensor::zero({8, 8, 1}),
                              ImageTensor::zero({8, 8, 1})),
                    dps::ConfigError);
}

TEST_CASE("kaggle score") {
    CHECK(dps::kaggle_score(40.0, 1.0) == 2.0);
    CHECK(dps::kaggle_score(0.0, 0.0) == 0.0);
    CHECK(dps::kaggle_score(26.279, 0.770) == doctest::Approx(1.426975).epsilon(1e-6));

    // +inf psnr clamps to 100 dB first
    double inf = std::numeric_limits<double>::infinity();
    CHECK(dps::kaggle_score(inf, 1.0) == doctest::Approx(100.0 / 40.0 + 1.0));
    CHECK_THROWS_AS(dps::kaggle_score(std::nan(""), 0.5), dps::NumericError);

    // strictly monotone in both arguments
    NoiseStream stream(9);
    for (int i = 0; i < 30; ++i) {
        double p = stream.uniform() * 50.0;
        double s = stream.uniform();
        double k = dps::kaggle_score(p, s);
        CHECK(dps::kaggle_score(p + 0.5, s) > k);
        CHECK(dps::kaggle_score(p, s + 0.01) > k);
    }
}

TEST_CASE("frechet distance closed forms") {
    Moments a{VectorXd::Zero(1), MatrixXd::Constant(1, 1, 0.49)};
    Moments b{VectorXd::Ones(1), MatrixXd::Constant(1, 1, 0.49)};
    CHECK(dps::frechet_distance(a, a) <= 1e-12);
    CHECK(dps::frechet_distance(a, b) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(dps::frechet_distance(a, b) ==
          doctest::Approx(dps::frechet_distance(b, a)).epsilon(1e-12));

    // diagonal specialization: sum (mu diff)^2 + sum (sqrt(va) - sqrt(vb))^2
    NoiseStream stream(11);
    Eigen::Index d = 5;
    VectorXd mu_a = stream.normal_vector(d);
    VectorXd mu_b = stream.normal_vector(d);
    VectorXd va = (stream.normal_vector(d).array().abs() + 0.1).matrix();
    VectorXd vb = (stream.normal_vector(d).array().abs() + 0.1).matrix();
    Moments da{mu_a, va.asDiagonal()};
    Moments db{mu_b, vb.asDiagonal()};
    double expected = (mu_a - mu_b).squaredNorm() +
                      (va.array().sqrt() - vb.array().sqrt()).square().sum();
    CHECK(dps::frechet_distance(da, db) == doctest::Approx(expected).epsilon(1e-10));

    // general case stays symmetric and non-negative
    Moments ga{stream.normal_vector(4), dps::test::random_spd(4, stream)};
    Moments gb{stream.normal_vector(4), dps::test::random_spd(4, stream)};
    double fab = dps::frechet_distance(ga, gb);
    double fba = dps::frechet_distance(gb, ga);
    CHECK(fab >= 0.0);
    CHECK(fab == doctest::Approx(fba).epsilon(1e-9));

    CHECK_THROWS_AS(dps::frechet_distance(a, ga), dps::DimensionError);
}

TEST_CASE("feature moments") {
    TensorShape scalar_shape{1, 1, 1};
    ImageTensor lo(scalar_shape, VectorXd::Zero(1));
    ImageTensor hi(scalar_shape, VectorXd::Constant(1, 2.0));

    auto m = dps::fit_feature_moments({lo, hi});
    CHECK(m.mean[0] == doctest::Approx(1.0));
    CHECK(m.covariance(0, 0) == doctest::Approx(2.0));  // unbiased, n-1 = 1

    auto same = dps::fit_feature_moments({hi, hi, hi});
    CHECK(same.covariance.cwiseAbs().maxCoeff() == 0.0);

    // permutation invariance
    NoiseStream stream(13);
    TensorShape shape{6, 6, 1};
    std::vector<ImageTensor> imgs;
    for (int i = 0; i < 5; ++i) imgs.push_back(random_image(shape, stream));
    auto fwd = dps::fit_feature_moments(imgs);
    std::vector<ImageTensor> rev(imgs.rbegin(), imgs.rend());
    auto bwd = dps::fit_feature_moments(rev);
    CHECK((fwd.mean - bwd.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((fwd.covariance - bwd.covariance).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK_THROWS_AS(dps::fit_feature_moments({lo}), dps::ConfigError);
}

TEST_CASE("pooled pixel features average adaptively") {
    // 16x16 pools to 8x8 blocks of 2x2
    TensorShape shape{16, 16, 1};
    ImageTensor img = ImageTensor::constant(shape, 0.25);
    VectorXd f = dps::pooled_pixel_features(img);
    CHECK(f.size() == 64);
    CHECK((f.array() - 0.25).abs().maxCoeff() <= 1e-12);

    // vectors flatten to themselves
    ImageTensor vec({1, 1, 6}, VectorXd::LinSpaced(6, 0.0, 1.0));
    VectorXd fv = dps::pooled_pixel_features(vec);
    CHECK(fv == vec.flat());
}

TEST_CASE("evaluate_batch aggregates per-image metrics") {
    TensorShape shape{16, 16, 1};
    NoiseStream stream(17);
    std::vector<ImageTensor> refs, recons;
    for (int i = 0; i < 4; ++i) {
        refs.push_back(random_image(shape, stream));
        recons.push_back(refs.back());
    }

    SUBCASE("perfect reconstructions") {
        auto report = dps::evaluate_batch(recons, refs);
        CHECK(report.psnr.mean == doctest::Approx(dps::kPsnrClampDb));
        CHECK(report.psnr.stddev == 0.0);
        CHECK(report.ssim.mean == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(report.rmse.mean == 0.0);
        CHECK(report.frechet == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(report.k.mean == doctest::Approx(100.0 / 40.0 + 1.0).epsilon(1e-10));
    }

    SUBCASE("aggregates equal an independent recomputation") {
        for (auto& r : recons) {
            ImageTensor noisy(shape,
                              (r.flat().array() + 0.05 * stream.normal()).matrix());
            r = noisy;
        }
        auto report = dps::evaluate_batch(recons, refs);
        double n = static_cast<double>(report.per_image.size());
        double mean = 0.0;
        for (const auto& m : report.per_image) mean += m.psnr_db;
        mean /= n;
        CHECK(std::abs(report.psnr.mean - mean) <= 1e-12);
        double var = 0.0;
        for (const auto& m : report.per_image) var += (m.psnr_db - mean) * (m.psnr_db - mean);
        CHECK(std::abs(report.psnr.stddev - std::sqrt(var / (n - 1))) <= 1e-12);
        CHECK(report.k_of_means ==
              doctest::Approx(report.psnr.mean / 40.0 + report.ssim.mean).epsilon(1e-12));
    }

    SUBCASE("single pair uses zero stddev and skips frechet") {
        auto report = dps::evaluate_batch({recons[0]}, {refs[0]});
        CHECK(report.psnr.stddev == 0.0);
        CHECK(std::isnan(report.frechet));
    }

    SUBCASE("vector shapes report nan ssim") {
        std::vector<ImageTensor> va = {ImageTensor::zero({1, 1, 8}),
                                       ImageTensor::zero({1, 1, 8})};
        auto report = dps::evaluate_batch(va, va);
        CHECK(std::isnan(report.ssim.mean));
        CHECK(std::isnan(report.k.mean));
        CHECK(report.rmse.mean == 0.0);
    }

    CHECK_THROWS_AS(dps::evaluate_batch({recons[0]}, refs), dps::DimensionError);
    CHECK_THROWS_AS(dps::evaluate_batch({}, {}), dps::ConfigError);
}
