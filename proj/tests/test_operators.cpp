#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "dps/errors.hpp"
#include "dps/operators.hpp"
#include "test_util.hpp"

using dps::DownsampleAvg;
using dps::GaussianBlur;
using dps::IdentityOperator;
using dps::ImageTensor;
using dps::NoiseStream;
using dps::TensorShape;
using Eigen::VectorXd;

namespace {

void check_adjoint_identity(const dps::LinearOperator& op, NoiseStream& stream,
                            int pairs) {
    for (int i = 0; i < pairs; ++i) {
        VectorXd x = stream.normal_vector(op.input_size());
        VectorXd u = stream.normal_vector(op.output_size());
        double lhs = op.apply(x).dot(u);
        double rhs = x.dot(op.adjoint(u));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
    }
}

}  // namespace

TEST_CASE("downsampling averages non-overlapping blocks") {
    DownsampleAvg op({2, 2, 1}, 2);
    VectorXd x(4);
    x << 0, 0, 0, 4;
    VectorXd y = op.apply(x);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == 1.0);

    DownsampleAvg big({256, 256, 3}, 4);
    ImageTensor c = ImageTensor::constant({256, 256, 3}, 0.37);
    VectorXd out = big.apply(c.flat());
    CHECK(out.size() == 64 * 64 * 3);
    CHECK((out.array() - 0.37).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("downsampling adjoint broadcasts scaled by 1/p^2") {
    DownsampleAvg op({2, 2, 1}, 2);
    VectorXd u = VectorXd::Constant(1, 1.0);
    VectorXd x = op.adjoint(u);
    REQUIRE(x.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(x[i] == 0.25);
}

TEST_CASE("identity operator passes values through") {
    IdentityOperator op({2, 3, 1});
    NoiseStream stream(3);
    VectorXd x = stream.normal_vector(6);
    CHECK(op.apply(x) == x);
    CHECK(op.adjoint(x) == x);
    VectorXd y = stream.normal_vector(6);
    CHECK(op.project(x, y) == y);
}

TEST_CASE("adjoint inner-product identity holds for every operator kind") {
    NoiseStream stream(101);
    IdentityOperator identity({3, 4, 2});
    DownsampleAvg down_small({4, 4, 1}, 2);
    DownsampleAvg down_big({8, 8, 3}, 4);
    GaussianBlur blur({9, 7, 2}, 2, 1.0);
    check_adjoint_identity(identity, stream, 100);
    check_adjoint_identity(down_small, stream, 100);
    check_adjoint_identity(down_big, stream, 100);
    check_adjoint_identity(blur, stream, 100);
}

TEST_CASE("blur adjoint matches the dense transpose oracle") {
    GaussianBlur blur({5, 4, 1}, 2, 0.8);
    Eigen::MatrixXd a = blur.materialize();
    NoiseStream stream(5);
    for (int i = 0; i < 20; ++i) {
        VectorXd u = stream.normal_vector(blur.output_size());
        VectorXd got = blur.adjoint(u);
        VectorXd expected = a.transpose() * u;
        CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("projection enforces measurement consistency") {
    DownsampleAvg op({2, 2, 1}, 2);
    VectorXd x = VectorXd::Zero(4);
    VectorXd y = VectorXd::Constant(1, 1.0);
    VectorXd p = op.project(x, y);
    for (int i = 0; i < 4; ++i) CHECK(p[i] == 1.0);

    NoiseStream stream(7);
    IdentityOperator identity({1, 1, 5});
    const dps::LinearOperator* ops[] = {&op, &identity};
    for (const auto* o : ops) {
        for (int i = 0; i < 100; ++i) {
            VectorXd xi = stream.normal_vector(o->input_size());
            VectorXd yi = stream.normal_vector(o->output_size());
            VectorXd pi = o->project(xi, yi);
            CHECK((o->apply(pi) - yi).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((o->project(pi, yi) - pi).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }

    // already-consistent input is a fixed point
    VectorXd xc = stream.normal_vector(4);
    VectorXd yc = op.apply(xc);
    CHECK(op.project(xc, yc) == xc);
}

TEST_CASE("blur refuses range-space projection") {
    GaussianBlur blur({8, 8, 1}, 2, 1.5);
    CHECK_FALSE(blur.supports_projection());
    CHECK_THROWS_AS(blur.project(VectorXd::Zero(64), VectorXd::Zero(64)),
                    dps::UnsupportedError);
}

TEST_CASE("A A^T of block averaging is (1/p^2) I") {
    DownsampleAvg op({6, 6, 2}, 3);
    NoiseStream stream(11);
    for (int i = 0; i < 10; ++i) {
        VectorXd u = stream.normal_vector(op.output_size());
        VectorXd round_trip = op.apply(op.adjoint(u));
        CHECK((round_trip - u / 9.0).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("operator norm of block averaging is 1/p") {
    DownsampleAvg op({6, 6, 1}, 2);

    // dense oracle
    Eigen::MatrixXd a = op.materialize();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    CHECK(svd.singularValues()[0] == doctest::Approx(0.5).epsilon(1e-10));

    // power iteration on A^T A
    NoiseStream stream(13);
    VectorXd v = stream.normal_vector(op.input_size());
    v.normalize();
    double lambda = 0.0;
    for (int i = 0; i < 300; ++i) {
        VectorXd w = op.adjoint(op.apply(v));
        lambda = w.norm();
        v = w / lambda;
    }
    CHECK(std::sqrt(lambda) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("blur preserves constants and is linear") {
    GaussianBlur blur({12, 10, 1}, 3, 1.2);
    ImageTensor c = ImageTensor::constant({12, 10, 1}, 0.61);
    VectorXd out = blur.apply(c.flat());
    CHECK((out.array() - 0.61).abs().maxCoeff() <= 1e-12);

    NoiseStream stream(17);
    VectorXd x = stream.normal_vector(blur.input_size());
    VectorXd z = stream.normal_vector(blur.input_size());
    VectorXd combined = blur.apply(2.0 * x - 0.5 * z);
    VectorXd split = 2.0 * blur.apply(x) - 0.5 * blur.apply(z);
    CHECK((combined - split).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("degrade adds seeded gaussian noise") {
    IdentityOperator op({1, 1, 100000});
    NoiseStream stream(19);
    VectorXd x0 = stream.normal_vector(op.input_size());

    NoiseStream quiet(23);
    CHECK(dps::degrade(op, x0, 0.0, quiet) == op.apply(x0));

    NoiseStream noisy(23);
    VectorXd y = dps::degrade(op, x0, 0.7, noisy);
    VectorXd noise = y - op.apply(x0);
    double var = noise.squaredNorm() / noise.size();
    CHECK(var == doctest::Approx(0.49).epsilon(0.05));

    NoiseStream again(23);
    VectorXd y2 = dps::degrade(op, x0, 0.7, again);
    CHECK(y == y2);

    NoiseStream s(29);
    CHECK_THROWS_AS(dps::degrade(op, x0, -0.1, s), dps::ConfigError);
}

TEST_CASE("operators reject mismatched shapes") {
    DownsampleAvg op({4, 4, 1}, 2);
    CHECK_THROWS_AS(op.apply(VectorXd::Zero(15)), dps::DimensionError);
    CHECK_THROWS_AS(op.adjoint(VectorXd::Zero(5)), dps::DimensionError);
    CHECK_THROWS_AS(op.project(VectorXd::Zero(16), VectorXd::Zero(3)),
                    dps::DimensionError);
    CHECK_THROWS_AS(DownsampleAvg({4, 4, 1}, 3), dps::ConfigError);
    CHECK_THROWS_AS(DownsampleAvg({4, 4, 1}, 0), dps::ConfigError);
    CHECK_THROWS_AS(GaussianBlur({4, 4, 1}, 0, 1.0), dps::ConfigError);
    CHECK_THROWS_AS(GaussianBlur({4, 4, 1}, 2, 0.0), dps::ConfigError);
}

TEST_CASE("image tensor validates shape and finiteness") {
    CHECK_THROWS_AS(ImageTensor({2, 2, 1}, VectorXd::Zero(3)), dps::DimensionError);
    VectorXd bad(4);
    bad << 0, 1, std::numeric_limits<double>::quiet_NaN(), 0;
    CHECK_THROWS_AS(ImageTensor({2, 2, 1}, bad), dps::NumericError);
    ImageTensor ok({2, 2, 1}, VectorXd::Zero(4));
    CHECK(ok.shape().height == 2);
}
