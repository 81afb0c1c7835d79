// Frame mathematics, earth-rate projection and classical gyrocompassing.

#include <gtest/gtest.h>

#include "gyrodiff/errors.hpp"
#include "gyrodiff/geo.hpp"
#include "gyrodiff/synth.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <random>

using namespace gyrodiff;
using namespace gyrodiff::geo;

namespace {

constexpr double kPi = std::numbers::pi;

EulerAngles random_angles(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> roll(-kPi, kPi);
    std::uniform_real_distribution<double> pitch(-kPi / 2, kPi / 2);
    std::uniform_real_distribution<double> yaw(0.0, 2 * kPi);
    return {roll(rng), pitch(rng), yaw(rng)};
}

GeoPosition random_position(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lat(-kPi / 2, kPi / 2);
    std::uniform_real_distribution<double> lon(-kPi, kPi);
    return {lat(rng), lon(rng)};
}

double angular_gap(double a, double b) { return std::abs(wrap_pi(a - b)); }

} // namespace

TEST(BodyToNav, IdentityAtZeroAngles) {
    EXPECT_TRUE(body_to_nav_matrix({0, 0, 0}).isApprox(Matrix3::Identity(), 1e-15));
}

TEST(BodyToNav, QuarterTurnYaw) {
    Matrix3 expected;
    expected << 0, 1, 0, -1, 0, 0, 0, 0, 1;
    EXPECT_LT((body_to_nav_matrix({0, 0, kPi / 2}) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EcefToNav, HandSubstitutions) {
    Matrix3 at_origin;
    at_origin << 0, 0, 1, 0, 1, 0, -1, 0, 0;
    EXPECT_LT((ecef_to_nav_matrix({0, 0}) - at_origin).cwiseAbs().maxCoeff(), 1e-15);

    const Matrix3 pole = ecef_to_nav_matrix({kPi / 2, 0});
    EXPECT_NEAR(pole(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(pole(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(pole(0, 2), 0.0, 1e-15);
}

TEST(RotationMatrices, OrthonormalWithUnitDeterminant) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        for (const Matrix3& m :
             {body_to_nav_matrix(random_angles(rng)), ecef_to_nav_matrix(random_position(rng))}) {
            EXPECT_LT((m * m.transpose() - Matrix3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
        }
    }
}

TEST(EarthRate, LeveledSpecialCases) {
    const auto north = earth_rate_in_body({0, 0, 0}, {0, 0});
    EXPECT_NEAR(north.x, kEarthRate, 1e-20);
    EXPECT_NEAR(north.y, 0.0, 1e-20);
    EXPECT_NEAR(north.z, 0.0, 1e-20);

    const auto east = earth_rate_in_body({0, 0, kPi / 2}, {0, 0});
    EXPECT_NEAR(east.x, 0.0, 1e-20);
    EXPECT_NEAR(east.y, -kEarthRate, 1e-20);

    for (double yaw : {0.0, 1.0, 4.0}) {
        const auto pole = earth_rate_in_body({0, 0, yaw}, {kPi / 2, 0.3});
        EXPECT_NEAR(pole.x, 0.0, 1e-20);
        EXPECT_NEAR(pole.y, 0.0, 1e-20);
        EXPECT_NEAR(pole.z, -kEarthRate, 1e-20);
    }
}

TEST(EarthRate, LeveledMatchesClosedForm) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> yaw(0, 2 * kPi), lat(-1.5, 1.5), lon(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const double psi = yaw(rng), phi = lat(rng);
        const auto w = earth_rate_in_body({0, 0, psi}, {phi, lon(rng)});
        EXPECT_NEAR(w.x, kEarthRate * std::cos(psi) * std::cos(phi), 1e-18);
        EXPECT_NEAR(w.y, -kEarthRate * std::sin(psi) * std::cos(phi), 1e-18);
        EXPECT_NEAR(w.z, -kEarthRate * std::sin(phi), 1e-18);
    }
}

TEST(MaxHorizontalSignal, ReferenceLatitudes) {
    const double at_32 = rad2deg(max_horizontal_signal({deg2rad(32.11), 0}));
    EXPECT_NEAR(at_32, 0.0035, 0.0035 * 0.02);
    EXPECT_DOUBLE_EQ(max_horizontal_signal({0, 0}), kEarthRate);
    EXPECT_NEAR(max_horizontal_signal({kPi / 2, 0}), 0.0, 1e-20);
}

TEST(MaxHorizontalSignal, EqualsLeveledHorizontalNorm) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> yaw(0, 2 * kPi), lat(-1.4, 1.4);
    for (int i = 0; i < 500; ++i) {
        const GeoPosition pos{lat(rng), 0.2};
        const auto w = earth_rate_in_body({0, 0, yaw(rng)}, pos);
        const double expected = max_horizontal_signal(pos);
        EXPECT_NEAR(std::hypot(w.x, w.y), expected, 1e-15 * expected);
    }
}

TEST(HeadingFromRates, LeveledRoundTrip) {
    const auto w = earth_rate_in_body({0, 0, deg2rad(30)}, {0, 0});
    EXPECT_NEAR(heading_from_rates(w, 0, 0), deg2rad(30), 1e-9);
    EXPECT_NEAR(heading_from_rates_leveled(w), deg2rad(30), 1e-9);
}

TEST(HeadingFromRates, TiltedRoundTrip) {
    const EulerAngles att{deg2rad(10), deg2rad(5), deg2rad(200)};
    const auto w = earth_rate_in_body(att, {deg2rad(45), 0});
    EXPECT_NEAR(heading_from_rates(w, att.roll, att.pitch), deg2rad(200), 1e-9);
}

TEST(HeadingFromRates, RandomTiltedAttitudes) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> tilt(-0.6, 0.6), yaw(0, 2 * kPi), lat(-1.3, 1.3);
    for (int i = 0; i < 1000; ++i) {
        const EulerAngles att{tilt(rng), tilt(rng), yaw(rng)};
        const auto w = earth_rate_in_body(att, {lat(rng), 0});
        EXPECT_LT(angular_gap(heading_from_rates(w, att.roll, att.pitch), att.yaw), 1e-9);
    }
}

TEST(HeadingFromRates, PoleIsDegenerate) {
    EXPECT_THROW(heading_from_rates({0, 0, -kEarthRate}, 0, 0), DegenerateSignal);
    EXPECT_THROW(heading_from_rates_leveled({0, 0, -kEarthRate}), DegenerateSignal);
}

TEST(HeadingFromRatesLeveled, AxisCases) {
    EXPECT_DOUBLE_EQ(heading_from_rates_leveled({kEarthRate, 0, 0}), 0.0);
    EXPECT_NEAR(heading_from_rates_leveled({0, -kEarthRate, 0}), kPi / 2, 1e-15);
    EXPECT_NEAR(heading_from_rates_leveled({-3.0, 0, 0}), kPi, 1e-15);
}

TEST(HeadingFromRatesLeveled, RangeAndScaleInvariance) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> k(1e-6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const AngularRate w{n(rng), n(rng), n(rng)};
        const double psi = heading_from_rates_leveled(w);
        EXPECT_GE(psi, 0.0);
        EXPECT_LT(psi, 2 * kPi);
        const double s = k(rng);
        EXPECT_LT(angular_gap(heading_from_rates_leveled({s * w.x, s * w.y, s * w.z}), psi), 1e-12);
    }
}

TEST(HeadingFromRatesLeveled, RoundTripOverLatitudes) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> yaw(0, 2 * kPi), lat(deg2rad(-80), deg2rad(80));
    for (int i = 0; i < 1000; ++i) {
        const double psi = yaw(rng);
        const auto w = earth_rate_in_body({0, 0, psi}, {lat(rng), 0});
        EXPECT_LT(angular_gap(heading_from_rates_leveled(w), psi), 1e-9);
    }
}

TEST(WrapTwoPi, StaysInRange) {
    EXPECT_DOUBLE_EQ(wrap_two_pi(2 * kPi), 0.0);
    EXPECT_NEAR(wrap_two_pi(-kPi / 2), 1.5 * kPi, 1e-15);
    const double tiny = wrap_two_pi(-1e-18);
    EXPECT_GE(tiny, 0.0);
    EXPECT_LT(tiny, 2 * kPi);
}

TEST(ClassicalGyrocompass, NoiselessSequenceAnyWindow) {
    const auto seq = synth::generate_clean_sequence(deg2rad(123), 0.0, 100, 3);
    for (double window : {1.0, 10.0, 55.0, 100.0}) {
        EXPECT_NEAR(classical_gyrocompass(seq, window), deg2rad(123), 1e-9);
    }
}

TEST(ClassicalGyrocompass, WindowErrors) {
    const auto seq = synth::generate_clean_sequence(0.3, 0.0, 100, 3);
    EXPECT_THROW(classical_gyrocompass(seq, 101.0), EmptyWindow);
    EXPECT_THROW(classical_gyrocompass(seq, 0.1), EmptyWindow);
    EXPECT_THROW(classical_gyrocompass(seq, 0.0), EmptyWindow);
}

// Heading error spread shrinks like 1/sqrt(window) under white noise.
TEST(ClassicalGyrocompass, ErrorShrinksWithSqrtWindow) {
    const double psi = deg2rad(40);
    const auto clean = synth::generate_clean_sequence(psi, 0.0, 100, 3);
    double sq10 = 0.0, sq100 = 0.0;
    const int trials = 2000;
    for (int s = 0; s < trials; ++s) {
        synth::NoiseModel noise;
        noise.white_noise_std = 0.1 * kEarthRate;
        noise.seed = 1000 + static_cast<std::uint64_t>(s);
        const auto noisy = synth::add_sensor_noise(clean, noise);
        const double e10 = wrap_pi(classical_gyrocompass(noisy, 10) - psi);
        const double e100 = wrap_pi(classical_gyrocompass(noisy, 100) - psi);
        sq10 += e10 * e10;
        sq100 += e100 * e100;
    }
    const double ratio = std::sqrt(sq10 / sq100);
    EXPECT_NEAR(ratio, std::sqrt(10.0), 0.1 * std::sqrt(10.0));
}
