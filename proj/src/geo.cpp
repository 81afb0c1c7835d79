#include "gyrodiff/geo.hpp"

#include "gyrodiff/errors.hpp"
#include "gyrodiff/sequence.hpp"

#include <cmath>
#include <string>

namespace gyrodiff::geo {

namespace {
constexpr double kDegenerateThreshold = 1e-15;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

double wrap_two_pi(double angle) {
    double wrapped = std::fmod(angle, kTwoPi);
    if (wrapped < 0.0) {
        wrapped += kTwoPi;
    }
    // fmod of a tiny negative value can round up to exactly 2pi.
    if (wrapped >= kTwoPi) {
        wrapped = 0.0;
    }
    return wrapped;
}

double wrap_pi(double angle) { return std::atan2(std::sin(angle), std::cos(angle)); }

Matrix3 body_to_nav_matrix(const EulerAngles& a) {
    const double cph = std::cos(a.roll), sph = std::sin(a.roll);
    const double cth = std::cos(a.pitch), sth = std::sin(a.pitch);
    const double cps = std::cos(a.yaw), sps = std::sin(a.yaw);

    Matrix3 m;
    m << cth * cps, cth * sps, -sth,
         sph * sth * cps - cph * sps, sph * sth * sps + cph * cps, sph * cth,
         cph * sth * cps + sph * sps, cph * sth * sps - sph * cps, cph * cth;
    return m;
}

Matrix3 ecef_to_nav_matrix(const GeoPosition& p) {
    const double cla = std::cos(p.latitude), sla = std::sin(p.latitude);
    const double clo = std::cos(p.longitude), slo = std::sin(p.longitude);

    Matrix3 m;
    m << -sla * clo, -sla * slo, cla,
         -slo, clo, 0.0,
         -cla * clo, -cla * slo, -sla;
    return m;
}

AngularRate earth_rate_in_body(const EulerAngles& angles, const GeoPosition& pos,
                               const EarthModel& earth) {
    const Eigen::Vector3d omega_e(0.0, 0.0, earth.rate());
    return AngularRate::from(body_to_nav_matrix(angles) * ecef_to_nav_matrix(pos) * omega_e);
}

double max_horizontal_signal(const GeoPosition& pos, const EarthModel& earth) {
    return earth.rate() * std::cos(pos.latitude);
}

double heading_from_rates(const AngularRate& w, double roll, double pitch) {
    const double cph = std::cos(roll), sph = std::sin(roll);
    const double cth = std::cos(pitch), sth = std::sin(pitch);

    const double s_psi = -w.y * cph + w.z * sph;
    const double c_psi = w.x * cth + w.y * sph * sth + w.z * cph * sth;
    if (std::abs(s_psi) < kDegenerateThreshold && std::abs(c_psi) < kDegenerateThreshold) {
        throw DegenerateSignal("horizontal earth-rate components vanish; heading is unobservable");
    }
    return wrap_two_pi(std::atan2(s_psi, c_psi));
}

double heading_from_rates_leveled(const AngularRate& w) {
    if (std::abs(w.y) < kDegenerateThreshold && std::abs(w.x) < kDegenerateThreshold) {
        throw DegenerateSignal("horizontal earth-rate components vanish; heading is unobservable");
    }
    return wrap_two_pi(std::atan2(-w.y, w.x));
}

double classical_gyrocompass(const TimeSequence& seq, double window_seconds) {
    if (!(window_seconds > 0.0)) {
        throw EmptyWindow("window must be positive, got " + std::to_string(window_seconds));
    }
    const auto n_window =
        static_cast<Eigen::Index>(std::floor(window_seconds * seq.sample_rate_hz + 1e-9));
    if (n_window == 0) {
        throw EmptyWindow("window of " + std::to_string(window_seconds) + " s covers no samples");
    }
    if (n_window > seq.n_time()) {
        throw EmptyWindow("window of " + std::to_string(window_seconds) +
                          " s exceeds the recording duration of " +
                          std::to_string(seq.duration()) + " s");
    }
    const Eigen::Vector3d mean = seq.samples.topRows(n_window).colwise().mean().transpose();
    return heading_from_rates_leveled(AngularRate::from(mean));
}

} // namespace gyrodiff::geo
