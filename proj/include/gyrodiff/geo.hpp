// Reference frames, earth-rate projection and model-based gyrocompassing.
#pragma once

#include <Eigen/Core>

#include <numbers>

namespace gyrodiff {

class TimeSequence;

namespace geo {

using Matrix3 = Eigen::Matrix3d;

/// WGS-84 earth rotation rate [rad/s].
inline constexpr double kEarthRate = 7.292115e-5;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle into [0, 2pi).
double wrap_two_pi(double angle);

/// Wraps an angle into (-pi, pi] via atan2(sin, cos).
double wrap_pi(double angle);

struct EulerAngles {
    double roll = 0.0;  ///< [rad], [-pi, pi]
    double pitch = 0.0; ///< [rad], [-pi/2, pi/2]
    double yaw = 0.0;   ///< [rad], [0, 2pi)
};

struct GeoPosition {
    double latitude = 0.0;  ///< [rad], [-pi/2, pi/2]
    double longitude = 0.0; ///< [rad], [-pi, pi]
};

/// Body-frame angular rate omega^b_ib [rad/s].
struct AngularRate {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Eigen::Vector3d vec() const { return {x, y, z}; }
    static AngularRate from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Earth model. The rotation rate is fixed to WGS-84.
struct EarthModel {
    double rate() const { return kEarthRate; }
};

/**
 * @brief Navigation (NED) to body rotation T^b_n for roll/pitch/yaw.
 *
 * Rows: [c_th c_ps, c_th s_ps, -s_th;
 *        s_ph s_th c_ps - c_ph s_ps, s_ph s_th s_ps + c_ph c_ps, s_ph c_th;
 *        c_ph s_th c_ps + s_ph s_ps, c_ph s_th s_ps - s_ph c_ps, c_ph c_th]
 */
Matrix3 body_to_nav_matrix(const EulerAngles& angles);

/**
 * @brief ECEF to NED rotation T^n_e at a geodetic position.
 *
 * Standard form; entry (3,2) is -cos(lat) sin(lon), which keeps the matrix
 * orthonormal.
 */
Matrix3 ecef_to_nav_matrix(const GeoPosition& pos);

/// omega^b_ib = T^b_n T^n_e (0, 0, omega_ie) for a stationary platform.
AngularRate earth_rate_in_body(const EulerAngles& angles, const GeoPosition& pos,
                               const EarthModel& earth = {});

/// Maximum horizontal earth-rate magnitude, omega_ie cos(lat) [rad/s].
double max_horizontal_signal(const GeoPosition& pos, const EarthModel& earth = {});

/// Heading from body rates given roll and pitch. Throws DegenerateSignal when
/// both the sine and cosine terms vanish (|.| < 1e-15).
double heading_from_rates(const AngularRate& rates, double roll, double pitch);

/// Leveled heading atan2(-w_y, w_x) wrapped into [0, 2pi).
double heading_from_rates_leveled(const AngularRate& rates);

/// Averages the first window_seconds of a stationary, leveled recording and
/// returns the leveled heading of the mean rate.
/// Throws EmptyWindow when the window holds no samples or exceeds the record.
double classical_gyrocompass(const TimeSequence& seq, double window_seconds);

} // namespace geo
} // namespace gyrodiff
