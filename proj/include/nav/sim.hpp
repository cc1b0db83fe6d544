#pragma once

#include <cstdint>
#include <vector>

#include "nav/mech.hpp"
#include "nav/vec3.hpp"

namespace nav {

namespace units {

inline constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

inline double deg_to_rad(double d) { return d * kDegToRad; }
inline double rad_to_deg(double r) { return r / kDegToRad; }

// deg/hr -> rad/s
inline double dph_to_rps(double v) { return v * kDegToRad / 3600.0; }
inline double rps_to_dph(double v) { return v / kDegToRad * 3600.0; }

// deg/sqrt(hr) -> rad/sqrt(s)
inline double dpsh_to_rpss(double v) { return v * kDegToRad / 60.0; }
inline double rpss_to_dpsh(double v) { return v / kDegToRad * 60.0; }

// deg/hr^1.5 -> rad/s^1.5
inline double dph15_to_rps15(double v) { return v * kDegToRad / (3600.0 * 60.0); }
inline double rps15_to_dph15(double v) { return v / kDegToRad * (3600.0 * 60.0); }

}  // namespace units

enum class TrajectoryKind {
    Stationary,
    ConstantRateRotation,
    Coning,
    Sculling,
    CircularPath,
};

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Stationary;
    double duration = 60.0;  // s
    double l_rate = 1000.0;  // Hz

    Vec3 rotation_axis{0, 0, 1};  // constant-rate rotation
    double rotation_rate = 0.0;   // rad/s

    double cone_angle = 0.01;  // rad, coning amplitude A
    double cone_freq = 20.0;   // rad/s, coning frequency Omega

    double scul_angle = 0.01;  // rad, angular amplitude
    double scul_accel = 1.0;   // m/s^2, specific-force amplitude
    double scul_freq = 20.0;   // rad/s

    double circle_radius = 100.0;  // m
    double circle_speed = 10.0;    // m/s

    NavState initial{};
};

struct TruthSample {
    double t;
    NavState nav;
    Vec3 w_body;  // rad/s
    Vec3 f_body;  // m/s^2
};

// Closed-form kinematics per trajectory kind, with an internal fine-step
// integrator backing the channels that have no elementary closed form
// (coning attitude, sculling velocity). truth() must be called with
// non-decreasing t; rewinding restarts the internal integration.
class TrajectoryModel {
public:
    TrajectoryModel(const TrajectorySpec& spec, const EarthModel& earth);

    Vec3 rate_body(double t) const;
    Vec3 specific_force_body(double t) const;
    NavState truth(double t) const;

    const TrajectorySpec& spec() const { return spec_; }
    const EarthModel& earth() const { return earth_; }

private:
    Quaternion attitude(double t) const;
    void advance_fine(double t) const;

    TrajectorySpec spec_;
    EarthModel earth_;

    // forward-only integration cache
    mutable double fine_t_ = 0.0;
    mutable Quaternion fine_q_{};
    mutable Vec3 fine_v_{};
    mutable double fine_lat_ = 0.0, fine_lon_ = 0.0, fine_alt_ = 0.0;
};

std::vector<TruthSample> gen_truth(const TrajectorySpec& spec, const EarthModel& earth);

// Table-1 sensor error taxonomy. Gyro magnitudes carry the datasheet units;
// conversion happens inside the corruption pass. The accelerometer bias
// stability is treated as a m/s^2 process amplitude.
struct SensorErrorSpec {
    Vec3 gyro_bias_dph{};       // constant bias, deg/hr
    Vec3 gyro_arw_dpsh{};       // angle random walk, deg/sqrt(hr)
    Vec3 gyro_bi_dph{};         // bias instability amplitude, deg/hr
    double gyro_bi_tau_s = 100.0;
    Vec3 gyro_rrw_dph15{};      // rate random walk, deg/hr^1.5

    Vec3 accel_bias_mps2{};     // constant bias, m/s^2
    Vec3 accel_vrw{};           // velocity random walk, m/s^2/sqrt(Hz)
    Vec3 accel_bi_mps2{};       // bias instability amplitude, m/s^2
    double accel_bi_tau_s = 100.0;
    Vec3 accel_rw_mps15{};      // acceleration random walk, m/s^1.5

    std::uint64_t seed = 0;
};

struct ImuSample {
    double t;
    Vec3 w;  // rad/s
    Vec3 f;  // m/s^2
};

// Truth plus constant bias, white noise scaled by the sample rate,
// first-order Gauss-Markov bias wander, and integrated-white-noise random
// walk. Deterministic for a fixed spec and seed.
std::vector<ImuSample> corrupt_imu(const std::vector<TruthSample>& truth,
                                   const SensorErrorSpec& spec);

struct GnssSpec {
    double rate_hz = 1.0;
    Vec3 pos_sigma_m{};   // per-axis N/E/D, meters
    Vec3 vel_sigma{};     // per-axis, m/s
    double time_skew_s = 0.0;
};

struct GnssFixRow {
    double t;  // reported timestamp (truth epoch + skew)
    double lat, lon, alt;
    Vec3 v;
};

// Fixes sampled at the GNSS rate. A positive skew reports stale solutions:
// the row carries timestamp t but the truth evaluated at t - skew.
std::vector<GnssFixRow> gen_gnss(const TrajectoryModel& model, const GnssSpec& spec,
                                 std::uint64_t seed);

}  // namespace nav
