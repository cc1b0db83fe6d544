#pragma once

#include "nav/geom.hpp"
#include "nav/vec3.hpp"

namespace nav {

struct EarthModel {
    double radius = 6.37e6;          // m
    double gravity = 9.80665;        // m/s^2, constant magnitude
    double omega_e = 7.292115e-5;    // rad/s
};

// Total-state navigation solution: geodetic position, NED velocity,
// body-to-NED attitude quaternion.
struct NavState {
    double lat = 0.0;  // rad
    double lon = 0.0;  // rad
    double alt = 0.0;  // m, up-positive
    Vec3 v{};          // m/s, NED
    Quaternion q{};    // body -> NED
};

struct MechOptions {
    // Adds the -(w_in + w_ie) x v terms to velocity integration. Off by
    // default: below the MEMS noise floor at the velocities handled here.
    bool full_coriolis = false;
    double large_angle_threshold = 0.05;  // rad, small-angle regime limit
};

// Body increments rotated into NED with the sensed-gravity component removed
// from the down channel.
Vec3 transform_dv(const Dcm& c, const Vec3& dv_body, double dT_m, const EarthModel& earth);

NavState integrate_velocity(const NavState& state, const Vec3& dv_ned);

NavState integrate_velocity_coriolis(const NavState& state, const Vec3& dv_ned, double dT_m,
                                     const EarthModel& earth);

// Latitude/longitude/altitude rates per the spherical-Earth kinematics.
// Throws DivergenceError within 1e-6 rad of the poles.
NavState integrate_position(const NavState& state, double dT_m, const EarthModel& earth);

// Quaternion update by the m-interval angular increment: q <- q (x) dLambda
// with the update quaternion built from the second-order series, then the
// first-order norm correction.
NavState attitude_update(const NavState& state, const Vec3& phi_m);

// Whether an increment magnitude leaves the small-angle regime the series
// update assumes. Non-fatal; callers count it as an accuracy warning.
bool exceeds_small_angle(const Vec3& phi_m, const MechOptions& opt = {});

// One full m-cycle: attitude, DCM, velocity transform, velocity and position
// integration, in that order.
NavState mech_step(const NavState& state, const Vec3& phi_m, const Vec3& dv_m, double dT_m,
                   const EarthModel& earth, const MechOptions& opt = {});

}  // namespace nav
