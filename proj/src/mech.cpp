#include "nav/mech.hpp"

#include <cmath>
#include <numbers>

#include "nav/errors.hpp"

namespace nav {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kPolarGuard = 1e-6;  // rad
}  // namespace

Vec3 transform_dv(const Dcm& c, const Vec3& dv_body, double dT_m, const EarthModel& earth) {
    Vec3 dv = c * dv_body;
    dv.z += earth.gravity * dT_m;
    return dv;
}

NavState integrate_velocity(const NavState& state, const Vec3& dv_ned) {
    NavState next = state;
    next.v += dv_ned;
    return next;
}

NavState integrate_velocity_coriolis(const NavState& state, const Vec3& dv_ned, double dT_m,
                                     const EarthModel& earth) {
    const double sp = std::sin(state.lat), cp = std::cos(state.lat);
    const double lat_rate = state.v.x / earth.radius;
    const double lon_rate = state.v.y / (earth.radius * cp);
    const Vec3 w_in{(lon_rate + earth.omega_e) * cp, -lat_rate, -(lon_rate + earth.omega_e) * sp};
    const Vec3 w_ie{earth.omega_e * cp, 0.0, -earth.omega_e * sp};

    NavState next = state;
    next.v += dv_ned - dT_m * cross(w_in + w_ie, state.v);
    return next;
}

NavState integrate_position(const NavState& state, double dT_m, const EarthModel& earth) {
    if (std::fabs(state.lat) >= kPi / 2.0 - kPolarGuard) {
        throw DivergenceError("integrate_position: latitude at polar singularity");
    }
    NavState next = state;
    next.lat += state.v.x / earth.radius * dT_m;
    next.lon += state.v.y / (earth.radius * std::cos(state.lat)) * dT_m;
    next.alt -= state.v.z * dT_m;
    if (next.lon > kPi) next.lon -= 2.0 * kPi;
    if (next.lon <= -kPi) next.lon += 2.0 * kPi;
    return next;
}

NavState attitude_update(const NavState& state, const Vec3& phi_m) {
    const double d2 = dot(phi_m, phi_m);
    const double d4 = d2 * d2;
    const double s = 0.5 - d2 / 48.0 + d4 / 3840.0;
    const double c = 1.0 - d2 / 8.0 + d4 / 384.0;
    const Quaternion dlambda{c, s * phi_m.x, s * phi_m.y, s * phi_m.z};

    NavState next = state;
    next.q = quat_normalize(quat_multiply(state.q, dlambda));
    return next;
}

bool exceeds_small_angle(const Vec3& phi_m, const MechOptions& opt) {
    return norm(phi_m) >= opt.large_angle_threshold;
}

NavState mech_step(const NavState& state, const Vec3& phi_m, const Vec3& dv_m, double dT_m,
                   const EarthModel& earth, const MechOptions& opt) {
    NavState next = attitude_update(state, phi_m);
    const Dcm c = quat_to_dcm(next.q);
    const Vec3 dv_ned = transform_dv(c, dv_m, dT_m, earth);
    next = opt.full_coriolis ? integrate_velocity_coriolis(next, dv_ned, dT_m, earth)
                             : integrate_velocity(next, dv_ned);
    next = integrate_position(next, dT_m, earth);
    return next;
}

}  // namespace nav
