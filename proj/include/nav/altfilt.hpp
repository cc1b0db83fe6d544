#pragma once

#include "nav/geom.hpp"
#include "nav/vec3.hpp"

namespace nav {

// Proportional-integral compensator gains for the feedback filter.
struct PiGains {
    double kp = 1.0;  // 1/s
    double ki = 0.1;  // 1/s^2
};

struct CompFilterState {
    Quaternion q{};
    Vec3 bias_estimate{};  // rad/s
    Vec3 integrator{};     // integral of the body error vector
};

struct GdFilterState {
    Quaternion q{};
    double beta = 0.1;                 // gradient step gain, rad/s
    bool heading_unobservable = false; // set when accel and mag are parallel
};

// Centripetally corrected gravity reference in body coordinates:
// w x v_ref - f_accel.
Vec3 gravity_reference(const Vec3& w_gyro, const Vec3& v_ref_body, const Vec3& f_accel);

struct BodyError {
    Vec3 e{};
    bool gravity_degenerate = false;  // reference too weak, yaw-only error
};

// Body-frame attitude error built from two cross products: yaw reference
// against estimated North, gravity reference against estimated Down.
BodyError attitude_error(const Quaternion& q_est, double psi_ref, const Vec3& g_ref);

// One feedback-filter step: integrate the error, refresh the bias estimate,
// integrate the de-biased rates through the quaternion machinery.
CompFilterState comp_step(const CompFilterState& state, const Vec3& w_gyro, const Vec3& f_accel,
                          const Vec3& v_ref_body, double psi_ref, const PiGains& gains, double dT);

// Residual of rotating the reference field into the body frame against the
// measured field: vec(q* (x) d_ref (x) q) - s. Throws std::domain_error for a
// zero-norm measurement.
Vec3 gd_objective(const Quaternion& q, const Vec3& d_ref, const Vec3& s);

// Analytic 3x4 Jacobian of the rotated reference with respect to the
// quaternion components; rows follow the residual, columns q0..q3.
void gd_jacobian(const Quaternion& q, const Vec3& d_ref, double jac[3][4]);

// Combined accel+mag gradient: J^T f over the stacked gravity and magnetic
// residuals.
void gd_gradient(const Quaternion& q, const Vec3& d_grav, const Vec3& s_accel, const Vec3& d_mag,
                 const Vec3& s_mag, double grad[4]);

// One gradient-descent fusion step: gyro quaternion rate minus beta times the
// normalized objective gradient, Euler-integrated and normalized.
GdFilterState gd_step(const GdFilterState& state, const Vec3& w_gyro, const Vec3& f_accel,
                      const Vec3& m_mag, double dT, double mag_inclination = 0.0);

}  // namespace nav
