#pragma once

#include "nav/vec3.hpp"

namespace nav {

// Scalar-first unit quaternion representing the body-to-NED rotation.
struct Quaternion {
    double q0 = 1.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;
};

// Direction cosine matrix, row-major, body-to-NED convention (C_b^n).
struct Dcm {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    double operator()(int r, int c) const { return m[r][c]; }
    double& operator()(int r, int c) { return m[r][c]; }

    Dcm transpose() const;
};

// Aerospace zyx sequence: heading about z, then pitch about y, then roll about x.
struct EulerAngles {
    double roll = 0.0;     // (-pi, pi]
    double pitch = 0.0;    // [-pi/2, pi/2]
    double heading = 0.0;  // [0, 2*pi)
};

// Axis-angle packed as a single vector: direction = axis, magnitude = angle (rad).
struct RotationVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 vec() const { return {x, y, z}; }
    static RotationVector from(const Vec3& v) { return {v.x, v.y, v.z}; }
};

// Which arctangent backs dcm_to_euler: the odd-degree polynomial used on the
// embedded path, or the platform routine for accuracy comparisons.
enum class AtanImpl { Polynomial, Std };

// Reduced two-argument arctangent of c1/c2 in [-pi/2, pi/2], computed with a
// ninth-degree odd polynomial on the octant-reduced ratio.
// Throws std::domain_error for (0, 0).
double fast_atan2(double c1, double c2);

double fast_atan2(double c1, double c2, AtanImpl impl);

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);
Quaternion quat_conjugate(const Quaternion& q);
double quat_norm_sq(const Quaternion& q);

// Rotates a body-frame vector into the navigation frame (q sandwich).
Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

// Angle of the relative rotation between two quaternions; insensitive to the
// q/-q double cover. Used by tests to compare rotations, not components.
double quat_angle_between(const Quaternion& a, const Quaternion& b);

// First-order norm correction q * 0.5*(3 - |q|^2). Residual norm error is
// O(delta^2). Throws DivergenceError when |q|^2 leaves [0.9, 1.1]: by then the
// integrator has already failed and the correction formula no longer applies.
Quaternion quat_normalize(const Quaternion& q);

Dcm euler_to_dcm(const EulerAngles& e);

EulerAngles dcm_to_euler(const Dcm& c, AtanImpl impl = AtanImpl::Polynomial);

Dcm quat_to_dcm(const Quaternion& q);

// Exact half-angle form; switches to the series 1/2 - |phi|^2/48 + |phi|^4/3840
// near zero so the zero vector maps to the identity exactly.
Quaternion rotvec_to_quat(const RotationVector& phi);

EulerAngles quat_to_euler(const Quaternion& q, AtanImpl impl = AtanImpl::Polynomial);
Quaternion euler_to_quat(const EulerAngles& e);

// Navigation-to-Earth-frame matrix for given latitude/longitude.
Dcm cne(double lat, double lon);

// Matrix-vector and matrix-matrix products for the 3x3 type.
Vec3 operator*(const Dcm& c, const Vec3& v);
Dcm operator*(const Dcm& a, const Dcm& b);

}  // namespace nav
