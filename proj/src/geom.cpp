#include "nav/geom.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nav/errors.hpp"

namespace nav {

namespace {

constexpr double kPi = std::numbers::pi;

// Ratio clamp for the pitch channel. Values of |c31| marginally above one are
// rounding residue, never geometry.
constexpr double kGimbalClamp = 1.0 - 1e-12;

double atan_poly(double r) {
    const double r2 = r * r;
    const double r3 = r * r2;
    const double r5 = r3 * r2;
    const double r7 = r5 * r2;
    const double r9 = r7 * r2;
    return 0.999896 * r - 0.330756 * r3 + 0.181946 * r5 - 0.0876858 * r7 + 0.021997 * r9;
}

}  // namespace

Dcm Dcm::transpose() const {
    Dcm t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            t.m[r][c] = m[c][r];
    return t;
}

Vec3 operator*(const Dcm& c, const Vec3& v) {
    return {c.m[0][0] * v.x + c.m[0][1] * v.y + c.m[0][2] * v.z,
            c.m[1][0] * v.x + c.m[1][1] * v.y + c.m[1][2] * v.z,
            c.m[2][0] * v.x + c.m[2][1] * v.y + c.m[2][2] * v.z};
}

Dcm operator*(const Dcm& a, const Dcm& b) {
    Dcm out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out.m[r][c] = a.m[r][0] * b.m[0][c] + a.m[r][1] * b.m[1][c] + a.m[r][2] * b.m[2][c];
        }
    }
    return out;
}

double fast_atan2(double c1, double c2) {
    if (c1 == 0.0 && c2 == 0.0) {
        throw std::domain_error("fast_atan2: both arguments zero");
    }
    if (c2 == 0.0) {
        return c1 >= 0.0 ? kPi / 2.0 : -kPi / 2.0;
    }
    double r;
    if (std::fabs(c1) >= std::fabs(c2)) {
        r = c2 / c1;
        // Equal-magnitude fixups. The printed branches compare |C1| against
        // +/-|C2|, which no nonzero pair can satisfy; read as sign-aware exact
        // ratios. Behavior is pinned by the reference-oracle sweep.
        if (c1 == c2) r = 1.0;
        if (c1 == -c2) r = -1.0;
        const double ang = atan_poly(r);
        if (ang > 0.0) return kPi / 2.0 - ang;
        if (ang < 0.0) return -kPi / 2.0 - ang;
        return c1 >= 0.0 ? kPi / 2.0 : -kPi / 2.0;
    }
    r = c1 / c2;
    return atan_poly(r);
}

double fast_atan2(double c1, double c2, AtanImpl impl) {
    if (impl == AtanImpl::Polynomial) return fast_atan2(c1, c2);
    if (c1 == 0.0 && c2 == 0.0) {
        throw std::domain_error("fast_atan2: both arguments zero");
    }
    if (c2 == 0.0) return c1 >= 0.0 ? kPi / 2.0 : -kPi / 2.0;
    return std::atan(c1 / c2);
}

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
    return {a.q0 * b.q0 - a.q1 * b.q1 - a.q2 * b.q2 - a.q3 * b.q3,
            a.q0 * b.q1 + a.q1 * b.q0 + a.q2 * b.q3 - a.q3 * b.q2,
            a.q0 * b.q2 - a.q1 * b.q3 + a.q2 * b.q0 + a.q3 * b.q1,
            a.q0 * b.q3 + a.q1 * b.q2 - a.q2 * b.q1 + a.q3 * b.q0};
}

Quaternion quat_conjugate(const Quaternion& q) { return {q.q0, -q.q1, -q.q2, -q.q3}; }

double quat_norm_sq(const Quaternion& q) {
    return q.q0 * q.q0 + q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3;
}

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
    const Quaternion p{0.0, v.x, v.y, v.z};
    const Quaternion r = quat_multiply(quat_multiply(q, p), quat_conjugate(q));
    return {r.q1, r.q2, r.q3};
}

double quat_angle_between(const Quaternion& a, const Quaternion& b) {
    double d = a.q0 * b.q0 + a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3;
    d = std::fabs(d);
    if (d > 1.0) d = 1.0;
    return 2.0 * std::acos(d);
}

Quaternion quat_normalize(const Quaternion& q) {
    const double nn = quat_norm_sq(q);
    if (!(nn >= 0.9 && nn <= 1.1)) {
        throw DivergenceError("quat_normalize: |q|^2 outside [0.9, 1.1], integration diverged");
    }
    const double corr = 0.5 * (3.0 - nn);
    return {q.q0 * corr, q.q1 * corr, q.q2 * corr, q.q3 * corr};
}

Dcm euler_to_dcm(const EulerAngles& e) {
    const double cr = std::cos(e.roll), sr = std::sin(e.roll);
    const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
    const double ch = std::cos(e.heading), sh = std::sin(e.heading);

    // C_n^b = C_x(roll) * C_y(pitch) * C_z(heading); stored matrix is its
    // transpose, C_b^n.
    Dcm c;
    c.m[0][0] = cp * ch;
    c.m[0][1] = sr * sp * ch - cr * sh;
    c.m[0][2] = cr * sp * ch + sr * sh;
    c.m[1][0] = cp * sh;
    c.m[1][1] = sr * sp * sh + cr * ch;
    c.m[1][2] = cr * sp * sh - sr * ch;
    c.m[2][0] = -sp;
    c.m[2][1] = sr * cp;
    c.m[2][2] = cr * cp;
    return c;
}

EulerAngles dcm_to_euler(const Dcm& c, AtanImpl impl) {
    EulerAngles e;

    // Roll from (c32, c33) with quadrant correction.
    {
        const double c1 = c.m[2][1];
        const double c2 = c.m[2][2];
        if (c2 == 0.0) {
            e.roll = c1 >= 0.0 ? kPi / 2.0 : -kPi / 2.0;
        } else {
            const double ang = fast_atan2(c1, c2, impl);
            if (c2 > 0.0) {
                e.roll = ang;
            } else {
                e.roll = c1 > 0.0 ? ang + kPi : ang - kPi;
            }
        }
        if (e.roll > kPi) e.roll -= 2.0 * kPi;
        if (e.roll <= -kPi) e.roll += 2.0 * kPi;
    }

    // Pitch from c31. c31 = -sin(pitch) for the stored C_b^n; the square is
    // clamped so rounding can never push it past one.
    {
        double c11sq = c.m[2][0] * c.m[2][0];
        if (c11sq >= 1.0) c11sq = 1.0;
        const double c2 = std::sqrt(1.0 - c11sq);
        double c1 = -c.m[2][0];
        if (c1 > 1.0) c1 = 1.0;
        if (c1 < -1.0) c1 = -1.0;
        if (std::fabs(c.m[2][0]) >= kGimbalClamp) {
            e.pitch = c1 >= 0.0 ? kPi / 2.0 : -kPi / 2.0;
        } else {
            e.pitch = fast_atan2(c1, c2, impl);
        }
    }

    // Heading from (c21, c11), wrapped to [0, 2*pi).
    {
        const double c1 = c.m[1][0];
        const double c2 = c.m[0][0];
        if (c2 == 0.0) {
            e.heading = c1 >= 0.0 ? kPi / 2.0 : 3.0 * kPi / 2.0;
        } else {
            const double ang = fast_atan2(c1, c2, impl);
            if (c2 > 0.0) {
                e.heading = ang;
            } else {
                e.heading = c1 >= 0.0 ? ang + kPi : ang - kPi;
            }
        }
        if (e.heading < 0.0) e.heading += 2.0 * kPi;
        if (e.heading >= 2.0 * kPi) e.heading -= 2.0 * kPi;
    }

    return e;
}

Dcm quat_to_dcm(const Quaternion& q) {
    const double q00 = q.q0 * q.q0;
    const double q11 = q.q1 * q.q1;
    const double q22 = q.q2 * q.q2;
    const double q33 = q.q3 * q.q3;
    const double q01 = q.q0 * q.q1;
    const double q02 = q.q0 * q.q2;
    const double q03 = q.q0 * q.q3;
    const double q12 = q.q1 * q.q2;
    const double q13 = q.q1 * q.q3;
    const double q23 = q.q2 * q.q3;

    Dcm c;
    c.m[0][0] = q00 + q11 - q22 - q33;
    c.m[0][1] = (q12 - q03) * 2.0;
    c.m[0][2] = (q13 + q02) * 2.0;
    c.m[1][0] = (q12 + q03) * 2.0;
    c.m[1][1] = q00 - q11 + q22 - q33;
    c.m[1][2] = (q23 - q01) * 2.0;
    c.m[2][0] = (q13 - q02) * 2.0;
    c.m[2][1] = (q23 + q01) * 2.0;
    c.m[2][2] = q00 - q11 - q22 + q33;
    return c;
}

Quaternion rotvec_to_quat(const RotationVector& phi) {
    const double n2 = phi.x * phi.x + phi.y * phi.y + phi.z * phi.z;
    if (n2 < 1e-8) {
        const double s = 0.5 - n2 / 48.0 + n2 * n2 / 3840.0;
        const double c = 1.0 - n2 / 8.0 + n2 * n2 / 384.0;
        return {c, s * phi.x, s * phi.y, s * phi.z};
    }
    const double n = std::sqrt(n2);
    const double half = 0.5 * n;
    const double s = std::sin(half) / n;
    return {std::cos(half), s * phi.x, s * phi.y, s * phi.z};
}

EulerAngles quat_to_euler(const Quaternion& q, AtanImpl impl) {
    return dcm_to_euler(quat_to_dcm(q), impl);
}

Quaternion euler_to_quat(const EulerAngles& e) {
    const Quaternion qz{std::cos(e.heading / 2.0), 0.0, 0.0, std::sin(e.heading / 2.0)};
    const Quaternion qy{std::cos(e.pitch / 2.0), 0.0, std::sin(e.pitch / 2.0), 0.0};
    const Quaternion qx{std::cos(e.roll / 2.0), std::sin(e.roll / 2.0), 0.0, 0.0};
    return quat_multiply(quat_multiply(qz, qy), qx);
}

Dcm cne(double lat, double lon) {
    const double sp = std::sin(lat), cp = std::cos(lat);
    const double sl = std::sin(lon), cl = std::cos(lon);
    Dcm c;
    c.m[0][0] = -sp * cl;
    c.m[0][1] = -sl;
    c.m[0][2] = -cp * cl;
    c.m[1][0] = -sp * sl;
    c.m[1][1] = cl;
    c.m[1][2] = -cp * sl;
    c.m[2][0] = cp;
    c.m[2][1] = 0.0;
    c.m[2][2] = -sp;
    return c;
}

}  // namespace nav
