#include "nav/altfilt.hpp"

#include <cmath>
#include <stdexcept>

namespace nav {

namespace {

// Minimum usable gravity-reference magnitude, as a fraction of g.
constexpr double kMinGravityRef = 0.1 * 9.80665;

Quaternion integrate_gyro(const Quaternion& q, const Vec3& rate, double dT) {
    const Vec3 phi = rate * dT;
    const double d2 = dot(phi, phi);
    const double d4 = d2 * d2;
    const double s = 0.5 - d2 / 48.0 + d4 / 3840.0;
    const double c = 1.0 - d2 / 8.0 + d4 / 384.0;
    return quat_normalize(quat_multiply(q, Quaternion{c, s * phi.x, s * phi.y, s * phi.z}));
}

}  // namespace

Vec3 gravity_reference(const Vec3& w_gyro, const Vec3& v_ref_body, const Vec3& f_accel) {
    return cross(w_gyro, v_ref_body) - f_accel;
}

BodyError attitude_error(const Quaternion& q_est, double psi_ref, const Vec3& g_ref) {
    BodyError out;

    const Dcm c_bn = quat_to_dcm(q_est);
    const Dcm c_nb = c_bn.transpose();
    const Vec3 north_est{c_nb(0, 0), c_nb(1, 0), c_nb(2, 0)};  // C_n^b * e1
    const Vec3 down_est{c_nb(0, 2), c_nb(1, 2), c_nb(2, 2)};   // C_n^b * e3

    // Reference North in body coordinates: estimated roll/pitch with the
    // reference yaw substituted.
    EulerAngles ref = dcm_to_euler(c_bn, AtanImpl::Std);
    ref.heading = psi_ref;
    const Dcm c_ref = euler_to_dcm(ref).transpose();
    const Vec3 north_ref{c_ref(0, 0), c_ref(1, 0), c_ref(2, 0)};

    out.e = cross(north_ref, north_est);

    const double gn = norm(g_ref);
    if (gn > kMinGravityRef) {
        out.e += cross(g_ref / gn, down_est);
    } else {
        out.gravity_degenerate = true;
    }
    return out;
}

CompFilterState comp_step(const CompFilterState& state, const Vec3& w_gyro, const Vec3& f_accel,
                          const Vec3& v_ref_body, double psi_ref, const PiGains& gains, double dT) {
    const Vec3 g_ref = gravity_reference(w_gyro, v_ref_body, f_accel);
    const BodyError err = attitude_error(state.q, psi_ref, g_ref);

    CompFilterState next = state;
    next.integrator += err.e * dT;
    next.bias_estimate = -(gains.kp * err.e + gains.ki * next.integrator);
    next.q = integrate_gyro(state.q, w_gyro - next.bias_estimate, dT);
    return next;
}

Vec3 gd_objective(const Quaternion& q, const Vec3& d_ref, const Vec3& s) {
    if (norm_sq(s) == 0.0) {
        throw std::domain_error("gd_objective: zero-norm measured vector");
    }
    const Quaternion d{0.0, d_ref.x, d_ref.y, d_ref.z};
    const Quaternion r = quat_multiply(quat_multiply(quat_conjugate(q), d), q);
    return Vec3{r.q1, r.q2, r.q3} - s;
}

void gd_jacobian(const Quaternion& q, const Vec3& d_ref, double jac[3][4]) {
    // Residual body vector: (q0^2 - u.u) d + 2 (u.d) u - 2 q0 (u x d),
    // u = (q1, q2, q3). Columns differentiate with respect to q0 and u.
    const Vec3 u{q.q1, q.q2, q.q3};
    const Vec3 uxd = cross(u, d_ref);
    const double ud = dot(u, d_ref);

    const Vec3 col0 = 2.0 * (q.q0 * d_ref) - 2.0 * uxd;
    jac[0][0] = col0.x;
    jac[1][0] = col0.y;
    jac[2][0] = col0.z;

    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const double uk[3] = {u.x, u.y, u.z};
    const double dk[3] = {d_ref.x, d_ref.y, d_ref.z};
    for (int k = 0; k < 3; ++k) {
        const Vec3 col = -2.0 * uk[k] * d_ref + 2.0 * dk[k] * u + 2.0 * ud * axes[k] -
                         2.0 * q.q0 * cross(axes[k], d_ref);
        jac[0][k + 1] = col.x;
        jac[1][k + 1] = col.y;
        jac[2][k + 1] = col.z;
    }
}

void gd_gradient(const Quaternion& q, const Vec3& d_grav, const Vec3& s_accel, const Vec3& d_mag,
                 const Vec3& s_mag, double grad[4]) {
    const Vec3 fg = gd_objective(q, d_grav, s_accel);
    const Vec3 fm = gd_objective(q, d_mag, s_mag);
    double jg[3][4];
    double jm[3][4];
    gd_jacobian(q, d_grav, jg);
    gd_jacobian(q, d_mag, jm);

    const double fgv[3] = {fg.x, fg.y, fg.z};
    const double fmv[3] = {fm.x, fm.y, fm.z};
    for (int c = 0; c < 4; ++c) {
        grad[c] = 0.0;
        for (int r = 0; r < 3; ++r) {
            grad[c] += jg[r][c] * fgv[r] + jm[r][c] * fmv[r];
        }
    }
}

GdFilterState gd_step(const GdFilterState& state, const Vec3& w_gyro, const Vec3& f_accel,
                      const Vec3& m_mag, double dT, double mag_inclination) {
    GdFilterState next = state;

    const Quaternion w{0.0, w_gyro.x, w_gyro.y, w_gyro.z};
    Quaternion qdot = quat_multiply(state.q, w);
    qdot = {0.5 * qdot.q0, 0.5 * qdot.q1, 0.5 * qdot.q2, 0.5 * qdot.q3};

    if (state.beta > 0.0) {
        const double fa = norm(f_accel);
        const double fm = norm(m_mag);
        if (fa > 0.0 && fm > 0.0) {
            const Vec3 s_accel = (-1.0 / fa) * f_accel;  // measured gravity direction
            const Vec3 s_mag = m_mag / fm;
            next.heading_unobservable = norm(cross(s_accel, s_mag)) < 1e-6;

            const Vec3 d_grav{0.0, 0.0, 1.0};
            const Vec3 d_mag{std::cos(mag_inclination), 0.0, std::sin(mag_inclination)};

            double grad[4];
            gd_gradient(state.q, d_grav, s_accel, d_mag, s_mag, grad);
            const double gn = std::sqrt(grad[0] * grad[0] + grad[1] * grad[1] +
                                        grad[2] * grad[2] + grad[3] * grad[3]);
            if (gn > 0.0) {
                const double scale = state.beta / gn;
                qdot.q0 -= scale * grad[0];
                qdot.q1 -= scale * grad[1];
                qdot.q2 -= scale * grad[2];
                qdot.q3 -= scale * grad[3];
            }
        }
    }

    next.q = quat_normalize(Quaternion{state.q.q0 + qdot.q0 * dT, state.q.q1 + qdot.q1 * dT,
                                       state.q.q2 + qdot.q2 * dT, state.q.q3 + qdot.q3 * dT});
    return next;
}

}  // namespace nav
