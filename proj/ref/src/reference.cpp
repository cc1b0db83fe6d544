#include "navref/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace navref {

using nav::Cov13;
using nav::Dcm;
using nav::ErrorState13;
using nav::kStateCount;
using nav::Quaternion;
using nav::Vec3;

Cov13 dense_propagate(const Cov13& p, const nav::SparseTransition& t, const nav::ProcessNoise& q,
                      double dT) {
    double phi[kStateCount][kStateCount] = {};
    for (int i = 0; i < kStateCount; ++i) phi[i][i] = 1.0;
    for (const auto& e : t.entries) phi[e.row][e.col] += e.value;

    double tmp[kStateCount][kStateCount] = {};
    for (int i = 0; i < kStateCount; ++i)
        for (int k = 0; k < kStateCount; ++k)
            for (int j = 0; j < kStateCount; ++j)
                tmp[i][j] += phi[i][k] * p.m[k][j];

    Cov13 out;
    for (int i = 0; i < kStateCount; ++i)
        for (int k = 0; k < kStateCount; ++k)
            for (int j = 0; j < kStateCount; ++j)
                out.m[i][j] += tmp[i][k] * phi[j][k];

    for (int i = 0; i < kStateCount; ++i) out.m[i][i] += q.q[i] * dT;
    return out;
}

void batch_update(Cov13& p, ErrorState13& x,
                  const std::vector<nav::ScalarMeasurement>& measurements) {
    const int n = static_cast<int>(measurements.size());
    if (n == 0) return;

    // S = H P H^T + R, with H selecting the measured indices.
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            s[a][b] = p.m[measurements[a].index][measurements[b].index];
        }
        s[a][a] += measurements[a].variance;
    }

    // Invert S by Gauss-Jordan with partial pivoting.
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::fabs(s[r][col]) > std::fabs(s[pivot][col])) pivot = r;
        }
        if (s[pivot][col] == 0.0) throw std::runtime_error("batch_update: singular S");
        std::swap(s[col], s[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = s[col][col];
        for (int c = 0; c < n; ++c) {
            s[col][c] /= d;
            inv[col][c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = s[r][col];
            for (int c = 0; c < n; ++c) {
                s[r][c] -= f * s[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }

    // K = P H^T S^-1  (13 x n)
    std::vector<std::vector<double>> k(kStateCount, std::vector<double>(n, 0.0));
    for (int r = 0; r < kStateCount; ++r)
        for (int c = 0; c < n; ++c)
            for (int a = 0; a < n; ++a)
                k[r][c] += p.m[r][measurements[a].index] * inv[a][c];

    std::vector<double> innovation(n);
    for (int c = 0; c < n; ++c) {
        innovation[c] = measurements[c].z - x[measurements[c].index];
    }
    for (int r = 0; r < kStateCount; ++r) {
        double dx = 0.0;
        for (int c = 0; c < n; ++c) {
            dx += k[r][c] * innovation[c];
        }
        x[r] += dx;
    }

    // P = (I - K H) P
    Cov13 out = p;
    for (int r = 0; r < kStateCount; ++r)
        for (int j = 0; j < kStateCount; ++j)
            for (int c = 0; c < n; ++c)
                out.m[r][j] -= k[r][c] * p.m[measurements[c].index][j];
    p = out;
}

Dcm rodrigues(const Vec3& phi) {
    const double angle = nav::norm(phi);
    Dcm r;
    if (angle == 0.0) return r;
    const Vec3 n = phi / angle;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double axis[3] = {n.x, n.y, n.z};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r.m[i][j] = c * (i == j ? 1.0 : 0.0) + (1.0 - c) * axis[i] * axis[j];
        }
    }
    r.m[0][1] -= s * n.z;
    r.m[0][2] += s * n.y;
    r.m[1][0] += s * n.z;
    r.m[1][2] -= s * n.x;
    r.m[2][0] -= s * n.y;
    r.m[2][1] += s * n.x;
    return r;
}

Quaternion integrate_attitude(const std::function<Vec3(double)>& rate, double t0, double t1,
                              int steps) {
    Quaternion q{1, 0, 0, 0};
    const double h = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i) {
        const double mid = t0 + (i + 0.5) * h;
        const Vec3 w = rate(mid);
        q = nav::quat_multiply(q, nav::rotvec_to_quat(nav::RotationVector::from(w * h)));
        const double n = std::sqrt(nav::quat_norm_sq(q));
        q = {q.q0 / n, q.q1 / n, q.q2 / n, q.q3 / n};
    }
    return q;
}

Vec3 quat_to_rotvec(const Quaternion& q) {
    Quaternion u = q;
    if (u.q0 < 0.0) u = {-u.q0, -u.q1, -u.q2, -u.q3};
    const Vec3 v{u.q1, u.q2, u.q3};
    const double vn = nav::norm(v);
    if (vn == 0.0) return {};
    const double angle = 2.0 * std::atan2(vn, u.q0);
    return (angle / vn) * v;
}

Vec3 integrate_transformed_velocity(const std::function<Vec3(double)>& rate,
                                    const std::function<Vec3(double)>& force, double t0, double t1,
                                    int steps) {
    Quaternion q{1, 0, 0, 0};  // frame(t) relative to frame(t0)
    Vec3 dv{};
    const double h = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i) {
        const double mid = t0 + (i + 0.5) * h;
        const Vec3 w = rate(mid);
        const Quaternion q_mid =
            nav::quat_multiply(q, nav::rotvec_to_quat(nav::RotationVector::from(w * (0.5 * h))));
        dv += nav::quat_rotate(q_mid, force(mid)) * h;
        q = nav::quat_multiply(q, nav::rotvec_to_quat(nav::RotationVector::from(w * h)));
        const double n = std::sqrt(nav::quat_norm_sq(q));
        q = {q.q0 / n, q.q1 / n, q.q2 / n, q.q3 / n};
    }
    return dv;
}

}  // namespace navref
