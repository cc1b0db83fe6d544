#include "nav/eskf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nav/errors.hpp"

namespace nav {

namespace {
constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}
}  // namespace

void Cov13::symmetrize() {
    for (int i = 0; i < kStateCount; ++i) {
        for (int j = i + 1; j < kStateCount; ++j) {
            const double v = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
}

Cov13 Cov13::diagonal(const std::array<double, kStateCount>& d) {
    Cov13 p;
    for (int i = 0; i < kStateCount; ++i) p.m[i][i] = d[i];
    return p;
}

SparseTransition build_transition(const Dcm& c, double a_n, double a_e, const EarthModel& earth,
                                  double lat, double dT) {
    if (std::fabs(lat) >= kPi / 2.0 - 1e-6) {
        throw DivergenceError("build_transition: latitude at polar singularity");
    }
    const double g = earth.gravity;
    const double r = earth.radius;
    return SparseTransition{{{
        // Tilt errors driven by the gyro biases through the attitude matrix.
        {kIdxTiltN, kIdxGyroBiasX, c(0, 0) * dT},
        {kIdxTiltN, kIdxGyroBiasY, c(0, 1) * dT},
        {kIdxTiltN, kIdxGyroBiasZ, c(0, 2) * dT},
        {kIdxTiltE, kIdxGyroBiasX, c(1, 0) * dT},
        {kIdxTiltE, kIdxGyroBiasY, c(1, 1) * dT},
        {kIdxTiltE, kIdxGyroBiasZ, c(1, 2) * dT},
        {kIdxTiltD, kIdxGyroBiasX, c(2, 0) * dT},
        {kIdxTiltD, kIdxGyroBiasY, c(2, 1) * dT},
        {kIdxTiltD, kIdxGyroBiasZ, c(2, 2) * dT},
        // Velocity errors from tilt (gravity mis-resolution) and maneuvers.
        {kIdxVelN, kIdxTiltE, g * dT},
        {kIdxVelN, kIdxTiltD, a_e * dT},
        {kIdxVelE, kIdxTiltN, -g * dT},
        {kIdxVelE, kIdxTiltD, -a_n * dT},
        {kIdxVelD, kIdxAccelBiasZ, c(2, 2) * dT},
        {kIdxVelD, kIdxTiltN, -a_e * dT},
        {kIdxVelD, kIdxTiltE, -a_n * dT},
        // Position errors from velocity errors.
        {kIdxLat, kIdxVelN, dT / r},
        {kIdxLon, kIdxVelE, dT / (r * std::cos(lat))},
        {kIdxAlt, kIdxVelD, -dT},
    }}};
}

Cov13 propagate_covariance(const Cov13& p, const SparseTransition& t, const ProcessNoise& q,
                           double dT) {
    // Left product: ko = (I + A dT) P. Each nonzero entry contributes to a
    // single row, reading only from the untouched source matrix.
    Cov13 ko = p;
    for (const auto& e : t.entries) {
        for (int k = 0; k < kStateCount; ++k) {
            ko.m[e.row][k] += e.value * p.m[e.col][k];
        }
    }

    // Right product: out = ko (I + A dT)^T, column-wise from ko.
    Cov13 out = ko;
    for (const auto& e : t.entries) {
        for (int k = 0; k < kStateCount; ++k) {
            out.m[k][e.row] += e.value * ko.m[k][e.col];
        }
    }

    for (int i = 0; i < kStateCount; ++i) {
        out.m[i][i] += q.q[i] * dT;
    }
    return out;
}

void scalar_update(Cov13& p, ErrorState13& x, const ScalarMeasurement& m) {
    const int i = m.index;
    const double s = p.m[i][i] + m.variance;
    if (s <= 0.0) {
        throw DivergenceError("scalar_update: innovation variance collapsed");
    }
    const double inv_s = 1.0 / s;

    double gain[kStateCount];
    double row_i[kStateCount];
    for (int j = 0; j < kStateCount; ++j) {
        gain[j] = p.m[j][i] * inv_s;
        row_i[j] = p.m[i][j];
    }

    const double innovation = m.z - x[i];
    for (int j = 0; j < kStateCount; ++j) {
        x[j] += gain[j] * innovation;
    }

    for (int j = 0; j < kStateCount; ++j) {
        for (int k = 0; k < kStateCount; ++k) {
            p.m[j][k] -= gain[j] * row_i[k];
        }
    }
    p.symmetrize();
}

void sequential_update(Cov13& p, ErrorState13& x, std::vector<ScalarMeasurement> measurements) {
    std::sort(measurements.begin(), measurements.end(),
              [](const ScalarMeasurement& a, const ScalarMeasurement& b) { return a.index < b.index; });
    for (size_t k = 1; k < measurements.size(); ++k) {
        if (measurements[k].index == measurements[k - 1].index) {
            throw ConfigError("sequential_update: duplicate measurement index");
        }
    }
    for (const auto& m : measurements) {
        scalar_update(p, x, m);
    }
}

NavState apply_corrections(const NavState& nav, ErrorState13& x, GyroBias& gyro_bias,
                           double& accel_z_bias) {
    gyro_bias.b.x += x[kIdxGyroBiasX];
    gyro_bias.b.y += x[kIdxGyroBiasY];
    gyro_bias.b.z += x[kIdxGyroBiasZ];
    // Unlike the gyro states, a residual accel bias enters the velocity
    // derivative with a positive sign, so with the +c33*dT transition entry
    // the stable feedback is subtraction.
    accel_z_bias -= x[kIdxAccelBiasZ];

    NavState next = nav;

    const Vec3 psi{-x[kIdxTiltN], -x[kIdxTiltE], -x[kIdxTiltD]};
    const Dcm c = quat_to_dcm(nav.q);
    // Tilt feedback mapped nav -> body through the transposed DCM, then fed
    // through the same quaternion update as the mechanization.
    const Vec3 dphi{psi.x * c(0, 0) + psi.y * c(1, 0) + psi.z * c(2, 0),
                    psi.x * c(0, 1) + psi.y * c(1, 1) + psi.z * c(2, 1),
                    psi.x * c(0, 2) + psi.y * c(1, 2) + psi.z * c(2, 2)};
    next = attitude_update(next, dphi);

    next.v.x += x[kIdxVelN];
    next.v.y += x[kIdxVelE];
    next.v.z += x[kIdxVelD];
    next.lat += x[kIdxLat];
    next.lon += x[kIdxLon];
    next.alt += x[kIdxAlt];

    x.fill(0.0);
    return next;
}

std::vector<ScalarMeasurement> build_gnss_measurements(const GnssFix& fix, const NavState& nav,
                                                       const MeasurementNoise& r,
                                                       const EarthModel& earth) {
    const double cl = std::cos(nav.lat);
    const double lat_var = r.pos_var_n_m / (earth.radius * earth.radius);
    const double lon_var = r.pos_var_e_m / (earth.radius * cl * earth.radius * cl);
    return {
        {kIdxVelN, fix.v.x - nav.v.x, r.vel_var_n},
        {kIdxVelE, fix.v.y - nav.v.y, r.vel_var_e},
        {kIdxVelD, fix.v.z - nav.v.z, r.vel_var_d},
        {kIdxLat, fix.lat - nav.lat, lat_var},
        {kIdxLon, wrap_pi(fix.lon - nav.lon), lon_var},
        {kIdxAlt, fix.alt - nav.alt, r.pos_var_h},
    };
}

EskfTuning default_tuning() {
    EskfTuning t;
    const double bias0 = 0.005;             // rad/s, MEMS-grade residual bias
    const double tilt0 = 5.0 * kPi / 180.0; // rad
    t.p0 = {bias0 * bias0, bias0 * bias0, bias0 * bias0,
            0.1 * 0.1,
            tilt0 * tilt0, tilt0 * tilt0, tilt0 * tilt0,
            1.0, 1.0, 1.0,
            2.5e-13, 2.5e-13, 10.0};

    // Bias states keep a small leak so the filter stays adaptive; velocity
    // noise absorbs the unmodeled accelerometer terms.
    const double bias_leak = 1e-10;
    t.q.q = {bias_leak, bias_leak, bias_leak,
             1e-8,
             1e-10, 1e-10, 1e-10,
             1e-4, 1e-4, 1e-4,
             0.0, 0.0, 0.0};
    return t;
}

std::vector<ScalarMeasurement> kf_cycle(EskfState& state, const Vec3& phi_m, const Vec3& dv_m,
                                        double dT_m, const EarthModel& earth,
                                        const std::optional<GnssFix>& fix, const EskfTuning& tuning,
                                        const MechOptions& opt) {
    state.nav = mech_step(state.nav, phi_m, dv_m, dT_m, earth, opt);

    const Dcm c = quat_to_dcm(state.nav.q);
    const Vec3 a_ned = (c * dv_m) / dT_m;
    const SparseTransition t =
        build_transition(c, a_ned.x, a_ned.y, earth, state.nav.lat, dT_m);
    state.p = propagate_covariance(state.p, t, tuning.q, dT_m);

    std::vector<ScalarMeasurement> innovations;
    if (fix) {
        innovations = build_gnss_measurements(*fix, state.nav, tuning.r, earth);
        sequential_update(state.p, state.x, innovations);
        state.nav = apply_corrections(state.nav, state.x, state.gyro_bias, state.accel_z_bias);
    }
    return innovations;
}

}  // namespace nav
