#pragma once

#include <array>
#include <optional>
#include <vector>

#include "nav/geom.hpp"
#include "nav/imu.hpp"
#include "nav/mech.hpp"
#include "nav/vec3.hpp"

namespace nav {

inline constexpr int kStateCount = 13;

// State-vector layout. Gyro biases, accel-z bias, tilt errors, velocity
// errors, position errors.
enum StateIndex : int {
    kIdxGyroBiasX = 0,
    kIdxGyroBiasY = 1,
    kIdxGyroBiasZ = 2,
    kIdxAccelBiasZ = 3,
    kIdxTiltN = 4,
    kIdxTiltE = 5,
    kIdxTiltD = 6,
    kIdxVelN = 7,
    kIdxVelE = 8,
    kIdxVelD = 9,
    kIdxLat = 10,
    kIdxLon = 11,
    kIdxAlt = 12,
};

using ErrorState13 = std::array<double, kStateCount>;

struct Cov13 {
    double m[kStateCount][kStateCount] = {};

    double operator()(int r, int c) const { return m[r][c]; }
    double& operator()(int r, int c) { return m[r][c]; }

    void symmetrize();
    static Cov13 diagonal(const std::array<double, kStateCount>& d);
};

// The nonzero entries of A*dT (transition minus identity). Rows 4..12 only;
// everything else in the transition is identity.
struct SparseTransition {
    struct Entry {
        int row;
        int col;
        double value;
    };
    std::array<Entry, 19> entries;
};

// One directly-observed state element: index in 7..12, raw innovation z
// (GNSS value minus navigation estimate) and its variance.
struct ScalarMeasurement {
    int index;
    double z;
    double variance;
};

// Diagonal process-noise densities, units^2 per second per state.
struct ProcessNoise {
    std::array<double, kStateCount> q = {};
};

SparseTransition build_transition(const Dcm& c, double a_n, double a_e, const EarthModel& earth,
                                  double lat, double dT);

// P <- (I + A dT) P (I + A dT)^T + Q dT, touching only the nonzero transition
// entries: one pass for the left product, one for the right, then the
// diagonal noise add.
Cov13 propagate_covariance(const Cov13& p, const SparseTransition& t, const ProcessNoise& q,
                           double dT);

// Single-element update with the gain column P[:,i] / (P[i][i] + R); no
// matrix inversion anywhere. Effective innovation is z minus the running
// error-state estimate of the observed element. Throws DivergenceError when
// the innovation variance collapses.
void scalar_update(Cov13& p, ErrorState13& x, const ScalarMeasurement& m);

// Folds scalar_update over the set in ascending index order. Indices must be
// distinct (diagonal joint R).
void sequential_update(Cov13& p, ErrorState13& x, std::vector<ScalarMeasurement> measurements);

// Closed-loop feedback: biases absorb x[0..3], attitude is rotated by the
// estimated tilt mapped into the body frame, velocity and position absorb
// x[7..12], and the error state is zeroed.
NavState apply_corrections(const NavState& nav, ErrorState13& x, GyroBias& gyro_bias,
                           double& accel_z_bias);

struct GnssFix {
    double t = 0.0;
    double lat = 0.0;
    double lon = 0.0;
    double alt = 0.0;
    Vec3 v{};
};

// Measurement variances for the six-element GNSS set.
struct MeasurementNoise {
    double vel_var_n = 0.01;   // (m/s)^2
    double vel_var_e = 0.01;
    double vel_var_d = 0.01;
    double pos_var_n_m = 1.0;  // m^2, converted to rad^2 at use
    double pos_var_e_m = 1.0;
    double pos_var_h = 1.0;    // m^2
};

std::vector<ScalarMeasurement> build_gnss_measurements(const GnssFix& fix, const NavState& nav,
                                                       const MeasurementNoise& r,
                                                       const EarthModel& earth);

struct EskfState {
    NavState nav{};
    Cov13 p{};
    GyroBias gyro_bias{};
    double accel_z_bias = 0.0;
    ErrorState13 x = {};
};

struct EskfTuning {
    std::array<double, kStateCount> p0 = {};  // initial covariance diagonal
    ProcessNoise q{};
    MeasurementNoise r{};
};

EskfTuning default_tuning();

// One m-cycle: mechanization, transition build, covariance propagation, and,
// when a fix is present, the six scalar updates followed by correction
// feedback. Updates always complete before the next propagation.
// Returns the innovations consumed this cycle (empty without a fix).
std::vector<ScalarMeasurement> kf_cycle(EskfState& state, const Vec3& phi_m, const Vec3& dv_m,
                                        double dT_m, const EarthModel& earth,
                                        const std::optional<GnssFix>& fix, const EskfTuning& tuning,
                                        const MechOptions& opt = {});

}  // namespace nav
