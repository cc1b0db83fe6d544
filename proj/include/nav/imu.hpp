#pragma once

#include "nav/vec3.hpp"

namespace nav {

// One high-rate (l-cycle) sensor sample: angular rate, specific force, period.
struct RawImuSample {
    Vec3 w;      // rad/s
    Vec3 f;      // m/s^2
    double dT;   // s
};

struct GyroBias {
    Vec3 b;  // rad/s
};

// High-rate accumulators for one m-interval of attitude increments. alpha is
// the running integral of the de-biased rate, beta the coning correction.
struct ConingState {
    Vec3 alpha;
    Vec3 beta;
    Vec3 prev_dalpha;
};

// High-rate accumulators for one m-interval of velocity increments.
struct ScullingState {
    Vec3 v;
    Vec3 dv_scul;
    Vec3 prev_dalpha;
    Vec3 prev_dv;
};

// De-biased angular increment for one l-cycle: (w - b) * dT.
Vec3 debias_gyro(const RawImuSample& sample, const GyroBias& bias);

// Velocity increment with the z-axis accelerometer bias removed.
Vec3 debias_accel(const RawImuSample& sample, double accel_z_bias);

// Advances alpha and beta by one l-cycle.
ConingState coning_step(const ConingState& state, const Vec3& dalpha);

// Closes the m-interval: returns alpha_m + beta_m and resets the state.
Vec3 coning_finalize(ConingState& state);

// Advances the velocity and sculling accumulators by one l-cycle. `coning`
// must be the lockstep coning state *before* its own step for this cycle, so
// that it still carries alpha_{l-1}.
ScullingState sculling_step(const ScullingState& state, const Vec3& dalpha, const Vec3& dv,
                            const ConingState& coning);

// Closes the m-interval: dv_m = v_m + 0.5*(alpha_m x v_m) + dv_scul_m, with
// the rotation-compensation cross term toggleable, and resets the state.
Vec3 sculling_finalize(ScullingState& state, const Vec3& alpha_m,
                       bool rotation_compensation = true);

// Couples the two accumulators with the l-per-m cycle count so callers only
// see finalized m-rate increments.
class IncrementAccumulator {
public:
    explicit IncrementAccumulator(int l_per_m) : l_per_m_(l_per_m) {}

    // Feeds one l-cycle of de-biased increments. Returns true when an
    // m-interval just completed; phi_m/dv_m are then valid until the next push.
    bool push(const Vec3& dalpha, const Vec3& dv, bool rotation_compensation = true);

    // Force-closes a partial interval at end of stream. Returns false if the
    // interval is empty.
    bool flush(bool rotation_compensation = true);

    const Vec3& phi_m() const { return phi_m_; }
    const Vec3& dv_m() const { return dv_m_; }
    int cycles_in_interval() const { return count_; }
    int l_per_m() const { return l_per_m_; }

private:
    int l_per_m_;
    int count_ = 0;
    ConingState coning_{};
    ScullingState sculling_{};
    Vec3 phi_m_{};
    Vec3 dv_m_{};
};

}  // namespace nav
