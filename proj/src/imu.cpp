#include "nav/imu.hpp"

namespace nav {

Vec3 debias_gyro(const RawImuSample& sample, const GyroBias& bias) {
    return (sample.w - bias.b) * sample.dT;
}

Vec3 debias_accel(const RawImuSample& sample, double accel_z_bias) {
    return Vec3{sample.f.x, sample.f.y, sample.f.z - accel_z_bias} * sample.dT;
}

ConingState coning_step(const ConingState& state, const Vec3& dalpha) {
    ConingState next;
    const Vec3 dbeta = 0.5 * cross(state.alpha + (1.0 / 6.0) * state.prev_dalpha, dalpha);
    next.alpha = state.alpha + dalpha;
    next.beta = state.beta + dbeta;
    next.prev_dalpha = dalpha;
    return next;
}

Vec3 coning_finalize(ConingState& state) {
    const Vec3 phi_m = state.alpha + state.beta;
    state = ConingState{};
    return phi_m;
}

ScullingState sculling_step(const ScullingState& state, const Vec3& dalpha, const Vec3& dv,
                            const ConingState& coning) {
    ScullingState next;
    const Vec3 dv_scul =
        0.5 * (cross(coning.alpha + (1.0 / 6.0) * state.prev_dalpha, dv) +
               cross(state.v + (1.0 / 6.0) * state.prev_dv, dalpha));
    next.v = state.v + dv;
    next.dv_scul = state.dv_scul + dv_scul;
    next.prev_dalpha = dalpha;
    next.prev_dv = dv;
    return next;
}

Vec3 sculling_finalize(ScullingState& state, const Vec3& alpha_m, bool rotation_compensation) {
    Vec3 dv_m = state.v + state.dv_scul;
    if (rotation_compensation) {
        dv_m += 0.5 * cross(alpha_m, state.v);
    }
    state = ScullingState{};
    return dv_m;
}

bool IncrementAccumulator::push(const Vec3& dalpha, const Vec3& dv, bool rotation_compensation) {
    sculling_ = sculling_step(sculling_, dalpha, dv, coning_);
    coning_ = coning_step(coning_, dalpha);
    ++count_;
    if (count_ < l_per_m_) return false;
    return flush(rotation_compensation);
}

bool IncrementAccumulator::flush(bool rotation_compensation) {
    if (count_ == 0) return false;
    const Vec3 alpha_m = coning_.alpha;
    phi_m_ = coning_finalize(coning_);
    dv_m_ = sculling_finalize(sculling_, alpha_m, rotation_compensation);
    count_ = 0;
    return true;
}

}  // namespace nav
