#include "nav/sim.hpp"

#include <cmath>
#include <random>

#include "nav/errors.hpp"

namespace nav {

namespace {

constexpr double kFineStep = 1e-5;  // s, internal integration substep

Quaternion exact_unit(const Quaternion& q) {
    const double n = std::sqrt(quat_norm_sq(q));
    return {q.q0 / n, q.q1 / n, q.q2 / n, q.q3 / n};
}

}  // namespace

TrajectoryModel::TrajectoryModel(const TrajectorySpec& spec, const EarthModel& earth)
    : spec_(spec), earth_(earth) {
    if (spec.duration <= 0.0) throw ConfigError("trajectory: duration must be positive");
    if (spec.l_rate <= 0.0) throw ConfigError("trajectory: l-rate must be positive");
    if (spec.kind == TrajectoryKind::Coning && spec.cone_freq <= 0.0)
        throw ConfigError("trajectory: coning frequency must be positive");
    if (spec.kind == TrajectoryKind::Sculling && spec.scul_freq <= 0.0)
        throw ConfigError("trajectory: sculling frequency must be positive");
    if (spec.kind == TrajectoryKind::CircularPath && spec.circle_radius <= 0.0)
        throw ConfigError("trajectory: circle radius must be positive");
    fine_q_ = spec.initial.q;
    fine_v_ = spec.initial.v;
    fine_lat_ = spec.initial.lat;
    fine_lon_ = spec.initial.lon;
    fine_alt_ = spec.initial.alt;
}

Vec3 TrajectoryModel::rate_body(double t) const {
    switch (spec_.kind) {
        case TrajectoryKind::Stationary:
            return {};
        case TrajectoryKind::ConstantRateRotation: {
            const double n = norm(spec_.rotation_axis);
            if (n == 0.0) return {};
            return (spec_.rotation_rate / n) * spec_.rotation_axis;
        }
        case TrajectoryKind::Coning: {
            const double a = spec_.cone_angle * spec_.cone_freq;
            return {a * std::cos(spec_.cone_freq * t), -a * std::sin(spec_.cone_freq * t), 0.0};
        }
        case TrajectoryKind::Sculling: {
            const double a = spec_.scul_angle * spec_.scul_freq;
            return {a * std::cos(spec_.scul_freq * t), 0.0, 0.0};
        }
        case TrajectoryKind::CircularPath:
            return {0.0, 0.0, spec_.circle_speed / spec_.circle_radius};
    }
    return {};
}

Quaternion TrajectoryModel::attitude(double t) const {
    switch (spec_.kind) {
        case TrajectoryKind::Stationary:
            return spec_.initial.q;
        case TrajectoryKind::ConstantRateRotation: {
            const double n = norm(spec_.rotation_axis);
            if (n == 0.0) return spec_.initial.q;
            const Vec3 phi = (spec_.rotation_rate * t / n) * spec_.rotation_axis;
            return quat_multiply(spec_.initial.q, rotvec_to_quat(RotationVector::from(phi)));
        }
        case TrajectoryKind::Coning:
            advance_fine(t);
            return fine_q_;
        case TrajectoryKind::Sculling: {
            const Vec3 phi{spec_.scul_angle * std::sin(spec_.scul_freq * t), 0.0, 0.0};
            return quat_multiply(spec_.initial.q, rotvec_to_quat(RotationVector::from(phi)));
        }
        case TrajectoryKind::CircularPath: {
            const Vec3 phi{0.0, 0.0, spec_.circle_speed / spec_.circle_radius * t};
            return quat_multiply(spec_.initial.q, rotvec_to_quat(RotationVector::from(phi)));
        }
    }
    return spec_.initial.q;
}

Vec3 TrajectoryModel::specific_force_body(double t) const {
    const Quaternion q = attitude(t);
    const Dcm c_nb = quat_to_dcm(q).transpose();
    const Vec3 gravity_reaction = c_nb * Vec3{0.0, 0.0, -earth_.gravity};
    switch (spec_.kind) {
        case TrajectoryKind::Stationary:
        case TrajectoryKind::ConstantRateRotation:
        case TrajectoryKind::Coning:
            return gravity_reaction;
        case TrajectoryKind::Sculling:
            return gravity_reaction +
                   Vec3{0.0, spec_.scul_accel * std::sin(spec_.scul_freq * t), 0.0};
        case TrajectoryKind::CircularPath: {
            // Level coordinated turn: constant lateral centripetal force.
            const double a = spec_.circle_speed * spec_.circle_speed / spec_.circle_radius;
            return gravity_reaction + Vec3{0.0, a, 0.0};
        }
    }
    return gravity_reaction;
}

// Forward-only fine-step integration for the channels without elementary
// closed forms: coning attitude, sculling velocity and position.
void TrajectoryModel::advance_fine(double t) const {
    if (t < fine_t_ - 1e-12) {
        fine_t_ = 0.0;
        fine_q_ = spec_.initial.q;
        fine_v_ = spec_.initial.v;
        fine_lat_ = spec_.initial.lat;
        fine_lon_ = spec_.initial.lon;
        fine_alt_ = spec_.initial.alt;
    }
    while (fine_t_ < t - 1e-12) {
        const double h = std::min(kFineStep, t - fine_t_);
        const double mid = fine_t_ + 0.5 * h;
        if (spec_.kind == TrajectoryKind::Coning) {
            const Vec3 w = rate_body(mid);
            fine_q_ = exact_unit(
                quat_multiply(fine_q_, rotvec_to_quat(RotationVector::from(w * h))));
        } else if (spec_.kind == TrajectoryKind::Sculling) {
            const Vec3 phi{spec_.scul_angle * std::sin(spec_.scul_freq * mid), 0.0, 0.0};
            const Dcm c = quat_to_dcm(
                quat_multiply(spec_.initial.q, rotvec_to_quat(RotationVector::from(phi))));
            const Vec3 a_nav =
                c * Vec3{0.0, spec_.scul_accel * std::sin(spec_.scul_freq * mid), 0.0};
            const Vec3 v_mid = fine_v_ + 0.5 * h * a_nav;
            fine_lat_ += v_mid.x / earth_.radius * h;
            fine_lon_ += v_mid.y / (earth_.radius * std::cos(fine_lat_)) * h;
            fine_alt_ -= v_mid.z * h;
            fine_v_ += a_nav * h;
        }
        fine_t_ += h;
    }
}

NavState TrajectoryModel::truth(double t) const {
    NavState out = spec_.initial;
    out.q = attitude(t);
    switch (spec_.kind) {
        case TrajectoryKind::Stationary:
        case TrajectoryKind::ConstantRateRotation:
        case TrajectoryKind::Coning:
            return out;
        case TrajectoryKind::Sculling:
            advance_fine(t);
            out.v = fine_v_;
            out.lat = fine_lat_;
            out.lon = fine_lon_;
            out.alt = fine_alt_;
            return out;
        case TrajectoryKind::CircularPath: {
            const double wc = spec_.circle_speed / spec_.circle_radius;
            const double psi0 =
                dcm_to_euler(quat_to_dcm(spec_.initial.q), AtanImpl::Std).heading;
            const double psi = psi0 + wc * t;
            out.v = {spec_.circle_speed * std::cos(psi), spec_.circle_speed * std::sin(psi), 0.0};
            out.lat = spec_.initial.lat +
                      spec_.circle_speed / (earth_.radius * wc) * (std::sin(psi) - std::sin(psi0));
            out.lon = spec_.initial.lon +
                      spec_.circle_speed / (earth_.radius * std::cos(spec_.initial.lat) * wc) *
                          (std::cos(psi0) - std::cos(psi));
            out.alt = spec_.initial.alt;
            return out;
        }
    }
    return out;
}

std::vector<TruthSample> gen_truth(const TrajectorySpec& spec, const EarthModel& earth) {
    TrajectoryModel model(spec, earth);
    const double dT = 1.0 / spec.l_rate;
    const auto count = static_cast<std::size_t>(std::llround(spec.duration * spec.l_rate));
    std::vector<TruthSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i + 1) * dT;
        const NavState nav = model.truth(t);
        const Vec3 w = model.rate_body(t);
        const Vec3 f = model.specific_force_body(t);
        out.push_back({t, nav, w, f});
    }
    return out;
}

std::vector<ImuSample> corrupt_imu(const std::vector<TruthSample>& truth,
                                   const SensorErrorSpec& spec) {
    std::vector<ImuSample> out;
    out.reserve(truth.size());
    if (truth.empty()) return out;

    const double dT = truth.size() > 1 ? truth[1].t - truth[0].t : truth[0].t;
    const double sqrt_dT = std::sqrt(dT);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const Vec3 gyro_bias{units::dph_to_rps(spec.gyro_bias_dph.x),
                         units::dph_to_rps(spec.gyro_bias_dph.y),
                         units::dph_to_rps(spec.gyro_bias_dph.z)};
    const Vec3 gyro_white{units::dpsh_to_rpss(spec.gyro_arw_dpsh.x) / sqrt_dT,
                          units::dpsh_to_rpss(spec.gyro_arw_dpsh.y) / sqrt_dT,
                          units::dpsh_to_rpss(spec.gyro_arw_dpsh.z) / sqrt_dT};
    const Vec3 gyro_gm_sigma{units::dph_to_rps(spec.gyro_bi_dph.x),
                             units::dph_to_rps(spec.gyro_bi_dph.y),
                             units::dph_to_rps(spec.gyro_bi_dph.z)};
    const Vec3 gyro_rrw{units::dph15_to_rps15(spec.gyro_rrw_dph15.x) * sqrt_dT,
                        units::dph15_to_rps15(spec.gyro_rrw_dph15.y) * sqrt_dT,
                        units::dph15_to_rps15(spec.gyro_rrw_dph15.z) * sqrt_dT};

    const Vec3 accel_white{spec.accel_vrw.x / sqrt_dT, spec.accel_vrw.y / sqrt_dT,
                           spec.accel_vrw.z / sqrt_dT};
    const Vec3 accel_rw{spec.accel_rw_mps15.x * sqrt_dT, spec.accel_rw_mps15.y * sqrt_dT,
                        spec.accel_rw_mps15.z * sqrt_dT};

    const double gyro_gm_phi = std::exp(-dT / spec.gyro_bi_tau_s);
    const double gyro_gm_drive = std::sqrt(1.0 - gyro_gm_phi * gyro_gm_phi);
    const double accel_gm_phi = std::exp(-dT / spec.accel_bi_tau_s);
    const double accel_gm_drive = std::sqrt(1.0 - accel_gm_phi * accel_gm_phi);

    // Gauss-Markov states start at a steady-state draw.
    Vec3 gyro_gm{gyro_gm_sigma.x * gauss(rng), gyro_gm_sigma.y * gauss(rng),
                 gyro_gm_sigma.z * gauss(rng)};
    Vec3 accel_gm{spec.accel_bi_mps2.x * gauss(rng), spec.accel_bi_mps2.y * gauss(rng),
                  spec.accel_bi_mps2.z * gauss(rng)};
    Vec3 gyro_walk{};
    Vec3 accel_walk{};

    for (const TruthSample& s : truth) {
        gyro_gm = {gyro_gm.x * gyro_gm_phi + gyro_gm_sigma.x * gyro_gm_drive * gauss(rng),
                   gyro_gm.y * gyro_gm_phi + gyro_gm_sigma.y * gyro_gm_drive * gauss(rng),
                   gyro_gm.z * gyro_gm_phi + gyro_gm_sigma.z * gyro_gm_drive * gauss(rng)};
        accel_gm = {accel_gm.x * accel_gm_phi + spec.accel_bi_mps2.x * accel_gm_drive * gauss(rng),
                    accel_gm.y * accel_gm_phi + spec.accel_bi_mps2.y * accel_gm_drive * gauss(rng),
                    accel_gm.z * accel_gm_phi + spec.accel_bi_mps2.z * accel_gm_drive * gauss(rng)};
        gyro_walk += Vec3{gyro_rrw.x * gauss(rng), gyro_rrw.y * gauss(rng),
                          gyro_rrw.z * gauss(rng)};
        accel_walk += Vec3{accel_rw.x * gauss(rng), accel_rw.y * gauss(rng),
                           accel_rw.z * gauss(rng)};

        ImuSample m;
        m.t = s.t;
        m.w = s.w_body + gyro_bias + gyro_gm + gyro_walk +
              Vec3{gyro_white.x * gauss(rng), gyro_white.y * gauss(rng),
                   gyro_white.z * gauss(rng)};
        m.f = s.f_body + spec.accel_bias_mps2 + accel_gm + accel_walk +
              Vec3{accel_white.x * gauss(rng), accel_white.y * gauss(rng),
                   accel_white.z * gauss(rng)};
        out.push_back(m);
    }
    return out;
}

std::vector<GnssFixRow> gen_gnss(const TrajectoryModel& model, const GnssSpec& spec,
                                 std::uint64_t seed) {
    if (spec.rate_hz <= 0.0) throw ConfigError("gnss: rate must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const EarthModel& earth = model.earth();
    const double duration = model.spec().duration;
    const double period = 1.0 / spec.rate_hz;

    std::vector<GnssFixRow> out;
    for (int k = 1;; ++k) {
        const double t = k * period;
        if (t > duration + 1e-9) break;
        const double t_solution = t - spec.time_skew_s;
        if (t_solution < 0.0) continue;
        const NavState s = model.truth(t_solution);

        GnssFixRow row;
        row.t = t;
        row.lat = s.lat + gauss(rng) * spec.pos_sigma_m.x / earth.radius;
        row.lon = s.lon + gauss(rng) * spec.pos_sigma_m.y / (earth.radius * std::cos(s.lat));
        row.alt = s.alt + gauss(rng) * spec.pos_sigma_m.z;
        row.v = s.v + Vec3{gauss(rng) * spec.vel_sigma.x, gauss(rng) * spec.vel_sigma.y,
                           gauss(rng) * spec.vel_sigma.z};
        out.push_back(row);
    }
    return out;
}

}  // namespace nav
