#include "nav/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "nav/errors.hpp"

namespace nav {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Quaternion truth_quat(const std::vector<double>& row) {
    return euler_to_quat({row[7], row[8], row[9]});
}

struct ErrorStats {
    double sum_sq = 0.0;
    std::size_t n = 0;
    void add(double e) {
        sum_sq += e * e;
        ++n;
    }
    double rms() const { return n == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(n)); }
};

}  // namespace

TrajectorySpec parse_trajectory_spec(const Config& cfg) {
    cfg.require_known({"kind", "duration_s", "l_rate_hz", "axis_x", "axis_y", "axis_z",
                       "rate_dps", "cone_angle_rad", "cone_freq_rps", "scul_angle_rad",
                       "scul_accel_mps2", "scul_freq_rps", "circle_radius_m", "circle_speed_mps",
                       "init_lat_deg", "init_lon_deg", "init_alt_m", "init_roll_deg",
                       "init_pitch_deg", "init_heading_deg", "init_vn", "init_ve", "init_vd"},
                      "trajectory spec");
    TrajectorySpec s;
    const std::string kind = cfg.get_str("kind", "stationary");
    if (kind == "stationary") {
        s.kind = TrajectoryKind::Stationary;
    } else if (kind == "constant-rate") {
        s.kind = TrajectoryKind::ConstantRateRotation;
    } else if (kind == "coning") {
        s.kind = TrajectoryKind::Coning;
    } else if (kind == "sculling") {
        s.kind = TrajectoryKind::Sculling;
    } else if (kind == "circular") {
        s.kind = TrajectoryKind::CircularPath;
    } else {
        throw ConfigError("trajectory spec: unknown kind '" + kind + "'");
    }
    s.duration = cfg.get_num("duration_s", 60.0);
    s.l_rate = cfg.get_num("l_rate_hz", 1000.0);
    if (s.duration <= 0.0) throw ConfigError("trajectory spec: duration_s must be positive");
    if (s.l_rate <= 0.0) throw ConfigError("trajectory spec: l_rate_hz must be positive");
    s.rotation_axis = {cfg.get_num("axis_x", 0.0), cfg.get_num("axis_y", 0.0),
                       cfg.get_num("axis_z", 1.0)};
    s.rotation_rate = units::deg_to_rad(cfg.get_num("rate_dps", 0.0));
    s.cone_angle = cfg.get_num("cone_angle_rad", 0.01);
    s.cone_freq = cfg.get_num("cone_freq_rps", 20.0);
    s.scul_angle = cfg.get_num("scul_angle_rad", 0.01);
    s.scul_accel = cfg.get_num("scul_accel_mps2", 1.0);
    s.scul_freq = cfg.get_num("scul_freq_rps", 20.0);
    s.circle_radius = cfg.get_num("circle_radius_m", 100.0);
    s.circle_speed = cfg.get_num("circle_speed_mps", 10.0);
    s.initial.lat = units::deg_to_rad(cfg.get_num("init_lat_deg", 45.0));
    s.initial.lon = units::deg_to_rad(cfg.get_num("init_lon_deg", 7.0));
    s.initial.alt = cfg.get_num("init_alt_m", 200.0);
    s.initial.v = {cfg.get_num("init_vn", 0.0), cfg.get_num("init_ve", 0.0),
                   cfg.get_num("init_vd", 0.0)};
    s.initial.q = euler_to_quat({units::deg_to_rad(cfg.get_num("init_roll_deg", 0.0)),
                                 units::deg_to_rad(cfg.get_num("init_pitch_deg", 0.0)),
                                 units::deg_to_rad(cfg.get_num("init_heading_deg", 0.0))});
    return s;
}

SensorErrorSpec parse_error_spec(const Config& cfg) {
    cfg.require_known(
        {"gyro_bias_x_dph", "gyro_bias_y_dph", "gyro_bias_z_dph", "gyro_arw_x_dpsh",
         "gyro_arw_y_dpsh", "gyro_arw_z_dpsh", "gyro_bi_x_dph", "gyro_bi_y_dph", "gyro_bi_z_dph",
         "gyro_bi_tau_s", "gyro_rrw_x_dph15", "gyro_rrw_y_dph15", "gyro_rrw_z_dph15",
         "accel_bias_x_mps2", "accel_bias_y_mps2", "accel_bias_z_mps2", "accel_vrw_x",
         "accel_vrw_y", "accel_vrw_z", "accel_bi_x_mps2", "accel_bi_y_mps2", "accel_bi_z_mps2",
         "accel_bi_tau_s", "accel_rw_x_mps15", "accel_rw_y_mps15", "accel_rw_z_mps15", "seed"},
        "sensor error spec");
    SensorErrorSpec s;
    s.gyro_bias_dph = {cfg.get_num("gyro_bias_x_dph", 0.0), cfg.get_num("gyro_bias_y_dph", 0.0),
                       cfg.get_num("gyro_bias_z_dph", 0.0)};
    s.gyro_arw_dpsh = {cfg.get_num("gyro_arw_x_dpsh", 0.0), cfg.get_num("gyro_arw_y_dpsh", 0.0),
                       cfg.get_num("gyro_arw_z_dpsh", 0.0)};
    s.gyro_bi_dph = {cfg.get_num("gyro_bi_x_dph", 0.0), cfg.get_num("gyro_bi_y_dph", 0.0),
                     cfg.get_num("gyro_bi_z_dph", 0.0)};
    s.gyro_bi_tau_s = cfg.get_num("gyro_bi_tau_s", 100.0);
    s.gyro_rrw_dph15 = {cfg.get_num("gyro_rrw_x_dph15", 0.0), cfg.get_num("gyro_rrw_y_dph15", 0.0),
                        cfg.get_num("gyro_rrw_z_dph15", 0.0)};
    s.accel_bias_mps2 = {cfg.get_num("accel_bias_x_mps2", 0.0),
                         cfg.get_num("accel_bias_y_mps2", 0.0),
                         cfg.get_num("accel_bias_z_mps2", 0.0)};
    s.accel_vrw = {cfg.get_num("accel_vrw_x", 0.0), cfg.get_num("accel_vrw_y", 0.0),
                   cfg.get_num("accel_vrw_z", 0.0)};
    s.accel_bi_mps2 = {cfg.get_num("accel_bi_x_mps2", 0.0), cfg.get_num("accel_bi_y_mps2", 0.0),
                       cfg.get_num("accel_bi_z_mps2", 0.0)};
    s.accel_bi_tau_s = cfg.get_num("accel_bi_tau_s", 100.0);
    s.accel_rw_mps15 = {cfg.get_num("accel_rw_x_mps15", 0.0), cfg.get_num("accel_rw_y_mps15", 0.0),
                        cfg.get_num("accel_rw_z_mps15", 0.0)};
    s.seed = static_cast<std::uint64_t>(cfg.get_num("seed", 0.0));

    const auto nonneg = [](double v, const char* what) {
        if (v < 0.0) throw ConfigError(std::string("sensor error spec: ") + what + " must be >= 0");
    };
    nonneg(s.gyro_arw_dpsh.x, "gyro_arw_x_dpsh");
    nonneg(s.gyro_arw_dpsh.y, "gyro_arw_y_dpsh");
    nonneg(s.gyro_arw_dpsh.z, "gyro_arw_z_dpsh");
    nonneg(s.accel_vrw.x, "accel_vrw_x");
    nonneg(s.accel_vrw.y, "accel_vrw_y");
    nonneg(s.accel_vrw.z, "accel_vrw_z");
    if (s.gyro_bi_tau_s <= 0.0 || s.accel_bi_tau_s <= 0.0) {
        throw ConfigError("sensor error spec: correlation times must be positive");
    }
    return s;
}

GnssSpec parse_gnss_spec(const Config& cfg) {
    cfg.require_known({"rate_hz", "pos_sigma_n_m", "pos_sigma_e_m", "pos_sigma_d_m",
                       "vel_sigma_n", "vel_sigma_e", "vel_sigma_d", "time_skew_s"},
                      "gnss spec");
    GnssSpec s;
    s.rate_hz = cfg.get_num("rate_hz", 1.0);
    if (s.rate_hz <= 0.0) throw ConfigError("gnss spec: rate_hz must be positive");
    s.pos_sigma_m = {cfg.get_num("pos_sigma_n_m", 0.0), cfg.get_num("pos_sigma_e_m", 0.0),
                     cfg.get_num("pos_sigma_d_m", 0.0)};
    s.vel_sigma = {cfg.get_num("vel_sigma_n", 0.0), cfg.get_num("vel_sigma_e", 0.0),
                   cfg.get_num("vel_sigma_d", 0.0)};
    if (s.pos_sigma_m.x < 0 || s.pos_sigma_m.y < 0 || s.pos_sigma_m.z < 0 || s.vel_sigma.x < 0 ||
        s.vel_sigma.y < 0 || s.vel_sigma.z < 0) {
        throw ConfigError("gnss spec: sigmas must be >= 0");
    }
    s.time_skew_s = cfg.get_num("time_skew_s", 0.0);
    return s;
}

RunConfig parse_run_config(const Config& cfg) {
    cfg.require_known(
        {"filter", "l_per_m", "rotation_compensation", "full_coriolis", "gravity", "earth_radius",
         "atan", "gnss_lag_s", "gnss_updates", "p0_gyro_bias", "p0_accel_bias", "p0_tilt_deg",
         "p0_vel", "p0_pos_m", "p0_alt_m", "q_gyro_bias", "q_accel_bias", "q_tilt", "q_vel",
         "q_pos", "r_vel", "r_pos_m", "r_alt_m", "kp", "ki", "psi_ref_noise_deg", "beta",
         "mag_inclination_deg", "mag_noise", "ref_seed", "init_tilt_n_deg", "init_tilt_e_deg",
         "init_tilt_d_deg"},
        "run config");
    RunConfig c;
    const std::string filter = cfg.get_str("filter", "ins");
    if (filter == "ins") {
        c.filter = FilterKind::InsOnly;
    } else if (filter == "eskf") {
        c.filter = FilterKind::Eskf;
    } else if (filter == "comp") {
        c.filter = FilterKind::Complementary;
    } else if (filter == "gd") {
        c.filter = FilterKind::GradientDescent;
    } else {
        throw ConfigError("run config: unknown filter '" + filter + "'");
    }

    // Tunables are validated against the filter choice.
    const auto reject = [&](std::initializer_list<const char*> keys, const char* wanted) {
        for (const char* key : keys) {
            if (cfg.has(key)) {
                throw ConfigError(std::string("run config: key '") + key + "' requires filter=" +
                                  wanted + " (got " + filter + ")");
            }
        }
    };
    if (c.filter != FilterKind::Complementary) {
        reject({"kp", "ki", "psi_ref_noise_deg"}, "comp");
    }
    if (c.filter != FilterKind::GradientDescent) {
        reject({"beta", "mag_inclination_deg", "mag_noise"}, "gd");
    }
    if (c.filter != FilterKind::Eskf) {
        reject({"p0_gyro_bias", "p0_accel_bias", "p0_tilt_deg", "p0_vel", "p0_pos_m", "p0_alt_m",
                "q_gyro_bias", "q_accel_bias", "q_tilt", "q_vel", "q_pos", "r_vel", "r_pos_m",
                "r_alt_m", "gnss_lag_s", "gnss_updates"},
               "eskf");
    }
    c.l_per_m = static_cast<int>(cfg.get_num("l_per_m", 10));
    if (c.l_per_m < 1) throw ConfigError("run config: l_per_m must be >= 1");
    c.rotation_compensation = cfg.get_bool("rotation_compensation", true);
    c.full_coriolis = cfg.get_bool("full_coriolis", false);
    c.gravity = cfg.get_num("gravity", 9.80665);
    c.earth_radius = cfg.get_num("earth_radius", 6.37e6);
    const std::string atan_kind = cfg.get_str("atan", "poly");
    if (atan_kind == "poly") {
        c.use_std_atan = false;
    } else if (atan_kind == "std") {
        c.use_std_atan = true;
    } else {
        throw ConfigError("run config: atan must be poly or std");
    }
    c.gnss_lag_s = cfg.get_num("gnss_lag_s", 0.0);
    c.gnss_updates = cfg.get_bool("gnss_updates", true);

    EskfTuning t = default_tuning();
    const double p0_bias = cfg.get_num("p0_gyro_bias", std::sqrt(t.p0[0]));
    const double p0_abias = cfg.get_num("p0_accel_bias", std::sqrt(t.p0[3]));
    const double p0_tilt = units::deg_to_rad(cfg.get_num("p0_tilt_deg", 5.0));
    const double p0_vel = cfg.get_num("p0_vel", 1.0);
    const double p0_pos = cfg.get_num("p0_pos_m", 5.0);
    const double p0_alt = cfg.get_num("p0_alt_m", std::sqrt(t.p0[12]));
    const double r = c.earth_radius;
    t.p0 = {p0_bias * p0_bias, p0_bias * p0_bias, p0_bias * p0_bias,
            p0_abias * p0_abias,
            p0_tilt * p0_tilt, p0_tilt * p0_tilt, p0_tilt * p0_tilt,
            p0_vel * p0_vel, p0_vel * p0_vel, p0_vel * p0_vel,
            (p0_pos / r) * (p0_pos / r), (p0_pos / r) * (p0_pos / r), p0_alt * p0_alt};
    const double q_bias = cfg.get_num("q_gyro_bias", t.q.q[0]);
    const double q_abias = cfg.get_num("q_accel_bias", t.q.q[3]);
    const double q_tilt = cfg.get_num("q_tilt", t.q.q[4]);
    const double q_vel = cfg.get_num("q_vel", t.q.q[7]);
    const double q_pos = cfg.get_num("q_pos", t.q.q[10]);
    t.q.q = {q_bias, q_bias, q_bias, q_abias, q_tilt, q_tilt, q_tilt,
             q_vel, q_vel, q_vel, q_pos, q_pos, q_pos};
    c.p0_bias_set = cfg.has("p0_gyro_bias");
    c.p0_abias_set = cfg.has("p0_accel_bias");
    c.q_set = cfg.has("q_gyro_bias") || cfg.has("q_accel_bias") || cfg.has("q_tilt") ||
              cfg.has("q_vel") || cfg.has("q_pos");
    if (cfg.has("r_vel")) {
        const double rv = cfg.get_num("r_vel", 0.1);
        t.r.vel_var_n = t.r.vel_var_e = t.r.vel_var_d = rv * rv;
        c.r_from_meta = false;
    }
    if (cfg.has("r_pos_m")) {
        const double rp = cfg.get_num("r_pos_m", 1.0);
        t.r.pos_var_n_m = t.r.pos_var_e_m = rp * rp;
        c.r_from_meta = false;
    }
    if (cfg.has("r_alt_m")) {
        const double ra = cfg.get_num("r_alt_m", 1.0);
        t.r.pos_var_h = ra * ra;
        c.r_from_meta = false;
    }
    c.tuning = t;

    c.pi.kp = cfg.get_num("kp", 1.0);
    c.pi.ki = cfg.get_num("ki", 0.1);
    if (c.pi.kp <= 0.0 || c.pi.ki < 0.0) {
        throw ConfigError("run config: require kp > 0 and ki >= 0");
    }
    c.psi_ref_noise_deg = cfg.get_num("psi_ref_noise_deg", 0.0);
    c.gd_beta = cfg.get_num("beta", 0.1);
    if (c.gd_beta < 0.0) throw ConfigError("run config: beta must be >= 0");
    c.mag_inclination_deg = cfg.get_num("mag_inclination_deg", 60.0);
    c.mag_noise = cfg.get_num("mag_noise", 0.0);
    c.ref_seed = static_cast<std::uint64_t>(cfg.get_num("ref_seed", 1));
    c.init_tilt_n_deg = cfg.get_num("init_tilt_n_deg", 0.0);
    c.init_tilt_e_deg = cfg.get_num("init_tilt_e_deg", 0.0);
    c.init_tilt_d_deg = cfg.get_num("init_tilt_d_deg", 0.0);
    return c;
}

void write_dataset(const std::string& out_dir, const TrajectorySpec& traj,
                   const SensorErrorSpec& err, const GnssSpec& gnss, std::uint64_t seed,
                   const EarthModel& earth) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    SensorErrorSpec err_seeded = err;
    err_seeded.seed = seed;

    const std::vector<TruthSample> truth = gen_truth(traj, earth);
    const std::vector<ImuSample> imu = corrupt_imu(truth, err_seeded);
    TrajectoryModel model(traj, earth);
    // Trajectory kinds may pin the starting kinematics (a circular path moves
    // at t = 0); the dataset's initial state is the model's, not the spec's.
    const NavState initial = model.truth(0.0);
    const std::vector<GnssFixRow> fixes = gen_gnss(model, gnss, seed + 0x9e3779b97f4a7c15ull);

    std::vector<std::vector<double>> imu_rows;
    imu_rows.reserve(imu.size());
    for (const auto& s : imu) {
        imu_rows.push_back({s.t, s.w.x, s.w.y, s.w.z, s.f.x, s.f.y, s.f.z});
    }
    write_csv(out_dir + "/imu.csv", kImuHeader, imu_rows);

    std::vector<std::vector<double>> gnss_rows;
    gnss_rows.reserve(fixes.size());
    for (const auto& g : fixes) {
        gnss_rows.push_back({g.t, g.lat, g.lon, g.alt, g.v.x, g.v.y, g.v.z});
    }
    write_csv(out_dir + "/gnss.csv", kGnssHeader, gnss_rows);

    std::vector<std::vector<double>> truth_rows;
    truth_rows.reserve(truth.size());
    for (const auto& s : truth) {
        const EulerAngles e = dcm_to_euler(quat_to_dcm(s.nav.q), AtanImpl::Std);
        truth_rows.push_back({s.t, s.nav.lat, s.nav.lon, s.nav.alt, s.nav.v.x, s.nav.v.y,
                              s.nav.v.z, e.roll, e.pitch, e.heading});
    }
    write_csv(out_dir + "/truth.csv", kTruthHeader, truth_rows);

    Config meta;
    meta.set("l_rate_hz", fmt(traj.l_rate));
    meta.set("duration_s", fmt(traj.duration));
    meta.set("seed", std::to_string(seed));
    meta.set("err_gyro_bias_x_dph", fmt(err.gyro_bias_dph.x));
    meta.set("err_gyro_bias_y_dph", fmt(err.gyro_bias_dph.y));
    meta.set("err_gyro_bias_z_dph", fmt(err.gyro_bias_dph.z));
    meta.set("err_gyro_arw_dpsh", fmt(norm(err.gyro_arw_dpsh)));
    meta.set("err_gyro_bi_dph", fmt(norm(err.gyro_bi_dph)));
    meta.set("err_gyro_bi_tau_s", fmt(err.gyro_bi_tau_s));
    meta.set("err_accel_bias_z_mps2", fmt(err.accel_bias_mps2.z));
    meta.set("err_accel_vrw", fmt(norm(err.accel_vrw)));
    meta.set("init_lat", fmt(initial.lat));
    meta.set("init_lon", fmt(initial.lon));
    meta.set("init_alt", fmt(initial.alt));
    meta.set("init_vn", fmt(initial.v.x));
    meta.set("init_ve", fmt(initial.v.y));
    meta.set("init_vd", fmt(initial.v.z));
    const EulerAngles e0 = dcm_to_euler(quat_to_dcm(initial.q), AtanImpl::Std);
    meta.set("init_roll", fmt(e0.roll));
    meta.set("init_pitch", fmt(e0.pitch));
    meta.set("init_heading", fmt(e0.heading));
    meta.set("gravity", fmt(earth.gravity));
    meta.set("earth_radius", fmt(earth.radius));
    meta.set("gnss_rate_hz", fmt(gnss.rate_hz));
    meta.set("gnss_pos_sigma_n_m", fmt(gnss.pos_sigma_m.x));
    meta.set("gnss_pos_sigma_e_m", fmt(gnss.pos_sigma_m.y));
    meta.set("gnss_pos_sigma_d_m", fmt(gnss.pos_sigma_m.z));
    meta.set("gnss_vel_sigma_n", fmt(gnss.vel_sigma.x));
    meta.set("gnss_vel_sigma_e", fmt(gnss.vel_sigma.y));
    meta.set("gnss_vel_sigma_d", fmt(gnss.vel_sigma.z));
    meta.set("gnss_time_skew_s", fmt(gnss.time_skew_s));
    meta.write_file(out_dir + "/meta");
}

DatasetBundle load_bundle(const std::string& dir) {
    DatasetBundle b;
    b.meta = Config::from_file(dir + "/meta");
    b.l_rate = b.meta.get_num("l_rate_hz", 0.0);
    b.duration = b.meta.get_num("duration_s", 0.0);
    if (b.l_rate <= 0.0) throw ConfigError(dir + "/meta: missing or bad l_rate_hz");

    b.initial.lat = b.meta.get_num("init_lat", 0.0);
    b.initial.lon = b.meta.get_num("init_lon", 0.0);
    b.initial.alt = b.meta.get_num("init_alt", 0.0);
    b.initial.v = {b.meta.get_num("init_vn", 0.0), b.meta.get_num("init_ve", 0.0),
                   b.meta.get_num("init_vd", 0.0)};
    b.initial.q = euler_to_quat({b.meta.get_num("init_roll", 0.0),
                                 b.meta.get_num("init_pitch", 0.0),
                                 b.meta.get_num("init_heading", 0.0)});

    const auto imu_rows = read_csv(dir + "/imu.csv", kImuHeader);
    b.imu.reserve(imu_rows.size());
    double prev_t = 0.0;
    for (const auto& r : imu_rows) {
        if (!(r[0] > prev_t)) throw ConfigError(dir + "/imu.csv: timestamps not increasing");
        prev_t = r[0];
        for (double v : r) {
            if (!std::isfinite(v)) throw ConfigError(dir + "/imu.csv: non-finite sample");
        }
        b.imu.push_back({r[0], {r[1], r[2], r[3]}, {r[4], r[5], r[6]}});
    }

    const auto gnss_rows = read_csv(dir + "/gnss.csv", kGnssHeader);
    b.gnss.reserve(gnss_rows.size());
    for (const auto& r : gnss_rows) {
        b.gnss.push_back({r[0], r[1], r[2], r[3], {r[4], r[5], r[6]}});
    }

    b.truth = read_csv(dir + "/truth.csv", kTruthHeader);
    return b;
}

namespace {

struct MetricsBuilder {
    ErrorStats att, roll, pitch, heading;
    ErrorStats vel, pos_h, pos_v;
    double final_att_deg = 0.0;
    double last_above_threshold = 0.0;
    double conv_threshold_deg = 1.0;
    std::vector<double> vel_innovations;
    int large_angle_warnings = 0;
    bool partial_interval = false;

    void add_epoch(double t, const NavState& est, const std::vector<double>& truth_row,
                   double earth_radius) {
        const Quaternion qt = truth_quat(truth_row);
        const double att_err = quat_angle_between(est.q, qt);
        att.add(att_err);
        final_att_deg = units::rad_to_deg(att_err);
        if (units::rad_to_deg(att_err) >= conv_threshold_deg) last_above_threshold = t;

        const EulerAngles ee = dcm_to_euler(quat_to_dcm(est.q), AtanImpl::Std);
        roll.add(wrap_pi(ee.roll - truth_row[7]));
        pitch.add(wrap_pi(ee.pitch - truth_row[8]));
        heading.add(wrap_pi(ee.heading - truth_row[9]));

        vel.add(est.v.x - truth_row[4]);
        vel.add(est.v.y - truth_row[5]);
        vel.add(est.v.z - truth_row[6]);
        pos_h.add((est.lat - truth_row[1]) * earth_radius);
        pos_h.add(wrap_pi(est.lon - truth_row[2]) * earth_radius * std::cos(truth_row[1]));
        pos_v.add(est.alt - truth_row[3]);
    }

    std::vector<std::pair<std::string, double>> finish(double end_t) const {
        double innov_mean = 0.0;
        for (double v : vel_innovations) innov_mean += v;
        if (!vel_innovations.empty()) innov_mean /= static_cast<double>(vel_innovations.size());
        return {
            {"rms_att_deg", units::rad_to_deg(att.rms())},
            {"rms_roll_deg", units::rad_to_deg(roll.rms())},
            {"rms_pitch_deg", units::rad_to_deg(pitch.rms())},
            {"rms_heading_deg", units::rad_to_deg(heading.rms())},
            {"rms_vel", vel.rms()},
            {"rms_pos_horiz_m", pos_h.rms()},
            {"rms_alt_m", pos_v.rms()},
            {"final_att_deg", final_att_deg},
            {"conv_time_att_s", last_above_threshold >= end_t ? -1.0 : last_above_threshold},
            {"mean_abs_vel_innovation", innov_mean},
            {"n_vel_innovations", static_cast<double>(vel_innovations.size())},
            {"large_angle_warnings", static_cast<double>(large_angle_warnings)},
            {"partial_final_interval", partial_interval ? 1.0 : 0.0},
        };
    }
};

std::vector<double> estimate_row(double t, const NavState& nav, const Vec3& gyro_bias,
                                 double accel_z_bias, const Cov13* p, AtanImpl atan_impl) {
    const EulerAngles e = dcm_to_euler(quat_to_dcm(nav.q), atan_impl);
    std::vector<double> row{t,       nav.lat, nav.lon,   nav.alt, nav.v.x, nav.v.y, nav.v.z,
                            e.roll,  e.pitch, e.heading, gyro_bias.x, gyro_bias.y, gyro_bias.z,
                            accel_z_bias};
    for (int i = 0; i < kStateCount; ++i) {
        row.push_back(p ? p->m[i][i] : 0.0);
    }
    return row;
}

NavState initial_estimate(const DatasetBundle& bundle, const RunConfig& cfg) {
    NavState nav = bundle.initial;
    const Vec3 tilt{units::deg_to_rad(cfg.init_tilt_n_deg), units::deg_to_rad(cfg.init_tilt_e_deg),
                    units::deg_to_rad(cfg.init_tilt_d_deg)};
    if (norm_sq(tilt) > 0.0) {
        // Seed a platform misalignment: estimated attitude = (I - [tilt x]) C.
        const Dcm c = quat_to_dcm(nav.q);
        const Vec3 dphi{-tilt.x * c(0, 0) - tilt.y * c(1, 0) - tilt.z * c(2, 0),
                        -tilt.x * c(0, 1) - tilt.y * c(1, 1) - tilt.z * c(2, 1),
                        -tilt.x * c(0, 2) - tilt.y * c(1, 2) - tilt.z * c(2, 2)};
        nav.q = quat_normalize(
            quat_multiply(nav.q, rotvec_to_quat(RotationVector::from(dphi))));
    }
    return nav;
}

RunResult run_inertial(const DatasetBundle& bundle, const RunConfig& cfg) {
    const bool with_kf = cfg.filter == FilterKind::Eskf;
    const double dT = 1.0 / bundle.l_rate;
    const double dT_m = dT * cfg.l_per_m;
    EarthModel earth;
    earth.gravity = cfg.gravity;
    earth.radius = cfg.earth_radius;
    MechOptions mech_opt;
    mech_opt.full_coriolis = cfg.full_coriolis;

    EskfTuning tuning = cfg.tuning;
    if (with_kf && bundle.meta.has("err_gyro_bias_x_dph")) {
        // Size priors and process noise from the recorded sensor spec, the
        // datasheet stand-in. Floors keep unmodeled residue covered.
        if (!cfg.p0_bias_set) {
            const char* keys[3] = {"err_gyro_bias_x_dph", "err_gyro_bias_y_dph",
                                   "err_gyro_bias_z_dph"};
            for (int axis = 0; axis < 3; ++axis) {
                const double declared =
                    units::dph_to_rps(std::fabs(bundle.meta.get_num(keys[axis], 0.0)));
                const double sigma = std::max(declared, units::dph_to_rps(10.0));
                tuning.p0[axis] = sigma * sigma;
            }
        }
        if (!cfg.p0_abias_set) {
            const double declared = std::fabs(bundle.meta.get_num("err_accel_bias_z_mps2", 0.0));
            const double sigma = std::max(declared, 0.02);
            tuning.p0[kIdxAccelBiasZ] = sigma * sigma;
        }
        if (!cfg.q_set) {
            const double arw = units::dpsh_to_rpss(bundle.meta.get_num("err_gyro_arw_dpsh", 0.0));
            const double q_tilt = std::max(arw * arw, 1e-12);
            const double bi = units::dph_to_rps(bundle.meta.get_num("err_gyro_bi_dph", 0.0));
            const double tau = bundle.meta.get_num("err_gyro_bi_tau_s", 100.0);
            const double q_bias = std::max(bi * bi * 2.0 / tau, 1e-14);
            const double vrw = bundle.meta.get_num("err_accel_vrw", 0.0);
            const double q_vel = std::max(vrw * vrw, 1e-5);
            tuning.q.q[0] = tuning.q.q[1] = tuning.q.q[2] = q_bias;
            tuning.q.q[kIdxTiltN] = tuning.q.q[kIdxTiltE] = tuning.q.q[kIdxTiltD] = q_tilt;
            tuning.q.q[kIdxVelN] = tuning.q.q[kIdxVelE] = tuning.q.q[kIdxVelD] = q_vel;
        }
    }
    if (with_kf && cfg.r_from_meta && bundle.meta.has("gnss_vel_sigma_n")) {
        const auto var = [&](const char* key, double floor_v) {
            const double s = bundle.meta.get_num(key, 0.0);
            return std::max(s * s, floor_v);
        };
        tuning.r.vel_var_n = var("gnss_vel_sigma_n", 1e-4);
        tuning.r.vel_var_e = var("gnss_vel_sigma_e", 1e-4);
        tuning.r.vel_var_d = var("gnss_vel_sigma_d", 1e-4);
        tuning.r.pos_var_n_m = var("gnss_pos_sigma_n_m", 1e-2);
        tuning.r.pos_var_e_m = var("gnss_pos_sigma_e_m", 1e-2);
        tuning.r.pos_var_h = var("gnss_pos_sigma_d_m", 1e-2);
    }

    EskfState fs;
    fs.nav = initial_estimate(bundle, cfg);
    fs.p = Cov13::diagonal(tuning.p0);

    IncrementAccumulator acc(cfg.l_per_m);
    const AtanImpl atan_impl = cfg.use_std_atan ? AtanImpl::Std : AtanImpl::Polynomial;

    RunResult result;
    MetricsBuilder metrics;
    std::size_t fix_idx = 0;

    const auto step_m = [&](double t_m, std::size_t truth_idx) {
        std::optional<GnssFix> fix;
        if (with_kf) {
            while (fix_idx < bundle.gnss.size()) {
                const double target = bundle.gnss[fix_idx].t - cfg.gnss_lag_s;
                if (target > t_m + dT_m / 2.0) break;
                const auto& g = bundle.gnss[fix_idx];
                fix = GnssFix{g.t, g.lat, g.lon, g.alt, g.v};
                ++fix_idx;
            }
        }
        if (exceeds_small_angle(acc.phi_m())) ++metrics.large_angle_warnings;
        if (fix && !cfg.gnss_updates) {
            // Innovation logging without state updates.
            const auto ms = build_gnss_measurements(*fix, mech_step(fs.nav, acc.phi_m(),
                                                                    acc.dv_m(), dT_m, earth,
                                                                    mech_opt),
                                                    tuning.r, earth);
            const Vec3 vi{ms[0].z, ms[1].z, ms[2].z};
            metrics.vel_innovations.push_back(norm(vi));
            fix.reset();
        }
        const auto innovations =
            kf_cycle(fs, acc.phi_m(), acc.dv_m(), dT_m, earth, fix, tuning, mech_opt);
        if (!innovations.empty()) {
            const Vec3 vi{innovations[0].z, innovations[1].z, innovations[2].z};
            metrics.vel_innovations.push_back(norm(vi));
        }
        result.estimates.push_back(estimate_row(t_m, fs.nav, fs.gyro_bias.b, fs.accel_z_bias,
                                                with_kf ? &fs.p : nullptr, atan_impl));
        metrics.add_epoch(t_m, fs.nav, bundle.truth[truth_idx], earth.radius);
        result.last_good_t = t_m;
    };

    try {
        for (std::size_t i = 0; i < bundle.imu.size(); ++i) {
            const RawImuSample sample{bundle.imu[i].w, bundle.imu[i].f, dT};
            const Vec3 dalpha = debias_gyro(sample, fs.gyro_bias);
            const Vec3 dv = debias_accel(sample, fs.accel_z_bias);
            if (acc.push(dalpha, dv, cfg.rotation_compensation)) {
                step_m(bundle.imu[i].t, i);
            }
        }
        if (acc.cycles_in_interval() > 0) {
            const double t_last = bundle.imu.back().t;
            const int n = acc.cycles_in_interval();
            if (acc.flush(cfg.rotation_compensation)) {
                metrics.partial_interval = true;
                // Shortened final interval: cycle time scales with the count.
                std::optional<GnssFix> no_fix;
                kf_cycle(fs, acc.phi_m(), acc.dv_m(), dT * n, earth, no_fix, tuning, mech_opt);
                result.estimates.push_back(estimate_row(t_last, fs.nav, fs.gyro_bias.b,
                                                        fs.accel_z_bias, with_kf ? &fs.p : nullptr,
                                                        atan_impl));
                metrics.add_epoch(t_last, fs.nav, bundle.truth.back(), earth.radius);
                result.last_good_t = t_last;
            }
        }
    } catch (const DivergenceError& e) {
        result.diverged = true;
        result.divergence_reason = e.what();
    }

    const double end_t = result.estimates.empty() ? 0.0 : result.estimates.back()[0];
    result.metrics = metrics.finish(end_t);
    return result;
}

RunResult run_attitude_filter(const DatasetBundle& bundle, const RunConfig& cfg) {
    const double dT = 1.0 / bundle.l_rate;
    const AtanImpl atan_impl = cfg.use_std_atan ? AtanImpl::Std : AtanImpl::Polynomial;

    std::mt19937_64 rng(cfg.ref_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double psi_noise = units::deg_to_rad(cfg.psi_ref_noise_deg);
    const double incl = units::deg_to_rad(cfg.mag_inclination_deg);
    const Vec3 mag_nav{std::cos(incl), 0.0, std::sin(incl)};

    CompFilterState comp;
    GdFilterState gd;
    comp.q = initial_estimate(bundle, cfg).q;
    gd.q = comp.q;
    gd.beta = cfg.gd_beta;

    RunResult result;
    MetricsBuilder metrics;

    NavState held = bundle.initial;  // attitude-only filters hold position/velocity

    for (std::size_t i = 0; i < bundle.imu.size(); ++i) {
        const auto& truth_row = bundle.truth[i];
        const Quaternion q_truth = truth_quat(truth_row);
        const Vec3 v_truth{truth_row[4], truth_row[5], truth_row[6]};
        const Vec3 w = bundle.imu[i].w;
        const Vec3 f = bundle.imu[i].f;

        try {
            if (cfg.filter == FilterKind::Complementary) {
                const double psi_ref = truth_row[9] + psi_noise * gauss(rng);
                const Vec3 v_ref = quat_rotate(quat_conjugate(q_truth), v_truth);
                comp = comp_step(comp, w, f, v_ref, psi_ref, cfg.pi, dT);
                held.q = comp.q;
            } else {
                Vec3 mag = quat_rotate(quat_conjugate(q_truth), mag_nav);
                if (cfg.mag_noise > 0.0) {
                    mag += Vec3{cfg.mag_noise * gauss(rng), cfg.mag_noise * gauss(rng),
                                cfg.mag_noise * gauss(rng)};
                }
                gd = gd_step(gd, w, f, mag, dT, incl);
                held.q = gd.q;
            }
        } catch (const DivergenceError& e) {
            result.diverged = true;
            result.divergence_reason = e.what();
            break;
        }

        if ((i + 1) % static_cast<std::size_t>(cfg.l_per_m) == 0) {
            const double t = bundle.imu[i].t;
            const Vec3 bias = cfg.filter == FilterKind::Complementary ? comp.bias_estimate : Vec3{};
            result.estimates.push_back(estimate_row(t, held, bias, 0.0, nullptr, atan_impl));
            metrics.add_epoch(t, held, truth_row, cfg.earth_radius);
            result.last_good_t = t;
        }
    }

    const double end_t = result.estimates.empty() ? 0.0 : result.estimates.back()[0];
    result.metrics = metrics.finish(end_t);
    return result;
}

}  // namespace

RunResult run_filter(const DatasetBundle& bundle, const RunConfig& cfg) {
    if (bundle.imu.empty()) throw ConfigError("dataset has no IMU samples");
    if (bundle.truth.size() != bundle.imu.size()) {
        throw ConfigError("dataset truth/imu row counts differ");
    }
    switch (cfg.filter) {
        case FilterKind::InsOnly:
        case FilterKind::Eskf:
            return run_inertial(bundle, cfg);
        case FilterKind::Complementary:
        case FilterKind::GradientDescent:
            return run_attitude_filter(bundle, cfg);
    }
    throw ConfigError("unreachable filter kind");
}

void write_run_outputs(const std::string& out_dir, const RunResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_csv(out_dir + "/estimate.csv", kEstimateHeader, result.estimates);
    // metrics.csv has a string column; write it directly.
    std::FILE* f = std::fopen((out_dir + "/metrics.csv").c_str(), "w");
    if (!f) throw ConfigError("cannot write " + out_dir + "/metrics.csv");
    std::fprintf(f, "%s\n", kMetricsHeader);
    for (const auto& [name, value] : result.metrics) {
        std::fprintf(f, "%s,%.17g\n", name.c_str(), value);
    }
    std::fclose(f);
}

std::vector<std::pair<std::string, std::vector<double>>> compare_runs(
    const std::vector<std::string>& run_dirs) {
    if (run_dirs.size() < 2) throw ConfigError("compare: need at least two run directories");

    std::vector<std::vector<std::pair<std::string, double>>> all;
    for (const auto& dir : run_dirs) {
        std::ifstream in(dir + "/metrics.csv");
        if (!in) throw ConfigError("compare: cannot open " + dir + "/metrics.csv");
        std::string line;
        if (!std::getline(in, line) || line != kMetricsHeader) {
            throw ConfigError("compare: bad metrics header in " + dir);
        }
        std::vector<std::pair<std::string, double>> entries;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) throw ConfigError("compare: bad metrics row in " + dir);
            entries.emplace_back(line.substr(0, comma), std::strtod(line.c_str() + comma + 1, nullptr));
        }
        all.push_back(std::move(entries));
    }

    std::vector<std::pair<std::string, std::vector<double>>> table;
    for (const auto& [name, value] : all[0]) {
        std::vector<double> row{value};
        for (std::size_t d = 1; d < all.size(); ++d) {
            bool found = false;
            for (const auto& [n2, v2] : all[d]) {
                if (n2 == name) {
                    row.push_back(v2);
                    found = true;
                    break;
                }
            }
            if (!found) throw ConfigError("compare: metric '" + name + "' missing in " + run_dirs[d]);
        }
        table.emplace_back(name, std::move(row));
    }
    return table;
}

}  // namespace nav
