#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nav/altfilt.hpp"
#include "nav/eskf.hpp"
#include "nav/io.hpp"
#include "nav/sim.hpp"

namespace nav {

inline constexpr const char* kImuHeader = "t,wx,wy,wz,fx,fy,fz";
inline constexpr const char* kGnssHeader = "t,lat,lon,h,vn,ve,vd";
inline constexpr const char* kTruthHeader = "t,lat,lon,h,vn,ve,vd,roll,pitch,heading";
inline constexpr const char* kEstimateHeader =
    "t,lat,lon,h,vn,ve,vd,roll,pitch,heading,bgx,bgy,bgz,baz,"
    "p0,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11,p12";
inline constexpr const char* kMetricsHeader = "metric,value";

enum class FilterKind { InsOnly, Eskf, Complementary, GradientDescent };

struct RunConfig {
    FilterKind filter = FilterKind::InsOnly;
    int l_per_m = 10;
    bool rotation_compensation = true;
    bool full_coriolis = false;
    double gravity = 9.80665;
    double earth_radius = 6.37e6;
    bool use_std_atan = false;
    double gnss_lag_s = 0.0;
    bool gnss_updates = true;  // off: propagate covariance, log innovations only

    EskfTuning tuning = default_tuning();
    bool r_from_meta = true;   // take GNSS sigmas recorded by the simulator
    bool p0_bias_set = false;  // config overrode the gyro-bias prior
    bool p0_abias_set = false;
    bool q_set = false;        // config overrode the process noise

    PiGains pi{};
    double psi_ref_noise_deg = 0.0;
    double gd_beta = 0.1;
    double mag_inclination_deg = 60.0;
    double mag_noise = 0.0;
    std::uint64_t ref_seed = 1;

    // Initial attitude error injected into the estimator (truth stays put).
    double init_tilt_n_deg = 0.0;
    double init_tilt_e_deg = 0.0;
    double init_tilt_d_deg = 0.0;
};

RunConfig parse_run_config(const Config& cfg);

struct DatasetBundle {
    Config meta;
    double l_rate = 0.0;
    double duration = 0.0;
    NavState initial{};
    std::vector<ImuSample> imu;
    std::vector<GnssFixRow> gnss;
    std::vector<std::vector<double>> truth;  // kTruthHeader columns
};

// Generates and writes imu.csv, gnss.csv, truth.csv and meta under out_dir.
void write_dataset(const std::string& out_dir, const TrajectorySpec& traj,
                   const SensorErrorSpec& err, const GnssSpec& gnss, std::uint64_t seed,
                   const EarthModel& earth);

DatasetBundle load_bundle(const std::string& dir);

struct RunResult {
    std::vector<std::vector<double>> estimates;  // kEstimateHeader columns
    std::vector<std::pair<std::string, double>> metrics;
    bool diverged = false;
    double last_good_t = 0.0;
    std::string divergence_reason;
};

RunResult run_filter(const DatasetBundle& bundle, const RunConfig& cfg);

void write_run_outputs(const std::string& out_dir, const RunResult& result);

// Aligned metric comparison across run directories. Returns (metric, one
// value per directory) rows and prints nothing.
std::vector<std::pair<std::string, std::vector<double>>> compare_runs(
    const std::vector<std::string>& run_dirs);

TrajectorySpec parse_trajectory_spec(const Config& cfg);
SensorErrorSpec parse_error_spec(const Config& cfg);
GnssSpec parse_gnss_spec(const Config& cfg);

}  // namespace nav
