#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nav/errors.hpp"
#include "nav/eskf.hpp"
#include "nav/sim.hpp"
#include "navref/reference.hpp"

using namespace nav;

namespace {

constexpr double kPi = std::numbers::pi;
const EarthModel kEarth{};

Cov13 random_symmetric(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Cov13 p;
    for (int i = 0; i < kStateCount; ++i) {
        for (int j = i; j < kStateCount; ++j) {
            p.m[i][j] = p.m[j][i] = u(rng);
        }
    }
    return p;
}

Cov13 random_psd(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double a[kStateCount][kStateCount];
    for (auto& row : a)
        for (double& v : row) v = u(rng);
    Cov13 p;
    for (int i = 0; i < kStateCount; ++i)
        for (int j = 0; j < kStateCount; ++j) {
            double s = 0.0;
            for (int k = 0; k < kStateCount; ++k) s += a[i][k] * a[j][k];
            p.m[i][j] = s / kStateCount;
        }
    for (int i = 0; i < kStateCount; ++i) p.m[i][i] += 0.1;
    return p;
}

SparseTransition random_transition(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SparseTransition t = build_transition(Dcm{}, 0.0, 0.0, kEarth, 0.3, 0.01);
    for (auto& e : t.entries) e.value = u(rng);
    return t;
}

double rel_frobenius(const Cov13& a, const Cov13& b) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < kStateCount; ++i)
        for (int j = 0; j < kStateCount; ++j) {
            const double d = a.m[i][j] - b.m[i][j];
            num += d * d;
            den += b.m[i][j] * b.m[i][j];
        }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("build_transition matches the entry table") {
    SUBCASE("zero step zeroes every value") {
        const SparseTransition t = build_transition(Dcm{}, 1.0, -2.0, kEarth, 0.5, 0.0);
        for (const auto& e : t.entries) CHECK(e.value == 0.0);
        CHECK(t.entries.size() == 19);
    }

    SUBCASE("equator makes the longitude coupling 1/R") {
        const SparseTransition t = build_transition(Dcm{}, 0.0, 0.0, kEarth, 0.0, 0.5);
        bool found = false;
        for (const auto& e : t.entries) {
            if (e.row == kIdxLon && e.col == kIdxVelE) {
                CHECK(e.value == doctest::Approx(0.5 / kEarth.radius).epsilon(1e-15));
                found = true;
            }
        }
        CHECK(found);
    }

    SUBCASE("identity attitude, level unaccelerated flight") {
        const double dT = 0.01;
        const SparseTransition t = build_transition(Dcm{}, 0.0, 0.0, kEarth, 0.0, dT);
        auto value = [&](int r, int c) {
            for (const auto& e : t.entries) {
                if (e.row == r && e.col == c) return e.value;
            }
            REQUIRE(false);
            return 0.0;
        };
        CHECK(value(kIdxTiltN, kIdxGyroBiasX) == doctest::Approx(0.01));
        CHECK(value(kIdxTiltN, kIdxGyroBiasY) == 0.0);
        CHECK(value(kIdxTiltE, kIdxGyroBiasY) == doctest::Approx(0.01));
        CHECK(value(kIdxVelN, kIdxTiltE) == doctest::Approx(0.0980665));
        CHECK(value(kIdxVelE, kIdxTiltN) == doctest::Approx(-0.0980665));
        CHECK(value(kIdxVelD, kIdxAccelBiasZ) == doctest::Approx(0.01));
        CHECK(value(kIdxLat, kIdxVelN) == doctest::Approx(dT / kEarth.radius));
        CHECK(value(kIdxAlt, kIdxVelD) == doctest::Approx(-dT));
    }

    SUBCASE("rows stay in the derivative band") {
        const SparseTransition t = build_transition(Dcm{}, 0.2, 0.1, kEarth, 0.4, 0.01);
        for (const auto& e : t.entries) {
            CHECK(e.row >= 4);
            CHECK(e.row <= 12);
        }
        CHECK_THROWS_AS(build_transition(Dcm{}, 0, 0, kEarth, kPi / 2 - 1e-9, 0.01),
                        DivergenceError);
    }
}

TEST_CASE("propagate_covariance trivial paths") {
    std::mt19937_64 rng(1);
    const Cov13 p = random_symmetric(rng);
    SparseTransition empty = build_transition(Dcm{}, 0, 0, kEarth, 0.3, 0.0);
    ProcessNoise zero;

    const Cov13 same = propagate_covariance(p, empty, zero, 0.01);
    CHECK(rel_frobenius(same, p) == 0.0);

    ProcessNoise q;
    for (int i = 0; i < kStateCount; ++i) q.q[i] = 0.1 * (i + 1);
    const Cov13 inflated = propagate_covariance(p, empty, q, 0.5);
    for (int i = 0; i < kStateCount; ++i) {
        CHECK(inflated.m[i][i] == doctest::Approx(p.m[i][i] + q.q[i] * 0.5).epsilon(1e-15));
    }
}

TEST_CASE("sparse propagation equals the dense product") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Cov13 p = random_symmetric(rng);
        const SparseTransition t = random_transition(rng);
        ProcessNoise q;
        for (double& v : q.q) v = u(rng);
        const double dT = 0.001 + u(rng);

        const Cov13 sparse = propagate_covariance(p, t, q, dT);
        const Cov13 dense = navref::dense_propagate(p, t, q, dT);
        worst = std::max(worst, rel_frobenius(sparse, dense));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("scalar_update hand algebra") {
    SUBCASE("two-by-two block") {
        Cov13 p;
        p.m[kIdxVelN][kIdxVelN] = 2.0;
        p.m[kIdxVelN][kIdxVelE] = 1.0;
        p.m[kIdxVelE][kIdxVelN] = 1.0;
        p.m[kIdxVelE][kIdxVelE] = 2.0;
        ErrorState13 x{};
        scalar_update(p, x, {kIdxVelN, 3.0, 1.0});
        CHECK(x[kIdxVelN] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(x[kIdxVelE] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p.m[kIdxVelN][kIdxVelN] == doctest::Approx(2.0 - 4.0 / 3.0).epsilon(1e-15));
    }

    SUBCASE("huge variance is a zero-weight measurement") {
        std::mt19937_64 rng(5);
        Cov13 p = random_psd(rng);
        const Cov13 before = p;
        ErrorState13 x{};
        scalar_update(p, x, {kIdxVelD, 3.0, 1e12});
        CHECK(rel_frobenius(p, before) < 1e-9);
        for (double v : x) CHECK(std::fabs(v) < 1e-9);
    }

    SUBCASE("zero variance is a perfect measurement") {
        std::mt19937_64 rng(6);
        Cov13 p = random_psd(rng);
        ErrorState13 x{};
        scalar_update(p, x, {kIdxAlt, 2.5, 0.0});
        CHECK(x[kIdxAlt] == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(std::fabs(p.m[kIdxAlt][kIdxAlt]) < 1e-12);
    }

    SUBCASE("collapsed variance throws") {
        Cov13 p;  // zero covariance
        ErrorState13 x{};
        CHECK_THROWS_AS(scalar_update(p, x, {kIdxVelN, 1.0, 0.0}), DivergenceError);
    }
}

TEST_CASE("sequential update equals the batch oracle") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::normal_distribution<double> g(0.0, 1.0);

    SUBCASE("empty set is the identity") {
        Cov13 p = random_psd(rng);
        const Cov13 before = p;
        ErrorState13 x{};
        sequential_update(p, x, {});
        CHECK(rel_frobenius(p, before) == 0.0);
    }

    SUBCASE("single measurement matches scalar_update") {
        Cov13 p1 = random_psd(rng);
        Cov13 p2 = p1;
        ErrorState13 x1{}, x2{};
        const ScalarMeasurement m{kIdxVelE, 0.7, 0.3};
        scalar_update(p1, x1, m);
        sequential_update(p2, x2, {m});
        CHECK(rel_frobenius(p1, p2) == 0.0);
        CHECK(x1[kIdxVelE] == x2[kIdxVelE]);
    }

    SUBCASE("six-measurement set against explicit inversion") {
        double worst_p = 0.0;
        double worst_x = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const Cov13 p0 = random_psd(rng);
            std::vector<ScalarMeasurement> ms;
            for (int i = kIdxVelN; i <= kIdxAlt; ++i) ms.push_back({i, g(rng), u(rng)});

            Cov13 p_seq = p0;
            ErrorState13 x_seq{};
            sequential_update(p_seq, x_seq, ms);

            Cov13 p_batch = p0;
            ErrorState13 x_batch{};
            navref::batch_update(p_batch, x_batch, ms);

            worst_p = std::max(worst_p, rel_frobenius(p_seq, p_batch));
            double dx = 0.0, nx = 0.0;
            for (int i = 0; i < kStateCount; ++i) {
                dx += (x_seq[i] - x_batch[i]) * (x_seq[i] - x_batch[i]);
                nx += x_batch[i] * x_batch[i];
            }
            worst_x = std::max(worst_x, std::sqrt(dx / nx));
        }
        CHECK(worst_p < 1e-9);
        CHECK(worst_x < 1e-9);
    }

    SUBCASE("duplicate indices are rejected") {
        Cov13 p = random_psd(rng);
        ErrorState13 x{};
        std::vector<ScalarMeasurement> ms{{kIdxVelN, 0.1, 1.0}, {kIdxVelN, 0.2, 1.0}};
        CHECK_THROWS_AS(sequential_update(p, x, ms), ConfigError);
    }

    SUBCASE("processing order does not matter beyond rounding") {
        for (int trial = 0; trial < 50; ++trial) {
            const Cov13 p0 = random_psd(rng);
            std::vector<ScalarMeasurement> ms;
            for (int i = kIdxVelN; i <= kIdxAlt; ++i) ms.push_back({i, g(rng), u(rng)});

            Cov13 pa = p0;
            ErrorState13 xa{};
            sequential_update(pa, xa, ms);

            // reversed input; sequential_update re-sorts, so drive
            // scalar_update directly to vary the actual order
            Cov13 pb = p0;
            ErrorState13 xb{};
            std::vector<ScalarMeasurement> rev(ms.rbegin(), ms.rend());
            for (const auto& m : rev) scalar_update(pb, xb, m);

            CHECK(rel_frobenius(pa, pb) < 1e-9);
            for (int i = 0; i < kStateCount; ++i) CHECK(std::fabs(xa[i] - xb[i]) < 1e-9);
        }
    }
}

TEST_CASE("apply_corrections feedback") {
    SUBCASE("zero error state is a no-op") {
        NavState nav;
        nav.lat = 0.4;
        nav.v = {1, 2, 3};
        ErrorState13 x{};
        GyroBias gb{};
        double ab = 0.0;
        const NavState out = apply_corrections(nav, x, gb, ab);
        CHECK(out.lat == nav.lat);
        CHECK(norm(out.v - nav.v) == 0.0);
        CHECK(quat_angle_between(out.q, nav.q) < 1e-15);
        CHECK(norm(gb.b) == 0.0);
    }

    SUBCASE("down tilt estimate corrects heading with opposite sign") {
        NavState nav;  // identity attitude
        ErrorState13 x{};
        x[kIdxTiltD] = 1e-3;
        GyroBias gb{};
        double ab = 0.0;
        const NavState out = apply_corrections(nav, x, gb, ab);
        const EulerAngles e = dcm_to_euler(quat_to_dcm(out.q), AtanImpl::Std);
        double heading = e.heading;
        if (heading > kPi) heading -= 2 * kPi;
        CHECK(heading == doctest::Approx(-1e-3).epsilon(1e-9));
        for (double v : x) CHECK(v == 0.0);
    }

    SUBCASE("velocity errors add directly") {
        NavState nav;
        ErrorState13 x{};
        x[kIdxVelN] = 0.5;
        GyroBias gb{};
        double ab = 0.0;
        const NavState out = apply_corrections(nav, x, gb, ab);
        CHECK(out.v.x == 0.5);
    }

    SUBCASE("bias states accumulate into the bias estimates") {
        NavState nav;
        ErrorState13 x{};
        x[kIdxGyroBiasX] = 1e-4;
        x[kIdxGyroBiasZ] = -2e-4;
        x[kIdxAccelBiasZ] = 0.01;
        GyroBias gb{};
        gb.b = {1e-5, 0, 0};
        double ab = 0.005;
        (void)apply_corrections(nav, x, gb, ab);
        CHECK(gb.b.x == doctest::Approx(1.1e-4));
        CHECK(gb.b.z == doctest::Approx(-2e-4));
        // accel-z feedback runs opposite to its state estimate
        CHECK(ab == doctest::Approx(-0.005));
    }
}

TEST_CASE("covariance stays symmetric and positive through long runs") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.1, 1.0);

    EskfTuning tuning = default_tuning();
    Cov13 p = Cov13::diagonal(tuning.p0);
    ErrorState13 x{};
    const Dcm c = euler_to_dcm({0.05, -0.02, 0.6});
    const SparseTransition t = build_transition(c, 0.01, -0.02, kEarth, 0.6, 0.01);

    for (int cycle = 0; cycle < 100000; ++cycle) {
        p = propagate_covariance(p, t, tuning.q, 0.01);
        if (cycle % 100 == 0) {
            std::vector<ScalarMeasurement> ms;
            for (int i = kIdxVelN; i <= kIdxAlt; ++i) {
                ms.push_back({i, 0.01 * u(rng), i <= kIdxVelD ? 1e-4 : 1e-10});
            }
            sequential_update(p, x, ms);
            x.fill(0.0);
        }
    }

    double asym = 0.0;
    double scale = 0.0;
    for (int i = 0; i < kStateCount; ++i) {
        CHECK(p.m[i][i] >= -1e-12);
        for (int j = 0; j < kStateCount; ++j) {
            asym = std::max(asym, std::fabs(p.m[i][j] - p.m[j][i]));
            scale = std::max(scale, std::fabs(p.m[i][j]));
        }
    }
    CHECK(asym <= 1e-10 * std::max(scale, 1.0));
}

TEST_CASE("kf_cycle without fixes reduces to pure mechanization") {
    EskfState fs;
    fs.nav.lat = 0.5;
    fs.p = Cov13::diagonal(default_tuning().p0);
    const EskfTuning tuning = default_tuning();

    NavState plain;
    plain.lat = 0.5;

    const double dT = 0.01;
    const Vec3 dv{0, 0, -kEarth.gravity * dT};
    for (int i = 0; i < 200; ++i) {
        kf_cycle(fs, {1e-4, 0, 0}, dv, dT, kEarth, std::nullopt, tuning);
        plain = mech_step(plain, {1e-4, 0, 0}, dv, dT, kEarth);
    }
    CHECK(fs.nav.lat == plain.lat);
    CHECK(quat_angle_between(fs.nav.q, plain.q) == 0.0);
    for (double v : fs.x) CHECK(v == 0.0);
}

TEST_CASE("tilt error becomes observable through zero-velocity fixes") {
    // Stationary truth, 2-degree north tilt seeded into the estimate; fixes
    // report zero velocity and the true position at 1 Hz.
    const double tilt0 = units::deg_to_rad(2.0);
    const double dT_m = 0.01;
    const int m_per_fix = 100;

    EskfTuning tuning = default_tuning();
    tuning.r.vel_var_n = tuning.r.vel_var_e = tuning.r.vel_var_d = 1e-4;
    tuning.r.pos_var_n_m = tuning.r.pos_var_e_m = 1.0;
    tuning.r.pos_var_h = 1.0;

    EskfState fs;
    fs.nav.lat = 0.5;
    fs.p = Cov13::diagonal(tuning.p0);

    const NavState truth = fs.nav;  // identity attitude, zero velocity

    // estimated attitude = (I - [psi x]) C with psi = (tilt0, 0, 0)
    const Vec3 dphi{-tilt0, 0, 0};
    fs.nav.q = quat_normalize(
        quat_multiply(fs.nav.q, rotvec_to_quat(RotationVector::from(dphi))));

    const Vec3 dv_body{0, 0, -kEarth.gravity * dT_m};

    auto tilt_n = [&](const EskfState& s) {
        // psi from M = C_est * C_true^T = I - [psi x]
        const Dcm ce = quat_to_dcm(s.nav.q);
        const Dcm ct = quat_to_dcm(truth.q);
        const Dcm m = ce * ct.transpose();
        return -m(2, 1);
    };

    CHECK(std::fabs(tilt_n(fs) - tilt0) < 1e-4);

    double first_innovation_ve = 0.0;
    bool got_first = false;
    std::vector<double> tilt_history;

    for (int cycle = 1; cycle <= 12000; ++cycle) {
        std::optional<GnssFix> fix;
        if (cycle % m_per_fix == 0) {
            fix = GnssFix{cycle * dT_m, truth.lat, truth.lon, truth.alt, {0, 0, 0}};
        }
        const auto innov = kf_cycle(fs, {0, 0, 0}, dv_body, dT_m, kEarth, fix, tuning);
        if (!innov.empty() && !got_first) {
            first_innovation_ve = innov[1].z;  // east velocity innovation
            got_first = true;
        }
        if (cycle % m_per_fix == 0) tilt_history.push_back(std::fabs(tilt_n(fs)));
    }

    // the east velocity error grows at tilt * g per second until the first fix
    const double expected = tilt0 * kEarth.gravity * 1.0;
    CHECK(std::fabs(std::fabs(first_innovation_ve) - expected) < 0.1 * expected);

    // converged below 0.1 degrees within the run
    CHECK(tilt_history.back() < units::deg_to_rad(0.1));

    // decreasing over 10-fix windows until convergence
    for (std::size_t i = 10; i < tilt_history.size(); i += 10) {
        if (tilt_history[i - 10] < units::deg_to_rad(0.1)) break;
        CHECK(tilt_history[i] < tilt_history[i - 10]);
    }
}

TEST_CASE("slower aiding still converges, just later") {
    auto time_below = [&](int m_per_fix) {
        const double tilt0 = units::deg_to_rad(2.0);
        const double dT_m = 0.01;
        EskfTuning tuning = default_tuning();
        tuning.r.vel_var_n = tuning.r.vel_var_e = tuning.r.vel_var_d = 1e-4;

        EskfState fs;
        fs.nav.lat = 0.5;
        fs.p = Cov13::diagonal(tuning.p0);
        const NavState truth = fs.nav;
        const Vec3 dphi{-tilt0, 0, 0};
        fs.nav.q =
            quat_normalize(quat_multiply(fs.nav.q, rotvec_to_quat(RotationVector::from(dphi))));
        const Vec3 dv_body{0, 0, -kEarth.gravity * dT_m};

        for (int cycle = 1; cycle <= 12000; ++cycle) {
            std::optional<GnssFix> fix;
            if (cycle % m_per_fix == 0) {
                fix = GnssFix{cycle * dT_m, truth.lat, truth.lon, truth.alt, {0, 0, 0}};
            }
            kf_cycle(fs, {0, 0, 0}, dv_body, dT_m, kEarth, fix, tuning);
            const Dcm m = quat_to_dcm(fs.nav.q) * quat_to_dcm(truth.q).transpose();
            if (std::fabs(-m(2, 1)) < units::deg_to_rad(0.1)) return cycle * dT_m;
        }
        return -1.0;
    };

    const double fast_aiding = time_below(1);    // fix every propagation cycle
    const double slow_aiding = time_below(10);   // one fix per ten cycles
    CHECK(fast_aiding > 0.0);
    CHECK(slow_aiding > 0.0);
    CHECK(fast_aiding <= slow_aiding);
}

TEST_CASE("gnss measurement builder wraps longitude and scales position noise") {
    NavState nav;
    nav.lat = 0.5;
    nav.lon = kPi - 1e-6;
    GnssFix fix;
    fix.lat = 0.5;
    fix.lon = -kPi + 1e-6;  // 2e-6 east of the estimate across the seam
    fix.alt = 0.0;
    MeasurementNoise r;
    r.pos_var_n_m = 4.0;
    const auto ms = build_gnss_measurements(fix, nav, r, kEarth);
    CHECK(ms.size() == 6);
    CHECK(ms[4].index == kIdxLon);
    CHECK(ms[4].z == doctest::Approx(2e-6).epsilon(1e-6));
    CHECK(ms[3].variance == doctest::Approx(4.0 / (kEarth.radius * kEarth.radius)));
}
