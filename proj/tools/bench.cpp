// Micro-benchmark comparing the sparsity-exploiting kernels with their dense
// reference counterparts, plus end-to-end filter cycle throughput.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nav/eskf.hpp"
#include "nav/sim.hpp"
#include "navref/reference.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

nav::Cov13 random_cov(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double a[13][13];
    for (auto& row : a)
        for (double& v : row) v = u(rng);
    nav::Cov13 p;
    for (int i = 0; i < 13; ++i)
        for (int j = 0; j < 13; ++j) {
            double s = 0.0;
            for (int k = 0; k < 13; ++k) s += a[i][k] * a[j][k];
            p.m[i][j] = s / 13.0;
        }
    for (int i = 0; i < 13; ++i) p.m[i][i] += 1.0;
    return p;
}

volatile double g_sink = 0.0;

}  // namespace

int main() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    const nav::EarthModel earth;
    const nav::Dcm c = nav::euler_to_dcm({0.3, -0.2, 1.1});
    const nav::SparseTransition t = nav::build_transition(c, 0.4, -0.2, earth, 0.6, 0.01);
    nav::ProcessNoise q;
    for (double& v : q.q) v = 1e-8;
    const nav::Cov13 p0 = random_cov(rng);

    const int prop_reps = 200000;
    {
        nav::Cov13 p = p0;
        const auto t0 = Clock::now();
        for (int i = 0; i < prop_reps; ++i) {
            p = nav::propagate_covariance(p, t, q, 0.01);
        }
        const double dt_sparse = seconds_since(t0);
        g_sink = g_sink + p.m[0][0];

        p = p0;
        const auto t1 = Clock::now();
        for (int i = 0; i < prop_reps; ++i) {
            p = navref::dense_propagate(p, t, q, 0.01);
        }
        const double dt_dense = seconds_since(t1);
        g_sink = g_sink + p.m[0][0];

        std::printf("covariance propagation  sparse %8.1f kcyc/s   dense %8.1f kcyc/s   speedup %.2fx\n",
                    prop_reps / dt_sparse / 1e3, prop_reps / dt_dense / 1e3,
                    dt_dense / dt_sparse);
    }

    const int upd_reps = 50000;
    {
        std::vector<nav::ScalarMeasurement> ms;
        for (int i = 7; i <= 12; ++i) ms.push_back({i, u(rng), 0.5});

        const auto t0 = Clock::now();
        for (int i = 0; i < upd_reps; ++i) {
            nav::Cov13 p = p0;
            nav::ErrorState13 x{};
            nav::sequential_update(p, x, ms);
            g_sink = g_sink + x[7];
        }
        const double dt_seq = seconds_since(t0);

        const auto t1 = Clock::now();
        for (int i = 0; i < upd_reps; ++i) {
            nav::Cov13 p = p0;
            nav::ErrorState13 x{};
            navref::batch_update(p, x, ms);
            g_sink = g_sink + x[7];
        }
        const double dt_batch = seconds_since(t1);

        std::printf("6-measurement update    scalar %8.1f kupd/s   batch %8.1f kupd/s   speedup %.2fx\n",
                    upd_reps / dt_seq / 1e3, upd_reps / dt_batch / 1e3, dt_batch / dt_seq);
    }

    {
        // Whole-cycle throughput: high-rate accumulation plus filter cycle,
        // on a stationary profile. Independent runs scale across threads.
        const int runs = 8;
        const int m_cycles = 20000;
        const int l_per_m = 10;
        const auto t0 = Clock::now();
        double total = 0.0;
#ifdef _OPENMP
#pragma omp parallel for reduction(+ : total)
#endif
        for (int r = 0; r < runs; ++r) {
            nav::EskfState fs;
            fs.nav.lat = 0.6;
            fs.p = nav::Cov13::diagonal(nav::default_tuning().p0);
            nav::IncrementAccumulator acc(l_per_m);
            const nav::EskfTuning tuning = nav::default_tuning();
            const double dT = 1e-3;
            for (int i = 0; i < m_cycles * l_per_m; ++i) {
                const nav::RawImuSample s{{0, 0, 0}, {0, 0, -earth.gravity}, dT};
                const nav::Vec3 da = nav::debias_gyro(s, fs.gyro_bias);
                const nav::Vec3 dv = nav::debias_accel(s, fs.accel_z_bias);
                if (acc.push(da, dv)) {
                    nav::kf_cycle(fs, acc.phi_m(), acc.dv_m(), dT * l_per_m, earth, std::nullopt,
                                  tuning);
                }
            }
            total += fs.nav.alt;
        }
        const double dt = seconds_since(t0);
        g_sink = g_sink + total;
        std::printf("filter cycle throughput %8.1f kcyc/s over %d parallel runs\n",
                    runs * m_cycles / dt / 1e3, runs);
    }

    return 0;
}
