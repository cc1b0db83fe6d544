#pragma once

#include <functional>
#include <vector>

#include "nav/eskf.hpp"
#include "nav/geom.hpp"
#include "nav/vec3.hpp"

// Plain-arithmetic reference implementations. These back the oracle side of
// the dual-route checks and the benchmark baselines; they share no code with
// the optimized paths they are compared against.
namespace navref {

// Dense (I + A dT) P (I + A dT)^T + Q dT with full 13x13 products.
nav::Cov13 dense_propagate(const nav::Cov13& p, const nav::SparseTransition& t,
                           const nav::ProcessNoise& q, double dT);

// Batch Kalman update for a set of direct-state measurements:
// K = P H^T (H P H^T + R)^-1, explicit inversion by Gaussian elimination.
void batch_update(nav::Cov13& p, nav::ErrorState13& x,
                  const std::vector<nav::ScalarMeasurement>& measurements);

// Rotation matrix from an axis-angle vector by the Rodrigues formula.
nav::Dcm rodrigues(const nav::Vec3& phi);

// Net attitude rotation over [t0, t1] integrated at `oversample` substeps per
// nominal step, from a continuous body-rate profile. Returns the quaternion of
// frame(t1) relative to frame(t0).
nav::Quaternion integrate_attitude(const std::function<nav::Vec3(double)>& rate, double t0,
                                   double t1, int steps);

// Velocity increment over [t0, t1] resolved in the body frame at t0:
// integral of C_{B(t)}^{B(t0)} f(t) dt at fine substeps.
nav::Vec3 integrate_transformed_velocity(const std::function<nav::Vec3(double)>& rate,
                                         const std::function<nav::Vec3(double)>& force, double t0,
                                         double t1, int steps);

// Axis-angle vector of a unit quaternion, angle in [0, pi].
nav::Vec3 quat_to_rotvec(const nav::Quaternion& q);

}  // namespace navref
