#pragma once

#include "lipsysid/linalg.hpp"

namespace lipsysid {

// Two-link planar arm with motor rotors on the joint axes. The inertia,
// Coriolis, and gravity terms follow the standard textbook model; friction
// is F_f(qd) = F_v qd + F_c tanh(s_c qd).
struct ArmParams {
    double a1 = 0.8, a2 = 0.8;    // link lengths [m]
    double l1 = 0.4, l2 = 0.4;    // joint-axis-to-COM distances [m]
    double ml1 = 20.0, ml2 = 20.0;  // link masses [kg]
    double il1 = 5.0, il2 = 5.0;    // link inertias [kg m^2]
    double kr1 = 100.0, kr2 = 100.0;  // gear ratios
    double mm1 = 2.0, mm2 = 2.0;      // motor masses [kg]
    double im1 = 0.01, im2 = 0.01;    // motor inertias [kg m^2]
    double fv1 = 40.0, fv2 = 40.0;    // viscous friction diag
    double fc1 = 2.0, fc2 = 2.0;      // Coulomb friction diag
    double sc = 10.0;                 // tanh sharpness
    double gravity = 9.81;
};

Matrix arm_inertia(const ArmParams& p, const Vector& q);
Matrix arm_coriolis(const ArmParams& p, const Vector& q, const Vector& qd);
Vector arm_gravity(const ArmParams& p, const Vector& q);
Vector arm_friction(const ArmParams& p, const Vector& qd);

// Full state derivative (q_dot, q_ddot) for state (q, qd) under torque tau.
Vector f_arm(const ArmParams& p, const Vector& q, const Vector& qd, const Vector& tau);

// Friction residual the network is trained to learn: M^{-1}(q) F_f(qd).
Vector arm_friction_residual(const ArmParams& p, const Vector& q, const Vector& qd);

// Computed-torque regulator around q0 with a sinusoidal excitation:
//   tau = g + C qd + M [-Kp (q - q0) - Kd qd] + eps(t),
//   eps_i(t) = amp sin(2 pi freq t + phase_i).
struct ArmController {
    Vector q0;      // setpoint (initial joint angles)
    Vector phases;  // per-trajectory random phases in [0, 2pi)
    double amp = 100.0;
    double freq = 1.0;  // Hz
    double kp = 1.0;
    double kd = 2.0;
};

Vector arm_controller_torque(const ArmParams& p, const ArmController& ctrl, double t,
                             const Vector& q, const Vector& qd);

}  // namespace lipsysid
