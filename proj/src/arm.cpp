#include "lipsysid/arm.hpp"

#include <cmath>

namespace lipsysid {

// Inertia matrix with link, motor, and rotor-reflection terms. Motor 1 sits
// on the axis of joint 1 (fixed), motor 2 on the axis of joint 2 (carried by
// link 1 at radius a1).
Matrix arm_inertia(const ArmParams& p, const Vector& q) {
    const double c2 = std::cos(q[1]);
    Matrix m(2, 2);
    m(0, 0) = p.il1 + p.ml1 * p.l1 * p.l1 + p.kr1 * p.kr1 * p.im1 + p.il2 +
              p.ml2 * (p.a1 * p.a1 + p.l2 * p.l2 + 2.0 * p.a1 * p.l2 * c2) + p.im2 +
              p.mm2 * p.a1 * p.a1;
    m(0, 1) = p.il2 + p.ml2 * (p.l2 * p.l2 + p.a1 * p.l2 * c2) + p.kr2 * p.im2;
    m(1, 0) = m(0, 1);
    m(1, 1) = p.il2 + p.ml2 * p.l2 * p.l2 + p.kr2 * p.kr2 * p.im2;
    return m;
}

Matrix arm_coriolis(const ArmParams& p, const Vector& q, const Vector& qd) {
    const double h = -p.ml2 * p.a1 * p.l2 * std::sin(q[1]);
    Matrix c(2, 2);
    c(0, 0) = h * qd[1];
    c(0, 1) = h * (qd[0] + qd[1]);
    c(1, 0) = -h * qd[0];
    c(1, 1) = 0.0;
    return c;
}

Vector arm_gravity(const ArmParams& p, const Vector& q) {
    const double g = p.gravity;
    const double c1 = std::cos(q[0]);
    const double c12 = std::cos(q[0] + q[1]);
    Vector out(2);
    out[0] = (p.ml1 * p.l1 + p.mm2 * p.a1 + p.ml2 * p.a1) * g * c1 + p.ml2 * p.l2 * g * c12;
    out[1] = p.ml2 * p.l2 * g * c12;
    return out;
}

Vector arm_friction(const ArmParams& p, const Vector& qd) {
    Vector out(2);
    out[0] = p.fv1 * qd[0] + p.fc1 * std::tanh(p.sc * qd[0]);
    out[1] = p.fv2 * qd[1] + p.fc2 * std::tanh(p.sc * qd[1]);
    return out;
}

Vector f_arm(const ArmParams& p, const Vector& q, const Vector& qd, const Vector& tau) {
    const Matrix m = arm_inertia(p, q);
    const Vector cq = matvec(arm_coriolis(p, q, qd), qd);
    const Vector grav = arm_gravity(p, q);
    const Vector fric = arm_friction(p, qd);
    Vector rhs(2);
    for (int i = 0; i < 2; ++i) rhs[i] = tau[i] - cq[i] - fric[i] - grav[i];
    const Matrix acc = solve(m, Matrix::from_column(rhs));
    return {qd[0], qd[1], acc(0, 0), acc(1, 0)};
}

Vector arm_friction_residual(const ArmParams& p, const Vector& q, const Vector& qd) {
    const Matrix m = arm_inertia(p, q);
    const Matrix r = solve(m, Matrix::from_column(arm_friction(p, qd)));
    return {r(0, 0), r(1, 0)};
}

Vector arm_controller_torque(const ArmParams& p, const ArmController& ctrl, double t,
                             const Vector& q, const Vector& qd) {
    const Matrix m = arm_inertia(p, q);
    const Vector cq = matvec(arm_coriolis(p, q, qd), qd);
    const Vector grav = arm_gravity(p, q);
    Vector fb(2);
    for (int i = 0; i < 2; ++i) fb[i] = -ctrl.kp * (q[i] - ctrl.q0[i]) - ctrl.kd * qd[i];
    const Vector mfb = matvec(m, fb);
    Vector tau(2);
    for (int i = 0; i < 2; ++i) {
        const double eps = ctrl.amp * std::sin(2.0 * M_PI * ctrl.freq * t + ctrl.phases[i]);
        tau[i] = grav[i] + cq[i] + mfb[i] + eps;
    }
    return tau;
}

}  // namespace lipsysid
