#include "flagsim/attitude.hpp"

#include <cmath>

namespace flagsim {

namespace {

// Hamilton product on (w, x, y, z) stacks.
Vec4 quat_mul(const Vec4& a, const Vec4& b) {
    const double aw = a[0];
    const Vec3 av = a.tail<3>();
    const double bw = b[0];
    const Vec3 bv = b.tail<3>();
    Vec4 out;
    out[0] = aw * bw - av.dot(bv);
    out.tail<3>() = aw * bv + bw * av + av.cross(bv);
    return out;
}

struct Deriv {
    Vec4 qdot;
    Vec3 wdot;
};

Deriv rates(const Vec4& q, const Vec3& w, const Vec3& torque, const Mat3& J,
            const Mat3& J_inv) {
    Deriv d;
    Vec4 omega_quat;
    omega_quat << 0.0, w.x(), w.y(), w.z();
    d.qdot = 0.5 * quat_mul(q, omega_quat);
    d.wdot = J_inv * (torque - w.cross(J * w));
    return d;
}

}  // namespace

double righting_moment(double pitch, const BaseParams& base, double gravity) {
    return -base.mass * gravity * base.mass_center_shift * std::sin(pitch);
}

Vec3 base_drag(const Vec3& omega, const BaseParams& base, double viscosity) {
    const double r3 = base.base_radius * base.base_radius * base.base_radius;
    const double scale = -2.0 * M_PI * viscosity * r3;
    return {scale * base.drag_coeff_x * omega.x(),
            scale * base.drag_coeff_y * omega.y(),
            scale * base.drag_coeff_z * omega.z()};
}

TorqueBreakdown assemble_torque(const Vec3& f1_body, const Vec3& f2_body,
                                double pitch, const Vec3& omega,
                                const BaseParams& base, double viscosity,
                                double gravity) {
    TorqueBreakdown out;
    const double half_d = 0.5 * base.motor_separation;
    out.flagella = {0.0, (f1_body.z() - f2_body.z()) * half_d,
                    (f1_body.y() - f2_body.y()) * half_d};
    out.righting = righting_moment(pitch, base, gravity);
    out.drag = base_drag(omega, base, viscosity);
    out.total = out.flagella + out.drag + Vec3(0.0, out.righting, 0.0);
    return out;
}

AttitudeState step_attitude(const AttitudeState& state, const Vec3& torque,
                            const Mat3& inertia, double dt) {
    const Mat3 J_inv = inertia.inverse();
    Vec4 q;
    q << state.orientation.w(), state.orientation.x(), state.orientation.y(),
        state.orientation.z();
    const Vec3 w = state.omega;

    const Deriv k1 = rates(q, w, torque, inertia, J_inv);
    const Deriv k2 = rates(q + 0.5 * dt * k1.qdot, w + 0.5 * dt * k1.wdot,
                           torque, inertia, J_inv);
    const Deriv k3 = rates(q + 0.5 * dt * k2.qdot, w + 0.5 * dt * k2.wdot,
                           torque, inertia, J_inv);
    const Deriv k4 = rates(q + dt * k3.qdot, w + dt * k3.wdot, torque, inertia,
                           J_inv);

    Vec4 q_new = q + dt / 6.0 * (k1.qdot + 2.0 * k2.qdot + 2.0 * k3.qdot + k4.qdot);
    const Vec3 w_new =
        w + dt / 6.0 * (k1.wdot + 2.0 * k2.wdot + 2.0 * k3.wdot + k4.wdot);

    q_new /= q_new.norm();
    AttitudeState out;
    out.orientation = Quat(q_new[0], q_new[1], q_new[2], q_new[3]);
    out.omega = w_new;
    return out;
}

EulerAngles quat_to_euler(const Quat& q) {
    EulerAngles e;
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    e.yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
    double sp = 2.0 * (w * y - z * x);
    sp = std::max(-1.0, std::min(1.0, sp));
    e.pitch = std::asin(sp);
    e.roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
    e.gimbal = std::abs(e.pitch) > M_PI / 2.0 - 1e-6;
    return e;
}

Quat euler_to_quat(double yaw, double pitch, double roll) {
    return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) *
           Quat(Eigen::AngleAxisd(pitch, Vec3::UnitY())) *
           Quat(Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

}  // namespace flagsim
