#pragma once

#include "flagsim/config.hpp"
#include "flagsim/geometry.hpp"
#include "flagsim/types.hpp"

namespace flagsim {

inline constexpr double kGravity = 9.81;  // m/s^2

struct AttitudeState {
    Quat orientation = Quat::Identity();  // body -> world
    Vec3 omega = Vec3::Zero();            // body frame (rad/s)
};

struct EulerAngles {
    double yaw;    // psi, about z_B (rad)
    double pitch;  // theta, about y_B (rad)
    double roll;   // phi, about x_B (rad)
    bool gimbal;   // |pitch| within 1e-6 of pi/2: yaw/roll not unique
};

struct TorqueBreakdown {
    Vec3 total = Vec3::Zero();
    Vec3 flagella = Vec3::Zero();  // lever-arm terms from F1, F2
    double righting = 0.0;         // M_r, enters the y component
    Vec3 drag = Vec3::Zero();      // (M_hx, M_hy, M_hz)
};

// M_x = (F1_x - F2_x) * 0 + M_hx
// M_y = (F1_z - F2_z) * d/2 + M_r + M_hy
// M_z = (F1_y - F2_y) * d/2 + M_hz
// Forces are expected in the body frame.
TorqueBreakdown assemble_torque(const Vec3& f1_body, const Vec3& f2_body,
                                double pitch, const Vec3& omega,
                                const BaseParams& base, double viscosity,
                                double gravity = kGravity);

// Restoring moment from the mass-center offset: -m g r_m sin(pitch).
double righting_moment(double pitch, const BaseParams& base,
                       double gravity = kGravity);

// Componentwise -2 pi mu C_r* r_h^3 omega_*.
Vec3 base_drag(const Vec3& omega, const BaseParams& base, double viscosity);

// One classical RK4 step of dq/dt = q (x) [0, omega]/2,
// domega/dt = J^{-1} (M - omega x (J omega)), then renormalize q.
AttitudeState step_attitude(const AttitudeState& state, const Vec3& torque,
                            const Mat3& inertia, double dt);

// Intrinsic Z-Y-X (yaw-pitch-roll). yaw, roll in (-pi, pi], pitch in
// [-pi/2, pi/2].
EulerAngles quat_to_euler(const Quat& q);
Quat euler_to_quat(double yaw, double pitch, double roll);

}  // namespace flagsim
