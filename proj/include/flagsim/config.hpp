#pragma once

#include <string>

#include "flagsim/types.hpp"

namespace flagsim {

enum class Handedness { Right, Left };

struct HelixParams {
    double helix_radius = 8.89e-3;          // R (m)
    double helix_pitch = 76e-3;             // lambda (m)
    double axial_length = 196.2e-3;         // l (m)
    double cross_section_radius = 6e-3;     // r (m)
    Handedness handedness = Handedness::Right;
};

struct MaterialParams {
    double youngs_modulus = 1.255e6;  // E (Pa)
    double poisson_ratio = 0.5;       // nu
    double density = 1450.0;          // rho (kg/m^3)

    double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
};

struct BaseParams {
    double mass = 94e-3;               // m (kg)
    double base_radius = 13.5e-3;      // r_h (m)
    double base_height = 37.5e-3;      // h (m)
    double motor_separation = 45e-3;   // d (m)
    double mass_center_shift = 2e-3;   // r_m (m)
    Mat3 inertia = Mat3::Zero();       // J (kg m^2); zero means "derive from cylinder"
    double drag_coeff_x = 1.0;         // C_rx
    double drag_coeff_y = 1.0;         // C_ry
    double drag_coeff_z = 1.0;         // C_rz

    // Solid uniform cylinder about its centroid.
    Mat3 cylinder_inertia() const;
};

struct FluidParams {
    double viscosity = 1.0;       // mu (Pa s)
    double fluid_density = 1260;  // rho_f (kg/m^3)
};

struct SolverParams {
    double segment_length = 5e-3;       // dl (m)
    double time_step = 1e-3;            // dt (s)
    double newton_tol = 1e-6;           // force residual (N)
    int newton_max_iters = 30;
    double contact_stiffness = 1e3;     // k, multiplier on the contact energy gradient
    double contact_tolerance = 0.01e-3; // delta (m)
    double contact_cutoff = 0.0;        // candidate cutoff (m); 0 = auto (2r + delta + 2 dl)
    double rss_regularization = 0.0;    // epsilon (m); 0 = auto (cross-section radius)
};

struct SimConfig {
    HelixParams helix;
    MaterialParams material;
    BaseParams base;
    FluidParams fluid;
    SolverParams solver;

    double omega1 = 0.0;       // rad/s, signed
    double omega2 = 0.0;       // rad/s, signed
    double duration = 120.0;   // s
    double max_speed = 90.0 * 2.0 * M_PI / 60.0;  // rad/s

    double phase1 = 0.0;       // initial helix phase, flagellum 1 (rad)
    double phase2 = 0.0;       // initial helix phase, flagellum 2 (rad)
    bool rod_gravity = false;  // net gravity-buoyancy on rod nodes
    bool torque_per_node = false;  // assemble flagella torque from per-node forces
    // Cross-flagella mobility coupling. Off by default: a fully coupled
    // co-rotating pair carries a steady swirl torque that precesses the base
    // indefinitely, while the reference force histories have zero-mean
    // lateral forces per flagellum.
    bool hydro_coupling = false;

    double sample_stride = 0.01;  // s, time-series decimation
    double steady_window = 20.0;  // s
    double steady_tol = 0.5;      // deg

    // Resolved values for the "auto" solver defaults.
    double rss_epsilon() const;
    double contact_cutoff() const;
};

struct Stiffnesses {
    double EA;  // N
    double EI;  // N m^2
    double GJ;  // N m^2
};

// Parse a `key = value [unit]` document. Omitted keys take the defaults
// above; every invariant is validated. Throws ConfigError with the key name
// and the violated bound.
SimConfig load_config(const std::string& text);

// Canonical full-precision serialization; load_config(serialize_config(c))
// reproduces c bit for bit.
std::string serialize_config(const SimConfig& config);

// FNV-1a over the canonical serialization, as a hex id for run metadata.
std::string config_hash(const SimConfig& config);

// Apply a single `key=value` override (CLI --set).
void apply_override(SimConfig& config, const std::string& key_value);

Stiffnesses derived_stiffnesses(const MaterialParams& material, double radius);

// Re = rho_f |omega| R r / mu.
double reynolds_number(double fluid_density, double omega, double helix_radius,
                       double cross_section_radius, double viscosity);

inline constexpr double kReynoldsWarnThreshold = 0.1;

struct DimensionlessGroups {
    double actuation;      // omega mu l^4 / EI
    double spacing_ratio;  // d / l
    double pitch_ratio;    // lambda / L (L = flagellum contour length)
    double radius_ratio;   // R / L
};

DimensionlessGroups dimensionless_groups(const SimConfig& config);

double rpm_to_rad_s(double rpm);
double rad_s_to_rpm(double rad_s);

}  // namespace flagsim
