#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "flagsim/stepper.hpp"

namespace flagsim {

struct TrialSample {
    double t = 0.0;
    Vec3 f1 = Vec3::Zero();
    Vec3 f2 = Vec3::Zero();
    double psi_deg = 0.0, theta_deg = 0.0, phi_deg = 0.0;
    Vec4 quat = Vec4(1, 0, 0, 0);  // w, x, y, z
    Vec3 omega = Vec3::Zero();
    double psi_unwrapped_deg = 0.0;
    TorqueBreakdown torque;  // diagnostics only, not serialized
};

struct SteadySummary {
    double psi_deg = std::numeric_limits<double>::quiet_NaN();
    double theta_deg = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    bool spin = false;
    double psi_amplitude_deg = 0.0;
    double theta_amplitude_deg = 0.0;
};

struct TrialRecord {
    double omega1_rpm = 0.0;
    double omega2_rpm = 0.0;
    std::vector<TrialSample> series;
    SteadySummary steady;
    bool completed = true;  // false after an aborted step
    bool converged = false;
    double unwrapped_yaw_final_deg = 0.0;
    double min_contact_distance = std::numeric_limits<double>::infinity();
    double final_contact_stiffness = 0.0;
    double wall_seconds = 0.0;
};

// Trailing-window steady-state detector: the running mean of yaw and pitch
// must drift less than tol across the window and the unwrapped yaw rate must
// stay under tol/window (continuous spin otherwise). Steady values are the
// trailing-window means. Throws NumericalError when the series spans less
// than two windows.
SteadySummary detect_steady_state(const std::vector<double>& t,
                                  const std::vector<double>& psi_unwrapped_deg,
                                  const std::vector<double>& theta_deg,
                                  double window_s, double tol_deg);

TrialRecord run_single(const SimConfig& config, SystemOptions options = {});

struct SweepRange {
    double start = 0.0, stop = 0.0, step = 1.0;
    std::vector<double> values() const;
};

// "a:b:s" start:stop:step, rpm.
SweepRange parse_range(const std::string& text);

struct SweepResult {
    std::vector<double> omega1_rpm;
    std::vector<double> omega2_rpm;
    std::vector<TrialRecord> trials;  // row-major: omega1 outer, omega2 inner

    const TrialRecord& at(size_t i1, size_t i2) const {
        return trials[i1 * omega2_rpm.size() + i2];
    }
};

// Independent trials, `workers` threads; per-trial output is deterministic
// regardless of scheduling.
SweepResult run_sweep(const SimConfig& config, const SweepRange& omega1_rpm,
                      const SweepRange& omega2_rpm, int workers);

// Desk-scale acceptance configuration: dl = 10 mm, dt = 2 ms, 60 s trials.
void apply_desk_preset(SimConfig& config);

std::string timeseries_csv(const TrialRecord& record);
std::vector<TrialSample> parse_timeseries_csv(const std::string& text);
std::string map_csv(const SweepResult& sweep);
std::string trial_metadata_json(const SimConfig& config, const TrialRecord& record);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

inline double wrap_deg(double angle) {
    angle = std::fmod(angle + 180.0, 360.0);
    if (angle <= 0.0) angle += 360.0;
    return angle - 180.0;
}

}  // namespace flagsim
