#include "flagsim/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "flagsim/version.hpp"
#include "json.hpp"

namespace flagsim {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace

SteadySummary detect_steady_state(const std::vector<double>& t,
                                  const std::vector<double>& psi_unwrapped_deg,
                                  const std::vector<double>& theta_deg,
                                  double window_s, double tol_deg) {
    const size_t n = t.size();
    if (n < 4 || psi_unwrapped_deg.size() != n || theta_deg.size() != n) {
        throw NumericalError("detect_steady_state: bad series");
    }
    if (t.back() - t.front() < 2.0 * window_s) {
        throw NumericalError("detect_steady_state: series shorter than two windows");
    }

    const double t_start = t.back() - window_s;
    const double t_mid = t.back() - 0.5 * window_s;
    size_t first = 0;
    while (first < n && t[first] < t_start) ++first;

    double sum1_psi = 0, sum2_psi = 0, sum1_th = 0, sum2_th = 0;
    size_t n1 = 0, n2 = 0;
    double psi_min = psi_unwrapped_deg[first], psi_max = psi_min;
    double th_min = theta_deg[first], th_max = th_min;
    for (size_t i = first; i < n; ++i) {
        if (t[i] < t_mid) {
            sum1_psi += psi_unwrapped_deg[i];
            sum1_th += theta_deg[i];
            ++n1;
        } else {
            sum2_psi += psi_unwrapped_deg[i];
            sum2_th += theta_deg[i];
            ++n2;
        }
        psi_min = std::min(psi_min, psi_unwrapped_deg[i]);
        psi_max = std::max(psi_max, psi_unwrapped_deg[i]);
        th_min = std::min(th_min, theta_deg[i]);
        th_max = std::max(th_max, theta_deg[i]);
    }
    if (n1 == 0 || n2 == 0) {
        throw NumericalError("detect_steady_state: too few samples in window");
    }

    SteadySummary out;
    const double drift_psi = std::abs(sum2_psi / n2 - sum1_psi / n1);
    const double drift_th = std::abs(sum2_th / n2 - sum1_th / n1);
    const double yaw_rate =
        (psi_unwrapped_deg.back() - psi_unwrapped_deg[first]) / window_s;
    out.spin = std::abs(yaw_rate) > tol_deg / window_s;
    out.converged = drift_psi < tol_deg && drift_th < tol_deg && !out.spin;
    const double psi_mean =
        (sum1_psi + sum2_psi) / static_cast<double>(n1 + n2);
    out.psi_deg = wrap_deg(psi_mean);
    out.theta_deg = (sum1_th + sum2_th) / static_cast<double>(n1 + n2);
    out.psi_amplitude_deg = 0.5 * (psi_max - psi_min);
    out.theta_amplitude_deg = 0.5 * (th_max - th_min);
    return out;
}

TrialRecord run_single(const SimConfig& config, SystemOptions options) {
    const auto wall_start = std::chrono::steady_clock::now();
    TrialRecord record;
    record.omega1_rpm = rad_s_to_rpm(config.omega1);
    record.omega2_rpm = rad_s_to_rpm(config.omega2);

    RobotSystem system(config, options);
    const double dt = config.solver.time_step;
    const long long steps = std::llround(config.duration / dt);
    const long long stride =
        std::max(1LL, std::llround(config.sample_stride / dt));

    double psi_prev = 0.0;
    double psi_unwrapped = 0.0;
    TorqueBreakdown last_torque;

    auto sample = [&](double t) {
        TrialSample s;
        s.t = t;
        s.f1 = system.resultant1();
        s.f2 = system.resultant2();
        const EulerAngles e = system.euler();
        s.psi_deg = deg(e.yaw);
        s.theta_deg = deg(e.pitch);
        s.phi_deg = deg(e.roll);
        const Quat& q = system.attitude().orientation;
        s.quat = Vec4(q.w(), q.x(), q.y(), q.z());
        s.omega = system.attitude().omega;
        s.psi_unwrapped_deg = psi_unwrapped;
        s.torque = last_torque;
        record.series.push_back(s);
    };

    sample(0.0);
    for (long long k = 1; k <= steps; ++k) {
        try {
            const StepDiagnostics diag = system.step();
            last_torque = diag.torque;
            record.min_contact_distance =
                std::min(record.min_contact_distance, diag.contact_min_distance);
        } catch (const StepFailure&) {
            // One retry at half the step size; a second failure ends the trial.
            try {
                StepDiagnostics diag = system.step(0.5 * dt);
                diag = system.step(0.5 * dt);
                last_torque = diag.torque;
            } catch (const StepFailure&) {
                record.completed = false;
                break;
            }
        }
        const double psi_now = deg(system.euler().yaw);
        psi_unwrapped += wrap_deg(psi_now - psi_prev);
        psi_prev = psi_now;
        if (k % stride == 0) sample(k * dt);
    }

    record.unwrapped_yaw_final_deg = psi_unwrapped;
    record.final_contact_stiffness = system.contact_stiffness();
    if (record.completed && record.series.size() >= 4) {
        std::vector<double> t, psi_u, theta;
        t.reserve(record.series.size());
        for (const TrialSample& s : record.series) {
            t.push_back(s.t);
            psi_u.push_back(s.psi_unwrapped_deg);
            theta.push_back(s.theta_deg);
        }
        if (t.back() - t.front() >= 2.0 * config.steady_window) {
            record.steady = detect_steady_state(t, psi_u, theta,
                                                config.steady_window,
                                                config.steady_tol);
        }
    }
    record.converged = record.completed && record.steady.converged;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();
    return record;
}

std::vector<double> SweepRange::values() const {
    std::vector<double> out;
    if (step <= 0.0) {
        out.push_back(start);
        return out;
    }
    for (double v = start; v <= stop + 1e-9 * std::max(1.0, std::abs(stop));
         v += step) {
        out.push_back(v);
    }
    if (out.empty()) out.push_back(start);
    return out;
}

SweepRange parse_range(const std::string& text) {
    SweepRange r;
    const size_t c1 = text.find(':');
    const size_t c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
    auto num = [&](const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') {
            throw ConfigError("bad range component '" + s + "'");
        }
        return v;
    };
    if (c1 == std::string::npos) {
        r.start = r.stop = num(text);
        r.step = 1.0;
        return r;
    }
    if (c2 == std::string::npos) {
        throw ConfigError("range must be start:stop:step, got '" + text + "'");
    }
    r.start = num(text.substr(0, c1));
    r.stop = num(text.substr(c1 + 1, c2 - c1 - 1));
    r.step = num(text.substr(c2 + 1));
    if (r.step < 0.0) throw ConfigError("range step must be >= 0");
    return r;
}

SweepResult run_sweep(const SimConfig& config, const SweepRange& omega1_rpm,
                      const SweepRange& omega2_rpm, int workers) {
    SweepResult result;
    result.omega1_rpm = omega1_rpm.values();
    result.omega2_rpm = omega2_rpm.values();
    const size_t n1 = result.omega1_rpm.size();
    const size_t n2 = result.omega2_rpm.size();
    result.trials.resize(n1 * n2);

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const size_t idx = next.fetch_add(1);
            if (idx >= n1 * n2) return;
            try {
                SimConfig trial_config = config;
                apply_override(trial_config, "omega1 = " +
                                                 fmt(result.omega1_rpm[idx / n2]) +
                                                 " rpm");
                apply_override(trial_config, "omega2 = " +
                                                 fmt(result.omega2_rpm[idx % n2]) +
                                                 " rpm");
                result.trials[idx] = run_single(trial_config);
            } catch (const std::exception&) {
                result.trials[idx].omega1_rpm = result.omega1_rpm[idx / n2];
                result.trials[idx].omega2_rpm = result.omega2_rpm[idx % n2];
                result.trials[idx].completed = false;
                result.trials[idx].converged = false;
            }
        }
    };

    workers = std::max(1, workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers - 1; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();
    return result;
}

void apply_desk_preset(SimConfig& config) {
    apply_override(config, "segment_length = 10 mm");
    apply_override(config, "contact_cutoff = 0");  // re-derive for the new dl
    apply_override(config, "time_step = 2 ms");
    apply_override(config, "duration = 60");
}

std::string timeseries_csv(const TrialRecord& record) {
    std::ostringstream out;
    out << "t_s,F1x_N,F1y_N,F1z_N,F2x_N,F2y_N,F2z_N,psi_deg,theta_deg,phi_deg,"
           "qw,qx,qy,qz,wx_rad_s,wy_rad_s,wz_rad_s\n";
    for (const TrialSample& s : record.series) {
        out << fmt(s.t) << ',' << fmt(s.f1.x()) << ',' << fmt(s.f1.y()) << ','
            << fmt(s.f1.z()) << ',' << fmt(s.f2.x()) << ',' << fmt(s.f2.y())
            << ',' << fmt(s.f2.z()) << ',' << fmt(s.psi_deg) << ','
            << fmt(s.theta_deg) << ',' << fmt(s.phi_deg) << ','
            << fmt(s.quat[0]) << ',' << fmt(s.quat[1]) << ',' << fmt(s.quat[2])
            << ',' << fmt(s.quat[3]) << ',' << fmt(s.omega.x()) << ','
            << fmt(s.omega.y()) << ',' << fmt(s.omega.z()) << '\n';
    }
    return out.str();
}

std::vector<TrialSample> parse_timeseries_csv(const std::string& text) {
    std::vector<TrialSample> out;
    std::istringstream stream(text);
    std::string line;
    bool header = true;
    while (std::getline(stream, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        double v[17];
        for (int k = 0; k < 17; ++k) {
            if (!std::getline(row, cell, ',')) {
                throw NumericalError("time-series CSV: short row");
            }
            v[k] = std::strtod(cell.c_str(), nullptr);
        }
        TrialSample s;
        s.t = v[0];
        s.f1 = Vec3(v[1], v[2], v[3]);
        s.f2 = Vec3(v[4], v[5], v[6]);
        s.psi_deg = v[7];
        s.theta_deg = v[8];
        s.phi_deg = v[9];
        s.quat = Vec4(v[10], v[11], v[12], v[13]);
        s.omega = Vec3(v[14], v[15], v[16]);
        out.push_back(s);
    }
    return out;
}

std::string map_csv(const SweepResult& sweep) {
    std::ostringstream out;
    out << "omega1_rpm,omega2_rpm,psi_ss_deg,theta_ss_deg,abs_psi_ss_deg,"
           "abs_theta_ss_deg,converged,spin_flag,yaw_unwrapped_deg\n";
    for (const TrialRecord& r : sweep.trials) {
        out << fmt(r.omega1_rpm) << ',' << fmt(r.omega2_rpm) << ','
            << fmt(r.steady.psi_deg) << ',' << fmt(r.steady.theta_deg) << ','
            << fmt(std::abs(r.steady.psi_deg)) << ','
            << fmt(std::abs(r.steady.theta_deg)) << ','
            << (r.converged ? 1 : 0) << ',' << (r.steady.spin ? 1 : 0) << ','
            << fmt(r.unwrapped_yaw_final_deg) << '\n';
    }
    return out.str();
}

std::string trial_metadata_json(const SimConfig& config,
                                const TrialRecord& record) {
    nlohmann::json j;
    j["tool"] = "flagsim";
    j["version"] = kVersion;
    j["config_hash"] = config_hash(config);
    j["config"] = serialize_config(config);
    j["omega1_rpm"] = record.omega1_rpm;
    j["omega2_rpm"] = record.omega2_rpm;
    j["completed"] = record.completed;
    j["converged"] = record.converged;
    j["spin"] = record.steady.spin;
    j["psi_ss_deg"] = record.steady.psi_deg;
    j["theta_ss_deg"] = record.steady.theta_deg;
    j["psi_amplitude_deg"] = record.steady.psi_amplitude_deg;
    j["theta_amplitude_deg"] = record.steady.theta_amplitude_deg;
    j["unwrapped_yaw_final_deg"] = record.unwrapped_yaw_final_deg;
    j["min_contact_distance_m"] = record.min_contact_distance;
    j["final_contact_stiffness"] = record.final_contact_stiffness;
    j["wall_seconds"] = record.wall_seconds;
    j["notes"] = {
        "dimensionless pitch/radius ratios use the flagellum contour length",
        "contact stiffness, tolerance, rss regularization and base drag "
        "coefficients are calibration knobs",
    };
    return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

}  // namespace flagsim
