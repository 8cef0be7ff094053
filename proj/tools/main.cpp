#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "flagsim/sweep.hpp"
#include "flagsim/version.hpp"

namespace fs = std::filesystem;
using namespace flagsim;

namespace {

SimConfig load_from_cli(const std::string& config_path,
                        const std::vector<std::string>& overrides) {
    SimConfig config = config_path.empty()
                           ? load_config("")
                           : load_config(read_text_file(config_path));
    for (const std::string& kv : overrides) apply_override(config, kv);
    return config;
}

std::string trial_stem(double w1_rpm, double w2_rpm) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "trial_omega1_%g_omega2_%g", w1_rpm, w2_rpm);
    std::string s(buf);
    for (char& c : s) {
        if (c == '.') c = 'p';
        if (c == '-') c = 'm';
    }
    return s;
}

int cmd_simulate(const std::string& config_path,
                 const std::vector<std::string>& overrides, double omega1_rpm,
                 double omega2_rpm, double duration, const std::string& out) {
    SimConfig config = load_from_cli(config_path, overrides);
    apply_override(config, "omega1 = " + std::to_string(omega1_rpm) + " rpm");
    apply_override(config, "omega2 = " + std::to_string(omega2_rpm) + " rpm");
    if (duration > 0) apply_override(config, "duration = " + std::to_string(duration));

    std::printf("flagsim %s  |  omega1 = %g rpm, omega2 = %g rpm, %g s, dt = %g ms\n",
                kVersion, omega1_rpm, omega2_rpm, config.duration,
                config.solver.time_step * 1e3);
    const TrialRecord record = run_single(config);
    write_text_file(out, timeseries_csv(record));
    write_text_file(out + ".meta.json", trial_metadata_json(config, record));

    std::printf("%s  (wall %.1f s)\n", record.completed ? "completed" : "ABORTED",
                record.wall_seconds);
    if (record.converged) {
        std::printf("steady state: psi = %.2f deg, theta = %.2f deg "
                    "(amplitudes %.2f / %.2f deg)\n",
                    record.steady.psi_deg, record.steady.theta_deg,
                    record.steady.psi_amplitude_deg,
                    record.steady.theta_amplitude_deg);
    } else {
        std::printf("no steady state detected (spin flag: %d, unwrapped yaw %.1f deg)\n",
                    record.steady.spin ? 1 : 0, record.unwrapped_yaw_final_deg);
    }
    std::printf("wrote %s\n", out.c_str());
    return record.completed ? 0 : 1;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& overrides,
              std::string omega1_range, std::string omega2_range,
              const std::string& out_dir, bool desk_preset, int workers) {
    SimConfig config = load_from_cli(config_path, overrides);
    if (desk_preset) {
        apply_desk_preset(config);
        if (omega1_range.empty()) omega1_range = "-60:60:30";
        if (omega2_range.empty()) omega2_range = "0:90:30";
    }
    if (omega1_range.empty() || omega2_range.empty()) {
        std::fprintf(stderr, "sweep: --omega1-range and --omega2-range required "
                             "(or --preset desk)\n");
        return 2;
    }
    const SweepRange r1 = parse_range(omega1_range);
    const SweepRange r2 = parse_range(omega2_range);
    fs::create_directories(out_dir);

    const size_t total = r1.values().size() * r2.values().size();
    std::printf("flagsim %s  |  sweep %zu trials -> %s (%d workers)\n", kVersion,
                total, out_dir.c_str(), workers);
    const SweepResult result = run_sweep(config, r1, r2, workers);

    for (const TrialRecord& record : result.trials) {
        const std::string stem =
            trial_stem(record.omega1_rpm, record.omega2_rpm);
        write_text_file(out_dir + "/" + stem + ".csv", timeseries_csv(record));
        SimConfig tc = config;
        tc.omega1 = rpm_to_rad_s(record.omega1_rpm);
        tc.omega2 = rpm_to_rad_s(record.omega2_rpm);
        write_text_file(out_dir + "/" + stem + ".meta.json",
                        trial_metadata_json(tc, record));
    }
    write_text_file(out_dir + "/map.csv", map_csv(result));

    int failures = 0;
    for (const TrialRecord& r : result.trials) {
        if (!r.completed) ++failures;
    }
    std::printf("sweep done: %zu trials, %d aborted; map at %s/map.csv\n",
                result.trials.size(), failures, out_dir.c_str());
    return 0;
}

int cmd_check(const std::string& config_path,
              const std::vector<std::string>& overrides) {
    SimConfig config = load_from_cli(config_path, overrides);
    const Stiffnesses s =
        derived_stiffnesses(config.material, config.helix.cross_section_radius);
    std::printf("flagsim %s configuration check\n", kVersion);
    std::printf("config hash: %s\n", config_hash(config).c_str());
    std::printf("EA = %.6g N, EI = %.6g N m^2, GJ = %.6g N m^2\n", s.EA, s.EI,
                s.GJ);

    const double omega = std::max(std::abs(config.omega1), std::abs(config.omega2));
    const double re = reynolds_number(config.fluid.fluid_density, omega,
                                      config.helix.helix_radius,
                                      config.helix.cross_section_radius,
                                      config.fluid.viscosity);
    std::printf("Reynolds number at max speed: %.4g%s\n", re,
                re >= kReynoldsWarnThreshold
                    ? "  WARNING: outside the Stokes regime (Re >= 0.1)"
                    : "");
    const DimensionlessGroups g = dimensionless_groups(config);
    std::printf("dimensionless groups: omega*mu*l^4/EI = %.4g, d/l = %.4g, "
                "lambda/L = %.4g, R/L = %.4g (L = contour length)\n",
                g.actuation, g.spacing_ratio, g.pitch_ratio, g.radius_ratio);

    RobotSystem system(config);
    std::printf("nodes per flagellum: %d (total %d), DOFs: %d\n",
                system.nodes_per_flagellum(), system.total_nodes(),
                system.dof_count());

    // Mobility sanity on the rest geometry.
    SegmentTopology topo;
    topo.node_weight.assign(system.total_nodes(), 1.0);
    const MobilityMatrix mob = assemble_mobility(
        system.positions(),
        [&] {
            SegmentTopology t;
            t.node_weight.resize(system.total_nodes());
            for (int f = 0; f < system.n_rods(); ++f) {
                const int base = f == 0 ? 0 : system.nodes_per_flagellum() + 1;
                for (int e = 0; e < system.rod(f).n_edges(); ++e) {
                    t.segments.emplace_back(base + e, base + e + 1);
                }
                for (int i = 0; i < system.rod(f).n_nodes(); ++i) {
                    t.node_weight[base + i] = system.rod(f).voronoi[i];
                }
            }
            t.node_weight[system.nodes_per_flagellum()] = 1.0;
            return t;
        }(),
        config.rss_epsilon(), config.fluid.viscosity);
    const double asym = (mob.A - mob.A.transpose()).norm() / mob.A.norm();
    Eigen::SelfAdjointEigenSolver<MatX> es(mob.A);
    std::printf("mobility: %ld x %ld, symmetry defect %.2e, min eigenvalue %.4g\n",
                static_cast<long>(mob.A.rows()), static_cast<long>(mob.A.cols()),
                asym, es.eigenvalues().minCoeff());

    bool ok = asym < 1e-12 && es.eigenvalues().minCoeff() > 0.0;
    std::printf("%s\n", ok ? "all checks passed" : "CHECK FAILURES above");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bi-flagellated robot simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--set", overrides, "override, key=value [unit]");

    auto* simulate = app.add_subcommand("simulate", "run one trial");
    double omega1 = 0, omega2 = 0, duration = -1;
    std::string out = "trial.csv";
    simulate->add_option("--omega1", omega1, "flagellum 1 speed (rpm)");
    simulate->add_option("--omega2", omega2, "flagellum 2 speed (rpm)");
    simulate->add_option("--duration", duration, "trial length (s)");
    simulate->add_option("--out", out, "time-series CSV path");

    auto* sweep = app.add_subcommand("sweep", "run an actuation-speed grid");
    std::string omega1_range, omega2_range, out_dir = "sweep_out";
    std::string preset;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    sweep->add_option("--omega1-range", omega1_range, "start:stop:step (rpm)");
    sweep->add_option("--omega2-range", omega2_range, "start:stop:step (rpm)");
    sweep->add_option("--out-dir", out_dir, "output directory");
    sweep->add_option("--preset", preset, "'desk' for the reduced acceptance scale");
    sweep->add_option("--workers", workers, "parallel trials");

    auto* check = app.add_subcommand("check", "validate config and print diagnostics");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return cmd_simulate(config_path, overrides, omega1, omega2, duration, out);
        }
        if (sweep->parsed()) {
            if (!preset.empty() && preset != "desk") {
                std::fprintf(stderr, "unknown preset '%s'\n", preset.c_str());
                return 2;
            }
            return cmd_sweep(config_path, overrides, omega1_range, omega2_range,
                             out_dir, preset == "desk", workers);
        }
        if (check->parsed()) return cmd_check(config_path, overrides);
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
