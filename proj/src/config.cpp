#include "flagsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace flagsim {

double rpm_to_rad_s(double rpm) { return rpm * 2.0 * M_PI / 60.0; }
double rad_s_to_rpm(double rad_s) { return rad_s * 60.0 / (2.0 * M_PI); }

Mat3 BaseParams::cylinder_inertia() const {
    const double r2 = base_radius * base_radius;
    const double h2 = base_height * base_height;
    Mat3 J = Mat3::Zero();
    J(0, 0) = mass * (3.0 * r2 + h2) / 12.0;
    J(1, 1) = mass * (3.0 * r2 + h2) / 12.0;
    J(2, 2) = mass * r2 / 2.0;
    return J;
}

double SimConfig::rss_epsilon() const {
    return solver.rss_regularization > 0.0 ? solver.rss_regularization
                                           : helix.cross_section_radius;
}

double SimConfig::contact_cutoff() const {
    if (solver.contact_cutoff > 0.0) return solver.contact_cutoff;
    return 2.0 * helix.cross_section_radius + solver.contact_tolerance +
           2.0 * solver.segment_length;
}

Stiffnesses derived_stiffnesses(const MaterialParams& material, double radius) {
    const double r2 = radius * radius;
    const double r4 = r2 * r2;
    Stiffnesses s;
    s.EA = material.youngs_modulus * M_PI * r2;
    s.EI = material.youngs_modulus * M_PI * r4 / 4.0;
    s.GJ = material.shear_modulus() * M_PI * r4 / 2.0;
    return s;
}

double reynolds_number(double fluid_density, double omega, double helix_radius,
                       double cross_section_radius, double viscosity) {
    return fluid_density * std::abs(omega) * helix_radius * cross_section_radius /
           viscosity;
}

DimensionlessGroups dimensionless_groups(const SimConfig& config) {
    const Stiffnesses s =
        derived_stiffnesses(config.material, config.helix.cross_section_radius);
    const double omega = std::max(std::abs(config.omega1), std::abs(config.omega2));
    const double l = config.helix.axial_length;
    const double turns = l / config.helix.helix_pitch;
    const double circumference = 2.0 * M_PI * config.helix.helix_radius;
    const double contour = turns * std::sqrt(circumference * circumference +
                                             config.helix.helix_pitch *
                                                 config.helix.helix_pitch);
    DimensionlessGroups g;
    g.actuation = omega * config.fluid.viscosity * l * l * l * l / s.EI;
    g.spacing_ratio = config.base.motor_separation / l;
    g.pitch_ratio = config.helix.helix_pitch / contour;
    g.radius_ratio = config.helix.helix_radius / contour;
    return g;
}

namespace {

enum class Dim { Length, Time, Mass, Pressure, AngularSpeed, Angle, Viscosity,
                 Density, Inertia, Plain };

double unit_factor(Dim dim, const std::string& unit, const std::string& key) {
    if (unit.empty()) return 1.0;  // bare numbers are SI
    struct Entry { Dim dim; const char* name; double factor; };
    static const Entry table[] = {
        {Dim::Length, "m", 1.0},       {Dim::Length, "mm", 1e-3},
        {Dim::Length, "cm", 1e-2},     {Dim::Time, "s", 1.0},
        {Dim::Time, "ms", 1e-3},       {Dim::Mass, "kg", 1.0},
        {Dim::Mass, "g", 1e-3},        {Dim::Pressure, "Pa", 1.0},
        {Dim::Pressure, "kPa", 1e3},   {Dim::Pressure, "MPa", 1e6},
        {Dim::AngularSpeed, "rad/s", 1.0},
        {Dim::AngularSpeed, "rpm", 2.0 * M_PI / 60.0},
        {Dim::Angle, "rad", 1.0},      {Dim::Angle, "deg", M_PI / 180.0},
        {Dim::Viscosity, "Pa.s", 1.0}, {Dim::Viscosity, "Pa*s", 1.0},
        {Dim::Density, "kg/m3", 1.0},  {Dim::Density, "kg/m^3", 1.0},
        {Dim::Inertia, "kg.m2", 1.0},  {Dim::Plain, "", 1.0},
    };
    for (const Entry& e : table) {
        if (e.dim == dim && unit == e.name) return e.factor;
    }
    throw ConfigError("unknown unit '" + unit + "' for key '" + key + "'");
}

struct KeySpec {
    Dim dim;
    std::function<void(SimConfig&, double)> set;
};

const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = {
        {"helix_radius", {Dim::Length, [](SimConfig& c, double v) { c.helix.helix_radius = v; }}},
        {"helix_pitch", {Dim::Length, [](SimConfig& c, double v) { c.helix.helix_pitch = v; }}},
        {"axial_length", {Dim::Length, [](SimConfig& c, double v) { c.helix.axial_length = v; }}},
        {"cross_section_radius", {Dim::Length, [](SimConfig& c, double v) { c.helix.cross_section_radius = v; }}},
        {"youngs_modulus", {Dim::Pressure, [](SimConfig& c, double v) { c.material.youngs_modulus = v; }}},
        {"poisson_ratio", {Dim::Plain, [](SimConfig& c, double v) { c.material.poisson_ratio = v; }}},
        {"density", {Dim::Density, [](SimConfig& c, double v) { c.material.density = v; }}},
        {"mass", {Dim::Mass, [](SimConfig& c, double v) { c.base.mass = v; }}},
        {"base_radius", {Dim::Length, [](SimConfig& c, double v) { c.base.base_radius = v; }}},
        {"base_height", {Dim::Length, [](SimConfig& c, double v) { c.base.base_height = v; }}},
        {"motor_separation", {Dim::Length, [](SimConfig& c, double v) { c.base.motor_separation = v; }}},
        {"mass_center_shift", {Dim::Length, [](SimConfig& c, double v) { c.base.mass_center_shift = v; }}},
        {"inertia_xx", {Dim::Inertia, [](SimConfig& c, double v) { c.base.inertia(0, 0) = v; }}},
        {"inertia_yy", {Dim::Inertia, [](SimConfig& c, double v) { c.base.inertia(1, 1) = v; }}},
        {"inertia_zz", {Dim::Inertia, [](SimConfig& c, double v) { c.base.inertia(2, 2) = v; }}},
        {"drag_coeff_x", {Dim::Plain, [](SimConfig& c, double v) { c.base.drag_coeff_x = v; }}},
        {"drag_coeff_y", {Dim::Plain, [](SimConfig& c, double v) { c.base.drag_coeff_y = v; }}},
        {"drag_coeff_z", {Dim::Plain, [](SimConfig& c, double v) { c.base.drag_coeff_z = v; }}},
        {"viscosity", {Dim::Viscosity, [](SimConfig& c, double v) { c.fluid.viscosity = v; }}},
        {"fluid_density", {Dim::Density, [](SimConfig& c, double v) { c.fluid.fluid_density = v; }}},
        {"segment_length", {Dim::Length, [](SimConfig& c, double v) { c.solver.segment_length = v; }}},
        {"time_step", {Dim::Time, [](SimConfig& c, double v) { c.solver.time_step = v; }}},
        {"newton_tol", {Dim::Plain, [](SimConfig& c, double v) { c.solver.newton_tol = v; }}},
        {"newton_max_iters", {Dim::Plain, [](SimConfig& c, double v) { c.solver.newton_max_iters = static_cast<int>(v); }}},
        {"contact_stiffness", {Dim::Plain, [](SimConfig& c, double v) { c.solver.contact_stiffness = v; }}},
        {"contact_tolerance", {Dim::Length, [](SimConfig& c, double v) { c.solver.contact_tolerance = v; }}},
        {"contact_cutoff", {Dim::Length, [](SimConfig& c, double v) { c.solver.contact_cutoff = v; }}},
        {"rss_regularization", {Dim::Length, [](SimConfig& c, double v) { c.solver.rss_regularization = v; }}},
        {"omega1", {Dim::AngularSpeed, [](SimConfig& c, double v) { c.omega1 = v; }}},
        {"omega2", {Dim::AngularSpeed, [](SimConfig& c, double v) { c.omega2 = v; }}},
        {"duration", {Dim::Time, [](SimConfig& c, double v) { c.duration = v; }}},
        {"max_speed", {Dim::AngularSpeed, [](SimConfig& c, double v) { c.max_speed = v; }}},
        {"phase1", {Dim::Angle, [](SimConfig& c, double v) { c.phase1 = v; }}},
        {"phase2", {Dim::Angle, [](SimConfig& c, double v) { c.phase2 = v; }}},
        {"sample_stride", {Dim::Time, [](SimConfig& c, double v) { c.sample_stride = v; }}},
        {"steady_window", {Dim::Time, [](SimConfig& c, double v) { c.steady_window = v; }}},
        {"steady_tol", {Dim::Plain, [](SimConfig& c, double v) { c.steady_tol = v; }}},
    };
    return table;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& token, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
        throw ConfigError("non-numeric value '" + token + "' for key '" + key + "'");
    }
    return v;
}

void apply_line(SimConfig& config, const std::string& raw_line) {
    std::string line = raw_line;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) return;

    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string rhs = trim(line.substr(eq + 1));
    if (key.empty() || rhs.empty()) {
        throw ConfigError("expected 'key = value', got '" + line + "'");
    }

    // Non-numeric keys.
    if (key == "handedness") {
        if (rhs == "right") config.helix.handedness = Handedness::Right;
        else if (rhs == "left") config.helix.handedness = Handedness::Left;
        else throw ConfigError("handedness must be 'right' or 'left', got '" + rhs + "'");
        return;
    }
    if (key == "rod_gravity" || key == "torque_per_node" || key == "hydro_coupling") {
        bool value;
        if (rhs == "0" || rhs == "false") value = false;
        else if (rhs == "1" || rhs == "true") value = true;
        else throw ConfigError(key + " must be 0/1/true/false, got '" + rhs + "'");
        if (key == "rod_gravity") config.rod_gravity = value;
        else if (key == "torque_per_node") config.torque_per_node = value;
        else config.hydro_coupling = value;
        return;
    }

    const auto it = key_table().find(key);
    if (it == key_table().end()) {
        throw ConfigError("unknown key '" + key + "'");
    }

    // Split "value [unit]".
    std::string value_token = rhs;
    std::string unit;
    const size_t sp = rhs.find_first_of(" \t");
    if (sp != std::string::npos) {
        value_token = trim(rhs.substr(0, sp));
        unit = trim(rhs.substr(sp));
    }
    const double raw = parse_number(value_token, key);
    it->second.set(config, raw * unit_factor(it->second.dim, unit, key));
}

void check(bool ok, const std::string& key, double value, const std::string& bound) {
    if (!ok) {
        std::ostringstream oss;
        oss << "invariant violation: " << key << " = " << value
            << " (required: " << bound << ")";
        throw ConfigError(oss.str());
    }
}

void resolve(SimConfig& config) {
    if (config.base.inertia.isZero()) {
        config.base.inertia = config.base.cylinder_inertia();
    }
    if (config.solver.rss_regularization <= 0.0) {
        config.solver.rss_regularization = config.helix.cross_section_radius;
    }
    if (config.solver.contact_cutoff <= 0.0) {
        config.solver.contact_cutoff = 2.0 * config.helix.cross_section_radius +
                                       config.solver.contact_tolerance +
                                       2.0 * config.solver.segment_length;
    }
}

void validate(const SimConfig& c) {
    check(c.helix.helix_radius >= 0, "helix_radius", c.helix.helix_radius, ">= 0");
    check(c.helix.helix_pitch > 0, "helix_pitch", c.helix.helix_pitch, "> 0");
    check(c.helix.axial_length > 0, "axial_length", c.helix.axial_length, "> 0");
    check(c.helix.cross_section_radius > 0, "cross_section_radius",
          c.helix.cross_section_radius, "> 0");
    check(c.helix.cross_section_radius < c.helix.helix_pitch, "cross_section_radius",
          c.helix.cross_section_radius, "< helix_pitch");

    check(c.material.youngs_modulus > 0, "youngs_modulus", c.material.youngs_modulus, "> 0");
    check(c.material.poisson_ratio >= 0 && c.material.poisson_ratio <= 0.5,
          "poisson_ratio", c.material.poisson_ratio, "0 <= poisson_ratio <= 0.5");
    check(c.material.density > 0, "density", c.material.density, "> 0");

    check(c.base.mass > 0, "mass", c.base.mass, "> 0");
    check(c.base.base_radius > 0, "base_radius", c.base.base_radius, "> 0");
    check(c.base.base_height > 0, "base_height", c.base.base_height, "> 0");
    check(c.base.motor_separation > 0, "motor_separation", c.base.motor_separation, "> 0");
    check(c.base.mass_center_shift > 0, "mass_center_shift", c.base.mass_center_shift, "> 0");
    if (!c.base.inertia.isApprox(c.base.inertia.transpose(), 1e-12)) {
        throw ConfigError("invariant violation: inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(c.base.inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw ConfigError("invariant violation: inertia must be positive-definite");
    }

    check(c.fluid.viscosity > 0, "viscosity", c.fluid.viscosity, "> 0");
    check(c.fluid.fluid_density > 0, "fluid_density", c.fluid.fluid_density, "> 0");

    check(c.solver.segment_length > 0, "segment_length", c.solver.segment_length, "> 0");
    check(c.solver.time_step > 0, "time_step", c.solver.time_step, "> 0");
    check(c.solver.newton_tol > 0, "newton_tol", c.solver.newton_tol, "> 0");
    check(c.solver.newton_max_iters >= 1, "newton_max_iters",
          c.solver.newton_max_iters, ">= 1");
    check(c.solver.contact_stiffness > 0, "contact_stiffness",
          c.solver.contact_stiffness, "> 0");
    check(c.solver.contact_tolerance > 0, "contact_tolerance",
          c.solver.contact_tolerance, "> 0");
    check(c.solver.rss_regularization > 0, "rss_regularization",
          c.solver.rss_regularization, "> 0");
    const double min_cutoff =
        2.0 * c.helix.cross_section_radius + c.solver.contact_tolerance;
    check(c.solver.contact_cutoff >= min_cutoff, "contact_cutoff",
          c.solver.contact_cutoff, ">= 2r + contact_tolerance");

    check(std::abs(c.omega1) <= c.max_speed + 1e-12, "omega1", c.omega1,
          "|omega1| <= max_speed");
    check(std::abs(c.omega2) <= c.max_speed + 1e-12, "omega2", c.omega2,
          "|omega2| <= max_speed");
    check(c.duration >= 0, "duration", c.duration, ">= 0");
    check(c.sample_stride > 0, "sample_stride", c.sample_stride, "> 0");
    check(c.steady_window > 0, "steady_window", c.steady_window, "> 0");
    check(c.steady_tol > 0, "steady_tol", c.steady_tol, "> 0");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

SimConfig load_config(const std::string& text) {
    SimConfig config;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        apply_line(config, line);
    }
    resolve(config);
    validate(config);
    return config;
}

void apply_override(SimConfig& config, const std::string& key_value) {
    apply_line(config, key_value);
    resolve(config);
    validate(config);
}

std::string serialize_config(const SimConfig& c) {
    std::ostringstream out;
    out << "# resolved configuration, SI units\n";
    out << "helix_radius = " << fmt(c.helix.helix_radius) << "\n";
    out << "helix_pitch = " << fmt(c.helix.helix_pitch) << "\n";
    out << "axial_length = " << fmt(c.helix.axial_length) << "\n";
    out << "cross_section_radius = " << fmt(c.helix.cross_section_radius) << "\n";
    out << "handedness = " << (c.helix.handedness == Handedness::Right ? "right" : "left") << "\n";
    out << "youngs_modulus = " << fmt(c.material.youngs_modulus) << "\n";
    out << "poisson_ratio = " << fmt(c.material.poisson_ratio) << "\n";
    out << "density = " << fmt(c.material.density) << "\n";
    out << "mass = " << fmt(c.base.mass) << "\n";
    out << "base_radius = " << fmt(c.base.base_radius) << "\n";
    out << "base_height = " << fmt(c.base.base_height) << "\n";
    out << "motor_separation = " << fmt(c.base.motor_separation) << "\n";
    out << "mass_center_shift = " << fmt(c.base.mass_center_shift) << "\n";
    out << "inertia_xx = " << fmt(c.base.inertia(0, 0)) << "\n";
    out << "inertia_yy = " << fmt(c.base.inertia(1, 1)) << "\n";
    out << "inertia_zz = " << fmt(c.base.inertia(2, 2)) << "\n";
    out << "drag_coeff_x = " << fmt(c.base.drag_coeff_x) << "\n";
    out << "drag_coeff_y = " << fmt(c.base.drag_coeff_y) << "\n";
    out << "drag_coeff_z = " << fmt(c.base.drag_coeff_z) << "\n";
    out << "viscosity = " << fmt(c.fluid.viscosity) << "\n";
    out << "fluid_density = " << fmt(c.fluid.fluid_density) << "\n";
    out << "segment_length = " << fmt(c.solver.segment_length) << "\n";
    out << "time_step = " << fmt(c.solver.time_step) << "\n";
    out << "newton_tol = " << fmt(c.solver.newton_tol) << "\n";
    out << "newton_max_iters = " << c.solver.newton_max_iters << "\n";
    out << "contact_stiffness = " << fmt(c.solver.contact_stiffness) << "\n";
    out << "contact_tolerance = " << fmt(c.solver.contact_tolerance) << "\n";
    out << "contact_cutoff = " << fmt(c.solver.contact_cutoff) << "\n";
    out << "rss_regularization = " << fmt(c.solver.rss_regularization) << "\n";
    out << "omega1 = " << fmt(c.omega1) << "\n";
    out << "omega2 = " << fmt(c.omega2) << "\n";
    out << "duration = " << fmt(c.duration) << "\n";
    out << "max_speed = " << fmt(c.max_speed) << "\n";
    out << "phase1 = " << fmt(c.phase1) << "\n";
    out << "phase2 = " << fmt(c.phase2) << "\n";
    out << "rod_gravity = " << (c.rod_gravity ? 1 : 0) << "\n";
    out << "torque_per_node = " << (c.torque_per_node ? 1 : 0) << "\n";
    out << "hydro_coupling = " << (c.hydro_coupling ? 1 : 0) << "\n";
    out << "sample_stride = " << fmt(c.sample_stride) << "\n";
    out << "steady_window = " << fmt(c.steady_window) << "\n";
    out << "steady_tol = " << fmt(c.steady_tol) << "\n";
    return out.str();
}

std::string config_hash(const SimConfig& config) {
    const std::string text = serialize_config(config);
    uint64_t h = 1469598103934665603ull;
    for (const char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace flagsim
