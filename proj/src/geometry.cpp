#include "flagsim/geometry.hpp"

#include <cmath>

namespace flagsim {

Vec3 parallel_transport(const Vec3& v, const Vec3& t_from, const Vec3& t_to) {
    const double c = t_from.dot(t_to);
    if (c <= -1.0 + 1e-10) {
        throw NumericalError("degenerate parallel transport: antiparallel tangents");
    }
    const Vec3 b = t_from.cross(t_to);
    // Rodrigues with the half-angle form; exact for c -> 1.
    return c * v + b.cross(v) + (b.dot(v) / (1.0 + c)) * b;
}

double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis) {
    const Vec3 w = u.cross(v);
    double angle = std::atan2(w.norm(), u.dot(v));
    if (w.dot(axis) < 0.0) angle = -angle;
    return angle;
}

Vec3 perpendicular_unit(const Vec3& t) {
    // Cross with the axis least aligned with t.
    Vec3 axis = Vec3::UnitX();
    const Vec3 a = t.cwiseAbs();
    if (a.y() <= a.x() && a.y() <= a.z()) axis = Vec3::UnitY();
    else if (a.z() <= a.x() && a.z() <= a.y()) axis = Vec3::UnitZ();
    return t.cross(axis).normalized();
}

Vec3 curvature_binormal(const Vec3& e_prev, const Vec3& e_next) {
    const double denom = e_prev.norm() * e_next.norm() + e_prev.dot(e_next);
    if (denom <= 1e-14 * e_prev.norm() * e_next.norm()) {
        throw NumericalError("degenerate kink: antiparallel edges");
    }
    return 2.0 * e_prev.cross(e_next) / denom;
}

double reference_twist(const Vec3& d1_prev, const Vec3& t_prev,
                       const Vec3& d1_next, const Vec3& t_next) {
    const Vec3 transported = parallel_transport(d1_prev, t_prev, t_next);
    return signed_angle(transported, d1_next, t_next);
}

double helix_contour_length(const HelixParams& helix) {
    const double turns = helix.axial_length / helix.helix_pitch;
    const double circumference = 2.0 * M_PI * helix.helix_radius;
    return turns * std::sqrt(circumference * circumference +
                             helix.helix_pitch * helix.helix_pitch);
}

std::vector<Vec3> generate_helix_nodes(const HelixParams& helix, double dl,
                                       const Vec3& root, const Vec3& axis,
                                       double phase) {
    if (axis.norm() < 1e-12) {
        throw NumericalError("degenerate helix axis");
    }
    const Vec3 a = axis.normalized();
    const Vec3 u = perpendicular_unit(a);
    const Vec3 v = a.cross(u);  // (u, v, a) right-handed

    const double contour = helix_contour_length(helix);
    if (dl >= contour) {
        throw NumericalError("segment length exceeds helix contour length");
    }
    const double turns = helix.axial_length / helix.helix_pitch;
    const double angular_rate = 2.0 * M_PI * turns / contour;  // rad per arc length
    const double axial_rate = helix.axial_length / contour;
    const double sign = helix.handedness == Handedness::Right ? 1.0 : -1.0;

    const int edges = static_cast<int>(std::floor(contour / dl + 1e-9));
    std::vector<Vec3> nodes;
    nodes.reserve(edges + 1);
    for (int k = 0; k <= edges; ++k) {
        const double s = k * dl;
        const double angle = sign * (angular_rate * s) + phase;
        nodes.push_back(root + axial_rate * s * a +
                        helix.helix_radius * (std::cos(angle) * u + std::sin(angle) * v));
    }
    return nodes;
}

}  // namespace flagsim
