#pragma once

#include <vector>

#include "flagsim/config.hpp"
#include "flagsim/types.hpp"

namespace flagsim {

// Minimal rotation carrying unit tangent t_from onto t_to, applied to v.
// Throws NumericalError for (near-)antiparallel tangents: that state means
// an edge flipped within one step and the trajectory is unusable.
Vec3 parallel_transport(const Vec3& v, const Vec3& t_from, const Vec3& t_to);

// Signed angle from u to v about a unit axis, in (-pi, pi].
double signed_angle(const Vec3& u, const Vec3& v, const Vec3& axis);

inline double wrap_pi(double angle) {
    angle = std::fmod(angle + M_PI, 2.0 * M_PI);
    if (angle <= 0.0) angle += 2.0 * M_PI;
    return angle - M_PI;
}

// Deterministic unit vector perpendicular to t.
Vec3 perpendicular_unit(const Vec3& t);

// Discrete curvature binormal at the node joining edges e_prev, e_next:
// 2 e_prev x e_next / (|e_prev||e_next| + e_prev . e_next).
Vec3 curvature_binormal(const Vec3& e_prev, const Vec3& e_next);

// Material directors from the reference pair and a twist angle.
inline void material_frame(const Vec3& d1, const Vec3& d2, double theta,
                           Vec3& m1, Vec3& m2) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    m1 = c * d1 + s * d2;
    m2 = -s * d1 + c * d2;
}

// Signed rotation of the reference frame about the shared tangent when edge
// (i-1)'s frame is parallel-transported onto edge i.
double reference_twist(const Vec3& d1_prev, const Vec3& t_prev,
                       const Vec3& d1_next, const Vec3& t_next);

// Contour length of the ideal helix: (l/lambda) sqrt((2 pi R)^2 + lambda^2).
double helix_contour_length(const HelixParams& helix);

// Samples the helix centerline at uniform arc-length spacing dl, starting at
// the root end. `root` is the point on the helix axis at the root; the first
// sample sits at radial distance R from it. The final sample lands within dl
// of the arc end.
std::vector<Vec3> generate_helix_nodes(const HelixParams& helix, double dl,
                                       const Vec3& root, const Vec3& axis,
                                       double phase);

}  // namespace flagsim
