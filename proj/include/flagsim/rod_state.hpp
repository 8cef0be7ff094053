#pragma once

#include <vector>

#include "flagsim/geometry.hpp"
#include "flagsim/types.hpp"

namespace flagsim {

// One discrete rod: nodes, per-edge twist angles, reference and material
// frames, and the undeformed (as-built) state. Reference frames evolve by
// time-parallel transport from a committed base configuration, so all
// derived quantities are well-defined functions of (x, theta) between
// commits.
class Rod {
  public:
    // Rest state is the polyline as given. Frames are seeded at `seed_edge`
    // (with `seed_d1` if provided, else an arbitrary perpendicular) and
    // space-transported outward in both directions.
    static Rod from_polyline(const std::vector<Vec3>& nodes, int seed_edge = 0,
                             const Vec3* seed_d1 = nullptr);

    int n_nodes() const { return static_cast<int>(x.size()); }
    int n_edges() const { return n_nodes() - 1; }
    int n_dofs() const { return 4 * n_nodes() - 1; }

    // Current configuration.
    std::vector<Vec3> x;
    std::vector<double> theta;  // per edge

    // Undeformed state.
    std::vector<double> rest_len;   // per edge
    std::vector<double> voronoi;    // per node; half-edge shares, one-sided ends
    std::vector<Vec2> rest_kappa;   // per node, interior entries meaningful
    std::vector<double> rest_twist; // per node, interior entries meaningful

    // Committed transport base (start-of-step frames). The reference twist
    // is tracked on a continuous branch anchored at the committed values, so
    // accumulated frame holonomy never wraps through +-pi.
    std::vector<Vec3> base_tangent;       // per edge
    std::vector<Vec3> base_d1;            // per edge
    std::vector<double> ref_twist_anchor; // per node

    // Derived from the current configuration by update_frames().
    std::vector<Vec3> edge;     // per edge
    std::vector<double> len;    // per edge
    std::vector<Vec3> tangent;  // per edge
    std::vector<Vec3> d1, d2;   // reference frame, per edge
    std::vector<Vec3> m1, m2;   // material frame, per edge
    std::vector<double> ref_twist;  // per node (interior)
    std::vector<Vec2> kappa;        // per node (interior); kappa2 carries the
                                    // +(m1_prev + m1_next) . kb sign
    std::vector<double> twist;      // per node (interior)

    // Recompute edges, frames (transport + one Gram-Schmidt pass), reference
    // twists, material frames, and curvatures from x and theta.
    void update_frames();

    // Accept the current frames as the transport base for the next step.
    void commit_frames();

    double rest_length_total() const;

    // Interleaved local DOF vector [x0, th0, x1, th1, ..., x_{n-1}].
    VecX get_dofs() const;
    void set_dofs(const VecX& q);
    static int pos_index(int node) { return 4 * node; }
    static int theta_index(int e) { return 4 * e + 3; }
};

}  // namespace flagsim
