#pragma once

#include <limits>
#include <vector>

#include "flagsim/types.hpp"

namespace flagsim {

struct ContactParams {
    double stiffness = 1e3;      // k, gradient multiplier
    double tolerance = 0.01e-3;  // delta (m)
    double cross_section = 6e-3; // r (m)
    double cutoff = 0.0;         // broad-phase candidate distance (m)
    // Same-rod pairs closer than this many edges apart are the rod's own
    // continuous surface, not contact. Must keep the arc separation of
    // admitted pairs above 2r + tolerance.
    int min_edge_gap = 3;
};

struct MinDistResult {
    double distance;
    double s, t;  // closest-point parameters in [0,1]
};

// Global minimum distance between the closed segments [p0,p1] and [q0,q1].
// Zero-length segments degrade to points.
MinDistResult min_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                           const Vec3& q1);

// Smooth clamped penetration energy of the edge-pair distance: zero with zero
// slope at 2r + delta, cubic growth inward, finite everywhere.
double contact_energy(double distance, const ContactParams& params);
double contact_energy_ddist(double distance, const ContactParams& params);
double contact_energy_d2dist(double distance, const ContactParams& params);

// One rod edge for collision purposes: endpoint node ids plus rod/local
// indices for the adjacency exclusion.
struct ContactEdge {
    int node_a, node_b;
    int rod, local;
};

// AABB broad phase inflated by the cutoff. Excludes same-rod pairs closer
// than min_edge_gap edges apart.
std::vector<std::pair<int, int>> contact_candidates(
    const std::vector<Vec3>& positions, const std::vector<ContactEdge>& edges,
    double cutoff, int min_edge_gap = 3);

struct ContactSummary {
    int candidates = 0;
    int active = 0;  // pairs inside the energy support
    double min_distance = std::numeric_limits<double>::infinity();
};

// Accumulates k * grad E into `grad_out` (node n's x-component at index
// node_dof[n], etc.) and k * Hessian E triplets into `hess`; either may be
// null. The Hessian holds the closest-point parameters fixed, which is exact
// for boundary-clamped pairs.
ContactSummary accumulate_contact(const std::vector<Vec3>& positions,
                                  const std::vector<ContactEdge>& edges,
                                  const ContactParams& params, double k,
                                  const std::vector<int>& node_dof,
                                  VecX* grad_out, std::vector<Triplet>* hess);

// Force exerted on every node (= -k grad E), for diagnostics and tests.
std::vector<Vec3> contact_forces(const std::vector<Vec3>& positions,
                                 const std::vector<ContactEdge>& edges,
                                 const ContactParams& params);

}  // namespace flagsim
