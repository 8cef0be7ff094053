#pragma once

#include <utility>
#include <vector>

#include "flagsim/types.hpp"

namespace flagsim {

// Which node pairs carry force-interpolating segments, and the per-node
// length weight turning a nodal force into a line density (Voronoi share of
// the rest length). Nodes that appear in no segment (the base node) get a
// regularized point self-term so the system stays nonsingular.
struct SegmentTopology {
    std::vector<std::pair<int, int>> segments;
    std::vector<double> node_weight;  // size = node count, in meters
};

// Dense mobility matrix: velocity = A * force, force meaning the force each
// node exerts on the fluid. Assembled from regularized Stokeslet segments
// with linear force-density interpolation, integrated analytically along
// each straight segment, then symmetrized.
struct MobilityMatrix {
    MatX A;
    double epsilon;
    double viscosity;
};

MobilityMatrix assemble_mobility(const std::vector<Vec3>& positions,
                                 const SegmentTopology& topology, double epsilon,
                                 double viscosity);

// Shared factorization for the solves within one step. Throws NumericalError
// when the condition estimate exceeds 1e12.
class MobilitySolver {
  public:
    explicit MobilitySolver(const MobilityMatrix& mobility);
    // Node forces on the fluid, from node velocities (both stacked 3n).
    VecX solve(const VecX& velocities) const;

  private:
    Eigen::LDLT<MatX> ldlt_;
};

VecX solve_forces(const MobilityMatrix& mobility, const VecX& velocities);

// F1 = -sum_{i=0}^{N-1} f_i, F2 = -sum_{i=N+1}^{2N} f_i: net hydrodynamic
// force on each flagellum (equal and opposite to what its nodes exert on the
// fluid).
std::pair<Vec3, Vec3> flagellum_resultants(const std::vector<Vec3>& node_forces,
                                           int nodes_per_flagellum);

inline std::vector<Vec3> split_vec3(const VecX& stacked) {
    std::vector<Vec3> out(stacked.size() / 3);
    for (size_t i = 0; i < out.size(); ++i) out[i] = stacked.segment<3>(3 * i);
    return out;
}

inline VecX stack_vec3(const std::vector<Vec3>& nodes) {
    VecX out(3 * nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) out.segment<3>(3 * i) = nodes[i];
    return out;
}

}  // namespace flagsim
