#pragma once

#include <vector>

#include "flagsim/config.hpp"
#include "flagsim/rod_state.hpp"
#include "flagsim/types.hpp"

namespace flagsim {

struct EnergyBreakdown {
    double stretch = 0.0;
    double bend = 0.0;
    double twist = 0.0;
    double total() const { return stretch + bend + twist; }
};

// Each accumulator adds the rod's contribution to the energy, the gradient,
// and (optionally) Hessian triplets. DOF indices follow the Rod layout
// shifted by `offset`; `grad` must already be sized to cover them. The rod's
// update_frames() must be current.
void accumulate_stretch(const Rod& rod, double EA, double& energy, VecX* grad,
                        std::vector<Triplet>* hess, int offset = 0);
void accumulate_bend(const Rod& rod, double EI, double& energy, VecX* grad,
                     std::vector<Triplet>* hess, int offset = 0);
void accumulate_twist(const Rod& rod, double GJ, double& energy, VecX* grad,
                      std::vector<Triplet>* hess, int offset = 0);

EnergyBreakdown elastic_energy(const Rod& rod, const Stiffnesses& stiff,
                               VecX* grad = nullptr,
                               std::vector<Triplet>* hess = nullptr,
                               int offset = 0);

// Lumped masses per rod DOF: rho pi r^2 * voronoi length for positions,
// rho pi r^4 / 2 * rest edge length for twist angles.
VecX lumped_mass(const Rod& rod, const MaterialParams& material,
                 double cross_section_radius);

// Implicit-Euler residual for a standalone rod at configuration q:
//   r(q) = M (q - q_prev - dt u_prev) / dt^2 + grad E(q) - f_external,
// with Jacobian M / dt^2 + Hessian E when requested. Sets the rod to q.
void eom_residual(Rod& rod, const Stiffnesses& stiff, const VecX& mass,
                  const VecX& q, const VecX& q_prev, const VecX& u_prev,
                  double dt, const VecX& f_external, VecX& residual,
                  std::vector<Triplet>* jacobian);

}  // namespace flagsim
