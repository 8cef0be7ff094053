#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "flagsim/attitude.hpp"
#include "flagsim/config.hpp"
#include "flagsim/contact.hpp"
#include "flagsim/elastic.hpp"
#include "flagsim/mobility.hpp"
#include "flagsim/rod_state.hpp"

namespace flagsim {

struct NewtonResult {
    VecX q;
    int iters = 0;
    double residual_norm = 0.0;
};

// fn(q, residual, triplets): evaluates the residual and, when triplets is
// non-null, the Jacobian. Throws StepFailure after max_iters.
using ResidualFn =
    std::function<void(const VecX&, VecX&, std::vector<Triplet>*)>;

// Damped Newton on ||r||_inf with backtracking line search (halving, up to
// 10 cuts). Zero iterations when the initial guess already satisfies tol.
NewtonResult newton_solve(const ResidualFn& fn, VecX q0, double tol,
                          int max_iters);

struct SystemOptions {
    bool two_flagella = true;
    bool attitude_frozen = false;
};

struct StepDiagnostics {
    int newton_iters = 0;
    double residual_norm = 0.0;
    int contact_active = 0;
    double contact_min_distance = std::numeric_limits<double>::infinity();
    TorqueBreakdown torque;
};

// The coupled system: two discrete rods sharing a rigid base cluster on a
// ball joint. One step = explicit hydrodynamic load from start-of-step
// velocities, implicit-Euler Newton solve of the rod DOFs (elasticity and
// contact implicit), end-of-step flagella resultants, staggered attitude
// update, and a final boundary-condition pass at the new orientation.
class RobotSystem {
  public:
    explicit RobotSystem(const SimConfig& config, SystemOptions options = {});

    StepDiagnostics step() { return step(config_.solver.time_step); }
    StepDiagnostics step(double dt);

    double time() const { return time_; }
    int nodes_per_flagellum() const { return nodes_per_flagellum_; }
    int total_nodes() const { return total_nodes_; }
    int n_rods() const { return static_cast<int>(rods_.size()); }
    const Rod& rod(int i) const { return rods_[i]; }
    const AttitudeState& attitude() const { return attitude_; }
    EulerAngles euler() const { return quat_to_euler(attitude_.orientation); }
    const Vec3& resultant1() const { return resultant1_; }
    const Vec3& resultant2() const { return resultant2_; }
    double motor_angle(int i) const { return motor_angle_[i]; }
    double contact_stiffness() const { return contact_k_; }
    const SimConfig& config() const { return config_; }

    // Global node ordering: flagellum 1 (tip..root), base, flagellum 2
    // (root..tip).
    std::vector<Vec3> positions() const;
    std::vector<Vec3> node_velocities() const;
    Vec3 base_node() const { return joint_; }

    // Prescribed placement for the current attitude and motor angles; used
    // once at the start of a step and again after the attitude update.
    void apply_boundary_conditions();

    const std::vector<int>& prescribed_dofs() const { return prescribed_; }
    int dof_count() const { return n_dofs_; }

    // Initial-condition hook: reseats the boundary conditions on the given
    // orientation.
    void set_attitude(const AttitudeState& attitude);

  private:
    VecX gather_dofs() const;
    void scatter_dofs(const VecX& q);
    void refresh_rods();
    void assemble_residual(const VecX& q_full, const VecX& q_n, const VecX& u_n,
                           double dt, const VecX& f_ext, VecX& r_full,
                           std::vector<Triplet>* trips,
                           ContactSummary* contact_summary);
    // Mobility factorizations for one step: a single coupled system or one
    // per flagellum.
    std::vector<MobilitySolver> build_hydro_solvers() const;
    // Per-node forces exerted on the fluid for the given DOF rates.
    std::vector<Vec3> hydro_node_forces(const std::vector<MobilitySolver>& solvers,
                                        const VecX& u) const;
    VecX external_force(const std::vector<Vec3>& node_forces_on_fluid) const;
    ContactParams contact_params() const;

    SimConfig config_;
    SystemOptions options_;
    Stiffnesses stiff_;

    int nodes_per_flagellum_ = 0;  // N
    int total_nodes_ = 0;
    int n_dofs_ = 0;
    std::vector<Rod> rods_;
    std::vector<int> rod_offset_;   // DOF offset per rod
    int base_offset_ = 0;           // base node DOF offset
    std::vector<int> node_dof_;     // first DOF index per global node
    std::vector<ContactEdge> contact_edges_;
    SegmentTopology hydro_topology_;               // full robot, for coupled mode
    std::vector<SegmentTopology> rod_topology_;    // per rod, local indexing

    std::vector<int> prescribed_;       // global DOF indices
    std::vector<int> free_;             // global DOF indices
    std::vector<int> free_index_;       // global -> reduced (-1 if prescribed)
    VecX mass_;

    Vec3 joint_ = Vec3::Zero();
    Vec3 motor_body_[2];
    Vec3 axis_body_;       // flagellum axis, body frame (points down)
    Vec3 spin_axis_body_;  // motor rotation axis for positive omega
    Vec3 motor_director_[2];
    int stub_edge_[2] = {0, 0};  // local edge index of the motor shaft edge

    AttitudeState attitude_;
    double motor_angle_[2] = {0.0, 0.0};
    double time_ = 0.0;
    VecX u_;  // DOF rates from the last step
    Vec3 resultant1_ = Vec3::Zero();
    Vec3 resultant2_ = Vec3::Zero();
    double contact_k_ = 0.0;
    double contact_k_base_ = 0.0;
};

}  // namespace flagsim
