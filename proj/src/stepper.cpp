#include "flagsim/stepper.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

namespace flagsim {

NewtonResult newton_solve(const ResidualFn& fn, VecX q0, double tol,
                          int max_iters) {
    const int n = static_cast<int>(q0.size());
    VecX q = std::move(q0);
    VecX r(n);
    std::vector<Triplet> trips;
    int iters = 0;

    while (true) {
        trips.clear();
        fn(q, r, &trips);
        const double rn = r.lpNorm<Eigen::Infinity>();
        if (rn < tol) return {q, iters, rn};
        if (iters >= max_iters) {
            throw StepFailure("newton_solve: no convergence", rn);
        }

        SpMat J(n, n);
        J.setFromTriplets(trips.begin(), trips.end());
        J.makeCompressed();
        Eigen::SparseLU<SpMat> lu(J);
        if (lu.info() != Eigen::Success) {
            throw StepFailure("newton_solve: singular Jacobian", rn);
        }
        const VecX dq = lu.solve(-r);

        // Backtracking on ||r||_inf; after 10 cuts take the smallest step.
        double alpha = 1.0;
        VecX q_try(n), r_try(n);
        for (int cut = 0; cut <= 10; ++cut) {
            q_try = q + alpha * dq;
            fn(q_try, r_try, nullptr);
            if (r_try.lpNorm<Eigen::Infinity>() < rn || cut == 10) break;
            alpha *= 0.5;
        }
        q = q_try;
        ++iters;
    }
}

RobotSystem::RobotSystem(const SimConfig& config, SystemOptions options)
    : config_(config), options_(options) {
    stiff_ = derived_stiffnesses(config_.material,
                                 config_.helix.cross_section_radius);

    const double dl = config_.solver.segment_length;
    axis_body_ = Vec3(0.0, 0.0, -1.0);
    // Positive motor speed turns the rotor counter-clockwise seen from the
    // flagella side; with the right-handed coil this pushes fluid up and the
    // reaction thrust down.
    spin_axis_body_ = Vec3(0.0, 0.0, -1.0);
    // Motor 1 sits on the -x side: the faster flagellum's stronger downward
    // thrust then pitches the nose down (negative pitch), matching the
    // lever-arm torque (F1z - F2z) d/2 about y_B.
    motor_body_[0] = Vec3(-0.5 * config_.base.motor_separation, 0.0, 0.0);
    motor_body_[1] = Vec3(0.5 * config_.base.motor_separation, 0.0, 0.0);

    const int n_rods = options_.two_flagella ? 2 : 1;
    const double phase[2] = {config_.phase1, config_.phase2};
    const Vec3 seed_d1 = Vec3::UnitX();

    for (int f = 0; f < n_rods; ++f) {
        const Vec3 stub_end = motor_body_[f] + dl * axis_body_;
        const std::vector<Vec3> coil = generate_helix_nodes(
            config_.helix, dl, stub_end, axis_body_, phase[f]);

        std::vector<Vec3> nodes;
        nodes.reserve(coil.size() + 2);
        if (f == 0) {
            // Flagellum 1 runs tip..root.
            nodes.assign(coil.rbegin(), coil.rend());
            nodes.push_back(stub_end);
            nodes.push_back(motor_body_[f]);
            stub_edge_[f] = static_cast<int>(nodes.size()) - 2;
        } else {
            // Flagellum 2 runs root..tip.
            nodes.push_back(motor_body_[f]);
            nodes.push_back(stub_end);
            nodes.insert(nodes.end(), coil.begin(), coil.end());
            stub_edge_[f] = 0;
        }
        rods_.push_back(Rod::from_polyline(nodes, stub_edge_[f], &seed_d1));
        motor_director_[f] = rods_[f].base_d1[stub_edge_[f]];
    }

    nodes_per_flagellum_ = rods_[0].n_nodes();
    const int N = nodes_per_flagellum_;
    total_nodes_ = n_rods == 2 ? 2 * N + 1 : N + 1;

    rod_offset_.resize(n_rods);
    rod_offset_[0] = 0;
    base_offset_ = rods_[0].n_dofs();
    if (n_rods == 2) rod_offset_[1] = base_offset_ + 3;
    n_dofs_ = base_offset_ + 3 + (n_rods == 2 ? rods_[1].n_dofs() : 0);

    node_dof_.assign(total_nodes_, -1);
    for (int i = 0; i < N; ++i) node_dof_[i] = Rod::pos_index(i);
    node_dof_[N] = base_offset_;
    if (n_rods == 2) {
        for (int i = 0; i < N; ++i) {
            node_dof_[N + 1 + i] = rod_offset_[1] + Rod::pos_index(i);
        }
    }

    // Hydrodynamic segments cover the flagella only; there is no material
    // between the cluster nodes. Collision edges cover the silicone coil but
    // not the motor shaft stub or its transition edge (the shaft is a thin
    // axle, and the coil radius is smaller than two rod radii by design).
    hydro_topology_.node_weight.assign(total_nodes_, 0.0);
    rod_topology_.resize(n_rods);
    for (int f = 0; f < n_rods; ++f) {
        const int base_node = f == 0 ? 0 : N + 1;
        rod_topology_[f].node_weight.assign(N, 0.0);
        for (int e = 0; e < rods_[f].n_edges(); ++e) {
            const int a = base_node + e;
            const int b = base_node + e + 1;
            if (std::abs(e - stub_edge_[f]) > 1) {
                contact_edges_.push_back({a, b, f, e});
            }
            hydro_topology_.segments.emplace_back(a, b);
            rod_topology_[f].segments.emplace_back(e, e + 1);
        }
        for (int i = 0; i < N; ++i) {
            hydro_topology_.node_weight[base_node + i] = rods_[f].voronoi[i];
            rod_topology_[f].node_weight[i] = rods_[f].voronoi[i];
        }
    }
    hydro_topology_.node_weight[N] = 1.0;  // base node: inert placeholder

    // Prescribed DOFs: the base node, each flagellum root and its shaft
    // neighbour, and the shaft twist angle.
    auto prescribe_node = [&](int rod, int local) {
        const int off = rod_offset_[rod] + Rod::pos_index(local);
        prescribed_.push_back(off);
        prescribed_.push_back(off + 1);
        prescribed_.push_back(off + 2);
    };
    prescribed_.push_back(base_offset_);
    prescribed_.push_back(base_offset_ + 1);
    prescribed_.push_back(base_offset_ + 2);
    prescribe_node(0, N - 1);
    prescribe_node(0, N - 2);
    prescribed_.push_back(rod_offset_[0] + Rod::theta_index(stub_edge_[0]));
    if (n_rods == 2) {
        prescribe_node(1, 0);
        prescribe_node(1, 1);
        prescribed_.push_back(rod_offset_[1] + Rod::theta_index(stub_edge_[1]));
    }
    std::sort(prescribed_.begin(), prescribed_.end());

    free_index_.assign(n_dofs_, -1);
    std::vector<bool> is_prescribed(n_dofs_, false);
    for (const int p : prescribed_) is_prescribed[p] = true;
    for (int d = 0; d < n_dofs_; ++d) {
        if (!is_prescribed[d]) {
            free_index_[d] = static_cast<int>(free_.size());
            free_.push_back(d);
        }
    }

    mass_ = VecX::Zero(n_dofs_);
    for (int f = 0; f < n_rods; ++f) {
        mass_.segment(rod_offset_[f], rods_[f].n_dofs()) = lumped_mass(
            rods_[f], config_.material, config_.helix.cross_section_radius);
    }
    mass_.segment<3>(base_offset_).setConstant(config_.base.mass);

    u_ = VecX::Zero(n_dofs_);
    contact_k_base_ = config_.solver.contact_stiffness;
    contact_k_ = contact_k_base_;
}

std::vector<Vec3> RobotSystem::positions() const {
    std::vector<Vec3> X(total_nodes_);
    const int N = nodes_per_flagellum_;
    for (int i = 0; i < N; ++i) X[i] = rods_[0].x[i];
    X[N] = joint_;
    if (n_rods() == 2) {
        for (int i = 0; i < N; ++i) X[N + 1 + i] = rods_[1].x[i];
    }
    return X;
}

std::vector<Vec3> RobotSystem::node_velocities() const {
    std::vector<Vec3> V(total_nodes_);
    for (int n = 0; n < total_nodes_; ++n) V[n] = u_.segment<3>(node_dof_[n]);
    return V;
}

VecX RobotSystem::gather_dofs() const {
    VecX q(n_dofs_);
    for (int f = 0; f < n_rods(); ++f) {
        q.segment(rod_offset_[f], rods_[f].n_dofs()) = rods_[f].get_dofs();
    }
    q.segment<3>(base_offset_) = joint_;
    return q;
}

void RobotSystem::scatter_dofs(const VecX& q) {
    for (int f = 0; f < n_rods(); ++f) {
        rods_[f].set_dofs(q.segment(rod_offset_[f], rods_[f].n_dofs()));
    }
}

void RobotSystem::refresh_rods() {
    for (Rod& rod : rods_) rod.update_frames();
}

ContactParams RobotSystem::contact_params() const {
    ContactParams p;
    p.stiffness = contact_k_;
    p.tolerance = config_.solver.contact_tolerance;
    p.cross_section = config_.helix.cross_section_radius;
    p.cutoff = config_.contact_cutoff();
    // Keep the admitted same-rod arc separation above the contact support.
    const double support = 2.0 * p.cross_section + p.tolerance;
    p.min_edge_gap = std::max(
        3, 2 + static_cast<int>(std::floor(support / config_.solver.segment_length)));
    return p;
}

void RobotSystem::set_attitude(const AttitudeState& attitude) {
    attitude_ = attitude;
    apply_boundary_conditions();
    for (Rod& rod : rods_) rod.commit_frames();
}

void RobotSystem::apply_boundary_conditions() {
    const Mat3 R = attitude_.orientation.toRotationMatrix();
    for (int f = 0; f < n_rods(); ++f) {
        Rod& rod = rods_[f];
        const Vec3 root_pos = joint_ + R * motor_body_[f];
        const Vec3 stub_pos =
            joint_ + R * (motor_body_[f] + config_.solver.segment_length * axis_body_);
        const int root_local = f == 0 ? rod.n_nodes() - 1 : 0;
        const int stub_local = f == 0 ? rod.n_nodes() - 2 : 1;
        rod.x[root_local] = root_pos;
        rod.x[stub_local] = stub_pos;

        // Shaft twist: the motor frame is body-fixed and advanced by the
        // motor angle about the spin axis; the twist DOF is the angle from
        // the time-transported reference director to that frame, tracked on
        // a continuous branch.
        const int e = stub_edge_[f];
        const Vec3 t_new =
            (rod.x[e + 1] - rod.x[e]).normalized();
        Vec3 d1_now = parallel_transport(rod.base_d1[e], rod.base_tangent[e], t_new);
        d1_now -= d1_now.dot(t_new) * t_new;
        d1_now.normalize();
        const Vec3 m1_target =
            R * (Eigen::AngleAxisd(motor_angle_[f], spin_axis_body_) *
                 motor_director_[f]);
        const double raw = signed_angle(d1_now, m1_target, t_new);
        rod.theta[e] += wrap_pi(raw - rod.theta[e]);
    }
    refresh_rods();
}

VecX RobotSystem::node_velocity_vec(const VecX& u) const {
    VecX v(3 * total_nodes_);
    for (int n = 0; n < total_nodes_; ++n) {
        v.segment<3>(3 * n) = u.segment<3>(node_dof_[n]);
    }
    return v;
}

VecX RobotSystem::hydro_external_force(const MobilitySolver& solver,
                                       const VecX& node_vel) const {
    const VecX f_on_fluid = solver.solve(node_vel);
    VecX f_ext = VecX::Zero(n_dofs_);
    for (int n = 0; n < total_nodes_; ++n) {
        f_ext.segment<3>(node_dof_[n]) -= f_on_fluid.segment<3>(3 * n);
    }
    if (config_.rod_gravity) {
        const double area = M_PI * config_.helix.cross_section_radius *
                            config_.helix.cross_section_radius;
        const double excess =
            (config_.material.density - config_.fluid.fluid_density) * area *
            kGravity;
        const int N = nodes_per_flagellum_;
        for (int f = 0; f < n_rods(); ++f) {
            const int base_node = f == 0 ? 0 : N + 1;
            for (int i = 0; i < N; ++i) {
                f_ext[node_dof_[base_node + i] + 2] -= excess * rods_[f].voronoi[i];
            }
        }
    }
    return f_ext;
}

void RobotSystem::assemble_residual(const VecX& q_full, const VecX& q_n,
                                    const VecX& u_n, double dt,
                                    const VecX& f_ext, VecX& r_full,
                                    std::vector<Triplet>* trips,
                                    ContactSummary* contact_summary) {
    scatter_dofs(q_full);
    refresh_rods();

    r_full = (mass_.array() * (q_full - q_n - dt * u_n).array() / (dt * dt))
                 .matrix();
    r_full -= f_ext;
    for (int f = 0; f < n_rods(); ++f) {
        elastic_energy(rods_[f], stiff_, &r_full, trips, rod_offset_[f]);
    }
    if (trips) {
        for (int d = 0; d < n_dofs_; ++d) {
            trips->emplace_back(d, d, mass_[d] / (dt * dt));
        }
    }

    const std::vector<Vec3> X = positions();
    const ContactSummary summary = accumulate_contact(
        X, contact_edges_, contact_params(), contact_k_, node_dof_, &r_full,
        trips);
    if (contact_summary) *contact_summary = summary;
}

StepDiagnostics RobotSystem::step(double dt) {
    StepDiagnostics diag;
    const VecX q_n = gather_dofs();
    const VecX u_n = u_;

    // Hydrodynamic load held fixed over the step, from start-of-step
    // velocities and geometry.
    const MobilityMatrix mobility =
        assemble_mobility(positions(), hydro_topology_, config_.rss_epsilon(),
                          config_.fluid.viscosity);
    const MobilitySolver solver(mobility);
    const VecX f_ext = hydro_external_force(solver, node_velocity_vec(u_n));

    motor_angle_[0] += config_.omega1 * dt;
    if (n_rods() == 2) motor_angle_[1] += config_.omega2 * dt;
    apply_boundary_conditions();
    const VecX q_prescribed = gather_dofs();

    VecX q_full = q_prescribed;
    VecX r_scratch(n_dofs_);
    ContactSummary last_contact;

    auto reduced_fn = [&](const VecX& q_red, VecX& r_red,
                          std::vector<Triplet>* trips_red) {
        for (size_t k = 0; k < free_.size(); ++k) q_full[free_[k]] = q_red[k];
        std::vector<Triplet> trips_full;
        assemble_residual(q_full, q_n, u_n, dt, f_ext,
                          r_scratch, trips_red ? &trips_full : nullptr,
                          &last_contact);
        r_red.resize(free_.size());
        for (size_t k = 0; k < free_.size(); ++k) r_red[k] = r_scratch[free_[k]];
        if (trips_red) {
            trips_red->clear();
            trips_red->reserve(trips_full.size());
            for (const Triplet& t : trips_full) {
                const int r = free_index_[t.row()];
                const int c = free_index_[t.col()];
                if (r >= 0 && c >= 0) trips_red->emplace_back(r, c, t.value());
            }
        }
    };

    // Warm start free DOFs from the previous rates.
    VecX q_guess(free_.size());
    for (size_t k = 0; k < free_.size(); ++k) {
        q_guess[k] = q_n[free_[k]] + dt * u_n[free_[k]];
    }

    // Penetration deeper than 10 tolerances at convergence doubles the
    // contact stiffness (up to 8x) and re-solves the step.
    const double penetration_floor =
        2.0 * config_.helix.cross_section_radius -
        10.0 * config_.solver.contact_tolerance;
    NewtonResult result;
    while (true) {
        result = newton_solve(reduced_fn, q_guess, config_.solver.newton_tol,
                              config_.solver.newton_max_iters);
        if (last_contact.active > 0 &&
            last_contact.min_distance < penetration_floor &&
            contact_k_ < 8.0 * contact_k_base_) {
            contact_k_ *= 2.0;
            continue;
        }
        break;
    }
    for (size_t k = 0; k < free_.size(); ++k) q_full[free_[k]] = result.q[k];
    scatter_dofs(q_full);
    refresh_rods();
    diag.newton_iters = result.iters;
    diag.residual_norm = result.residual_norm;
    diag.contact_active = last_contact.active;
    diag.contact_min_distance = last_contact.min_distance;

    // Flagella resultants at the converged velocities, same mobility matrix.
    const VecX u_mid = (q_full - q_n) / dt;
    const VecX f_on_fluid = solver.solve(node_velocity_vec(u_mid));
    const std::vector<Vec3> node_forces = split_vec3(f_on_fluid);
    auto [f1, f2] = flagellum_resultants(node_forces, nodes_per_flagellum_);
    if (n_rods() == 1) f2.setZero();
    resultant1_ = f1;
    resultant2_ = f2;

    // Torque assembly in the body frame; staggered attitude update. The
    // flagella term is the lever-arm torque of the resultants applied at the
    // motor points (optionally the per-node sum); drag and righting moment
    // complete the breakdown.
    const Mat3 R = attitude_.orientation.toRotationMatrix();
    const EulerAngles euler_now = quat_to_euler(attitude_.orientation);
    diag.torque.drag =
        base_drag(attitude_.omega, config_.base, config_.fluid.viscosity);
    diag.torque.righting = righting_moment(euler_now.pitch, config_.base);
    if (config_.torque_per_node) {
        Vec3 from_nodes = Vec3::Zero();
        const std::vector<Vec3> X = positions();
        for (int n = 0; n < total_nodes_; ++n) {
            if (n == nodes_per_flagellum_) continue;  // base node
            const Vec3 r_body = R.transpose() * (X[n] - joint_);
            const Vec3 f_body = R.transpose() * (-node_forces[n]);
            from_nodes += r_body.cross(f_body);
        }
        diag.torque.flagella = from_nodes;
    } else {
        diag.torque.flagella =
            motor_body_[0].cross(R.transpose() * f1) +
            motor_body_[1].cross(R.transpose() * f2);
    }
    diag.torque.total = diag.torque.flagella + diag.torque.drag +
                        Vec3(0.0, diag.torque.righting, 0.0);
    if (!options_.attitude_frozen) {
        attitude_ = step_attitude(attitude_, diag.torque.total,
                                  config_.base.inertia, dt);
    }

    // Re-seat the prescribed DOFs on the new orientation, commit frames, and
    // record the realized rates.
    apply_boundary_conditions();
    for (Rod& rod : rods_) rod.commit_frames();
    u_ = (gather_dofs() - q_n) / dt;
    time_ += dt;
    return diag;
}

}  // namespace flagsim
