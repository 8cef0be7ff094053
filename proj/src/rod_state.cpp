#include "flagsim/rod_state.hpp"

#include <cmath>

namespace flagsim {

Rod Rod::from_polyline(const std::vector<Vec3>& nodes, int seed_edge,
                       const Vec3* seed_d1) {
    if (nodes.size() < 3) {
        throw NumericalError("rod needs at least three nodes");
    }
    Rod rod;
    rod.x = nodes;
    const int ne = rod.n_edges();
    const int nn = rod.n_nodes();
    rod.theta.assign(ne, 0.0);

    rod.rest_len.resize(ne);
    for (int e = 0; e < ne; ++e) {
        rod.rest_len[e] = (nodes[e + 1] - nodes[e]).norm();
        if (rod.rest_len[e] <= 0.0) throw NumericalError("zero-length rest edge");
    }
    rod.voronoi.resize(nn);
    for (int i = 0; i < nn; ++i) {
        double v = 0.0;
        if (i > 0) v += 0.5 * rod.rest_len[i - 1];
        if (i < ne) v += 0.5 * rod.rest_len[i];
        rod.voronoi[i] = v;
    }

    // Seed the reference frame and space-transport outward.
    std::vector<Vec3> t(ne);
    for (int e = 0; e < ne; ++e) t[e] = (nodes[e + 1] - nodes[e]) / rod.rest_len[e];
    rod.base_tangent = t;
    rod.base_d1.resize(ne);
    Vec3 seed = seed_d1 ? *seed_d1 : perpendicular_unit(t[seed_edge]);
    seed -= seed.dot(t[seed_edge]) * t[seed_edge];
    if (seed.norm() < 1e-12) {
        throw NumericalError("frame seed parallel to seed edge");
    }
    rod.base_d1[seed_edge] = seed.normalized();
    for (int e = seed_edge + 1; e < ne; ++e) {
        rod.base_d1[e] = parallel_transport(rod.base_d1[e - 1], t[e - 1], t[e]);
    }
    for (int e = seed_edge - 1; e >= 0; --e) {
        rod.base_d1[e] = parallel_transport(rod.base_d1[e + 1], t[e + 1], t[e]);
    }
    rod.ref_twist_anchor.assign(nn, 0.0);

    rod.update_frames();
    rod.rest_kappa = rod.kappa;
    rod.rest_twist = rod.twist;
    rod.commit_frames();
    return rod;
}

void Rod::update_frames() {
    const int ne = n_edges();
    const int nn = n_nodes();
    edge.resize(ne);
    len.resize(ne);
    tangent.resize(ne);
    d1.resize(ne);
    d2.resize(ne);
    m1.resize(ne);
    m2.resize(ne);
    ref_twist.assign(nn, 0.0);
    kappa.assign(nn, Vec2::Zero());
    twist.assign(nn, 0.0);

    for (int e = 0; e < ne; ++e) {
        edge[e] = x[e + 1] - x[e];
        len[e] = edge[e].norm();
        if (len[e] <= 0.0) throw NumericalError("zero-length edge");
        tangent[e] = edge[e] / len[e];

        Vec3 dir = parallel_transport(base_d1[e], base_tangent[e], tangent[e]);
        dir -= dir.dot(tangent[e]) * tangent[e];
        const double n = dir.norm();
        if (n < 1e-12) throw NumericalError("reference frame collapsed");
        d1[e] = dir / n;
        d2[e] = tangent[e].cross(d1[e]);
        material_frame(d1[e], d2[e], theta[e], m1[e], m2[e]);
    }

    for (int i = 1; i < nn - 1; ++i) {
        const double raw =
            reference_twist(d1[i - 1], tangent[i - 1], d1[i], tangent[i]);
        ref_twist[i] = ref_twist_anchor[i] + wrap_pi(raw - ref_twist_anchor[i]);
        const Vec3 kb = curvature_binormal(edge[i - 1], edge[i]);
        kappa[i][0] = 0.5 * (m2[i - 1] + m2[i]).dot(kb);
        kappa[i][1] = 0.5 * (m1[i - 1] + m1[i]).dot(kb);
        twist[i] = theta[i] - theta[i - 1] + ref_twist[i];
    }
}

void Rod::commit_frames() {
    base_tangent = tangent;
    base_d1 = d1;
    ref_twist_anchor = ref_twist;
}

double Rod::rest_length_total() const {
    double total = 0.0;
    for (const double l : rest_len) total += l;
    return total;
}

VecX Rod::get_dofs() const {
    VecX q(n_dofs());
    for (int i = 0; i < n_nodes(); ++i) q.segment<3>(pos_index(i)) = x[i];
    for (int e = 0; e < n_edges(); ++e) q[theta_index(e)] = theta[e];
    return q;
}

void Rod::set_dofs(const VecX& q) {
    for (int i = 0; i < n_nodes(); ++i) x[i] = q.segment<3>(pos_index(i));
    for (int e = 0; e < n_edges(); ++e) theta[e] = q[theta_index(e)];
}

}  // namespace flagsim
