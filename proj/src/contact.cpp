#include "flagsim/contact.hpp"

#include <algorithm>
#include <cmath>

namespace flagsim {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

MinDistResult min_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                           const Vec3& q1) {
    // Closest points between segments, clamped coordinate descent on the
    // quadratic |p(s) - q(t)|^2 (Ericson-style case analysis).
    const Vec3 d1 = p1 - p0;
    const Vec3 d2 = q1 - q0;
    const Vec3 r = p0 - q0;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);
    const double tiny = 1e-24;

    double s = 0.0, t = 0.0;
    if (a <= tiny && e <= tiny) {
        // both points
    } else if (a <= tiny) {
        t = clamp01(f / e);
    } else {
        const double c = d1.dot(r);
        if (e <= tiny) {
            s = clamp01(-c / a);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > tiny * a * e ? clamp01((b * f - c * e) / denom) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = clamp01(-c / a);
            } else if (t > 1.0) {
                t = 1.0;
                s = clamp01((b - c) / a);
            }
        }
    }
    MinDistResult out;
    out.s = s;
    out.t = t;
    out.distance = (p0 + s * d1 - q0 - t * d2).norm();
    return out;
}

double contact_energy(double distance, const ContactParams& params) {
    const double cap = 2.0 * params.cross_section + params.tolerance;
    if (distance >= cap) return 0.0;
    const double p = cap - distance;
    return p * p * p / (6.0 * params.tolerance * params.tolerance);
}

double contact_energy_ddist(double distance, const ContactParams& params) {
    const double cap = 2.0 * params.cross_section + params.tolerance;
    if (distance >= cap) return 0.0;
    const double p = cap - distance;
    return -p * p / (2.0 * params.tolerance * params.tolerance);
}

double contact_energy_d2dist(double distance, const ContactParams& params) {
    const double cap = 2.0 * params.cross_section + params.tolerance;
    if (distance >= cap) return 0.0;
    return (cap - distance) / (params.tolerance * params.tolerance);
}

std::vector<std::pair<int, int>> contact_candidates(
    const std::vector<Vec3>& positions, const std::vector<ContactEdge>& edges,
    double cutoff, int min_edge_gap) {
    const int ne = static_cast<int>(edges.size());
    std::vector<Vec3> lo(ne), hi(ne);
    const Vec3 pad = Vec3::Constant(0.5 * cutoff);
    for (int e = 0; e < ne; ++e) {
        const Vec3& a = positions[edges[e].node_a];
        const Vec3& b = positions[edges[e].node_b];
        lo[e] = a.cwiseMin(b) - pad;
        hi[e] = a.cwiseMax(b) + pad;
    }
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < ne; ++i) {
        for (int j = i + 1; j < ne; ++j) {
            if (edges[i].rod == edges[j].rod &&
                std::abs(edges[i].local - edges[j].local) < min_edge_gap) {
                continue;
            }
            if ((lo[i].array() <= hi[j].array()).all() &&
                (lo[j].array() <= hi[i].array()).all()) {
                pairs.emplace_back(i, j);
            }
        }
    }
    return pairs;
}

ContactSummary accumulate_contact(const std::vector<Vec3>& positions,
                                  const std::vector<ContactEdge>& edges,
                                  const ContactParams& params, double k,
                                  const std::vector<int>& node_dof,
                                  VecX* grad_out, std::vector<Triplet>* hess) {
    ContactSummary summary;
    const auto pairs =
        contact_candidates(positions, edges, params.cutoff, params.min_edge_gap);
    summary.candidates = static_cast<int>(pairs.size());

    for (const auto& [ei, ej] : pairs) {
        const int n[4] = {edges[ei].node_a, edges[ei].node_b, edges[ej].node_a,
                          edges[ej].node_b};
        const Vec3& p0 = positions[n[0]];
        const Vec3& p1 = positions[n[1]];
        const Vec3& q0 = positions[n[2]];
        const Vec3& q1 = positions[n[3]];
        const MinDistResult md = min_distance(p0, p1, q0, q1);
        summary.min_distance = std::min(summary.min_distance, md.distance);

        const double dE = contact_energy_ddist(md.distance, params);
        if (dE == 0.0) continue;
        ++summary.active;
        if (md.distance < 1e-12) {
            throw NumericalError("contact: coincident edges");
        }

        const Vec3 w = p0 + md.s * (p1 - p0) - q0 - md.t * (q1 - q0);
        const Vec3 nhat = w / md.distance;
        const double c[4] = {1.0 - md.s, md.s, -(1.0 - md.t), -md.t};

        if (grad_out) {
            for (int a = 0; a < 4; ++a) {
                grad_out->segment<3>(node_dof[n[a]]) += (k * dE * c[a]) * nhat;
            }
        }
        if (hess) {
            const double ddE = contact_energy_d2dist(md.distance, params);
            const Mat3 nn = nhat * nhat.transpose();
            const Mat3 block =
                k * (ddE * nn +
                     dE / md.distance * (Mat3::Identity() - nn));
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    const double w_ab = c[a] * c[b];
                    if (w_ab == 0.0) continue;
                    for (int r = 0; r < 3; ++r) {
                        for (int col = 0; col < 3; ++col) {
                            hess->emplace_back(node_dof[n[a]] + r,
                                               node_dof[n[b]] + col,
                                               w_ab * block(r, col));
                        }
                    }
                }
            }
        }
    }
    return summary;
}

std::vector<Vec3> contact_forces(const std::vector<Vec3>& positions,
                                 const std::vector<ContactEdge>& edges,
                                 const ContactParams& params) {
    std::vector<int> node_dof(positions.size());
    for (size_t i = 0; i < positions.size(); ++i) node_dof[i] = 3 * static_cast<int>(i);
    VecX grad = VecX::Zero(3 * positions.size());
    accumulate_contact(positions, edges, params, params.stiffness, node_dof,
                       &grad, nullptr);
    std::vector<Vec3> forces(positions.size());
    for (size_t i = 0; i < positions.size(); ++i) {
        forces[i] = -grad.segment<3>(3 * i);
    }
    return forces;
}

}  // namespace flagsim
