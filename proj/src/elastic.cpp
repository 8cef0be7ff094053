#include "flagsim/elastic.hpp"

#include <cmath>

namespace flagsim {

namespace {

Mat3 cross_mat(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

// Local 11-DOF stencil of an interior node i:
// [x_{i-1}, theta_{i-1}, x_i, theta_i, x_{i+1}].
const int kStencil = 11;

void map_stencil(int node, int offset, int idx[kStencil]) {
    const int base = offset + 4 * (node - 1);
    for (int k = 0; k < kStencil; ++k) idx[k] = base + k;
}

void add_stencil(const Eigen::Matrix<double, kStencil, 1>& g,
                 const Eigen::Matrix<double, kStencil, kStencil>* H, int node,
                 int offset, VecX* grad, std::vector<Triplet>* hess) {
    int idx[kStencil];
    map_stencil(node, offset, idx);
    if (grad) {
        for (int k = 0; k < kStencil; ++k) (*grad)[idx[k]] += g[k];
    }
    if (hess && H) {
        for (int r = 0; r < kStencil; ++r) {
            for (int c = 0; c < kStencil; ++c) {
                if ((*H)(r, c) != 0.0) hess->emplace_back(idx[r], idx[c], (*H)(r, c));
            }
        }
    }
}

// Gradient and Hessian (over the 11-DOF stencil) of one scalar curvature
// kappa = 0.5 (a_e + a_f) . kb, where a is a material director with
// d a / d theta = b. kappa1 uses a = m2, b = -m1; kappa2 uses a = m1, b = m2.
struct CurvatureDerivs {
    double kappa;
    Eigen::Matrix<double, kStencil, 1> grad;
    Eigen::Matrix<double, kStencil, kStencil> hess;
};

CurvatureDerivs curvature_derivs(const Rod& rod, int i, const Vec3& ae,
                                 const Vec3& af, const Vec3& be, const Vec3& bf,
                                 double kappa, bool want_hess) {
    const Vec3& te = rod.tangent[i - 1];
    const Vec3& tf = rod.tangent[i];
    const double ne = rod.len[i - 1];
    const double nf = rod.len[i];
    const double chi = 1.0 + te.dot(tf);
    const Vec3 kb = 2.0 * te.cross(tf) / chi;
    const Vec3 tilde_t = (te + tf) / chi;
    const Vec3 tilde_a = (ae + af) / chi;

    const Vec3 dk_de = (-kappa * tilde_t + tf.cross(tilde_a)) / ne;
    const Vec3 dk_df = (-kappa * tilde_t - te.cross(tilde_a)) / nf;
    const double dk_the = 0.5 * kb.dot(be);
    const double dk_thf = 0.5 * kb.dot(bf);

    CurvatureDerivs out;
    out.kappa = kappa;
    out.grad.setZero();
    out.grad.segment<3>(0) = -dk_de;
    out.grad[3] = dk_the;
    out.grad.segment<3>(4) = dk_de - dk_df;
    out.grad[7] = dk_thf;
    out.grad.segment<3>(8) = dk_df;

    if (!want_hess) {
        out.hess.setZero();
        return out;
    }

    const Mat3 Id = Mat3::Identity();
    const Mat3 tt = tilde_t * tilde_t.transpose();
    const Vec3 tf_x_a = tf.cross(tilde_a);
    const Vec3 te_x_a = te.cross(tilde_a);

    const Mat3 Dee =
        (2.0 * kappa * tt - tf_x_a * tilde_t.transpose() -
         tilde_t * tf_x_a.transpose()) /
            (ne * ne) -
        kappa / (chi * ne * ne) * (Id - te * te.transpose()) +
        (kb * ae.transpose() + ae * kb.transpose()) / (4.0 * ne * ne);
    const Mat3 Dff =
        (2.0 * kappa * tt + te_x_a * tilde_t.transpose() +
         tilde_t * te_x_a.transpose()) /
            (nf * nf) -
        kappa / (chi * nf * nf) * (Id - tf * tf.transpose()) +
        (kb * af.transpose() + af * kb.transpose()) / (4.0 * nf * nf);
    const Mat3 Def =
        -kappa / (chi * ne * nf) * (Id + te * tf.transpose()) +
        (2.0 * kappa * tt - tf_x_a * tilde_t.transpose() +
         tilde_t * te_x_a.transpose() - cross_mat(tilde_a)) /
            (ne * nf);
    const Mat3 Dfe = Def.transpose();

    const Vec3 De_the = (-0.5 * kb.dot(be) * tilde_t + tf.cross(be) / chi) / ne;
    const Vec3 De_thf = (-0.5 * kb.dot(bf) * tilde_t + tf.cross(bf) / chi) / ne;
    const Vec3 Df_the = (-0.5 * kb.dot(be) * tilde_t - te.cross(be) / chi) / nf;
    const Vec3 Df_thf = (-0.5 * kb.dot(bf) * tilde_t - te.cross(bf) / chi) / nf;
    const double the_the = -0.5 * kb.dot(ae);
    const double thf_thf = -0.5 * kb.dot(af);

    Eigen::Matrix<double, kStencil, kStencil>& H = out.hess;
    H.setZero();
    // Positions mapped through d/dx_{i-1} = -d/de, d/dx_i = d/de - d/df,
    // d/dx_{i+1} = d/df.
    H.block<3, 3>(0, 0) = Dee;
    H.block<3, 3>(0, 4) = -Dee + Def;
    H.block<3, 3>(0, 8) = -Def;
    H.block<3, 3>(4, 0) = H.block<3, 3>(0, 4).transpose();
    H.block<3, 3>(4, 4) = Dee - Def - Dfe + Dff;
    H.block<3, 3>(4, 8) = Def - Dff;
    H.block<3, 3>(8, 0) = H.block<3, 3>(0, 8).transpose();
    H.block<3, 3>(8, 4) = H.block<3, 3>(4, 8).transpose();
    H.block<3, 3>(8, 8) = Dff;

    H.block<3, 1>(0, 3) = -De_the;
    H.block<3, 1>(4, 3) = De_the - Df_the;
    H.block<3, 1>(8, 3) = Df_the;
    H.block<3, 1>(0, 7) = -De_thf;
    H.block<3, 1>(4, 7) = De_thf - Df_thf;
    H.block<3, 1>(8, 7) = Df_thf;
    H.block<1, 3>(3, 0) = H.block<3, 1>(0, 3).transpose();
    H.block<1, 3>(3, 4) = H.block<3, 1>(4, 3).transpose();
    H.block<1, 3>(3, 8) = H.block<3, 1>(8, 3).transpose();
    H.block<1, 3>(7, 0) = H.block<3, 1>(0, 7).transpose();
    H.block<1, 3>(7, 4) = H.block<3, 1>(4, 7).transpose();
    H.block<1, 3>(7, 8) = H.block<3, 1>(8, 7).transpose();

    H(3, 3) = the_the;
    H(7, 7) = thf_thf;
    return out;
}

}  // namespace

void accumulate_stretch(const Rod& rod, double EA, double& energy, VecX* grad,
                        std::vector<Triplet>* hess, int offset) {
    for (int e = 0; e < rod.n_edges(); ++e) {
        const double rest = rod.rest_len[e];
        const double eps = rod.len[e] / rest - 1.0;
        energy += 0.5 * EA * eps * eps * rest;
        if (!grad && !hess) continue;

        const Vec3& t = rod.tangent[e];
        const Vec3 f = EA * eps * t;
        const int ia = offset + Rod::pos_index(e);
        const int ib = offset + Rod::pos_index(e + 1);
        if (grad) {
            grad->segment<3>(ia) -= f;
            grad->segment<3>(ib) += f;
        }
        if (hess) {
            const Mat3 tt = t * t.transpose();
            const Mat3 H = EA * (tt / rest +
                                 eps / rod.len[e] * (Mat3::Identity() - tt));
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    const double v = H(r, c);
                    if (v == 0.0) continue;
                    hess->emplace_back(ia + r, ia + c, v);
                    hess->emplace_back(ib + r, ib + c, v);
                    hess->emplace_back(ia + r, ib + c, -v);
                    hess->emplace_back(ib + r, ia + c, -v);
                }
            }
        }
    }
}

void accumulate_bend(const Rod& rod, double EI, double& energy, VecX* grad,
                     std::vector<Triplet>* hess, int offset) {
    for (int i = 1; i < rod.n_nodes() - 1; ++i) {
        const double stiffness = EI / rod.voronoi[i];
        const Vec2 dk = rod.kappa[i] - rod.rest_kappa[i];
        energy += 0.5 * stiffness * dk.squaredNorm();
        if (!grad && !hess) continue;

        const bool want_hess = hess != nullptr;
        const CurvatureDerivs k1 =
            curvature_derivs(rod, i, rod.m2[i - 1], rod.m2[i], -rod.m1[i - 1],
                             -rod.m1[i], rod.kappa[i][0], want_hess);
        const CurvatureDerivs k2 =
            curvature_derivs(rod, i, rod.m1[i - 1], rod.m1[i], rod.m2[i - 1],
                             rod.m2[i], rod.kappa[i][1], want_hess);

        const Eigen::Matrix<double, kStencil, 1> g =
            stiffness * (dk[0] * k1.grad + dk[1] * k2.grad);
        if (want_hess) {
            const Eigen::Matrix<double, kStencil, kStencil> H =
                stiffness * (k1.grad * k1.grad.transpose() + dk[0] * k1.hess +
                             k2.grad * k2.grad.transpose() + dk[1] * k2.hess);
            add_stencil(g, &H, i, offset, grad, hess);
        } else {
            add_stencil(g, nullptr, i, offset, grad, hess);
        }
    }
}

void accumulate_twist(const Rod& rod, double GJ, double& energy, VecX* grad,
                      std::vector<Triplet>* hess, int offset) {
    for (int i = 1; i < rod.n_nodes() - 1; ++i) {
        const double stiffness = GJ / rod.voronoi[i];
        const double dt_twist = rod.twist[i] - rod.rest_twist[i];
        energy += 0.5 * stiffness * dt_twist * dt_twist;
        if (!grad && !hess) continue;

        const Vec3& te = rod.tangent[i - 1];
        const Vec3& tf = rod.tangent[i];
        const double ne = rod.len[i - 1];
        const double nf = rod.len[i];
        const double chi = 1.0 + te.dot(tf);
        const Vec3 kb = 2.0 * te.cross(tf) / chi;
        const Vec3 tilde_t = (te + tf) / chi;

        Eigen::Matrix<double, kStencil, 1> gt;
        gt.setZero();
        gt.segment<3>(0) = -0.5 / ne * kb;
        gt.segment<3>(8) = 0.5 / nf * kb;
        gt.segment<3>(4) = -(gt.segment<3>(0) + gt.segment<3>(8));
        gt[3] = -1.0;
        gt[7] = 1.0;

        const Eigen::Matrix<double, kStencil, 1> g = stiffness * dt_twist * gt;
        if (hess) {
            const Mat3 Dee = -0.25 / (ne * ne) *
                             (kb * (te + tilde_t).transpose() +
                              (te + tilde_t) * kb.transpose());
            const Mat3 Dff = -0.25 / (nf * nf) *
                             (kb * (tf + tilde_t).transpose() +
                              (tf + tilde_t) * kb.transpose());
            const Mat3 Def = 0.5 / (ne * nf) *
                             (2.0 / chi * cross_mat(te) - kb * tilde_t.transpose());
            const Mat3 Dfe = Def.transpose();

            Eigen::Matrix<double, kStencil, kStencil> Ht;
            Ht.setZero();
            Ht.block<3, 3>(0, 0) = Dee;
            Ht.block<3, 3>(0, 4) = -Dee + Def;
            Ht.block<3, 3>(0, 8) = -Def;
            Ht.block<3, 3>(4, 0) = Ht.block<3, 3>(0, 4).transpose();
            Ht.block<3, 3>(4, 4) = Dee - Def - Dfe + Dff;
            Ht.block<3, 3>(4, 8) = Def - Dff;
            Ht.block<3, 3>(8, 0) = Ht.block<3, 3>(0, 8).transpose();
            Ht.block<3, 3>(8, 4) = Ht.block<3, 3>(4, 8).transpose();
            Ht.block<3, 3>(8, 8) = Dff;

            const Eigen::Matrix<double, kStencil, kStencil> H =
                stiffness * (gt * gt.transpose() + dt_twist * Ht);
            add_stencil(g, &H, i, offset, grad, hess);
        } else {
            add_stencil(g, nullptr, i, offset, grad, hess);
        }
    }
}

EnergyBreakdown elastic_energy(const Rod& rod, const Stiffnesses& stiff,
                               VecX* grad, std::vector<Triplet>* hess,
                               int offset) {
    EnergyBreakdown out;
    accumulate_stretch(rod, stiff.EA, out.stretch, grad, hess, offset);
    accumulate_bend(rod, stiff.EI, out.bend, grad, hess, offset);
    accumulate_twist(rod, stiff.GJ, out.twist, grad, hess, offset);
    return out;
}

VecX lumped_mass(const Rod& rod, const MaterialParams& material,
                 double cross_section_radius) {
    const double r2 = cross_section_radius * cross_section_radius;
    const double area = M_PI * r2;
    VecX mass = VecX::Zero(rod.n_dofs());
    for (int i = 0; i < rod.n_nodes(); ++i) {
        mass.segment<3>(Rod::pos_index(i)).setConstant(
            material.density * area * rod.voronoi[i]);
    }
    for (int e = 0; e < rod.n_edges(); ++e) {
        mass[Rod::theta_index(e)] =
            material.density * area * (r2 / 2.0) * rod.rest_len[e];
    }
    return mass;
}

void eom_residual(Rod& rod, const Stiffnesses& stiff, const VecX& mass,
                  const VecX& q, const VecX& q_prev, const VecX& u_prev,
                  double dt, const VecX& f_external, VecX& residual,
                  std::vector<Triplet>* jacobian) {
    const int n = rod.n_dofs();
    if (q.size() != n || q_prev.size() != n || u_prev.size() != n ||
        f_external.size() != n || mass.size() != n) {
        throw NumericalError("eom_residual: size mismatch");
    }
    rod.set_dofs(q);
    rod.update_frames();

    residual = VecX::Zero(n);
    elastic_energy(rod, stiff, &residual, jacobian);
    residual += (mass.array() * (q - q_prev - dt * u_prev).array() / (dt * dt))
                    .matrix();
    residual -= f_external;
    if (jacobian) {
        for (int k = 0; k < n; ++k) {
            jacobian->emplace_back(k, k, mass[k] / (dt * dt));
        }
    }
}

}  // namespace flagsim
