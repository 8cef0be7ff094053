#include "flagsim/mobility.hpp"

#include <cmath>

namespace flagsim {

namespace {

// Line moments of the regularized Stokeslet along a straight segment,
// parametrized by s in [0,1]: P(s) = a s^2 - 2 beta s + c with c including
// epsilon^2, so P > 0 always.
struct Moments {
    double i1_0, i1_1;                // int s^k / sqrt(P)
    double i3_0, i3_1, i3_2, i3_3;    // int s^k / P^{3/2}
};

Moments segment_moments(double a, double beta, double c) {
    const double disc = a * c - beta * beta;  // >= a eps^2 > 0
    const double sqrt_a = std::sqrt(a);
    const double sqrt_disc = std::sqrt(disc);
    const double p0 = std::sqrt(c);
    const double p1 = std::sqrt(a - 2.0 * beta + c);

    auto f1_0 = [&](double s, double p) {
        (void)p;
        return std::asinh((a * s - beta) / sqrt_disc) / sqrt_a;
    };
    auto f3_0 = [&](double s, double p) { return (a * s - beta) / (disc * p); };
    auto f3_1 = [&](double s, double p) { return (beta * s - c) / (disc * p); };

    Moments m;
    m.i1_0 = f1_0(1.0, p1) - f1_0(0.0, p0);
    m.i1_1 = (p1 - p0) / a + beta / a * m.i1_0;
    m.i3_0 = f3_0(1.0, p1) - f3_0(0.0, p0);
    m.i3_1 = f3_1(1.0, p1) - f3_1(0.0, p0);
    m.i3_2 = (m.i1_0 - c * m.i3_0 + 2.0 * beta * m.i3_1) / a;
    m.i3_3 = (m.i1_1 - c * m.i3_1 + 2.0 * beta * m.i3_2) / a;
    return m;
}

}  // namespace

MobilityMatrix assemble_mobility(const std::vector<Vec3>& positions,
                                 const SegmentTopology& topology, double epsilon,
                                 double viscosity) {
    const int n = static_cast<int>(positions.size());
    if (static_cast<int>(topology.node_weight.size()) != n) {
        throw NumericalError("mobility: node weight size mismatch");
    }
    const double min_sep = epsilon / 100.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if ((positions[i] - positions[j]).norm() < min_sep) {
                throw NumericalError("mobility: coincident nodes");
            }
        }
    }

    MobilityMatrix mob;
    mob.epsilon = epsilon;
    mob.viscosity = viscosity;
    MatX& A = mob.A;
    A = MatX::Zero(3 * n, 3 * n);

    const double eps2 = epsilon * epsilon;
    const double prefactor = 1.0 / (8.0 * M_PI * viscosity);

    std::vector<bool> sourced(n, false);
    for (const auto& [na, nb] : topology.segments) {
        sourced[na] = sourced[nb] = true;
        const Vec3& y0 = positions[na];
        const Vec3 d = positions[nb] - y0;
        const double a = d.squaredNorm();
        if (a <= 0.0) throw NumericalError("mobility: zero-length segment");
        const double length = std::sqrt(a);

        for (int m = 0; m < n; ++m) {
            const Vec3 b = positions[m] - y0;
            const double beta = b.dot(d);
            const double c = b.squaredNorm() + eps2;
            const Moments mo = segment_moments(a, beta, c);

            const Mat3 bb = b * b.transpose();
            const Mat3 bd = b * d.transpose() + d * b.transpose();
            const Mat3 dd = d * d.transpose();

            // Linear force-density hats: node na carries (1 - s), nb carries s.
            const Mat3 K0 =
                (mo.i1_0 - mo.i1_1 + eps2 * (mo.i3_0 - mo.i3_1)) * Mat3::Identity() +
                bb * (mo.i3_0 - mo.i3_1) - bd * (mo.i3_1 - mo.i3_2) +
                dd * (mo.i3_2 - mo.i3_3);
            const Mat3 K1 =
                (mo.i1_1 + eps2 * mo.i3_1) * Mat3::Identity() + bb * mo.i3_1 -
                bd * mo.i3_2 + dd * mo.i3_3;

            A.block<3, 3>(3 * m, 3 * na) +=
                prefactor * length / topology.node_weight[na] * K0;
            A.block<3, 3>(3 * m, 3 * nb) +=
                prefactor * length / topology.node_weight[nb] * K1;
        }
    }

    // Exact symmetry; collocation leaves an O(dl^2) skew part.
    A = 0.5 * (A + A.transpose()).eval();

    // Isolated nodes (the base) keep a regularized point self-mobility.
    for (int i = 0; i < n; ++i) {
        if (!sourced[i]) {
            A.block<3, 3>(3 * i, 3 * i) +=
                1.0 / (4.0 * M_PI * viscosity * epsilon) * Mat3::Identity();
        }
    }
    return mob;
}

MobilitySolver::MobilitySolver(const MobilityMatrix& mobility)
    : ldlt_(mobility.A) {
    if (ldlt_.info() != Eigen::Success) {
        throw NumericalError("mobility solve: factorization failed");
    }
    const VecX d = ldlt_.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.cwiseAbs().minCoeff();
    if (!(dmin > 0.0) || dmax / dmin > 1e12) {
        throw NumericalError("mobility solve: matrix singular or ill-conditioned");
    }
}

VecX MobilitySolver::solve(const VecX& velocities) const {
    return ldlt_.solve(velocities);
}

VecX solve_forces(const MobilityMatrix& mobility, const VecX& velocities) {
    return MobilitySolver(mobility).solve(velocities);
}

std::pair<Vec3, Vec3> flagellum_resultants(const std::vector<Vec3>& node_forces,
                                           int nodes_per_flagellum) {
    const int N = nodes_per_flagellum;
    Vec3 f1 = Vec3::Zero();
    Vec3 f2 = Vec3::Zero();
    for (int i = 0; i < N; ++i) f1 -= node_forces[i];
    for (int i = N + 1; i <= 2 * N && i < static_cast<int>(node_forces.size()); ++i) {
        f2 -= node_forces[i];
    }
    return {f1, f2};
}

}  // namespace flagsim
