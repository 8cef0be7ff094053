#include <random>

#include "doctest.h"
#include "flagsim/geometry.hpp"
#include "flagsim/mobility.hpp"
#include "flagsim/rod_state.hpp"
#include "test_util.hpp"

using namespace flagsim;
using namespace flagsim::test;

namespace {

// Chain topology over consecutive nodes with Voronoi weights.
SegmentTopology chain_topology(const std::vector<Vec3>& nodes) {
    SegmentTopology topo;
    const int n = static_cast<int>(nodes.size());
    std::vector<double> len(n - 1);
    for (int e = 0; e < n - 1; ++e) len[e] = (nodes[e + 1] - nodes[e]).norm();
    topo.node_weight.assign(n, 0.0);
    for (int e = 0; e < n - 1; ++e) {
        topo.segments.emplace_back(e, e + 1);
        topo.node_weight[e] += 0.5 * len[e];
        topo.node_weight[e + 1] += 0.5 * len[e];
    }
    return topo;
}

std::vector<Vec3> helix_nodes(double dl = 5e-3) {
    HelixParams helix;
    return generate_helix_nodes(helix, dl, Vec3::Zero(), Vec3(0, 0, -1), 0.0);
}

}  // namespace

TEST_CASE("far field decays like 1/s") {
    // A short filament at the origin, probe nodes at s and 2s to the side.
    const double s = 0.5;
    std::vector<Vec3> nodes = {Vec3(0, 0, -5e-3), Vec3(0, 0, 5e-3),
                               Vec3(s, 0, 0), Vec3(2 * s, 0, 0)};
    SegmentTopology topo;
    topo.segments.emplace_back(0, 1);
    topo.node_weight = {5e-3, 5e-3, 1.0, 1.0};
    const MobilityMatrix mob = assemble_mobility(nodes, topo, 1e-3, 1.0);

    // Velocity induced at the probes by a force on the segment endpoints.
    const Vec3 f(0, 0, 1.0);
    const Vec3 u_near = mob.A.block<3, 3>(6, 0) * f + mob.A.block<3, 3>(6, 3) * f;
    const Vec3 u_far = mob.A.block<3, 3>(9, 0) * f + mob.A.block<3, 3>(9, 3) * f;
    CHECK(u_near.norm() / u_far.norm() == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("slender-body drag anisotropy near 2") {
    // Long straight rod; broadside vs lengthwise rigid translation.
    const int n = 101;
    const double dl = 0.01;
    std::vector<Vec3> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = Vec3(i * dl, 0, 0);
    const SegmentTopology topo = chain_topology(nodes);
    const MobilityMatrix mob = assemble_mobility(nodes, topo, 1e-3, 1.0);
    const MobilitySolver solver(mob);

    VecX u_axial(3 * n), u_broadside(3 * n);
    for (int i = 0; i < n; ++i) {
        u_axial.segment<3>(3 * i) = Vec3(1, 0, 0);
        u_broadside.segment<3>(3 * i) = Vec3(0, 1, 0);
    }
    const double f_axial = solver.solve(u_axial).sum();
    const VecX fb = solver.solve(u_broadside);
    double f_broad = 0.0;
    for (int i = 0; i < n; ++i) f_broad += fb[3 * i + 1];
    const double ratio = f_broad / f_axial;
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.25));
    CHECK(ratio > 1.0);
}

TEST_CASE("mobility matrix is symmetric and positive definite on a helix") {
    const auto nodes = helix_nodes();
    const SegmentTopology topo = chain_topology(nodes);
    const MobilityMatrix mob = assemble_mobility(nodes, topo, 6e-3, 1.0);

    const double asym = (mob.A - mob.A.transpose()).norm() / mob.A.norm();
    CHECK(asym < 1e-8);

    Eigen::SelfAdjointEigenSolver<MatX> es(mob.A);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("solve properties") {
    const auto nodes = helix_nodes(10e-3);
    const SegmentTopology topo = chain_topology(nodes);
    const int n = static_cast<int>(nodes.size());
    const MobilityMatrix mob = assemble_mobility(nodes, topo, 6e-3, 1.0);
    const MobilitySolver solver(mob);

    SUBCASE("zero velocities give zero forces") {
        CHECK(solver.solve(VecX::Zero(3 * n)).lpNorm<Eigen::Infinity>() == 0.0);
    }

    SUBCASE("solution residual is tiny") {
        std::mt19937 rng(13);
        std::normal_distribution<double> g(0.0, 1.0);
        VecX u(3 * n);
        for (int k = 0; k < 3 * n; ++k) u[k] = g(rng);
        const VecX f = solver.solve(u);
        CHECK((mob.A * f - u).norm() / u.norm() < 1e-10);
    }

    SUBCASE("linearity") {
        std::mt19937 rng(14);
        std::normal_distribution<double> g(0.0, 1.0);
        VecX u1(3 * n), u2(3 * n);
        for (int k = 0; k < 3 * n; ++k) {
            u1[k] = g(rng);
            u2[k] = g(rng);
        }
        const VecX lhs = solver.solve(1.7 * u1 - 0.3 * u2);
        const VecX rhs = 1.7 * solver.solve(u1) - 0.3 * solver.solve(u2);
        CHECK((lhs - rhs).norm() / rhs.norm() < 1e-9);
    }

    SUBCASE("forces scale linearly with viscosity") {
        const MobilityMatrix mob3 = assemble_mobility(nodes, topo, 6e-3, 3.0);
        VecX u = VecX::Ones(3 * n);
        const VecX f1 = solve_forces(mob, u);
        const VecX f3 = solve_forces(mob3, u);
        CHECK((f3 - 3.0 * f1).norm() / f3.norm() < 1e-12);
    }

    SUBCASE("power on the fluid is non-negative, drag opposes motion") {
        std::mt19937 rng(15);
        std::normal_distribution<double> g(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            VecX u(3 * n);
            for (int k = 0; k < 3 * n; ++k) u[k] = g(rng);
            CHECK(solver.solve(u).dot(u) >= 0.0);
        }
        // rigid translation: total force on the rod anti-parallel to v
        const Vec3 v = random_unit(rng);
        VecX u(3 * n);
        for (int i = 0; i < n; ++i) u.segment<3>(3 * i) = v;
        const std::vector<Vec3> f = split_vec3(solver.solve(u));
        Vec3 on_rod = Vec3::Zero();
        for (const Vec3& fi : f) on_rod -= fi;
        CHECK(on_rod.dot(v) < 0.0);
    }
}

TEST_CASE("coincident nodes are rejected") {
    std::vector<Vec3> nodes = {Vec3(0, 0, 0), Vec3(0, 0, 1e-9), Vec3(0, 0, 1)};
    const SegmentTopology topo = chain_topology(nodes);
    CHECK_THROWS_AS(assemble_mobility(nodes, topo, 6e-3, 1.0), NumericalError);
}

TEST_CASE("flagellum resultants use the printed index ranges") {
    const int N = 4;
    std::vector<Vec3> forces(2 * N + 1, Vec3::Zero());
    SUBCASE("all zero") {
        const auto [f1, f2] = flagellum_resultants(forces, N);
        CHECK(f1.norm() == 0.0);
        CHECK(f2.norm() == 0.0);
    }
    SUBCASE("partial sums with sign") {
        for (int i = 0; i < 2 * N + 1; ++i) forces[i] = Vec3(i, 0, 0);
        const auto [f1, f2] = flagellum_resultants(forces, N);
        CHECK(f1.x() == doctest::Approx(-(0 + 1 + 2 + 3)));
        CHECK(f2.x() == doctest::Approx(-(5 + 6 + 7 + 8)));
        // the base node (index N) is in neither sum
    }
}

TEST_CASE("mirror symmetry of the pair configuration") {
    // Flagellum 2 is flagellum 1 reflected in the x = 0 plane; mirrored
    // velocities must produce mirrored forces.
    const auto raw = helix_nodes(10e-3);
    const int N = static_cast<int>(raw.size());
    std::vector<Vec3> nodes;
    const Vec3 offset(0.05, 0, 0);
    for (const Vec3& p : raw) nodes.push_back(p + offset);
    auto mirror = [](const Vec3& p) { return Vec3(-p.x(), p.y(), p.z()); };
    for (const Vec3& p : raw) nodes.push_back(mirror(p + offset));

    SegmentTopology topo;
    topo.node_weight.assign(2 * N, 0.0);
    for (int f = 0; f < 2; ++f) {
        for (int e = 0; e < N - 1; ++e) {
            const int a = f * N + e;
            topo.segments.emplace_back(a, a + 1);
            const double half = 0.5 * (nodes[a + 1] - nodes[a]).norm();
            topo.node_weight[a] += half;
            topo.node_weight[a + 1] += half;
        }
    }
    const MobilityMatrix mob = assemble_mobility(nodes, topo, 6e-3, 1.0);
    const MobilitySolver solver(mob);

    std::mt19937 rng(16);
    std::normal_distribution<double> g(0.0, 1.0);
    VecX u(6 * N);
    for (int i = 0; i < N; ++i) {
        const Vec3 v(g(rng), g(rng), g(rng));
        u.segment<3>(3 * i) = v;
        u.segment<3>(3 * (N + i)) = mirror(v);
    }
    const std::vector<Vec3> f = split_vec3(solver.solve(u));
    Vec3 f1 = Vec3::Zero(), f2 = Vec3::Zero();
    for (int i = 0; i < N; ++i) {
        f1 -= f[i];
        f2 -= f[N + i];
    }
    CHECK((f2 - mirror(f1)).norm() < 1e-9 * std::max(1.0, f1.norm()));
}

TEST_CASE("steady spin of an isolated helix: thrust sign and lateral averages") {
    // Kinematic rigid rotation about the helix axis; no elasticity involved.
    HelixParams helix;
    const double dl = 5e-3;
    const double omega = rpm_to_rad_s(50);
    const Vec3 axis(0, 0, -1);
    const int phases = 24;

    Vec3 mean_force = Vec3::Zero();
    double fz_first = 0.0;
    for (int k = 0; k < phases; ++k) {
        const double phase = 2 * M_PI * k / phases;
        const auto nodes =
            generate_helix_nodes(helix, dl, Vec3::Zero(), axis, phase);
        const SegmentTopology topo = chain_topology(nodes);
        const MobilityMatrix mob = assemble_mobility(nodes, topo, 6e-3, 1.0);
        const MobilitySolver solver(mob);

        // Counter-clockwise about +z when viewed from above: v = w x r.
        const Vec3 w = omega * Vec3(0, 0, 1);
        VecX u(3 * nodes.size());
        for (size_t i = 0; i < nodes.size(); ++i) {
            u.segment<3>(3 * i) = w.cross(nodes[i]);
        }
        const std::vector<Vec3> f = split_vec3(solver.solve(u));
        Vec3 on_rod = Vec3::Zero();
        for (const Vec3& fi : f) on_rod -= fi;
        if (k == 0) fz_first = on_rod.z();
        // thrust is steady over the revolution
        CHECK(on_rod.z() == doctest::Approx(fz_first).epsilon(1e-6));
        mean_force += on_rod / phases;
    }
    // Lateral force averages out over one revolution.
    CHECK(std::abs(mean_force.x()) < 0.02 * std::abs(mean_force.z()));
    CHECK(std::abs(mean_force.y()) < 0.02 * std::abs(mean_force.z()));
    CHECK(mean_force.z() != 0.0);
}
