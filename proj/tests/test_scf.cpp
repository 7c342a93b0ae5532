#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "dgiga/scf.hpp"

using namespace dgiga;

namespace {

MultiPatchMesh box2d(int degree, int elements) {
    Box domain{{0, 0, 0}, {1, 1, 0}};
    auto layout = PatchLayout::build(
        2, domain, {Box{{0, 0, 0}, {0.5, 1, 0}}, Box{{0.5, 0, 0}, {1, 1, 0}}});
    MultiPatchMesh mesh{layout, {}};
    mesh.patches.emplace_back(layout, 0,
                              TensorSplineSpace({KnotVector::uniform_open(degree, elements),
                                                 KnotVector::uniform_open(degree, 2 * elements)}));
    mesh.patches.emplace_back(layout, 1,
                              TensorSplineSpace({KnotVector::uniform_open(degree, elements + 1),
                                                 KnotVector::uniform_open(degree, 2 * elements)}));
    return mesh;
}

}  // namespace

TEST_CASE("gp with zero interaction reduces to the linear problem") {
    auto mesh = box2d(2, 3);
    DofMap dofs(mesh);
    SCFOptions opts;
    opts.gp_scale = 0.0;
    auto state = scf_run(mesh, dofs, NonlinearProblem::GrossPitaevskii, {}, 1.0, opts);
    CHECK(state.converged);
    CHECK(state.iteration == 1);

    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    auto lin = solve_eigen(A, M, 1);
    CHECK(state.eigen.eigenvalues[0] == Catch::Approx(lin.eigenvalues[0]).epsilon(1e-12));
    CHECK(state.energy == Catch::Approx(lin.eigenvalues[0]).epsilon(1e-12));
}

TEST_CASE("gp in a box converges self-consistently") {
    auto mesh = box2d(2, 3);
    DofMap dofs(mesh);
    SCFOptions opts;
    opts.gp_scale = 5.0;
    std::ostringstream log;
    opts.log = &log;
    auto state = scf_run(mesh, dofs, NonlinearProblem::GrossPitaevskii, {}, 1.0, opts);
    CHECK(state.converged);
    CHECK(state.iteration <= 60);

    // the repulsive density term raises the ground state above the box value
    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    auto lin = solve_eigen(A, M, 1);
    CHECK(state.eigen.eigenvalues[0] > lin.eigenvalues[0]);

    // density integrates to the electron count at the converged state
    const double q = integrate_over_mesh(mesh, [&](const Point& x) {
        return state.density.value(x);
    });
    CHECK(q == Catch::Approx(1.0).margin(1e-8));

    // per-iteration log lines carry the machine-readable keys
    CHECK(log.str().find("scf iter=1 lambda1=") != std::string::npos);
    CHECK(log.str().find("delta=") != std::string::npos);
    CHECK(log.str().find("energy=") != std::string::npos);

    // idempotence at the fixed point: one extra iteration barely moves lambda
    SCFOptions again = opts;
    again.log = nullptr;
    again.max_iterations = state.iteration + 1;
    auto state2 = scf_run(mesh, dofs, NonlinearProblem::GrossPitaevskii, {}, 1.0, again);
    CHECK(std::abs(state2.eigen.eigenvalues[0] - state.eigen.eigenvalues[0]) <= 10 * opts.tol);

    // gp energy identity: E = lambda_1 - (s/2) int rho^2
    const double r2 = integrate_over_mesh(mesh, [&](const Point& x) {
        const double r = state.density.value(x);
        return r * r;
    });
    CHECK(state.energy ==
          Catch::Approx(state.eigen.eigenvalues[0] - 0.5 * opts.gp_scale * r2).margin(1e-12));
}

TEST_CASE("delta decreases near convergence") {
    auto mesh = box2d(1, 3);
    DofMap dofs(mesh);
    SCFOptions opts;
    opts.gp_scale = 3.0;
    auto state = scf_run(mesh, dofs, NonlinearProblem::GrossPitaevskii, {}, 1.0, opts);
    REQUIRE(state.converged);
    const auto& dh = state.delta_history;
    if (dh.size() >= 5) {
        int drops = 0;
        for (std::size_t i = dh.size() - 5; i + 1 < dh.size(); ++i)
            if (dh[i + 1] <= dh[i]) ++drops;
        // linear mixing may oscillate; flag rather than assert strictly
        INFO("monotone drops in the last history window: " << drops);
        CHECK(drops >= 2);
    }
}

TEST_CASE("total energy reductions") {
    auto mesh = box2d(2, 2);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    auto lin = solve_eigen(A, M, 1);
    SCFOptions opts;

    // zero xc and zero hartree contributions: E = 2 lambda_1 (helium mode)
    DensityField zero{MultiPatchField::zero(mesh), 2.0};
    const double e_ks = total_energy(mesh, NonlinearProblem::KohnShamLDA, lin.eigenvalues[0],
                                     zero, nullptr, opts);
    CHECK(e_ks == Catch::Approx(2.0 * lin.eigenvalues[0]).margin(1e-12));

    // gp with zero interaction: E = lambda_1
    opts.gp_scale = 0.0;
    DensityField rho{MultiPatchField::zero(mesh), 1.0};
    const double e_gp = total_energy(mesh, NonlinearProblem::GrossPitaevskii, lin.eigenvalues[0],
                                     rho, nullptr, opts);
    CHECK(e_gp == Catch::Approx(lin.eigenvalues[0]).margin(1e-14));
}
