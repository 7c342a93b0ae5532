#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dgiga/assembly.hpp"
#include "dgiga/solver.hpp"

using namespace dgiga;

namespace {

MultiPatchMesh unit_interval(int degree, int elements) {
    Box domain{{0, 0, 0}, {1, 0, 0}};
    auto layout = PatchLayout::build(1, domain, {domain});
    MultiPatchMesh mesh{layout, {}};
    mesh.patches.emplace_back(layout, 0,
                              TensorSplineSpace({KnotVector::uniform_open(degree, elements)}));
    return mesh;
}

MultiPatchMesh split_interval(int p0, int n0, int p1, int n1) {
    Box domain{{0, 0, 0}, {1, 0, 0}};
    auto layout = PatchLayout::build(
        1, domain, {Box{{0, 0, 0}, {0.5, 0, 0}}, Box{{0.5, 0, 0}, {1, 0, 0}}});
    MultiPatchMesh mesh{layout, {}};
    mesh.patches.emplace_back(layout, 0, TensorSplineSpace({KnotVector::uniform_open(p0, n0)}));
    mesh.patches.emplace_back(layout, 1, TensorSplineSpace({KnotVector::uniform_open(p1, n1)}));
    return mesh;
}

MultiPatchMesh square_box(int degree, int elements) {
    Box domain{{-1, -1, 0}, {1, 1, 0}};
    auto layout = PatchLayout::build(
        2, domain, {Box{{-1, -1, 0}, {0, 1, 0}}, Box{{0, -1, 0}, {1, 1, 0}}});
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

TEST_CASE("dirichlet eigenvalues of -1/2 d^2/dx^2 on (0,1)") {
    // lambda_k = k^2 pi^2 / 2
    auto mesh = unit_interval(3, 16);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    auto sol = solve_eigen(A, M, 3);
    const double base = M_PI * M_PI / 2.0;
    // tolerances leave room for the discretization error at h = 1/16, p = 3
    CHECK(sol.eigenvalues[0] == Catch::Approx(base).epsilon(1e-8));
    CHECK(sol.eigenvalues[1] == Catch::Approx(4 * base).epsilon(1e-6));
    CHECK(sol.eigenvalues[2] == Catch::Approx(9 * base).epsilon(3e-5));
    // eigenvalues approach from above (min-max for the conforming case)
    CHECK(sol.eigenvalues[0] >= base);
}

TEST_CASE("two-patch 1d eigenvalues match the analytic values") {
    auto mesh = split_interval(2, 10, 2, 13);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    auto sol = solve_eigen(A, M, 2);
    CHECK(sol.eigenvalues[0] == Catch::Approx(M_PI * M_PI / 2).epsilon(1e-6));
    CHECK(sol.eigenvalues[1] == Catch::Approx(2 * M_PI * M_PI).epsilon(1e-5));
}

TEST_CASE("2d box ground state") {
    auto mesh = square_box(2, 6);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    auto sol = solve_eigen(A, M, 4);
    // -1/2 Laplacian on [-1,1]^2: lambda = pi^2/8 (k^2 + l^2)
    CHECK(sol.eigenvalues[0] == Catch::Approx(M_PI * M_PI / 4).epsilon(1e-5));
    // degenerate pair (1,2)/(2,1)
    CHECK(sol.eigenvalues[1] == Catch::Approx(5 * M_PI * M_PI / 8).epsilon(1e-4));
    CHECK(sol.eigenvalues[2] == Catch::Approx(5 * M_PI * M_PI / 8).epsilon(1e-4));
}

TEST_CASE("solution invariants: normalization, orthogonality, rayleigh") {
    auto mesh = square_box(2, 4);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, [](const Point& x) { return x[0] + x[1] * x[1]; });
    auto M = assemble_mass(mesh, dofs);
    auto sol = solve_eigen(A, M, 5);
    for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXd xi = sol.vectors.col(i);
        CHECK(M.quadratic_form(xi, xi) == Catch::Approx(1.0).margin(1e-10));
        for (int j = i + 1; j < 5; ++j)
            CHECK(std::abs(M.quadratic_form(xi, sol.vectors.col(j))) <= 1e-8);
        const double rayleigh = A.quadratic_form(xi, xi) / M.quadratic_form(xi, xi);
        CHECK(std::abs(sol.eigenvalues[i] - rayleigh) <= 1e-10 * std::max(1.0, std::abs(rayleigh)));
        CHECK(sol.residuals[i] <= 1e-9);
    }
    CHECK(std::is_sorted(sol.eigenvalues.begin(), sol.eigenvalues.end()));
}

TEST_CASE("sparse path agrees with the dense oracle") {
    auto mesh = square_box(2, 4);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, {});
    auto M = assemble_mass(mesh, dofs);
    REQUIRE(dofs.size() <= 2000);
    auto sparse = solve_eigen(A, M, 6);
    auto dense = dense_oracle(A, M, 6);
    for (int i = 0; i < 6; ++i)
        CHECK(sparse.eigenvalues[i] ==
              Catch::Approx(dense.eigenvalues[i]).epsilon(1e-9));
    // the degenerate cluster (columns 1,2) matches as a subspace
    const double angle = subspace_angle(M, sparse.vectors.middleCols(1, 2),
                                        dense.vectors.middleCols(1, 2));
    CHECK(angle <= 1e-6);
}

TEST_CASE("full spectrum trace identity") {
    auto mesh = unit_interval(2, 6);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, [](const Point& x) { return 2.0 + x[0]; });
    auto M = assemble_mass(mesh, dofs);
    const int n = static_cast<int>(dofs.size());
    auto all = dense_oracle(A, M, n);
    const double trace = M.dense().ldlt().solve(A.dense()).trace();
    CHECK(all.eigenvalues.sum() == Catch::Approx(trace).epsilon(1e-8));
}

TEST_CASE("oracle refuses oversized problems") {
    auto mesh = square_box(2, 4);
    DofMap dofs(mesh);
    auto M = assemble_mass(mesh, dofs);
    CHECK_THROWS(dense_oracle(M, M, 2, /*max_dim=*/10));
}

TEST_CASE("source problem with the closed-form solution x(1-x)") {
    // -1/2 w'' = 1, w(0) = w(1) = 0  =>  w = x(1-x)
    std::vector<double> errors;
    for (int nel : {4, 8, 16}) {
        auto mesh = unit_interval(2, nel);
        DofMap dofs(mesh);
        auto A = assemble_bilinear(mesh, dofs, {});
        auto b = assemble_load(mesh, dofs, [](const Point&) { return 1.0; });
        auto w = solve_source(A, b);
        CHECK(w.residual <= 1e-10);
        MultiPatchField wf(mesh, dofs, w.coefficients);
        // quadratic splines reproduce the parabola exactly
        double maxerr = 0.0;
        for (int s = 1; s < 20; ++s) {
            const double x = s / 20.0;
            maxerr = std::max(maxerr,
                              std::abs(wf.value(Point{x, 0, 0}) - x * (1 - x)));
        }
        errors.push_back(maxerr);
        CHECK(maxerr <= 1e-11);
    }
}

TEST_CASE("galerkin orthogonality of the source solve") {
    auto mesh = split_interval(2, 5, 1, 7);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, [](const Point& x) { return 1.0 + x[0]; });
    auto b = assemble_load(mesh, dofs, [](const Point& x) { return std::sin(3 * x[0]); });
    auto w = solve_source(A, b);
    const Eigen::VectorXd res = b - A.apply(w.coefficients);
    CHECK(res.norm() / b.norm() <= 1e-10);
}

TEST_CASE("zero load gives the zero solution") {
    auto mesh = unit_interval(1, 5);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, {});
    auto w = solve_source(A, Eigen::VectorXd::Zero(dofs.size()));
    CHECK(w.coefficients.norm() == 0.0);
}

TEST_CASE("manufactured dg convergence on non-matching patches") {
    // w* = sin(pi x~) sin(pi y~) on [-1,1]^2 (x~ = (x+1)/2), V smooth:
    // f = -1/2 lap w* + V w*; DG-norm error order is min(p0, p1) = 1
    auto wstar = [](const Point& x) {
        return std::sin(M_PI * (x[0] + 1) / 2) * std::sin(M_PI * (x[1] + 1) / 2);
    };
    auto grad_wstar = [](const Point& x) {
        const double c = M_PI / 2;
        return Point{c * std::cos(M_PI * (x[0] + 1) / 2) * std::sin(M_PI * (x[1] + 1) / 2),
                     c * std::sin(M_PI * (x[0] + 1) / 2) * std::cos(M_PI * (x[1] + 1) / 2), 0.0};
    };
    auto V = [](const Point& x) { return 2.0 + x[0] + 0.5 * x[1]; };
    auto f = [&](const Point& x) {
        const double lap = -2.0 * (M_PI * M_PI / 4) * wstar(x);
        return -0.5 * lap + V(x) * wstar(x);
    };

    Box domain{{-1, -1, 0}, {1, 1, 0}};
    auto layout = PatchLayout::build(
        2, domain, {Box{{-1, -1, 0}, {0.1, 1, 0}}, Box{{0.1, -1, 0}, {1, 1, 0}}});

    std::vector<double> dg_errs, l2_errs, hs;
    for (int lvl = 0; lvl < 3; ++lvl) {
        const int n0 = 3 << lvl, n1 = 2 << lvl;
        MultiPatchMesh mesh{layout, {}};
        mesh.patches.emplace_back(layout, 0,
                                  TensorSplineSpace({KnotVector::uniform_open(1, n0),
                                                     KnotVector::uniform_open(1, 2 * n0)}));
        mesh.patches.emplace_back(layout, 1,
                                  TensorSplineSpace({KnotVector::uniform_open(2, n1),
                                                     KnotVector::uniform_open(2, 2 * n1 + 1)}));
        DofMap dofs(mesh);
        auto A = assemble_bilinear(mesh, dofs, V);
        auto b = assemble_load(mesh, dofs, f);
        auto w = solve_source(A, b);
        MultiPatchField wf(mesh, dofs, w.coefficients);

        // broken H1 + jump error against the exact solution by quadrature
        double acc = 0.0;
        for (int i = 0; i < 2; ++i) {
            const auto& sp = mesh.patches[static_cast<std::size_t>(i)].space();
            const Box& pb = layout.patch(i);
            const auto& bk0 = sp.direction(0).breakpoints();
            const auto& bk1 = sp.direction(1).breakpoints();
            for (std::size_t e0 = 0; e0 + 1 < bk0.size(); ++e0)
                for (std::size_t e1 = 0; e1 + 1 < bk1.size(); ++e1) {
                    Point lo{pb.lo[0] + pb.side(0) * bk0[e0], pb.lo[1] + pb.side(1) * bk1[e1], 0};
                    Point hi{pb.lo[0] + pb.side(0) * bk0[e0 + 1],
                             pb.lo[1] + pb.side(1) * bk1[e1 + 1], 0};
                    auto rule = tensor_gauss(2, lo, hi, 5);
                    for (std::size_t q = 0; q < rule.size(); ++q) {
                        const Point& x = rule.points[q];
                        const double e = wf.value_on(i, x) - wstar(x);
                        const auto gw = grad_wstar(x);
                        const double gx = wf.derivative_on(i, x, 0) - gw[0];
                        const double gy = wf.derivative_on(i, x, 1) - gw[1];
                        acc += rule.weights[q] * (e * e + gx * gx + gy * gy);
                    }
                }
        }
        double l2only = 0.0;
        {
            // recompute just the L2 part for the h_max relation check
            for (int i = 0; i < 2; ++i) {
                const Box& pb = layout.patch(i);
                auto rule = tensor_gauss(2, pb.lo, pb.hi, 24);
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    const double e = wf.value_on(i, rule.points[q]) - wstar(rule.points[q]);
                    l2only += rule.weights[q] * e * e;
                }
            }
        }
        AssemblyOptions opts;
        const auto& F = layout.interior_faces()[0];
        const double pen = opts.penalty_coefficient(mesh.patches[0], mesh.patches[1]) *
                           (1.0 / mesh.patches[0].h() + 1.0 / mesh.patches[1].h());
        auto frule = face_quadrature(mesh, F, 5, 5);
        for (std::size_t q = 0; q < frule.size(); ++q) {
            const double jump =
                wf.value_on(0, frule.points[q]) - wf.value_on(1, frule.points[q]);
            acc += pen * frule.weights[q] * jump * jump;
        }
        dg_errs.push_back(std::sqrt(acc));
        l2_errs.push_back(std::sqrt(l2only));
        hs.push_back(mesh.h_max());
    }
    for (std::size_t k = 0; k + 1 < dg_errs.size(); ++k) {
        const double eoc = std::log(dg_errs[k] / dg_errs[k + 1]) / std::log(hs[k] / hs[k + 1]);
        CHECK(eoc >= 0.8);
        CHECK(eoc <= 1.45);
    }
    // L2 error is one order better (duality): ratio e_L2 / (h_max e_DG) bounded
    const double r0 = l2_errs[0] / (hs[0] * dg_errs[0]);
    const double r2 = l2_errs[2] / (hs[2] * dg_errs[2]);
    CHECK(r2 <= 3.0 * r0 + 1.0);
}
