#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "dgiga/assembly.hpp"

using namespace dgiga;

namespace {

MultiPatchMesh interval_mesh(std::vector<std::pair<double, double>> segments,
                             std::vector<std::pair<int, int>> spaces,  // (degree, elements)
                             double lo, double hi) {
    Box domain{{lo, 0, 0}, {hi, 0, 0}};
    std::vector<Box> boxes;
    for (auto [a, b] : segments) boxes.push_back(Box{{a, 0, 0}, {b, 0, 0}});
    auto layout = PatchLayout::build(1, domain, boxes);
    MultiPatchMesh mesh{layout, {}};
    for (std::size_t i = 0; i < spaces.size(); ++i)
        mesh.patches.emplace_back(layout, static_cast<int>(i),
                                  TensorSplineSpace({KnotVector::uniform_open(
                                      spaces[i].first, spaces[i].second)}));
    return mesh;
}

MultiPatchMesh square_two_patch(int p_left, int nel_left, int p_right, int nel_right) {
    Box domain{{-1, -1, 0}, {1, 1, 0}};
    auto layout = PatchLayout::build(
        2, domain, {Box{{-1, -1, 0}, {0, 1, 0}}, Box{{0, -1, 0}, {1, 1, 0}}});
    MultiPatchMesh mesh{layout, {}};
    mesh.patches.emplace_back(layout, 0,
                              TensorSplineSpace({KnotVector::uniform_open(p_left, nel_left),
                                                 KnotVector::uniform_open(p_left, nel_left + 1)}));
    mesh.patches.emplace_back(layout, 1,
                              TensorSplineSpace({KnotVector::uniform_open(p_right, nel_right),
                                                 KnotVector::uniform_open(p_right, nel_right)}));
    return mesh;
}

}  // namespace

TEST_CASE("1d stiffness of hat functions") {
    // -1/2 u'' with p=1 on 4 uniform elements: interior rows have 1/h on the
    // diagonal and -1/(2h) off it
    auto mesh = interval_mesh({{0, 1}}, {{1, 4}}, 0, 1);
    DofMap dofs(mesh);
    REQUIRE(dofs.size() == 3);
    auto A = assemble_bilinear(mesh, dofs, {});
    const double h = 0.25;
    Eigen::MatrixXd D = A.dense();
    for (int i = 0; i < 3; ++i) CHECK(D(i, i) == Catch::Approx(1.0 / h).margin(1e-12));
    CHECK(D(0, 1) == Catch::Approx(-0.5 / h).margin(1e-12));
    CHECK(D(1, 2) == Catch::Approx(-0.5 / h).margin(1e-12));
    CHECK(D(0, 2) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("assembled matrices are exactly symmetric") {
    auto mesh = square_two_patch(1, 3, 2, 2);
    DofMap dofs(mesh);
    auto A = assemble_bilinear(mesh, dofs, [](const Point& x) { return x[0] * x[0] + 1.0; });
    Eigen::MatrixXd D = A.dense();
    CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("continuous functions see no face terms") {
    // u continuous across the interface: a_DG(u, v) equals the volume part
    // for any v that is also continuous
    auto mesh = square_two_patch(2, 3, 2, 4);
    DofMap dofs(mesh, false);
    auto V = [](const Point& x) { return 1.0 + 0.5 * x[0] + x[1] * x[1]; };
    auto A = assemble_bilinear(mesh, dofs, V);

    // polynomials that both degree-2 spaces reproduce exactly, so the
    // projected fields are globally continuous
    auto up = [](const Point& x) { return x[0] * x[0] + x[1]; };
    auto vp = [](const Point& x) { return (1 + x[0]) * (2 - x[1]); };

    Eigen::VectorXd uc = Eigen::VectorXd::Zero(dofs.size());
    Eigen::VectorXd vc = Eigen::VectorXd::Zero(dofs.size());
    for (int i = 0; i < 2; ++i) {
        const auto& sp = mesh.patches[static_cast<std::size_t>(i)].space();
        auto cu = sp.project([&](const Point& xi) { return up(mesh.layout.pushforward(i, xi)); });
        auto cv = sp.project([&](const Point& xi) { return vp(mesh.layout.pushforward(i, xi)); });
        dofs.add_patch_coefficients(i, cu, uc);
        dofs.add_patch_coefficients(i, cv, vc);
    }
    const double a_dg = uc.dot(A.apply(vc));

    // volume-only oracle by dense quadrature of the smooth integrand
    auto gradu = [](const Point& x) { return Point{2 * x[0], 1.0, 0.0}; };
    auto gradv = [](const Point& x) { return Point{2 - x[1], -(1 + x[0]), 0.0}; };
    double vol = 0.0;
    auto rule = tensor_gauss(2, Point{-1, -1, 0}, Point{1, 1, 0}, 8);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point& x = rule.points[q];
        const auto gu = gradu(x);
        const auto gv = gradv(x);
        vol += rule.weights[q] *
               (0.5 * (gu[0] * gv[0] + gu[1] * gv[1]) + V(x) * up(x) * vp(x));
    }
    CHECK(a_dg == Catch::Approx(vol).margin(1e-10));
}

TEST_CASE("mass matrix basics") {
    auto mesh = interval_mesh({{0, 1}}, {{1, 5}}, 0, 1);
    DofMap dofs(mesh);
    auto M = assemble_mass(mesh, dofs);
    Eigen::MatrixXd D = M.dense();
    // fully interior hats: row sum = integral of the hat = h
    const double h = 0.2;
    CHECK(D.row(1).sum() == Catch::Approx(h).margin(1e-13));
    CHECK(D.row(2).sum() == Catch::Approx(h).margin(1e-13));

    std::mt19937 rng(21);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd x(dofs.size());
        for (long i = 0; i < x.size(); ++i) x[i] = gauss(rng);
        if (x.norm() == 0.0) continue;
        CHECK(M.quadratic_form(x, x) > 0.0);
    }

    // all-ones over the unconstrained space integrates to |Omega|
    DofMap full(mesh, false);
    auto Mf = assemble_mass(mesh, full);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(full.size());
    CHECK(Mf.quadratic_form(ones, ones) == Catch::Approx(1.0).margin(1e-12));

    auto mesh2 = square_two_patch(2, 2, 1, 3);
    DofMap full2(mesh2, false);
    auto M2 = assemble_mass(mesh2, full2);
    Eigen::VectorXd ones2 = Eigen::VectorXd::Ones(full2.size());
    CHECK(M2.quadratic_form(ones2, ones2) == Catch::Approx(4.0).margin(1e-11));
}

TEST_CASE("load vector") {
    auto mesh = interval_mesh({{0, 1}}, {{1, 6}}, 0, 1);
    DofMap dofs(mesh);
    auto zero = assemble_load(mesh, dofs, [](const Point&) { return 0.0; });
    CHECK(zero.norm() == 0.0);

    auto b = assemble_load(mesh, dofs, [](const Point&) { return 1.0; });
    for (long i = 0; i < b.size(); ++i) CHECK(b[i] == Catch::Approx(1.0 / 6).margin(1e-13));

    // f = a basis function reproduces a column of the mass matrix
    auto M = assemble_mass(mesh, dofs);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dofs.size());
    e[2] = 1.0;
    MultiPatchField phi(mesh, dofs, e);
    auto col = assemble_load(mesh, dofs, [&](const Point& x) { return phi.value(x); });
    Eigen::VectorXd expected = M.apply(e);
    for (long i = 0; i < col.size(); ++i)
        CHECK(col[i] == Catch::Approx(expected[i]).margin(1e-13));
}

TEST_CASE("dg norm") {
    auto mesh = interval_mesh({{-1, 0}, {0, 1}}, {{2, 4}, {2, 4}}, -1, 1);
    DofMap full(mesh, false);

    // zero field
    MultiPatchField zero = MultiPatchField::zero(mesh);
    AssemblyOptions opts;
    opts.c_sigma = 3.0;
    CHECK(dg_norm(mesh, zero, opts) == 0.0);

    // u = 1 on the left patch, 0 on the right: ||u||_DG^2 = 1 + C_sigma*(2/h)
    std::vector<Eigen::VectorXd> coeffs{
        Eigen::VectorXd::Ones(mesh.patches[0].space().size()),
        Eigen::VectorXd::Zero(mesh.patches[1].space().size())};
    MultiPatchField step(mesh, std::move(coeffs));
    const double h = 0.25;
    const double expected = std::sqrt(1.0 + 3.0 * (2.0 / h));
    CHECK(dg_norm(mesh, step, opts) == Catch::Approx(expected).margin(1e-10));

    // a globally continuous field: DG norm equals the broken H1 norm
    auto f = [](const Point& x) { return (1 - x[0] * x[0]); };
    Eigen::VectorXd g = Eigen::VectorXd::Zero(full.size());
    for (int i = 0; i < 2; ++i) {
        auto c = mesh.patches[static_cast<std::size_t>(i)].space().project(
            [&](const Point& xi) { return f(mesh.layout.pushforward(i, xi)); });
        full.add_patch_coefficients(i, c, g);
    }
    MultiPatchField smooth(mesh, full, g);
    // oracle: int (u^2 + u'^2) over [-1,1] for u = 1-x^2 is 16/15 + 8/3
    const double h1sq = 16.0 / 15.0 + 8.0 / 3.0;
    CHECK(dg_norm(mesh, smooth, opts) == Catch::Approx(std::sqrt(h1sq)).margin(1e-10));
}

TEST_CASE("sparsity structure is mesh independent") {
    // once the mesh resolves the basis supports, nnz per row saturates at a
    // level bounded by a constant times prod(p_a + 1)
    auto coarse = square_two_patch(2, 4, 2, 5);
    DofMap dc(coarse);
    auto Ac = assemble_bilinear(coarse, dc, {});
    auto fine = coarse.refined({2, 2});
    DofMap df(fine);
    auto Af = assemble_bilinear(fine, df, {});
    auto finer = fine.refined({2, 2});
    DofMap dff(finer);
    auto Aff = assemble_bilinear(finer, dff, {});
    const long p1d = 3;  // p + 1
    CHECK(Af.max_row_entries() == Ac.max_row_entries());
    CHECK(Aff.max_row_entries() == Af.max_row_entries());
    CHECK(Aff.max_row_entries() <= 9 * p1d * p1d);
}

TEST_CASE("boundedness constant is stable under refinement") {
    auto coarse = square_two_patch(1, 2, 2, 3);
    std::mt19937 rng(4242);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto fit_constant = [&](const MultiPatchMesh& mesh) {
        DofMap dofs(mesh);
        auto A = assemble_bilinear(mesh, dofs, {});
        double cmax = 0.0;
        for (int t = 0; t < 50; ++t) {
            Eigen::VectorXd u(dofs.size()), v(dofs.size());
            for (long i = 0; i < u.size(); ++i) {
                u[i] = gauss(rng);
                v[i] = gauss(rng);
            }
            MultiPatchField uf(mesh, dofs, u), vf(mesh, dofs, v);
            const double du = dg_norm(mesh, uf), dv = dg_norm(mesh, vf);
            cmax = std::max(cmax, std::abs(u.dot(A.apply(v))) / (du * dv));
        }
        return cmax;
    };

    const double c0 = fit_constant(coarse);
    const double c1 = fit_constant(coarse.refined({2, 2}));
    const double c2 = fit_constant(coarse.refined({4, 4}));
    CHECK(c1 <= 1.05 * c0);
    CHECK(c2 <= 1.05 * c0);
}

TEST_CASE("matrix dump format") {
    auto mesh = interval_mesh({{0, 1}}, {{1, 3}}, 0, 1);
    DofMap dofs(mesh);
    auto M = assemble_mass(mesh, dofs);
    std::ostringstream os;
    M.dump(os);
    std::istringstream is(os.str());
    long dim = 0, nnz = 0;
    is >> dim >> nnz;
    CHECK(dim == dofs.size());
    CHECK(nnz == M.nonzeros());
    long r = 0, c = 0, count = 0;
    double v = 0.0;
    while (is >> r >> c >> v) {
        CHECK(r <= c);
        ++count;
    }
    CHECK(count == nnz);
}
