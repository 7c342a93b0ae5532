#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dgiga/hartree.hpp"
#include "dgiga/potentials.hpp"

using namespace dgiga;

namespace {

MultiPatchMesh cube_mesh(double lo, double hi, int degree, int elements) {
    Box domain{{lo, lo, lo}, {hi, hi, hi}};
    auto layout = PatchLayout::build(3, domain, {domain});
    MultiPatchMesh mesh{layout, {}};
    mesh.patches.emplace_back(layout, 0,
                              TensorSplineSpace({KnotVector::uniform_open(degree, elements),
                                                 KnotVector::uniform_open(degree, elements),
                                                 KnotVector::uniform_open(degree, elements)}));
    return mesh;
}

}  // namespace

TEST_CASE("coulomb potential values") {
    NucleusSet single{{{1.0, {0, 0, 0}}}};
    CHECK(eval_coulomb(single, Point{0.5, 0, 0}, 2) == Catch::Approx(-2.0));

    NucleusSet pair{{{1.0, {-0.5, 0, 0}}, {1.0, {0.5, 0, 0}}}};
    CHECK(eval_coulomb(pair, Point{0, 0, 0}, 2) == Catch::Approx(-4.0));

    NucleusSet helium{{{2.0, {0, 0, 0}}}};
    CHECK(eval_coulomb(helium, Point{1, 0, 0}, 3) == Catch::Approx(-2.0));

    CHECK_THROWS(eval_coulomb(single, Point{0, 0, 0}, 2));
}

TEST_CASE("coulomb translation covariance") {
    NucleusSet pair{{{1.5, {-0.3, 0.2, 0}}, {0.7, {0.4, -0.1, 0}}}};
    const Point shift{0.13, -0.27, 0.0};
    NucleusSet shifted = pair;
    for (auto& nk : shifted.nuclei)
        for (int a = 0; a < 2; ++a)
            nk.position[static_cast<std::size_t>(a)] += shift[static_cast<std::size_t>(a)];
    for (const Point r : {Point{0.1, 0.6, 0}, Point{-0.8, -0.9, 0}}) {
        Point rs = r;
        for (int a = 0; a < 2; ++a) rs[static_cast<std::size_t>(a)] += shift[static_cast<std::size_t>(a)];
        CHECK(std::abs(eval_coulomb(pair, r, 2) - eval_coulomb(shifted, rs, 2)) <= 1e-14);
    }
}

TEST_CASE("lda exchange and correlation") {
    CHECK(eval_lda_xc(0.0) == 0.0);
    CHECK(eval_lda_xc(-1e-12) == 0.0);

    // exchange-only: rho = pi/3 gives V_x = -1
    CHECK(eval_lda_xc(M_PI / 3.0, false) == Catch::Approx(-1.0).margin(1e-14));

    // monotone decreasing exchange
    double prev = 0.0;
    for (double rho : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
        const double v = lda_exchange_potential(rho);
        CHECK(v < prev);
        prev = v;
    }

    // continuity of the full xc map across the rs = 1 seam; the sweep starts
    // away from 0 where the cube root has unbounded slope
    const double rho_seam = 3.0 / (4.0 * M_PI);  // rs(rho) = 1
    const double rho_lo = 0.05 * rho_seam;
    double last = eval_lda_xc(rho_lo);
    double maxjump = 0.0;
    for (int i = 1; i <= 10000; ++i) {
        const double rho = rho_lo + (2.0 * rho_seam - rho_lo) * i / 10000.0;
        const double v = eval_lda_xc(rho);
        maxjump = std::max(maxjump, std::abs(v - last));
        last = v;
    }
    CHECK(maxjump <= 2e-3);  // smooth sweep, no branch discontinuity spikes
    CHECK(std::abs(eval_lda_xc(rho_seam * (1 + 1e-11)) - eval_lda_xc(rho_seam * (1 - 1e-11))) <=
          1e-4);
    CHECK(std::abs(pz81_correlation_energy_density(rho_seam * (1 + 1e-11)) -
                   pz81_correlation_energy_density(rho_seam * (1 - 1e-11))) <= 1e-4);
}

TEST_CASE("density projection of a constant") {
    auto mesh = cube_mesh(0.0, 1.0, 1, 2);
    auto rho = project_density(mesh, [](const Point&) { return 1.0; }, 1.0);
    CHECK(rho.value(Point{0.3, 0.7, 0.1}) == Catch::Approx(1.0).margin(1e-13));
    const double q = integrate_over_mesh(mesh, [&](const Point& x) { return rho.value(x); });
    CHECK(q == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("potential stack sums its terms") {
    PotentialStack stack;
    stack.add("a", [](const Point& x) { return x[0]; });
    stack.add("b", [](const Point&) { return 2.0; });
    auto fn = stack.function();
    CHECK(fn(Point{0.25, 0, 0}) == Catch::Approx(2.25));
    PotentialStack empty;
    CHECK_FALSE(empty.function());
}

TEST_CASE("hartree solve: manufactured solution") {
    // V* = sin(pi x) sin(pi y) sin(pi z) on [0,1]^3, rho = -lap V* / 4 pi,
    // homogeneous boundary
    auto vstar = [](const Point& x) {
        return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]) * std::sin(M_PI * x[2]);
    };
    std::vector<double> errs;
    for (int nel : {3, 6}) {
        auto mesh = cube_mesh(0.0, 1.0, 2, nel);
        HartreeSolver hs(mesh);
        DensityField rho = project_density(
            mesh, [&](const Point& x) { return 3.0 * M_PI * M_PI * vstar(x) / (4.0 * M_PI); }, 1.0);
        auto vh = hs.solve(rho, [](const Point&) { return 0.0; });
        const double err = std::sqrt(integrate_over_mesh(mesh, [&](const Point& x) {
            const double d = vh.value(x) - vstar(x);
            return d * d;
        }));
        errs.push_back(err);
    }
    CHECK(errs[1] < errs[0]);
    // O(h^{p+1}) = O(h^3): doubling the mesh should cut the error ~8x; allow slack
    CHECK(errs[0] / errs[1] >= 5.0);
}

TEST_CASE("hartree solve: zero density") {
    auto mesh = cube_mesh(-1.0, 1.0, 2, 2);
    HartreeSolver hs(mesh);
    DensityField zero{MultiPatchField::zero(mesh), 0.0};
    auto vh = hs.solve(zero);  // monopole data with zero charge
    CHECK(std::abs(vh.value(Point{0.2, -0.4, 0.6})) <= 1e-12);

    // harmonic boundary data: V_H is its harmonic extension (x is harmonic
    // and in the spline space, so the solve is exact)
    auto vh2 = hs.solve(zero, [](const Point& x) { return x[0]; });
    CHECK(vh2.value(Point{0.3, 0.5, -0.7}) == Catch::Approx(0.3).margin(1e-9));
}

TEST_CASE("hartree solve: gaussian density against the closed form") {
    // normalized gaussian, sigma = 0.5, N_e = 2: V_H(r) = 2 erf(r/(sigma sqrt2))/r.
    // 27-patch layout with a refined central cube resolving the gaussian.
    const double sigma = 0.5;
    const double ne = 2.0;
    Box domain{{-2.5, -2.5, -2.5}, {2.5, 2.5, 2.5}};
    const std::vector<double> cuts{-2.5, -1.6, 1.6, 2.5};
    std::vector<Box> boxes;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                boxes.push_back(Box{{cuts[static_cast<std::size_t>(i)],
                                     cuts[static_cast<std::size_t>(j)],
                                     cuts[static_cast<std::size_t>(k)]},
                                    {cuts[static_cast<std::size_t>(i) + 1],
                                     cuts[static_cast<std::size_t>(j) + 1],
                                     cuts[static_cast<std::size_t>(k) + 1]}});
    auto layout = PatchLayout::build(3, domain, boxes);
    MultiPatchMesh mesh{layout, {}};
    for (int i = 0; i < 27; ++i) {
        std::vector<KnotVector> kvs;
        for (int a = 0; a < 3; ++a) {
            const bool central =
                std::abs(layout.patch(i).lo[static_cast<std::size_t>(a)] + 1.6) < 1e-12;
            kvs.push_back(KnotVector::uniform_open(2, central ? 16 : 2));
        }
        mesh.patches.emplace_back(layout, i, TensorSplineSpace(std::move(kvs)));
    }
    HartreeSolver hs(mesh);
    auto rho_fn = [&](const Point& x) {
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        const double c = ne / std::pow(2.0 * M_PI * sigma * sigma, 1.5);
        return c * std::exp(-r2 / (2.0 * sigma * sigma));
    };
    DensityField rho = project_density(mesh, rho_fn, ne);
    // charge-normalize the projected density, as the scf pipeline does
    const double q = integrate_over_mesh(mesh, [&](const Point& x) { return rho.value(x); });
    for (int i = 0; i < 27; ++i) rho.field.patch(i) *= ne / q;
    auto vh = hs.solve(rho);
    auto exact = [&](double r) { return ne * std::erf(r / (sigma * std::sqrt(2.0))) / r; };
    for (const double r : {0.6, 0.9, 1.5}) {
        const Point x{r, 0.0, 0.0};
        CHECK(vh.value(x) == Catch::Approx(exact(r)).margin(1e-3));
        const Point y{0.0, -r, 0.0};
        CHECK(vh.value(y) == Catch::Approx(exact(r)).margin(1e-3));
    }
}

TEST_CASE("hartree solve is linear in the density") {
    auto mesh = cube_mesh(0.0, 1.0, 2, 3);
    HartreeSolver hs(mesh);
    auto zero_bc = [](const Point&) { return 0.0; };
    DensityField r1 = project_density(
        mesh, [](const Point& x) { return std::sin(M_PI * x[0]) * x[1] * (1 - x[1]); }, 1.0);
    DensityField r2 = project_density(
        mesh, [](const Point& x) { return x[0] * (1 - x[0]) * std::sin(M_PI * x[2]); }, 1.0);
    const double a = 1.7, b = -0.6;
    DensityField combo{MultiPatchField::zero(mesh), 0.0};
    for (int i = 0; i < 1; ++i)
        combo.field.patch(i) = a * r1.field.patch(i) + b * r2.field.patch(i);
    auto v1 = hs.solve(r1, zero_bc);
    auto v2 = hs.solve(r2, zero_bc);
    auto vc = hs.solve(combo, zero_bc);
    for (const Point x : {Point{0.3, 0.4, 0.5}, Point{0.7, 0.2, 0.8}})
        CHECK(vc.value(x) == Catch::Approx(a * v1.value(x) + b * v2.value(x)).margin(1e-9));
}
