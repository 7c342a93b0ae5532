#pragma once

#include <cmath>
#include <memory>

#include "dgiga/assembly.hpp"
#include "dgiga/potentials.hpp"
#include "dgiga/solver.hpp"

namespace dgiga {

/// Electrostatic (Hartree) potential from a Poisson solve,
///   -lap V_H = 4 pi rho  on Omega,
/// discretized with the same interior-penalty machinery (V = 0, factor 1 on
/// the Laplacian). Dirichlet data defaults to the monopole N_e / |r - rbar|
/// centered at the density centroid; a custom boundary field may be given.
///
/// Boundary values enter by lifting: the boundary-constrained coefficients
/// carry the face interpolant of g (the tensor quasi-interpolant restricted
/// to a clamped face is exactly the face interpolant), the free part solves
/// the homogeneous system with the lifted load moved to the right-hand side.
/// The operator does not change with the density, so the factorization is
/// computed once per mesh and reused across SCF iterations.
class HartreeSolver {
public:
    HartreeSolver(const MultiPatchMesh& mesh, AssemblyOptions opts = {})
        : mesh_(&mesh), full_(mesh, false), free_(mesh, true) {
        if (mesh.dim() != 3)
            throw std::invalid_argument("HartreeSolver: the Poisson kernel used here is 3D");
        opts.laplace_factor = 1.0;
        opts.singular_points.clear();
        opts_ = opts;
        full_matrix_ = assemble_bilinear(mesh, full_, {}, opts_);

        // map full-space dof ids to free ids
        full_to_free_.assign(static_cast<std::size_t>(full_.size()), -1);
        for (int i = 0; i < mesh.layout.patch_count(); ++i) {
            const long nloc = mesh.patches[static_cast<std::size_t>(i)].space().size();
            for (long f = 0; f < nloc; ++f) {
                const long gf = full_.global(i, f);
                const long gc = free_.global(i, f);
                if (gc >= 0) full_to_free_[static_cast<std::size_t>(gf)] = gc;
            }
        }
        // restrict to the free block and factorize
        std::vector<Eigen::Triplet<double>> trips;
        const auto& U = full_matrix_.upper();
        for (int c = 0; c < U.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(U, c); it; ++it) {
                const long fr = full_to_free_[static_cast<std::size_t>(it.row())];
                const long fc = full_to_free_[static_cast<std::size_t>(it.col())];
                if (fr >= 0 && fc >= 0) trips.emplace_back(fr, fc, it.value());
            }
        free_matrix_ = SymmetricSparseMatrix::from_triplets(free_.size(), trips);
        ldlt_.compute(free_matrix_.upper());
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("HartreeSolver: Poisson factorization failed");
    }

    /// Charge and centroid of a density field by quadrature.
    static std::pair<double, Point> charge_and_centroid(const MultiPatchMesh& mesh,
                                                        const DensityField& rho) {
        const double q = integrate_over_mesh(mesh, [&](const Point& x) { return rho.value(x); });
        Point c{0.0, 0.0, 0.0};
        if (std::abs(q) > 1e-14) {
            for (int a = 0; a < mesh.dim(); ++a) {
                c[static_cast<std::size_t>(a)] = integrate_over_mesh(mesh, [&](const Point& x) {
                                                     return x[static_cast<std::size_t>(a)] * rho.value(x);
                                                 }) / q;
            }
        }
        return {q, c};
    }

    /// Solves for V_H; `boundary` overrides the monopole Dirichlet data.
    MultiPatchField solve(const DensityField& rho, const ScalarField& boundary = {},
                          double tol = 1e-9) const {
        const MultiPatchMesh& mesh = *mesh_;
        ScalarField g = boundary;
        if (!g) {
            const auto [q, c] = charge_and_centroid(mesh, rho);
            if (std::abs(q) < 1e-14) {
                g = [](const Point&) { return 0.0; };
            } else {
                const double charge = q;
                const Point center = c;
                g = [charge, center](const Point& x) {
                    const double dx = x[0] - center[0], dy = x[1] - center[1],
                                 dz = x[2] - center[2];
                    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                    return charge / r;
                };
            }
        }

        // lifted boundary coefficients: project g patchwise, keep only the
        // constrained entries (zero on patches without boundary faces)
        Eigen::VectorXd cg = Eigen::VectorXd::Zero(full_.size());
        for (int i = 0; i < mesh.layout.patch_count(); ++i) {
            const auto& sp = mesh.patches[static_cast<std::size_t>(i)].space();
            bool has_constrained = false;
            for (long f = 0; f < sp.size() && !has_constrained; ++f)
                if (free_.global(i, f) < 0) has_constrained = true;
            if (!has_constrained) continue;
            const Eigen::VectorXd proj = sp.project(
                [&](const Point& xi) { return g(mesh.layout.pushforward(i, xi)); });
            for (long f = 0; f < sp.size(); ++f)
                if (free_.global(i, f) < 0) cg[full_.global(i, f)] = proj[f];
        }

        Eigen::VectorXd b = assemble_load(mesh, full_, [&](const Point& x) {
            return 4.0 * M_PI * rho.value(x);
        }, opts_);
        const Eigen::VectorXd r = b - full_matrix_.apply(cg);
        Eigen::VectorXd rf = Eigen::VectorXd::Zero(free_.size());
        for (long gf = 0; gf < full_.size(); ++gf) {
            const long fr = full_to_free_[static_cast<std::size_t>(gf)];
            if (fr >= 0) rf[fr] = r[gf];
        }

        Eigen::VectorXd wf = ldlt_.solve(rf);
        const double res = rf.norm() > 0 ? (free_matrix_.apply(wf) - rf).norm() / rf.norm() : 0.0;
        if (res > tol) throw std::runtime_error("HartreeSolver: linear solve did not converge");

        Eigen::VectorXd vh = cg;
        for (long gf = 0; gf < full_.size(); ++gf) {
            const long fr = full_to_free_[static_cast<std::size_t>(gf)];
            if (fr >= 0) vh[gf] += wf[fr];
        }
        return MultiPatchField(mesh, full_, vh);
    }

    const DofMap& full_dofs() const { return full_; }

private:
    const MultiPatchMesh* mesh_;
    DofMap full_;
    DofMap free_;
    AssemblyOptions opts_;
    SymmetricSparseMatrix full_matrix_;
    SymmetricSparseMatrix free_matrix_;
    std::vector<long> full_to_free_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt_;
};

}  // namespace dgiga
