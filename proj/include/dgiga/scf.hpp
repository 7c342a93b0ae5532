#pragma once

#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include "dgiga/assembly.hpp"
#include "dgiga/hartree.hpp"
#include "dgiga/potentials.hpp"
#include "dgiga/solver.hpp"

namespace dgiga {

enum class NonlinearProblem { GrossPitaevskii, KohnShamLDA };

struct SCFOptions {
    double tol = 1e-8;       // on delta = ||rho_new - rho_old||_L2
    int max_iterations = 200;
    double mixing = 0.3;     // linear mixing weight on the new density
    bool with_correlation = true;
    double gp_scale = 1.0;   // interaction strength; 0 reduces to the linear problem
    EigenSolveOptions eigen;
    AssemblyOptions assembly;
    std::ostream* log = nullptr;  // one key=value line per iteration
};

struct SCFState {
    int iteration = 0;
    DensityField density;
    EigenSolution eigen;
    double delta = 0.0;
    double mixing = 0.0;
    double energy = 0.0;
    bool converged = false;
    std::vector<double> delta_history;
};

namespace detail {

inline double field_l2_difference(const MultiPatchMesh& mesh, const MultiPatchField& a,
                                  const MultiPatchField& b) {
    const double v = integrate_over_mesh(mesh, [&](const Point& x) {
        const int i = mesh.layout.patch_containing(x);
        const double d = a.value_on(i, x) - b.value_on(i, x);
        return d * d;
    });
    return std::sqrt(std::max(v, 0.0));
}

inline void normalize_density(const MultiPatchMesh& mesh, DensityField& rho) {
    const double q = integrate_over_mesh(mesh, [&](const Point& x) { return rho.value(x); });
    if (q <= 0.0) throw std::runtime_error("scf: density integrates to a non-positive charge");
    const double s = rho.electron_count / q;
    for (int i = 0; i < mesh.layout.patch_count(); ++i) rho.field.patch(i) *= s;
}

}  // namespace detail

/// Total energy of the converged (or in-progress) state.
///  - Gross-Pitaevskii: E = lambda_1 - (s/2) int rho^2
///  - Kohn-Sham LDA (closed-shell pair): E = 2 lambda_1 - 1/2 int rho V_H
///      - int rho (V_xc - e_xc), the double-counting corrected sum.
inline double total_energy(const MultiPatchMesh& mesh, NonlinearProblem problem, double lambda1,
                           const DensityField& rho, const MultiPatchField* hartree,
                           const SCFOptions& opts) {
    if (problem == NonlinearProblem::GrossPitaevskii) {
        const double r2 = integrate_over_mesh(mesh, [&](const Point& x) {
            const double r = rho.value(x);
            return r * r;
        });
        return lambda1 - 0.5 * opts.gp_scale * r2;
    }
    double e = 2.0 * lambda1;
    if (hartree) {
        e -= 0.5 * integrate_over_mesh(mesh, [&](const Point& x) {
            const int i = mesh.layout.patch_containing(x);
            return rho.field.value_on(i, x) * hartree->value_on(i, x);
        });
    }
    e -= integrate_over_mesh(mesh, [&](const Point& x) {
        const double r = rho.value(x);
        return r * (eval_lda_xc(r, opts.with_correlation) -
                    eval_lda_xc_energy_density(r, opts.with_correlation));
    });
    return e;
}

/// Self-consistent field iteration for the nonlinear eigenvalue problems:
/// rho -> lowest eigenpair of H[rho] -> new density, with linear mixing and
/// renormalization of the electron count after every step.
inline SCFState scf_run(const MultiPatchMesh& mesh, const DofMap& dofs, NonlinearProblem problem,
                        const PotentialFn& v_ext, double electron_count, const SCFOptions& opts) {
    const SymmetricSparseMatrix M = assemble_mass(mesh, dofs, opts.assembly);
    std::unique_ptr<HartreeSolver> hartree;
    if (problem == NonlinearProblem::KohnShamLDA)
        hartree = std::make_unique<HartreeSolver>(mesh, opts.assembly);

    const double occupation = problem == NonlinearProblem::KohnShamLDA ? 2.0 : 1.0;

    auto density_of = [&](const Eigen::VectorXd& coeffs) {
        MultiPatchField u(mesh, dofs, coeffs);
        DensityField rho = project_density(mesh, [&](const Point& x) {
            const int i = mesh.layout.patch_containing(x);
            const double v = u.value_on(i, x);
            return occupation * v * v;
        }, electron_count);
        detail::normalize_density(mesh, rho);
        return rho;
    };

    // initial density from the linear problem (external potential only)
    SCFState state;
    {
        auto A0 = assemble_bilinear(mesh, dofs, v_ext, opts.assembly);
        auto sol0 = solve_eigen(A0, M, 1, opts.eigen);
        state.eigen = sol0;
        state.density = density_of(sol0.vectors.col(0));
    }
    state.mixing = opts.mixing;

    MultiPatchField vh;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        // Hamiltonian from the current density
        PotentialStack V;
        if (v_ext) V.add("external", v_ext);
        const DensityField& rho = state.density;
        if (problem == NonlinearProblem::GrossPitaevskii) {
            const double s = opts.gp_scale;
            V.add("gp-density", [&rho, s, &mesh](const Point& x) {
                const int i = mesh.layout.patch_containing(x);
                return s * rho.field.value_on(i, x);
            });
        } else {
            vh = hartree->solve(rho);
            const MultiPatchField* vhp = &vh;
            V.add("hartree", [vhp, &mesh](const Point& x) {
                const int i = mesh.layout.patch_containing(x);
                return vhp->value_on(i, x);
            });
            const bool corr = opts.with_correlation;
            V.add("lda-xc", [&rho, corr, &mesh](const Point& x) {
                const int i = mesh.layout.patch_containing(x);
                return eval_lda_xc(rho.field.value_on(i, x), corr);
            });
        }

        auto A = assemble_bilinear(mesh, dofs, V.function(), opts.assembly);
        auto sol = solve_eigen(A, M, 1, opts.eigen);
        DensityField rho_new = density_of(sol.vectors.col(0));

        state.delta = detail::field_l2_difference(mesh, rho_new.field, state.density.field);
        state.delta_history.push_back(state.delta);
        state.iteration = it;
        state.eigen = sol;

        // linear mixing, then renormalize the electron count
        for (int i = 0; i < mesh.layout.patch_count(); ++i)
            state.density.field.patch(i) = (1.0 - opts.mixing) * state.density.field.patch(i) +
                                           opts.mixing * rho_new.field.patch(i);
        detail::normalize_density(mesh, state.density);

        if (problem == NonlinearProblem::KohnShamLDA) vh = hartree->solve(state.density);
        state.energy = total_energy(mesh, problem, sol.eigenvalues[0], state.density,
                                    problem == NonlinearProblem::KohnShamLDA ? &vh : nullptr, opts);

        if (opts.log)
            (*opts.log) << "scf iter=" << it << " lambda1=" << state.eigen.eigenvalues[0]
                        << " delta=" << state.delta << " energy=" << state.energy << "\n";

        if (state.delta <= opts.tol) {
            state.converged = true;
            return state;
        }
    }
    // iteration limit reached; the caller inspects delta_history
    return state;
}

}  // namespace dgiga
