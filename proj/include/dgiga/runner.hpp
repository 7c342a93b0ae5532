#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "dgiga/analysis.hpp"
#include "dgiga/assembly.hpp"
#include "dgiga/config.hpp"
#include "dgiga/scf.hpp"
#include "dgiga/solver.hpp"

namespace dgiga {

/// Per-level refinement factor: uniform halving everywhere; in multiscale
/// mode the patches holding a nucleus refine as 2^(level * exponent), so
/// h_min = O(h_max^exponent).
inline int refinement_factor(const ExperimentConfig& cfg, bool singular_patch, int level) {
    const double expo = cfg.refine_mode == "multiscale" && singular_patch ? cfg.refine_exponent : 1.0;
    return static_cast<int>(std::lround(std::pow(2.0, expo * level)));
}

/// Checks that every nucleus sits on a breakpoint corner of its patch mesh.
inline void validate_nuclei_alignment(const MultiPatchMesh& mesh, const NucleusSet& nuclei) {
    for (const auto& nk : nuclei.nuclei) {
        const int i = mesh.layout.patch_containing(nk.position);
        const Point xi = mesh.layout.pullback(i, nk.position);
        for (int a = 0; a < mesh.dim(); ++a) {
            const auto& bk = mesh.patches[static_cast<std::size_t>(i)].space().direction(a).breakpoints();
            double dist = 1.0;
            for (const double b : bk) dist = std::min(dist, std::abs(b - xi[static_cast<std::size_t>(a)]));
            if (dist > 1e-12)
                throw std::invalid_argument(
                    "nucleus is not on a breakpoint corner of its patch mesh (direction " +
                    std::to_string(a) + ")");
        }
    }
}

struct Problem {
    MultiPatchMesh mesh;
    std::shared_ptr<DofMap> dofs;
    AssemblyOptions assembly;
    EigenSolveOptions eigen;
    PotentialFn v_ext;
};

inline Problem build_problem(const ExperimentConfig& cfg, int level) {
    std::vector<Box> boxes;
    for (const auto& ps : cfg.patches) boxes.push_back(ps.box);
    auto layout = PatchLayout::build(cfg.dim, cfg.domain, boxes, cfg.nuclei.positions());

    MultiPatchMesh mesh{layout, {}};
    for (int i = 0; i < layout.patch_count(); ++i) {
        const auto& ps = cfg.patches[static_cast<std::size_t>(i)];
        bool singular = false;
        for (const auto& nk : cfg.nuclei.nuclei)
            if (ps.box.contains(nk.position, cfg.dim)) singular = true;
        const int factor = refinement_factor(cfg, singular, level);
        std::vector<KnotVector> kvs;
        for (int a = 0; a < cfg.dim; ++a)
            kvs.push_back(KnotVector::uniform_open(
                ps.degree[static_cast<std::size_t>(a)],
                ps.elements[static_cast<std::size_t>(a)] * factor));
        mesh.patches.emplace_back(layout, i, TensorSplineSpace(std::move(kvs)));
    }

    Problem prob{std::move(mesh), nullptr, {}, {}, {}};
    prob.dofs = std::make_shared<DofMap>(prob.mesh);

    prob.assembly.c_sigma = cfg.c_sigma;
    prob.assembly.quad_order = cfg.quad_order;
    prob.assembly.grading_levels = cfg.grading_levels;
    prob.assembly.singular_points = cfg.nuclei.positions();

    prob.eigen.tol = cfg.eigen_tol;
    prob.eigen.seed = cfg.seed;
    if (cfg.eigen_shift) {
        prob.eigen.sigma = cfg.eigen_shift;
    } else if (!cfg.nuclei.nuclei.empty()) {
        const double z = cfg.nuclei.max_charge();
        prob.eigen.sigma = -2.0 * z * z;
    } else {
        prob.eigen.sigma = -1.0;
    }

    if (!cfg.nuclei.nuclei.empty()) {
        const NucleusSet nuclei = cfg.nuclei;
        const int dim = cfg.dim;
        prob.v_ext = [nuclei, dim](const Point& r) { return eval_coulomb(nuclei, r, dim); };
        validate_nuclei_alignment(prob.mesh, cfg.nuclei);
    }
    return prob;
}

struct SolveReport {
    int level = 0;
    long dof = 0;
    double h_max = 0.0, h_min = 0.0;
    EigenSolution eigen;
    double wall_ms = 0.0;
};

inline SolveReport run_solve(const ExperimentConfig& cfg, int level) {
    const auto t0 = std::chrono::steady_clock::now();
    Problem prob = build_problem(cfg, level);
    auto A = assemble_bilinear(prob.mesh, *prob.dofs, prob.v_ext, prob.assembly);
    auto M = assemble_mass(prob.mesh, *prob.dofs, prob.assembly);
    SolveReport rep;
    rep.level = level;
    rep.dof = prob.dofs->size();
    rep.h_max = prob.mesh.h_max();
    rep.h_min = prob.mesh.h_min();
    rep.eigen = solve_eigen(A, M, cfg.eigen_k, prob.eigen);
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Reference for a convergence study, per the config's reference.kind:
///  - analytic-box: closed-form box modes (V = 0 problems)
///  - numeric: cubic splines one refinement beyond the finest level
///  - value: eigenvalues only, from reference.values
struct SweepReference {
    std::optional<ReferenceSolution> functions;  // for eigenfunction errors
    std::vector<double> lambdas;                 // eigenvalue reference
};

inline SweepReference build_reference(const ExperimentConfig& cfg) {
    SweepReference ref;
    if (cfg.reference_kind == "analytic-box") {
        if (!cfg.nuclei.nuclei.empty() || cfg.problem != "linear")
            throw ConfigError("analytic-box reference requires a linear V=0 problem");
        auto r = box_reference(cfg.domain, cfg.dim, cfg.eigen_k + 2);
        for (int j = 0; j < cfg.eigen_k; ++j) ref.lambdas.push_back(r.eigenvalue(j));
        ref.functions = std::move(r);
    } else if (cfg.reference_kind == "numeric") {
        ExperimentConfig fine = cfg.with_degree(3);
        Problem prob = build_problem(fine, cfg.refine_levels);  // one beyond the finest
        auto A = assemble_bilinear(prob.mesh, *prob.dofs, prob.v_ext, prob.assembly);
        auto M = assemble_mass(prob.mesh, *prob.dofs, prob.assembly);
        auto sol = solve_eigen(A, M, cfg.eigen_k, prob.eigen);
        for (int j = 0; j < cfg.eigen_k; ++j) ref.lambdas.push_back(sol.eigenvalues[j]);
        ref.functions = ReferenceSolution::numeric(
            std::make_shared<MultiPatchMesh>(std::move(prob.mesh)), prob.dofs, std::move(sol));
    }
    // explicit values override the eigenvalue reference
    if (!cfg.reference_values.empty()) {
        ref.lambdas = cfg.reference_values;
        ref.lambdas.resize(static_cast<std::size_t>(cfg.eigen_k),
                           std::numeric_limits<double>::quiet_NaN());
    }
    if (ref.lambdas.empty()) throw ConfigError("convergence study has no usable reference");
    return ref;
}

/// Eigenvalue error vs the reference list, degenerate clusters averaged.
inline double sweep_lambda_error(const std::vector<double>& ref, const EigenSolution& sol, int k,
                                 double cluster_tol = 1e-6) {
    if (std::isnan(ref[static_cast<std::size_t>(k)])) return std::numeric_limits<double>::quiet_NaN();
    std::vector<int> cluster;
    const double scale = std::max(1.0, std::abs(ref[static_cast<std::size_t>(k)]));
    for (int j = 0; j < static_cast<int>(ref.size()); ++j)
        if (!std::isnan(ref[static_cast<std::size_t>(j)]) &&
            std::abs(ref[static_cast<std::size_t>(j)] - ref[static_cast<std::size_t>(k)]) <=
                cluster_tol * scale)
            cluster.push_back(j);
    double rmean = 0.0, dmean = 0.0;
    int used = 0;
    for (const int j : cluster) {
        if (j >= sol.eigenvalues.size()) continue;
        rmean += ref[static_cast<std::size_t>(j)];
        dmean += sol.eigenvalues[j];
        ++used;
    }
    if (used == 0) return std::numeric_limits<double>::quiet_NaN();
    return std::abs(dmean / used - rmean / used);
}

inline ConvergenceRecord run_converge(const ExperimentConfig& cfg) {
    if (cfg.problem != "linear")
        throw ConfigError("cmd_converge supports linear problems; use cmd_scf for nonlinear ones");
    SweepReference ref = build_reference(cfg);
    ConvergenceRecord rec;
    for (int lvl = 0; lvl < cfg.refine_levels; ++lvl) {
        const auto t0 = std::chrono::steady_clock::now();
        Problem prob = build_problem(cfg, lvl);
        auto A = assemble_bilinear(prob.mesh, *prob.dofs, prob.v_ext, prob.assembly);
        auto M = assemble_mass(prob.mesh, *prob.dofs, prob.assembly);
        auto sol = solve_eigen(A, M, cfg.eigen_k, prob.eigen);

        LevelRecord lr;
        lr.level = lvl;
        lr.h_max = prob.mesh.h_max();
        lr.h_min = prob.mesh.h_min();
        lr.dof = prob.dofs->size();
        for (int j = 0; j < cfg.eigen_k; ++j) {
            lr.lambda.push_back(sol.eigenvalues[j]);
            lr.lambda_err.push_back(sweep_lambda_error(ref.lambdas, sol, j));
        }
        if (ref.functions) {
            for (int j = 0; j < cfg.eigen_k; ++j) {
                lr.l2_err.push_back(eigenfunction_error(prob.mesh, *prob.dofs, sol, j,
                                                        *ref.functions, ErrorNorm::L2,
                                                        prob.assembly));
                lr.dg_err.push_back(eigenfunction_error(prob.mesh, *prob.dofs, sol, j,
                                                        *ref.functions, ErrorNorm::DG,
                                                        prob.assembly));
            }
        }
        lr.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        rec.push(std::move(lr));
    }
    return rec;
}

struct SCFReport {
    int level = 0;
    long dof = 0;
    double h_max = 0.0, h_min = 0.0;
    SCFState state;
    double wall_ms = 0.0;
};

inline SCFReport run_scf(const ExperimentConfig& cfg, int level, std::ostream* log = nullptr) {
    if (cfg.problem != "gp" && cfg.problem != "ks-lda")
        throw ConfigError("cmd_scf requires problem = gp or ks-lda");
    const auto t0 = std::chrono::steady_clock::now();
    Problem prob = build_problem(cfg, level);
    SCFOptions opts;
    opts.tol = cfg.scf_tol;
    opts.max_iterations = cfg.scf_max_iter;
    opts.mixing = cfg.scf_mixing;
    opts.with_correlation = cfg.scf_correlation;
    opts.gp_scale = cfg.gp_scale;
    opts.eigen = prob.eigen;
    opts.assembly = prob.assembly;
    opts.log = log;
    const NonlinearProblem kind =
        cfg.problem == "gp" ? NonlinearProblem::GrossPitaevskii : NonlinearProblem::KohnShamLDA;
    const double ne = cfg.problem == "gp" ? 1.0 : 2.0;
    SCFReport rep;
    rep.level = level;
    rep.dof = prob.dofs->size();
    rep.h_max = prob.mesh.h_max();
    rep.h_min = prob.mesh.h_min();
    rep.state = scf_run(prob.mesh, *prob.dofs, kind, prob.v_ext, ne, opts);
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

struct OracleReport {
    long dof = 0;
    double max_relative_gap = 0.0;       // max_k |lam_sparse - lam_dense| / |lam|
    double max_cluster_angle = 0.0;      // subspace angle over clusters
    std::vector<double> sparse_lambdas;
    std::vector<double> dense_lambdas;
};

inline OracleReport run_oracle(const ExperimentConfig& cfg, long max_dof = 1500) {
    Problem prob = build_problem(cfg, 0);
    if (prob.dofs->size() > max_dof)
        throw std::invalid_argument("cmd_oracle: coarsest level has " +
                                    std::to_string(prob.dofs->size()) +
                                    " dofs, above the cap of " + std::to_string(max_dof));
    auto A = assemble_bilinear(prob.mesh, *prob.dofs, prob.v_ext, prob.assembly);
    auto M = assemble_mass(prob.mesh, *prob.dofs, prob.assembly);
    const int k = std::max(cfg.eigen_k, 6);
    auto sparse = solve_eigen(A, M, k, prob.eigen);
    auto dense = dense_oracle(A, M, k, max_dof);

    OracleReport rep;
    rep.dof = prob.dofs->size();
    for (int j = 0; j < k; ++j) {
        rep.sparse_lambdas.push_back(sparse.eigenvalues[j]);
        rep.dense_lambdas.push_back(dense.eigenvalues[j]);
        const double gap = std::abs(sparse.eigenvalues[j] - dense.eigenvalues[j]) /
                           std::max(1e-12, std::abs(dense.eigenvalues[j]));
        rep.max_relative_gap = std::max(rep.max_relative_gap, gap);
    }
    // cluster-wise subspace angles
    int j = 0;
    while (j < k) {
        int e = j + 1;
        const double scale = std::max(1.0, std::abs(dense.eigenvalues[j]));
        while (e < k && std::abs(dense.eigenvalues[e] - dense.eigenvalues[j]) <= 1e-6 * scale) ++e;
        const double ang = subspace_angle(M, sparse.vectors.middleCols(j, e - j),
                                          dense.vectors.middleCols(j, e - j));
        rep.max_cluster_angle = std::max(rep.max_cluster_angle, ang);
        j = e;
    }
    return rep;
}

/// 401 uniform samples of a field along an axis-aligned segment through the
/// domain center; the usual line-cut output for plots.
inline std::vector<std::pair<double, double>> line_cut(const MultiPatchMesh& mesh,
                                                       const MultiPatchField& field, int axis,
                                                       double lo, double hi) {
    if (lo == 0.0 && hi == 0.0) {
        lo = mesh.layout.domain().lo[static_cast<std::size_t>(axis)];
        hi = mesh.layout.domain().hi[static_cast<std::size_t>(axis)];
    }
    std::vector<std::pair<double, double>> out;
    const int n = 401;
    for (int s = 0; s < n; ++s) {
        Point x{0.0, 0.0, 0.0};
        for (int a = 0; a < mesh.dim(); ++a)
            x[static_cast<std::size_t>(a)] = 0.5 * (mesh.layout.domain().lo[static_cast<std::size_t>(a)] +
                                                    mesh.layout.domain().hi[static_cast<std::size_t>(a)]);
        const double t = lo + (hi - lo) * s / (n - 1);
        x[static_cast<std::size_t>(axis)] = t;
        out.emplace_back(t, field.value(x));
    }
    return out;
}

}  // namespace dgiga
