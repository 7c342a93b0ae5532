#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "dgiga/assembly.hpp"
#include "dgiga/solver.hpp"

namespace dgiga {

using GradientField = std::function<Point(const Point&)>;

/// Reference eigenpairs: either closed-form functions or a converged
/// fine-mesh solution on the same patch layout.
class ReferenceSolution {
public:
    static ReferenceSolution closed_form(std::vector<double> eigenvalues,
                                         std::vector<ScalarField> functions,
                                         std::vector<GradientField> gradients) {
        ReferenceSolution r;
        r.eigenvalues_ = std::move(eigenvalues);
        r.functions_ = std::move(functions);
        r.gradients_ = std::move(gradients);
        return r;
    }

    static ReferenceSolution numeric(std::shared_ptr<MultiPatchMesh> mesh,
                                     std::shared_ptr<DofMap> dofs, EigenSolution solution) {
        ReferenceSolution r;
        r.mesh_ = std::move(mesh);
        r.dofs_ = std::move(dofs);
        r.solution_ = std::move(solution);
        for (long j = 0; j < r.solution_.eigenvalues.size(); ++j) {
            r.eigenvalues_.push_back(r.solution_.eigenvalues[j]);
            r.fields_.emplace_back(*r.mesh_, *r.dofs_, r.solution_.vectors.col(j));
        }
        return r;
    }

    bool is_numeric() const { return mesh_ != nullptr; }
    int count() const { return static_cast<int>(eigenvalues_.size()); }
    double eigenvalue(int k) const { return eigenvalues_[static_cast<std::size_t>(k)]; }

    double value(int k, int patch, const Point& x) const {
        if (is_numeric()) return fields_[static_cast<std::size_t>(k)].value_on(patch, x);
        return functions_[static_cast<std::size_t>(k)](x);
    }

    double derivative(int k, int patch, const Point& x, int dir) const {
        if (is_numeric()) return fields_[static_cast<std::size_t>(k)].derivative_on(patch, x, dir);
        return gradients_[static_cast<std::size_t>(k)](x)[static_cast<std::size_t>(dir)];
    }

    /// Indices of the eigenvalue cluster containing k.
    std::vector<int> cluster(int k, double tol = 1e-6) const {
        std::vector<int> idx;
        const double scale = std::max(1.0, std::abs(eigenvalue(k)));
        for (int j = 0; j < count(); ++j)
            if (std::abs(eigenvalue(j) - eigenvalue(k)) <= tol * scale) idx.push_back(j);
        return idx;
    }

private:
    std::vector<double> eigenvalues_;
    std::vector<ScalarField> functions_;
    std::vector<GradientField> gradients_;
    std::shared_ptr<MultiPatchMesh> mesh_;
    std::shared_ptr<DofMap> dofs_;
    EigenSolution solution_;
    std::vector<MultiPatchField> fields_;
};

/// Closed-form modes of -1/2 lap with Dirichlet data on a box: products of
/// sines, L2-normalized; eigenvalues 1/2 sum (pi k_a / L_a)^2, ascending.
inline ReferenceSolution box_reference(const Box& domain, int dim, int count) {
    struct Mode {
        double lambda;
        std::array<int, 3> k;
    };
    std::vector<Mode> modes;
    const int kmax = 8;
    std::array<double, 3> L{1.0, 1.0, 1.0};
    for (int a = 0; a < dim; ++a) L[static_cast<std::size_t>(a)] = domain.side(a);
    std::array<int, 3> top{kmax, dim > 1 ? kmax : 1, dim > 2 ? kmax : 1};
    for (int k0 = 1; k0 <= top[0]; ++k0)
        for (int k1 = 1; k1 <= top[1]; ++k1)
            for (int k2 = 1; k2 <= top[2]; ++k2) {
                double lam = 0.0;
                const std::array<int, 3> kk{k0, k1, k2};
                for (int a = 0; a < dim; ++a) {
                    const double w = M_PI * kk[static_cast<std::size_t>(a)] / L[static_cast<std::size_t>(a)];
                    lam += 0.5 * w * w;
                }
                modes.push_back({lam, kk});
            }
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.lambda < b.lambda; });
    modes.resize(static_cast<std::size_t>(count));

    std::vector<double> vals;
    std::vector<ScalarField> fns;
    std::vector<GradientField> grads;
    for (const Mode& m : modes) {
        vals.push_back(m.lambda);
        const Box dom = domain;
        const std::array<int, 3> kk = m.k;
        double norm = 1.0;
        for (int a = 0; a < dim; ++a) norm *= std::sqrt(2.0 / L[static_cast<std::size_t>(a)]);
        fns.push_back([dom, kk, dim, norm](const Point& x) {
            double v = norm;
            for (int a = 0; a < dim; ++a) {
                const auto s = static_cast<std::size_t>(a);
                v *= std::sin(M_PI * kk[s] * (x[s] - dom.lo[s]) / (dom.hi[s] - dom.lo[s]));
            }
            return v;
        });
        grads.push_back([dom, kk, dim, norm](const Point& x) {
            Point g{0.0, 0.0, 0.0};
            for (int a = 0; a < dim; ++a) {
                double v = norm;
                for (int b = 0; b < dim; ++b) {
                    const auto s = static_cast<std::size_t>(b);
                    const double w = M_PI * kk[s] / (dom.hi[s] - dom.lo[s]);
                    const double arg = w * (x[s] - dom.lo[s]);
                    v *= (b == a) ? w * std::cos(arg) : std::sin(arg);
                }
                g[static_cast<std::size_t>(a)] = v;
            }
            return g;
        });
    }
    return ReferenceSolution::closed_form(std::move(vals), std::move(fns), std::move(grads));
}

enum class ErrorNorm { L2, DG };

/// Error of the k-th discrete eigenfunction against the reference, evaluated
/// by quadrature on the coarse mesh (order + 2). Degenerate clusters are
/// compared as subspaces: the error of u_k against the L2-projection onto
/// the reference cluster span.
inline double eigenfunction_error(const MultiPatchMesh& mesh, const DofMap& dofs,
                                  const EigenSolution& sol, int k, const ReferenceSolution& ref,
                                  ErrorNorm norm, const AssemblyOptions& opts = {},
                                  double cluster_tol = 1e-6) {
    const std::vector<int> cluster = ref.cluster(k, cluster_tol);
    MultiPatchField uk(mesh, dofs, sol.vectors.col(k));

    // L2 inner products of u_k with the reference cluster, and the Gram
    // matrix of the cluster, by quadrature on the coarse mesh
    const int nc = static_cast<int>(cluster.size());
    if (nc < 1) throw std::runtime_error("eigenfunction_error: empty reference cluster");
    Eigen::MatrixXd G(nc, nc);
    Eigen::VectorXd b(nc);
    auto quad_order = [&](const PatchMesh& pm) { return opts.order_for(pm) + 2; };
    {
        std::vector<double> accG(static_cast<std::size_t>(nc) * nc, 0.0);
        std::vector<double> accb(static_cast<std::size_t>(nc), 0.0);
        for (int i = 0; i < mesh.layout.patch_count(); ++i) {
            const PatchMesh& pm = mesh.patches[static_cast<std::size_t>(i)];
            const Box& pbox = mesh.layout.patch(i);
            const int d = mesh.dim();
            std::array<int, 3> nspan{1, 1, 1};
            for (int a = 0; a < d; ++a)
                nspan[static_cast<std::size_t>(a)] = pm.space().direction(a).span_count();
            detail::for_each_multi(d, nspan, [&](const std::array<int, 3>& e) {
                Box ebox;
                for (int a = 0; a < d; ++a) {
                    const auto s = static_cast<std::size_t>(a);
                    const auto& bk = pm.space().direction(a).breakpoints();
                    ebox.lo[s] = pbox.lo[s] + pbox.side(a) * bk[static_cast<std::size_t>(e[s])];
                    ebox.hi[s] = pbox.lo[s] + pbox.side(a) * bk[static_cast<std::size_t>(e[s]) + 1];
                }
                const QuadratureRule rule = tensor_gauss(d, ebox.lo, ebox.hi, quad_order(pm));
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    const Point& x = rule.points[q];
                    const double w = rule.weights[q];
                    const double uc = uk.value_on(i, x);
                    for (int r = 0; r < nc; ++r) {
                        const double vr = ref.value(cluster[static_cast<std::size_t>(r)], i, x);
                        accb[static_cast<std::size_t>(r)] += w * vr * uc;
                        for (int c = r; c < nc; ++c)
                            accG[static_cast<std::size_t>(r) * nc + c] +=
                                w * vr * ref.value(cluster[static_cast<std::size_t>(c)], i, x);
                    }
                }
            });
        }
        for (int r = 0; r < nc; ++r) {
            b[r] = accb[static_cast<std::size_t>(r)];
            for (int c = r; c < nc; ++c) {
                G(r, c) = accG[static_cast<std::size_t>(r) * nc + c];
                G(c, r) = G(r, c);
            }
        }
    }
    // combination coefficients: plain sign alignment for a single function,
    // L2 projection for a cluster
    Eigen::VectorXd coef;
    if (nc == 1)
        coef = Eigen::VectorXd::Constant(1, b[0] >= 0.0 ? 1.0 : -1.0);
    else
        coef = G.ldlt().solve(b);

    auto ref_value = [&](int patch, const Point& x) {
        double v = 0.0;
        for (int r = 0; r < nc; ++r)
            v += coef[r] * ref.value(cluster[static_cast<std::size_t>(r)], patch, x);
        return v;
    };
    auto ref_deriv = [&](int patch, const Point& x, int dir) {
        double v = 0.0;
        for (int r = 0; r < nc; ++r)
            v += coef[r] * ref.derivative(cluster[static_cast<std::size_t>(r)], patch, x, dir);
        return v;
    };

    const int d = mesh.dim();
    double acc = 0.0;
    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const PatchMesh& pm = mesh.patches[static_cast<std::size_t>(i)];
        const Box& pbox = mesh.layout.patch(i);
        std::array<int, 3> nspan{1, 1, 1};
        for (int a = 0; a < d; ++a)
            nspan[static_cast<std::size_t>(a)] = pm.space().direction(a).span_count();
        detail::for_each_multi(d, nspan, [&](const std::array<int, 3>& e) {
            Box ebox;
            for (int a = 0; a < d; ++a) {
                const auto s = static_cast<std::size_t>(a);
                const auto& bk = pm.space().direction(a).breakpoints();
                ebox.lo[s] = pbox.lo[s] + pbox.side(a) * bk[static_cast<std::size_t>(e[s])];
                ebox.hi[s] = pbox.lo[s] + pbox.side(a) * bk[static_cast<std::size_t>(e[s]) + 1];
            }
            const QuadratureRule rule = tensor_gauss(d, ebox.lo, ebox.hi, quad_order(pm));
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const Point& x = rule.points[q];
                const double w = rule.weights[q];
                const double ev = uk.value_on(i, x) - ref_value(i, x);
                double term = ev * ev;
                if (norm == ErrorNorm::DG) {
                    for (int a = 0; a < d; ++a) {
                        const double g = uk.derivative_on(i, x, a) - ref_deriv(i, x, a);
                        term += g * g;
                    }
                }
                acc += w * term;
            }
        });
    }
    if (norm == ErrorNorm::DG) {
        for (const InterfaceFace& F : mesh.layout.interior_faces()) {
            const PatchMesh& pa = mesh.patches[static_cast<std::size_t>(F.patch_a)];
            const PatchMesh& pb = mesh.patches[static_cast<std::size_t>(F.patch_b)];
            const double pen = opts.penalty_coefficient(pa, pb) * (1.0 / pa.h() + 1.0 / pb.h());
            const QuadratureRule rule = face_quadrature(mesh, F, quad_order(pa), quad_order(pb));
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const Point& x = rule.points[q];
                const double da = uk.value_on(F.patch_a, x) - ref_value(F.patch_a, x);
                const double db = uk.value_on(F.patch_b, x) - ref_value(F.patch_b, x);
                const double jump = da - db;
                acc += pen * rule.weights[q] * jump * jump;
            }
        }
    }
    return std::sqrt(std::max(acc, 0.0));
}

/// Eigenvalue error; for a degenerate cluster the means of the cluster are
/// compared on both sides.
inline double eigenvalue_error(const EigenSolution& sol, int k, const ReferenceSolution& ref,
                               double cluster_tol = 1e-6) {
    const std::vector<int> cluster = ref.cluster(k, cluster_tol);
    double ref_mean = 0.0;
    for (const int j : cluster) ref_mean += ref.eigenvalue(j);
    ref_mean /= static_cast<double>(cluster.size());
    double disc_mean = 0.0;
    int used = 0;
    for (const int j : cluster) {
        if (j < sol.eigenvalues.size()) {
            disc_mean += sol.eigenvalues[j];
            ++used;
        }
    }
    if (used == 0) throw std::runtime_error("eigenvalue_error: cluster outside the computed pairs");
    disc_mean /= used;
    return std::abs(disc_mean - ref_mean);
}

/// Sentinel returned by eoc() for an exactly-zero error pair.
inline constexpr double kConvergedExactly = std::numeric_limits<double>::infinity();

/// Empirical orders between consecutive (h, error) samples:
/// eoc = log(e_l / e_{l+1}) / log(h_l / h_{l+1}).
inline std::vector<double> eoc(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("eoc: need at least two samples");
    std::vector<double> out;
    for (std::size_t l = 0; l + 1 < samples.size(); ++l) {
        const auto [h0, e0] = samples[l];
        const auto [h1, e1] = samples[l + 1];
        if (h0 <= 0.0 || h1 <= 0.0 || h0 <= h1)
            throw std::invalid_argument("eoc: mesh sizes must be positive and decreasing");
        if (e0 < 0.0 || e1 < 0.0) throw std::invalid_argument("eoc: negative error");
        if (e1 == 0.0 || e0 == 0.0) {
            out.push_back(kConvergedExactly);
            continue;
        }
        out.push_back(std::log(e0 / e1) / std::log(h0 / h1));
    }
    return out;
}

/// One refinement level of a convergence study.
struct LevelRecord {
    int level = 0;
    double h_max = 0.0;
    double h_min = 0.0;
    long dof = 0;
    std::vector<double> lambda;      // computed eigenvalues
    std::vector<double> lambda_err;  // vs reference
    std::vector<double> l2_err;      // eigenfunction errors (may be empty)
    std::vector<double> dg_err;
    double wall_ms = 0.0;
};

struct ConvergenceRecord {
    std::vector<LevelRecord> levels;

    void push(LevelRecord lr) {
        if (!levels.empty() && lr.h_max >= levels.back().h_max)
            throw std::invalid_argument("ConvergenceRecord: levels must decrease in h_max");
        levels.push_back(std::move(lr));
    }

    std::vector<double> eoc_of(const std::function<double(const LevelRecord&)>& quantity) const {
        std::vector<std::pair<double, double>> samples;
        for (const auto& lr : levels) samples.emplace_back(lr.h_max, quantity(lr));
        return eoc(samples);
    }

    /// CSV with the versioned header; wall_ms zeroed in deterministic mode.
    void write_csv(std::ostream& os, bool deterministic = false) const {
        os << "# dgiga-csv v1\n";
        if (levels.empty()) return;
        const std::size_t k = levels.front().lambda_err.size();
        const bool with_fn = !levels.front().l2_err.empty();
        os << "level,h_max,h_min,dof";
        for (std::size_t j = 1; j <= k; ++j) os << ",lambda_err_" << j;
        if (with_fn)
            for (std::size_t j = 1; j <= k; ++j) os << ",l2_err_" << j;
        if (with_fn)
            for (std::size_t j = 1; j <= k; ++j) os << ",dg_err_" << j;
        for (std::size_t j = 1; j <= k; ++j) os << ",eoc_lambda_" << j;
        os << ",wall_ms\n";
        os.precision(17);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const auto& lr = levels[l];
            os << lr.level << "," << lr.h_max << "," << lr.h_min << "," << lr.dof;
            for (const double v : lr.lambda_err) os << "," << v;
            if (with_fn)
                for (const double v : lr.l2_err) os << "," << v;
            if (with_fn)
                for (const double v : lr.dg_err) os << "," << v;
            for (std::size_t j = 0; j < k; ++j) {
                if (l == 0) {
                    os << ",nan";
                } else {
                    const double e0 = levels[l - 1].lambda_err[j], e1 = lr.lambda_err[j];
                    if (e0 > 0 && e1 > 0)
                        os << ","
                           << std::log(e0 / e1) / std::log(levels[l - 1].h_max / lr.h_max);
                    else
                        os << ",inf";
                }
            }
            os << "," << (deterministic ? 0.0 : lr.wall_ms) << "\n";
        }
    }
};

}  // namespace dgiga
