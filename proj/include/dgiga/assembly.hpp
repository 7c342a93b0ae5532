#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "dgiga/dofmap.hpp"
#include "dgiga/geometry.hpp"
#include "dgiga/quadrature.hpp"
#include "dgiga/sparse.hpp"

namespace dgiga {

/// Knobs of the symmetric interior penalty discretization
///   a(u,v) = sum_i int_i (gamma grad u . grad v + V u v)
///          - sum_F int_F (gamma {grad u}.[v] + gamma {grad v}.[u])
///          + sum_F C_sigma (1/h_i + 1/h_j) int_F [u].[v]
/// with gamma = 1/2 for the Schroedinger form and 1 for the plain Laplacian.
struct AssemblyOptions {
    double c_sigma = -1.0;        // < 0: 10 (p_max+1)^2, p_max over the face's two patches
    int quad_order = 0;           // 0: p_max + 2 per patch
    int grading_levels = 0;       // 0: 12 in 1d/2d, 8 in 3d
    int graded_order = 0;         // 0: max(order, 12) in 1d/2d, max(order, 6) in 3d
    double laplace_factor = 0.5;  // gamma
    std::vector<Point> singular_points;  // graded quadrature around these corners

    int order_for(const PatchMesh& pm) const {
        return quad_order > 0 ? quad_order : pm.max_degree() + 2;
    }
    int levels_for(int dim) const { return grading_levels > 0 ? grading_levels : (dim == 3 ? 8 : 12); }
    int graded_order_for(int dim, int q) const {
        if (graded_order > 0) return graded_order;
        return dim == 3 ? std::max(q, 6) : std::max(q, 12);
    }
    double penalty_coefficient(const PatchMesh& a, const PatchMesh& b) const {
        if (c_sigma >= 0.0) return c_sigma;
        const int pmax = std::max(a.max_degree(), b.max_degree());
        return 10.0 * (pmax + 1) * (pmax + 1);
    }
};

namespace detail {

/// Per-direction Gauss data and basis values on every span of a knot vector.
struct DirTable {
    int q = 0;
    int p = 0;
    std::vector<double> nodes, weights;  // [span*q + k], parametric
    std::vector<double> vals, ders;      // [(span*q + k)*(p+1) + j]
};

inline DirTable build_dir_table(const KnotVector& kv, int q) {
    DirTable t;
    t.q = q;
    t.p = kv.degree();
    std::vector<double> gx, gw;
    gauss_legendre(q, gx, gw);
    const auto& bk = kv.breakpoints();
    const int nspan = kv.span_count();
    t.nodes.resize(static_cast<std::size_t>(nspan) * q);
    t.weights.resize(static_cast<std::size_t>(nspan) * q);
    t.vals.resize(static_cast<std::size_t>(nspan) * q * (t.p + 1));
    t.ders.resize(static_cast<std::size_t>(nspan) * q * (t.p + 1));
    for (int s = 0; s < nspan; ++s) {
        const double a = bk[static_cast<std::size_t>(s)], b = bk[static_cast<std::size_t>(s) + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int k = 0; k < q; ++k) {
            const double x = mid + half * gx[static_cast<std::size_t>(k)];
            const std::size_t idx = static_cast<std::size_t>(s) * q + k;
            t.nodes[idx] = x;
            t.weights[idx] = half * gw[static_cast<std::size_t>(k)];
            const int span = kv.find_span(x);
            kv.basis_values_derivatives(span, x, &t.vals[idx * (t.p + 1)], &t.ders[idx * (t.p + 1)]);
        }
    }
    return t;
}

/// Walks the multi-indices of a d-dimensional box of sizes n[0..d-1].
template <typename F>
void for_each_multi(int d, const std::array<int, 3>& n, F&& body) {
    std::array<int, 3> e{0, 0, 0};
    while (true) {
        body(e);
        int a = d - 1;
        while (a >= 0) {
            if (++e[static_cast<std::size_t>(a)] < n[static_cast<std::size_t>(a)]) break;
            e[static_cast<std::size_t>(a)] = 0;
            --a;
        }
        if (a < 0) break;
    }
}

struct PatchWork {
    const PatchLayout* layout = nullptr;
    const PatchMesh* pm = nullptr;
    int patch = -1;
    int q = 0;
    std::array<DirTable, 3> tables;
    std::array<int, 3> nspan{1, 1, 1};
    std::array<double, 3> scale{1.0, 1.0, 1.0};
    double jac = 1.0;
    int nloc = 1;  // active functions per element

    PatchWork(const MultiPatchMesh& mesh, int i, int order) {
        layout = &mesh.layout;
        pm = &mesh.patches[static_cast<std::size_t>(i)];
        patch = i;
        q = order;
        const int d = mesh.dim();
        jac = layout->jacobian(i);
        for (int a = 0; a < d; ++a) {
            const KnotVector& kv = pm->space().direction(a);
            tables[static_cast<std::size_t>(a)] = build_dir_table(kv, q);
            nspan[static_cast<std::size_t>(a)] = kv.span_count();
            scale[static_cast<std::size_t>(a)] = layout->patch(i).side(a);
            nloc *= kv.degree() + 1;
        }
    }
};

/// Per-quadrature-point basis data of one element (or one face side).
struct PointBasis {
    double w = 0.0;  // physical weight
    Point x{};       // physical point
    std::vector<double> val;               // nloc values
    std::array<std::vector<double>, 3> grad;  // physical gradient components
};

/// Tensorizes per-direction values/derivatives into nloc-arrays.
inline void combine_basis(int d, const std::array<const double*, 3>& v,
                          const std::array<const double*, 3>& dv,
                          const std::array<int, 3>& np, const std::array<double, 3>& scale,
                          std::vector<double>& val, std::array<std::vector<double>, 3>& grad) {
    int m = 0;
    for (int j0 = 0; j0 < np[0]; ++j0)
        for (int j1 = 0; j1 < np[1]; ++j1)
            for (int j2 = 0; j2 < np[2]; ++j2) {
                double prod = v[0][j0];
                if (d > 1) prod *= v[1][j1];
                if (d > 2) prod *= v[2][j2];
                val[static_cast<std::size_t>(m)] = prod;
                for (int a = 0; a < d; ++a) {
                    double g = (a == 0 ? dv[0][j0] : v[0][j0]);
                    if (d > 1) g *= (a == 1 ? dv[1][j1] : v[1][j1]);
                    if (d > 2) g *= (a == 2 ? dv[2][j2] : v[2][j2]);
                    grad[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] =
                        g / scale[static_cast<std::size_t>(a)];
                }
                ++m;
            }
}

/// Invokes `emit(PointBasis)` for every quadrature point of element e of the
/// patch, and fills `gids` with the element's global dof ids (-1 constrained).
template <typename Emit>
void element_quadrature(const MultiPatchMesh& mesh, const DofMap& dofs, const PatchWork& W,
                        const AssemblyOptions& opts, const std::array<int, 3>& e,
                        std::vector<long>& gids, Emit&& emit) {
    const int d = mesh.dim();
    const TensorSplineSpace& sp = W.pm->space();
    const Box& pbox = mesh.layout.patch(W.patch);

    std::array<int, 3> np{1, 1, 1}, first{0, 0, 0};
    for (int a = 0; a < d; ++a) {
        const auto s = static_cast<std::size_t>(a);
        const KnotVector& kv = sp.direction(a);
        np[s] = kv.degree() + 1;
        // span index in knot coordinates of element e[a]
        const double xm = 0.5 * (kv.breakpoints()[static_cast<std::size_t>(e[s])] +
                                 kv.breakpoints()[static_cast<std::size_t>(e[s]) + 1]);
        first[s] = kv.find_span(xm) - kv.degree();
    }
    // global ids of the element's active functions, m-ordered like combine_basis
    gids.clear();
    for (int j0 = 0; j0 < np[0]; ++j0)
        for (int j1 = 0; j1 < np[1]; ++j1)
            for (int j2 = 0; j2 < np[2]; ++j2) {
                MultiIndex mi{first[0] + j0, d > 1 ? first[1] + j1 : 0, d > 2 ? first[2] + j2 : 0};
                gids.push_back(dofs.global(W.patch, sp.flat_index(mi)));
            }

    // physical element box and the optional singular corner
    Box ebox;
    for (int a = 0; a < d; ++a) {
        const auto s = static_cast<std::size_t>(a);
        const auto& bk = sp.direction(a).breakpoints();
        ebox.lo[s] = pbox.lo[s] + pbox.side(a) * bk[static_cast<std::size_t>(e[s])];
        ebox.hi[s] = pbox.lo[s] + pbox.side(a) * bk[static_cast<std::size_t>(e[s]) + 1];
    }
    const double tol = mesh.layout.face_tol();
    std::optional<Point> corner;
    for (const Point& r : opts.singular_points) {
        bool is_corner = true;
        for (int a = 0; a < d && is_corner; ++a) {
            const auto s = static_cast<std::size_t>(a);
            if (std::abs(r[s] - ebox.lo[s]) > tol && std::abs(r[s] - ebox.hi[s]) > tol)
                is_corner = false;
        }
        if (is_corner) {
            corner = r;
            break;
        }
    }

    PointBasis pb;
    pb.val.resize(static_cast<std::size_t>(W.nloc));
    for (int a = 0; a < d; ++a)
        pb.grad[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(W.nloc));

    if (!corner) {
        // tensor rule from the precomputed tables
        std::array<int, 3> nq{1, 1, 1};
        for (int a = 0; a < d; ++a) nq[static_cast<std::size_t>(a)] = W.q;
        for_each_multi(d, nq, [&](const std::array<int, 3>& k) {
            std::array<const double*, 3> v{}, dv{};
            double wq = W.jac;
            for (int a = 0; a < d; ++a) {
                const auto s = static_cast<std::size_t>(a);
                const DirTable& t = W.tables[s];
                const std::size_t idx = static_cast<std::size_t>(e[s]) * W.q + k[s];
                wq *= t.weights[idx];
                v[s] = &t.vals[idx * (t.p + 1)];
                dv[s] = &t.ders[idx * (t.p + 1)];
                pb.x[s] = pbox.lo[s] + pbox.side(a) * t.nodes[idx];
            }
            pb.w = wq;
            combine_basis(d, v, dv, np, W.scale, pb.val, pb.grad);
            emit(pb);
        });
        return;
    }

    // graded rule toward the singular corner, physical points
    const int lv = opts.levels_for(d);
    const int gq = opts.graded_order_for(d, W.q);
    const QuadratureRule rule = graded_tensor_gauss(d, ebox.lo, ebox.hi, *corner, gq, lv);
    std::array<std::array<double, KnotVector::kMaxDegree + 1>, 3> bv{}, bd{};
    for (std::size_t kq = 0; kq < rule.size(); ++kq) {
        pb.x = rule.points[kq];
        pb.w = rule.weights[kq];
        std::array<const double*, 3> v{}, dv{};
        for (int a = 0; a < d; ++a) {
            const auto s = static_cast<std::size_t>(a);
            const KnotVector& kv = sp.direction(a);
            const double xi = std::clamp((pb.x[s] - pbox.lo[s]) / pbox.side(a), 0.0, 1.0);
            kv.basis_values_derivatives(first[s] + kv.degree(), xi, bv[s].data(), bd[s].data());
            v[s] = bv[s].data();
            dv[s] = bd[s].data();
        }
        combine_basis(d, v, dv, np, W.scale, pb.val, pb.grad);
        emit(pb);
    }
}

/// Trace data of one side of an interior face at one physical point.
struct FaceSideBasis {
    std::vector<double> trace;    // basis trace values
    std::vector<double> nderiv;   // physical normal derivatives (along +e_dir)
    std::vector<long> gids;
};

inline void face_side_basis(const MultiPatchMesh& mesh, const DofMap& dofs, int patch,
                            int normal_dir, const Point& x, FaceSideBasis& out) {
    const int d = mesh.dim();
    const TensorSplineSpace& sp = mesh.patches[static_cast<std::size_t>(patch)].space();
    const PatchLayout& L = mesh.layout;
    const Point xi = L.pullback(patch, x);
    std::array<int, 3> np{1, 1, 1}, first{0, 0, 0};
    std::array<std::array<double, KnotVector::kMaxDegree + 1>, 3> bv{}, bd{};
    std::array<const double*, 3> v{}, dv{};
    for (int a = 0; a < d; ++a) {
        const auto s = static_cast<std::size_t>(a);
        const KnotVector& kv = sp.direction(a);
        const int span = kv.find_span(xi[s]);
        np[s] = kv.degree() + 1;
        first[s] = span - kv.degree();
        kv.basis_values_derivatives(span, xi[s], bv[s].data(), bd[s].data());
        v[s] = bv[s].data();
        dv[s] = bd[s].data();
    }
    int nloc = 1;
    for (int a = 0; a < d; ++a) nloc *= np[static_cast<std::size_t>(a)];
    out.trace.resize(static_cast<std::size_t>(nloc));
    out.nderiv.resize(static_cast<std::size_t>(nloc));
    out.gids.clear();
    const double nscale = L.patch(patch).side(normal_dir);
    int m = 0;
    for (int j0 = 0; j0 < np[0]; ++j0)
        for (int j1 = 0; j1 < np[1]; ++j1)
            for (int j2 = 0; j2 < np[2]; ++j2) {
                double prod = v[0][j0], nd = (normal_dir == 0 ? dv[0][j0] : v[0][j0]);
                if (d > 1) {
                    prod *= v[1][j1];
                    nd *= (normal_dir == 1 ? dv[1][j1] : v[1][j1]);
                }
                if (d > 2) {
                    prod *= v[2][j2];
                    nd *= (normal_dir == 2 ? dv[2][j2] : v[2][j2]);
                }
                out.trace[static_cast<std::size_t>(m)] = prod;
                out.nderiv[static_cast<std::size_t>(m)] = nd / nscale;
                MultiIndex mi{first[0] + j0, d > 1 ? first[1] + j1 : 0, d > 2 ? first[2] + j2 : 0};
                out.gids.push_back(dofs.global(patch, sp.flat_index(mi)));
                ++m;
            }
}

}  // namespace detail

/// Stiffness-plus-potential operator of the symmetric interior penalty form.
/// The potential may be empty (V = 0); it must be finite at every quadrature
/// point actually used.
inline SymmetricSparseMatrix assemble_bilinear(const MultiPatchMesh& mesh, const DofMap& dofs,
                                               const PotentialFn& potential,
                                               const AssemblyOptions& opts = {}) {
    const int d = mesh.dim();
    const double gamma = opts.laplace_factor;
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<long> gids;

    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const detail::PatchWork W(mesh, i, opts.order_for(mesh.patches[static_cast<std::size_t>(i)]));
        Eigen::MatrixXd Aloc(W.nloc, W.nloc);
        std::array<int, 3> nspan{1, 1, 1};
        for (int a = 0; a < d; ++a) nspan[static_cast<std::size_t>(a)] = W.nspan[static_cast<std::size_t>(a)];
        detail::for_each_multi(d, nspan, [&](const std::array<int, 3>& e) {
            Aloc.setZero();
            detail::element_quadrature(mesh, dofs, W, opts, e, gids, [&](const detail::PointBasis& pb) {
                double V = 0.0;
                if (potential) {
                    V = potential(pb.x);
                    if (!std::isfinite(V))
                        throw std::runtime_error(
                            "assemble_bilinear: potential not finite at a quadrature point");
                }
                for (int m = 0; m < W.nloc; ++m) {
                    const auto sm = static_cast<std::size_t>(m);
                    for (int mm = m; mm < W.nloc; ++mm) {
                        const auto smm = static_cast<std::size_t>(mm);
                        double term = 0.0;
                        for (int a = 0; a < d; ++a)
                            term += pb.grad[static_cast<std::size_t>(a)][sm] *
                                    pb.grad[static_cast<std::size_t>(a)][smm];
                        term *= gamma;
                        if (potential) term += V * pb.val[sm] * pb.val[smm];
                        Aloc(m, mm) += pb.w * term;
                    }
                }
            });
            for (int m = 0; m < W.nloc; ++m) {
                const long ga = gids[static_cast<std::size_t>(m)];
                if (ga < 0) continue;
                for (int mm = m; mm < W.nloc; ++mm) {
                    const long gb = gids[static_cast<std::size_t>(mm)];
                    if (gb < 0) continue;
                    trips.emplace_back(ga, gb, Aloc(m, mm));
                }
            }
        });
    }

    // interface terms
    detail::FaceSideBasis side_a, side_b;
    for (const InterfaceFace& F : mesh.layout.interior_faces()) {
        const PatchMesh& pa = mesh.patches[static_cast<std::size_t>(F.patch_a)];
        const PatchMesh& pb = mesh.patches[static_cast<std::size_t>(F.patch_b)];
        const double pen = opts.penalty_coefficient(pa, pb) * (1.0 / pa.h() + 1.0 / pb.h());
        const QuadratureRule rule = face_quadrature(mesh, F, opts.order_for(pa), opts.order_for(pb));
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const Point& x = rule.points[k];
            const double w = rule.weights[k];
            detail::face_side_basis(mesh, dofs, F.patch_a, F.normal_dir, x, side_a);
            detail::face_side_basis(mesh, dofs, F.patch_b, F.normal_dir, x, side_b);
            const std::size_t na = side_a.gids.size(), nb = side_b.gids.size();
            const std::size_t n = na + nb;
            auto trace = [&](std::size_t m) {
                return m < na ? side_a.trace[m] : -side_b.trace[m - na];  // jump sign
            };
            auto nderiv = [&](std::size_t m) { return m < na ? side_a.nderiv[m] : side_b.nderiv[m - na]; };
            auto gid = [&](std::size_t m) { return m < na ? side_a.gids[m] : side_b.gids[m - na]; };
            for (std::size_t m = 0; m < n; ++m) {
                const long ga = gid(m);
                if (ga < 0) continue;
                for (std::size_t mm = m; mm < n; ++mm) {
                    const long gb = gid(mm);
                    if (gb < 0) continue;
                    const double consistency =
                        -gamma * 0.5 * (nderiv(m) * trace(mm) + nderiv(mm) * trace(m));
                    const double penalty = pen * trace(m) * trace(mm);
                    trips.emplace_back(ga, gb, w * (consistency + penalty));
                }
            }
        }
    }
    return SymmetricSparseMatrix::from_triplets(dofs.size(), trips);
}

/// L2 inner-product (mass) matrix.
inline SymmetricSparseMatrix assemble_mass(const MultiPatchMesh& mesh, const DofMap& dofs,
                                           const AssemblyOptions& opts = {}) {
    const int d = mesh.dim();
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<long> gids;
    AssemblyOptions mopts = opts;
    mopts.singular_points.clear();  // mass integrand is polynomial
    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const detail::PatchWork W(mesh, i, opts.order_for(mesh.patches[static_cast<std::size_t>(i)]));
        Eigen::MatrixXd Mloc(W.nloc, W.nloc);
        std::array<int, 3> nspan{1, 1, 1};
        for (int a = 0; a < d; ++a) nspan[static_cast<std::size_t>(a)] = W.nspan[static_cast<std::size_t>(a)];
        detail::for_each_multi(d, nspan, [&](const std::array<int, 3>& e) {
            Mloc.setZero();
            detail::element_quadrature(mesh, dofs, W, mopts, e, gids, [&](const detail::PointBasis& pb) {
                for (int m = 0; m < W.nloc; ++m)
                    for (int mm = m; mm < W.nloc; ++mm)
                        Mloc(m, mm) += pb.w * pb.val[static_cast<std::size_t>(m)] *
                                       pb.val[static_cast<std::size_t>(mm)];
            });
            for (int m = 0; m < W.nloc; ++m) {
                const long ga = gids[static_cast<std::size_t>(m)];
                if (ga < 0) continue;
                for (int mm = m; mm < W.nloc; ++mm) {
                    const long gb = gids[static_cast<std::size_t>(mm)];
                    if (gb < 0) continue;
                    trips.emplace_back(ga, gb, Mloc(m, mm));
                }
            }
        });
    }
    return SymmetricSparseMatrix::from_triplets(dofs.size(), trips);
}

/// Load vector (f, phi_a).
inline Eigen::VectorXd assemble_load(const MultiPatchMesh& mesh, const DofMap& dofs,
                                     const ScalarField& f, const AssemblyOptions& opts = {}) {
    const int d = mesh.dim();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs.size());
    std::vector<long> gids;
    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const detail::PatchWork W(mesh, i, opts.order_for(mesh.patches[static_cast<std::size_t>(i)]));
        std::array<int, 3> nspan{1, 1, 1};
        for (int a = 0; a < d; ++a) nspan[static_cast<std::size_t>(a)] = W.nspan[static_cast<std::size_t>(a)];
        detail::for_each_multi(d, nspan, [&](const std::array<int, 3>& e) {
            detail::element_quadrature(mesh, dofs, W, opts, e, gids, [&](const detail::PointBasis& pb) {
                const double fx = f(pb.x);
                for (int m = 0; m < W.nloc; ++m) {
                    const long g = gids[static_cast<std::size_t>(m)];
                    if (g >= 0) b[g] += pb.w * fx * pb.val[static_cast<std::size_t>(m)];
                }
            });
        });
    }
    return b;
}

/// Integral of a pointwise function over the whole mesh, element by element
/// with tensor Gauss rules of the given order (0: per-patch default).
inline double integrate_over_mesh(const MultiPatchMesh& mesh, const ScalarField& f,
                                  int order = 0) {
    const int d = mesh.dim();
    double acc = 0.0;
    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const PatchMesh& pm = mesh.patches[static_cast<std::size_t>(i)];
        const int q = order > 0 ? order : pm.max_degree() + 2;
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
            const QuadratureRule rule = tensor_gauss(d, ebox.lo, ebox.hi, q);
            for (std::size_t k = 0; k < rule.size(); ++k) acc += rule.weights[k] * f(rule.points[k]);
        });
    }
    return acc;
}

/// DG norm of a discrete field:
///   ||u||_DG^2 = sum_i ||u||_{H1(Omega_i)}^2
///             + sum_F C_sigma (1/h_i + 1/h_j) ||[u]||_{L2(F)}^2.
inline double dg_norm(const MultiPatchMesh& mesh, const MultiPatchField& field,
                      const AssemblyOptions& opts = {}) {
    const int d = mesh.dim();
    double acc = 0.0;
    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const PatchMesh& pm = mesh.patches[static_cast<std::size_t>(i)];
        const int q = opts.order_for(pm) + 1;
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
            const QuadratureRule rule = tensor_gauss(d, ebox.lo, ebox.hi, q);
            for (std::size_t k = 0; k < rule.size(); ++k) {
                const Point& x = rule.points[k];
                const double u = field.value_on(i, x);
                double g2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double g = field.derivative_on(i, x, a);
                    g2 += g * g;
                }
                acc += rule.weights[k] * (u * u + g2);
            }
        });
    }
    for (const InterfaceFace& F : mesh.layout.interior_faces()) {
        const PatchMesh& pa = mesh.patches[static_cast<std::size_t>(F.patch_a)];
        const PatchMesh& pb = mesh.patches[static_cast<std::size_t>(F.patch_b)];
        const double pen = opts.penalty_coefficient(pa, pb) * (1.0 / pa.h() + 1.0 / pb.h());
        const QuadratureRule rule =
            face_quadrature(mesh, F, opts.order_for(pa) + 1, opts.order_for(pb) + 1);
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const double jump =
                field.value_on(F.patch_a, rule.points[k]) - field.value_on(F.patch_b, rule.points[k]);
            acc += pen * rule.weights[k] * jump * jump;
        }
    }
    return std::sqrt(acc);
}

}  // namespace dgiga
