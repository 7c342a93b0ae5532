#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dgiga/quadrature.hpp"
#include "dgiga/spline_space.hpp"

namespace dgiga {

/// Axis-aligned box; only the first `dim` components are meaningful.
struct Box {
    Point lo{0.0, 0.0, 0.0};
    Point hi{0.0, 0.0, 0.0};

    double side(int a) const { return hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]; }

    double measure(int dim) const {
        double m = 1.0;
        for (int a = 0; a < dim; ++a) m *= side(a);
        return m;
    }

    bool contains(const Point& x, int dim, double tol = 0.0) const {
        for (int a = 0; a < dim; ++a) {
            const auto s = static_cast<std::size_t>(a);
            if (x[s] < lo[s] - tol || x[s] > hi[s] + tol) return false;
        }
        return true;
    }

    std::string describe(int dim) const {
        std::ostringstream os;
        os << "[";
        for (int a = 0; a < dim; ++a) {
            if (a) os << "]x[";
            os << lo[static_cast<std::size_t>(a)] << "," << hi[static_cast<std::size_t>(a)];
        }
        os << "]";
        return os.str();
    }
};

/// Interior face F shared by two patches. The unit normal n+ points along
/// +e_{normal_dir}, outward from patch_a into patch_b.
struct InterfaceFace {
    int patch_a = -1;
    int patch_b = -1;
    int normal_dir = 0;
    double coord = 0.0;  // face plane x_{normal_dir} = coord
    Box box;             // degenerate in normal_dir (lo == hi == coord)

    double measure(int dim) const {
        double m = 1.0;
        for (int a = 0; a < dim; ++a)
            if (a != normal_dir) m *= box.side(a);
        return m;
    }
};

/// A patch face lying on the domain boundary.
struct ExteriorFace {
    int patch = -1;
    int normal_dir = 0;
    bool upper = false;  // true: face at the patch's hi side
};

/// Decomposition of the physical box domain into non-overlapping axis-aligned
/// patches, each the image of [0,1]^d under a diagonal rescaling map
/// G_i(xi) = A_i xi + c_i with A_i = diag(side lengths), c_i = patch corner.
class PatchLayout {
public:
    static PatchLayout build(int dim, const Box& domain, std::vector<Box> patches,
                             const std::vector<Point>& nuclei = {}) {
        PatchLayout L;
        L.dim_ = dim;
        L.domain_ = domain;
        L.patches_ = std::move(patches);
        L.validate(nuclei);
        L.enumerate_faces();
        return L;
    }

    int dim() const { return dim_; }
    const Box& domain() const { return domain_; }
    int patch_count() const { return static_cast<int>(patches_.size()); }
    const Box& patch(int i) const { return patches_[static_cast<std::size_t>(i)]; }
    const std::vector<InterfaceFace>& interior_faces() const { return interior_faces_; }
    const std::vector<ExteriorFace>& exterior_faces() const { return exterior_faces_; }

    /// G_i: [0,1]^d -> patch i.
    Point pushforward(int i, const Point& xi) const {
        const Box& b = patches_[static_cast<std::size_t>(i)];
        Point x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) {
            const auto s = static_cast<std::size_t>(a);
            if (xi[s] < 0.0 || xi[s] > 1.0)
                throw std::domain_error("PatchLayout::pushforward: point outside [0,1]^d");
            x[s] = b.lo[s] + b.side(a) * xi[s];
        }
        return x;
    }

    /// G_i^{-1}: patch i -> [0,1]^d.
    Point pullback(int i, const Point& x) const {
        const Box& b = patches_[static_cast<std::size_t>(i)];
        Point xi{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) {
            const auto s = static_cast<std::size_t>(a);
            if (x[s] < b.lo[s] - face_tol() || x[s] > b.hi[s] + face_tol())
                throw std::domain_error("PatchLayout::pullback: point outside patch");
            xi[s] = std::clamp((x[s] - b.lo[s]) / b.side(a), 0.0, 1.0);
        }
        return xi;
    }

    /// det(A_i) = product of patch side lengths.
    double jacobian(int i) const { return patches_[static_cast<std::size_t>(i)].measure(dim_); }

    /// Patch whose closure contains x (lowest index on ties).
    int patch_containing(const Point& x) const {
        for (int i = 0; i < patch_count(); ++i)
            if (patches_[static_cast<std::size_t>(i)].contains(x, dim_, face_tol())) return i;
        throw std::domain_error("PatchLayout: point outside all patches");
    }

    double face_tol() const {
        double scale = 0.0;
        for (int a = 0; a < dim_; ++a) scale = std::max(scale, std::abs(domain_.side(a)));
        return 1e-12 * std::max(1.0, scale);
    }

private:
    void validate(const std::vector<Point>& nuclei) const {
        if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("PatchLayout: dim must be 1, 2 or 3");
        if (patches_.empty()) throw std::invalid_argument("PatchLayout: no patches");
        const double tol = face_tol();
        for (const Box& b : patches_) {
            for (int a = 0; a < dim_; ++a)
                if (b.side(a) <= tol)
                    throw std::invalid_argument("PatchLayout: degenerate patch " + b.describe(dim_));
            for (int a = 0; a < dim_; ++a) {
                const auto s = static_cast<std::size_t>(a);
                if (b.lo[s] < domain_.lo[s] - tol || b.hi[s] > domain_.hi[s] + tol)
                    throw std::invalid_argument("PatchLayout: patch " + b.describe(dim_) +
                                                " outside the domain");
            }
        }
        // pairwise interior overlap
        for (std::size_t i = 0; i < patches_.size(); ++i)
            for (std::size_t j = i + 1; j < patches_.size(); ++j) {
                bool overlap = true;
                for (int a = 0; a < dim_; ++a) {
                    const auto s = static_cast<std::size_t>(a);
                    const double w = std::min(patches_[i].hi[s], patches_[j].hi[s]) -
                                     std::max(patches_[i].lo[s], patches_[j].lo[s]);
                    if (w <= tol) {
                        overlap = false;
                        break;
                    }
                }
                if (overlap)
                    throw std::invalid_argument("PatchLayout: patches " + patches_[i].describe(dim_) +
                                                " and " + patches_[j].describe(dim_) + " overlap");
            }
        // coverage by measure (combined with disjointness and containment)
        double total = 0.0;
        for (const Box& b : patches_) total += b.measure(dim_);
        const double dom = domain_.measure(dim_);
        if (std::abs(total - dom) > 1e-10 * dom)
            throw std::invalid_argument("PatchLayout: patches do not cover the domain (gap)");
        // nuclei strictly interior to a patch
        for (const Point& r : nuclei) {
            bool interior = false;
            for (const Box& b : patches_) {
                bool inside = true;
                for (int a = 0; a < dim_; ++a) {
                    const auto s = static_cast<std::size_t>(a);
                    if (r[s] <= b.lo[s] + tol || r[s] >= b.hi[s] - tol) {
                        inside = false;
                        break;
                    }
                }
                if (inside) {
                    interior = true;
                    break;
                }
            }
            if (!interior)
                throw std::invalid_argument(
                    "PatchLayout: nucleus lies on a patch boundary (must be interior to a patch)");
        }
    }

    void enumerate_faces() {
        const double tol = face_tol();
        interior_faces_.clear();
        exterior_faces_.clear();
        for (int i = 0; i < patch_count(); ++i)
            for (int j = 0; j < patch_count(); ++j) {
                if (i == j) continue;
                const Box& A = patches_[static_cast<std::size_t>(i)];
                const Box& B = patches_[static_cast<std::size_t>(j)];
                for (int a = 0; a < dim_; ++a) {
                    const auto s = static_cast<std::size_t>(a);
                    if (std::abs(A.hi[s] - B.lo[s]) > tol) continue;
                    // candidate shared plane: tangential overlap must be positive
                    Box face;
                    face.lo[s] = face.hi[s] = 0.5 * (A.hi[s] + B.lo[s]);
                    bool positive = true;
                    for (int t = 0; t < dim_; ++t) {
                        if (t == a) continue;
                        const auto u = static_cast<std::size_t>(t);
                        const double lo = std::max(A.lo[u], B.lo[u]);
                        const double hi = std::min(A.hi[u], B.hi[u]);
                        if (hi - lo <= tol) {
                            positive = false;
                            break;
                        }
                        face.lo[u] = lo;
                        face.hi[u] = hi;
                    }
                    if (!positive) continue;
                    InterfaceFace F;
                    F.patch_a = i;
                    F.patch_b = j;
                    F.normal_dir = a;
                    F.coord = face.lo[s];
                    F.box = face;
                    interior_faces_.push_back(F);
                }
            }
        for (int i = 0; i < patch_count(); ++i) {
            const Box& A = patches_[static_cast<std::size_t>(i)];
            for (int a = 0; a < dim_; ++a) {
                const auto s = static_cast<std::size_t>(a);
                if (std::abs(A.lo[s] - domain_.lo[s]) <= tol)
                    exterior_faces_.push_back({i, a, false});
                if (std::abs(A.hi[s] - domain_.hi[s]) <= tol)
                    exterior_faces_.push_back({i, a, true});
            }
        }
    }

    int dim_ = 0;
    Box domain_;
    std::vector<Box> patches_;
    std::vector<InterfaceFace> interior_faces_;
    std::vector<ExteriorFace> exterior_faces_;
};

/// Tensor spline space attached to one patch, with its physical mesh data.
/// Element size h_Q is the largest physical side of the element box; the
/// patch mesh size h_i is the maximum over elements.
class PatchMesh {
public:
    PatchMesh(const PatchLayout& layout, int patch, TensorSplineSpace space)
        : patch_(patch), space_(std::move(space)) {
        const Box& b = layout.patch(patch);
        h_ = 0.0;
        h_min_elem_ = std::numeric_limits<double>::max();
        for (int a = 0; a < layout.dim(); ++a) {
            const KnotVector& kv = space_.direction(a);
            const auto& bk = kv.breakpoints();
            for (std::size_t k = 0; k + 1 < bk.size(); ++k) {
                const double side = (bk[k + 1] - bk[k]) * b.side(a);
                h_ = std::max(h_, side);
                h_min_elem_ = std::min(h_min_elem_, side);
            }
        }
    }

    int patch_index() const { return patch_; }
    const TensorSplineSpace& space() const { return space_; }
    double h() const { return h_; }

    /// Quasi-uniformity constant C_m = h_i / min h_Q (per-direction sides).
    double quasi_uniformity() const { return h_ / h_min_elem_; }

    int max_degree() const {
        int p = 0;
        for (int a = 0; a < space_.dim(); ++a) p = std::max(p, space_.direction(a).degree());
        return p;
    }

    int min_degree() const {
        int p = space_.direction(0).degree();
        for (int a = 1; a < space_.dim(); ++a) p = std::min(p, space_.direction(a).degree());
        return p;
    }

private:
    int patch_;
    TensorSplineSpace space_;
    double h_ = 0.0;
    double h_min_elem_ = 0.0;
};

/// The multi-patch discrete space: layout plus one PatchMesh per patch.
struct MultiPatchMesh {
    PatchLayout layout;
    std::vector<PatchMesh> patches;

    int dim() const { return layout.dim(); }

    double h_max() const {
        double h = 0.0;
        for (const auto& m : patches) h = std::max(h, m.h());
        return h;
    }

    double h_min() const {
        double h = std::numeric_limits<double>::max();
        for (const auto& m : patches) h = std::min(h, m.h());
        return h;
    }

    long total_coefficients() const {
        long n = 0;
        for (const auto& m : patches) n += m.space().size();
        return n;
    }

    /// Refined copy; per-patch span-subdivision factors (all >= 1).
    MultiPatchMesh refined(const std::vector<int>& factors) const {
        if (factors.size() != patches.size())
            throw std::invalid_argument("MultiPatchMesh::refined: factor count mismatch");
        MultiPatchMesh out{layout, {}};
        out.patches.reserve(patches.size());
        for (std::size_t i = 0; i < patches.size(); ++i)
            out.patches.emplace_back(layout, static_cast<int>(i),
                                     patches[i].space().refined(factors[i]));
        return out;
    }
};

/// Merged per-axis physical breakpoints of both side traces on an interior
/// face: every element boundary of either side shows up, so no quadrature
/// cell straddles one.
inline std::vector<std::vector<double>> merged_face_grid(const MultiPatchMesh& mesh,
                                                         const InterfaceFace& face) {
    const PatchLayout& L = mesh.layout;
    const int d = L.dim();
    const double tol = 1e-12 * std::max(1.0, std::abs(face.coord)) +
                       L.face_tol();
    std::vector<std::vector<double>> grid;
    for (int t = 0; t < d; ++t) {
        if (t == face.normal_dir) continue;
        const auto u = static_cast<std::size_t>(t);
        std::vector<double> pts{face.box.lo[u], face.box.hi[u]};
        for (const int side : {face.patch_a, face.patch_b}) {
            const Box& pb = L.patch(side);
            const auto& bk = mesh.patches[static_cast<std::size_t>(side)].space().direction(t).breakpoints();
            for (const double b : bk) {
                const double x = pb.lo[u] + pb.side(t) * b;
                if (x > face.box.lo[u] + tol && x < face.box.hi[u] - tol) pts.push_back(x);
            }
        }
        std::sort(pts.begin(), pts.end());
        std::vector<double> uniq;
        for (const double x : pts)
            if (uniq.empty() || x - uniq.back() > tol) uniq.push_back(x);
        grid.push_back(std::move(uniq));
    }
    return grid;
}

/// Quadrature on an interior face: union of tensor Gauss rules over the
/// merged cells, order = max of the two sides' requested orders. In 1D the
/// face is a single point with unit weight (counting measure).
inline QuadratureRule face_quadrature(const MultiPatchMesh& mesh, const InterfaceFace& face,
                                      int order_a, int order_b) {
    const int d = mesh.dim();
    const int q = std::max(order_a, order_b);
    QuadratureRule rule;
    if (d == 1) {
        Point x{0.0, 0.0, 0.0};
        x[0] = face.coord;
        rule.points.push_back(x);
        rule.weights.push_back(1.0);
        return rule;
    }
    const auto grid = merged_face_grid(mesh, face);
    // tangential axes in increasing order
    std::vector<int> tangents;
    for (int t = 0; t < d; ++t)
        if (t != face.normal_dir) tangents.push_back(t);
    const auto& g0 = grid[0];
    const std::size_t c1 = d == 3 ? grid[1].size() - 1 : 1;
    for (std::size_t i0 = 0; i0 + 1 < g0.size(); ++i0)
        for (std::size_t i1 = 0; i1 < c1; ++i1) {
            std::array<std::vector<double>, 3> pts, wts;
            detail::gauss_on_interval(q, g0[i0], g0[i0 + 1], pts[0], wts[0]);
            int fdim = 1;
            if (d == 3) {
                detail::gauss_on_interval(q, grid[1][i1], grid[1][i1 + 1], pts[1], wts[1]);
                fdim = 2;
            }
            QuadratureRule cell;
            detail::tensorize(fdim, pts, wts, cell);
            for (std::size_t k = 0; k < cell.size(); ++k) {
                Point x{0.0, 0.0, 0.0};
                x[static_cast<std::size_t>(face.normal_dir)] = face.coord;
                x[static_cast<std::size_t>(tangents[0])] = cell.points[k][0];
                if (d == 3) x[static_cast<std::size_t>(tangents[1])] = cell.points[k][1];
                rule.points.push_back(x);
                rule.weights.push_back(cell.weights[k]);
            }
        }
    if (rule.points.empty()) throw std::runtime_error("face_quadrature: degenerate face");
    return rule;
}

}  // namespace dgiga
