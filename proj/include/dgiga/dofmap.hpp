#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dgiga/geometry.hpp"

namespace dgiga {

/// Global numbering of the multi-patch DG degrees of freedom.
///
/// With constrain_boundary, the tensor-boundary basis functions whose trace
/// is non-zero on a patch face lying on the domain boundary are removed,
/// enforcing f = 0 on the exterior faces. Per patch and per direction that
/// is exactly the first/last univariate function of a clamped boundary side.
class DofMap {
public:
    DofMap(const MultiPatchMesh& mesh, bool constrain_boundary = true) {
        const int np = mesh.layout.patch_count();
        const int d = mesh.dim();
        map_.resize(static_cast<std::size_t>(np));
        long next = 0;
        for (int i = 0; i < np; ++i) {
            const TensorSplineSpace& sp = mesh.patches[static_cast<std::size_t>(i)].space();
            std::array<bool, 3> clamp_lo{false, false, false}, clamp_hi{false, false, false};
            if (constrain_boundary)
                for (const auto& ef : mesh.layout.exterior_faces())
                    if (ef.patch == i)
                        (ef.upper ? clamp_hi : clamp_lo)[static_cast<std::size_t>(ef.normal_dir)] = true;
            auto& local = map_[static_cast<std::size_t>(i)];
            local.assign(static_cast<std::size_t>(sp.size()), -1);
            for (long f = 0; f < sp.size(); ++f) {
                const MultiIndex mi = sp.unflatten(f);
                bool constrained = false;
                for (int a = 0; a < d; ++a) {
                    const auto s = static_cast<std::size_t>(a);
                    if ((mi[s] == 0 && clamp_lo[s]) ||
                        (mi[s] == sp.basis_count(a) - 1 && clamp_hi[s])) {
                        constrained = true;
                        break;
                    }
                }
                if (!constrained) local[static_cast<std::size_t>(f)] = next++;
            }
        }
        size_ = next;
    }

    long size() const { return size_; }

    /// Global index of (patch, local flat index), or -1 when constrained.
    long global(int patch, long local) const {
        return map_[static_cast<std::size_t>(patch)][static_cast<std::size_t>(local)];
    }

    long constrained_count() const {
        long c = 0;
        for (const auto& local : map_)
            for (const long g : local)
                if (g < 0) ++c;
        return c;
    }

    /// Patch-local coefficient vector of a global one; constrained entries 0.
    Eigen::VectorXd patch_coefficients(const Eigen::VectorXd& global_vec, int patch) const {
        const auto& local = map_[static_cast<std::size_t>(patch)];
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<long>(local.size()));
        for (std::size_t f = 0; f < local.size(); ++f)
            if (local[f] >= 0) out[static_cast<long>(f)] = global_vec[local[f]];
        return out;
    }

    /// Scatter patch-local coefficients into a global vector (frees only).
    void add_patch_coefficients(int patch, const Eigen::VectorXd& local_vec,
                                Eigen::VectorXd& global_vec) const {
        const auto& local = map_[static_cast<std::size_t>(patch)];
        for (std::size_t f = 0; f < local.size(); ++f)
            if (local[f] >= 0) global_vec[local[f]] += local_vec[static_cast<long>(f)];
    }

private:
    std::vector<std::vector<long>> map_;
    long size_ = 0;
};

/// Per-patch coefficient view of a global DG vector; the natural form for
/// pointwise evaluation of discrete fields.
class MultiPatchField {
public:
    MultiPatchField() = default;

    MultiPatchField(const MultiPatchMesh& mesh, const DofMap& dofs, const Eigen::VectorXd& global_vec)
        : mesh_(&mesh) {
        coeffs_.reserve(mesh.patches.size());
        for (int i = 0; i < mesh.layout.patch_count(); ++i)
            coeffs_.push_back(dofs.patch_coefficients(global_vec, i));
    }

    /// Field with explicit per-patch coefficients (full local spaces).
    MultiPatchField(const MultiPatchMesh& mesh, std::vector<Eigen::VectorXd> per_patch)
        : mesh_(&mesh), coeffs_(std::move(per_patch)) {}

    static MultiPatchField zero(const MultiPatchMesh& mesh) {
        std::vector<Eigen::VectorXd> c;
        for (const auto& pm : mesh.patches) c.push_back(Eigen::VectorXd::Zero(pm.space().size()));
        return MultiPatchField(mesh, std::move(c));
    }

    const MultiPatchMesh& mesh() const { return *mesh_; }
    const Eigen::VectorXd& patch(int i) const { return coeffs_[static_cast<std::size_t>(i)]; }
    Eigen::VectorXd& patch(int i) { return coeffs_[static_cast<std::size_t>(i)]; }

    /// Value at a physical point, evaluated on the patch owning x
    /// (lowest-index patch on boundaries).
    double value(const Point& x) const {
        const int i = mesh_->layout.patch_containing(x);
        return value_on(i, x);
    }

    /// Value at x using patch i's coefficients (x must lie in patch i's
    /// closure); the correct way to take traces on interfaces.
    double value_on(int i, const Point& x) const {
        const Point xi = mesh_->layout.pullback(i, x);
        return mesh_->patches[static_cast<std::size_t>(i)].space().eval(coeffs_[static_cast<std::size_t>(i)], xi);
    }

    /// Physical partial derivative d/dx_a from patch i.
    double derivative_on(int i, const Point& x, int a) const {
        const Point xi = mesh_->layout.pullback(i, x);
        const double scale = mesh_->layout.patch(i).side(a);
        return mesh_->patches[static_cast<std::size_t>(i)].space().eval(coeffs_[static_cast<std::size_t>(i)], xi, a) / scale;
    }

private:
    const MultiPatchMesh* mesh_ = nullptr;
    std::vector<Eigen::VectorXd> coeffs_;
};

}  // namespace dgiga
