#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dgiga/bspline.hpp"

namespace dgiga {

/// Fixed-capacity point/multi-index containers; the spatial dimension is a
/// runtime value in {1,2,3} and unused trailing components stay zero.
using Point = std::array<double, 3>;
using MultiIndex = std::array<int, 3>;

using ScalarField = std::function<double(const Point&)>;
using PotentialFn = ScalarField;

/// Tensor-product B-spline space on the parametric cube [0,1]^d.
///
/// Coefficients are stored flat in lexicographic order with the last
/// direction fastest: flat = ((i_0 * n_1) + i_1) * n_2 + i_2 for d = 3.
class TensorSplineSpace {
public:
    explicit TensorSplineSpace(std::vector<KnotVector> directions)
        : kvs_(std::move(directions)) {
        if (kvs_.empty() || kvs_.size() > 3)
            throw std::invalid_argument("TensorSplineSpace: dimension must be 1, 2 or 3");
        size_ = 1;
        for (const auto& kv : kvs_) size_ *= kv.size();
        build_projectors();
    }

    int dim() const { return static_cast<int>(kvs_.size()); }
    long size() const { return size_; }
    const KnotVector& direction(int a) const { return kvs_[static_cast<std::size_t>(a)]; }

    int basis_count(int a) const { return kvs_[static_cast<std::size_t>(a)].size(); }

    long flat_index(const MultiIndex& mi) const {
        long idx = 0;
        for (int a = 0; a < dim(); ++a) idx = idx * basis_count(a) + mi[static_cast<std::size_t>(a)];
        return idx;
    }

    MultiIndex unflatten(long idx) const {
        MultiIndex mi{0, 0, 0};
        for (int a = dim() - 1; a >= 0; --a) {
            mi[static_cast<std::size_t>(a)] = static_cast<int>(idx % basis_count(a));
            idx /= basis_count(a);
        }
        return mi;
    }

    long element_count() const {
        long n = 1;
        for (const auto& kv : kvs_) n *= kv.span_count();
        return n;
    }

    /// Largest parametric span length over all directions.
    double max_parametric_span() const {
        double h = 0.0;
        for (const auto& kv : kvs_) h = std::max(h, kv.max_span());
        return h;
    }

    /// Value (deriv_dir < 0) or first partial derivative in direction
    /// deriv_dir of the spline with the given coefficients, at parametric x.
    double eval(const Eigen::VectorXd& coeffs, const Point& x, int deriv_dir = -1) const {
        if (coeffs.size() != size_)
            throw std::invalid_argument("TensorSplineSpace::eval: coefficient size mismatch");
        const int d = dim();
        std::array<int, 3> span{}, first{};
        std::array<std::array<double, KnotVector::kMaxDegree + 1>, 3> vals{};
        for (int a = 0; a < d; ++a) {
            const KnotVector& kv = kvs_[static_cast<std::size_t>(a)];
            const int s = kv.find_span(x[static_cast<std::size_t>(a)]);
            span[static_cast<std::size_t>(a)] = s;
            first[static_cast<std::size_t>(a)] = s - kv.degree();
            if (a == deriv_dir) {
                std::array<double, KnotVector::kMaxDegree + 1> tmp{};
                kv.basis_values_derivatives(s, x[static_cast<std::size_t>(a)], tmp.data(),
                                            vals[static_cast<std::size_t>(a)].data());
            } else {
                kv.basis_values(s, x[static_cast<std::size_t>(a)],
                                vals[static_cast<std::size_t>(a)].data());
            }
        }
        double acc = 0.0;
        const int p0 = kvs_[0].degree();
        const int p1 = d > 1 ? kvs_[1].degree() : 0;
        const int p2 = d > 2 ? kvs_[2].degree() : 0;
        for (int j0 = 0; j0 <= p0; ++j0) {
            const double v0 = vals[0][static_cast<std::size_t>(j0)];
            long base0 = (first[0] + j0);
            if (d == 1) {
                acc += coeffs[base0] * v0;
                continue;
            }
            base0 *= basis_count(1);
            for (int j1 = 0; j1 <= p1; ++j1) {
                const double v01 = v0 * vals[1][static_cast<std::size_t>(j1)];
                long base1 = base0 + (first[1] + j1);
                if (d == 2) {
                    acc += coeffs[base1] * v01;
                    continue;
                }
                base1 *= basis_count(2);
                for (int j2 = 0; j2 <= p2; ++j2)
                    acc += coeffs[base1 + first[2] + j2] * v01 * vals[2][static_cast<std::size_t>(j2)];
            }
        }
        return acc;
    }

    /// Tensor-product quasi-interpolant: spline interpolation of f at the
    /// Greville grid, solved direction by direction. Reproduces any member
    /// of the space exactly and interpolates f at the cube corners.
    Eigen::VectorXd project(const ScalarField& f) const {
        Eigen::VectorXd values(size_);
        const int d = dim();
        std::array<std::vector<double>, 3> nodes;
        for (int a = 0; a < d; ++a) nodes[static_cast<std::size_t>(a)] = kvs_[static_cast<std::size_t>(a)].greville();
        // tabulate f on the Greville grid (last direction fastest)
        std::array<int, 3> n{1, 1, 1};
        for (int a = 0; a < d; ++a) n[static_cast<std::size_t>(a)] = basis_count(a);
        long idx = 0;
        Point x{0.0, 0.0, 0.0};
        for (int i0 = 0; i0 < n[0]; ++i0) {
            x[0] = nodes[0][static_cast<std::size_t>(i0)];
            for (int i1 = 0; i1 < n[1]; ++i1) {
                if (d > 1) x[1] = nodes[1][static_cast<std::size_t>(i1)];
                for (int i2 = 0; i2 < n[2]; ++i2) {
                    if (d > 2) x[2] = nodes[2][static_cast<std::size_t>(i2)];
                    values[idx++] = f(x);
                }
            }
        }
        for (int a = 0; a < d; ++a) solve_direction(a, values);
        return values;
    }

    /// In-place collocation solve along direction a for a flat tensor of
    /// Greville values; exposed for reuse by multi-field projections.
    void solve_direction(int a, Eigen::VectorXd& values) const {
        if (!projectors_[static_cast<std::size_t>(a)])
            throw std::logic_error("TensorSplineSpace::project: requires degree >= 1");
        const int d = dim();
        const int na = basis_count(a);
        long inner = 1, outer = 1;  // strides around direction a
        for (int b = a + 1; b < d; ++b) inner *= basis_count(b);
        for (int b = 0; b < a; ++b) outer *= basis_count(b);
        Eigen::MatrixXd rhs(na, inner * outer);
        for (long o = 0; o < outer; ++o)
            for (long i = 0; i < inner; ++i) {
                const long base = o * na * inner + i;
                const long col = o * inner + i;
                for (int j = 0; j < na; ++j) rhs(j, col) = values[base + j * inner];
            }
        Eigen::MatrixXd sol = projectors_[static_cast<std::size_t>(a)]->solve(rhs);
        for (long o = 0; o < outer; ++o)
            for (long i = 0; i < inner; ++i) {
                const long base = o * na * inner + i;
                const long col = o * inner + i;
                for (int j = 0; j < na; ++j) values[base + j * inner] = sol(j, col);
            }
    }

    /// Dyadically refined copy (every span split in `factor` parts, degrees kept).
    TensorSplineSpace refined(int factor = 2) const {
        std::vector<KnotVector> kvs;
        kvs.reserve(kvs_.size());
        for (const auto& kv : kvs_) kvs.push_back(kv.refined(factor));
        return TensorSplineSpace(std::move(kvs));
    }

private:
    void build_projectors() {
        projectors_.reserve(kvs_.size());
        for (const auto& kv : kvs_) {
            const int n = kv.size();
            if (kv.degree() < 1) {
                projectors_.push_back(nullptr);
                continue;
            }
            const std::vector<double> g = kv.greville();
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(n) * (kv.degree() + 1));
            std::array<double, KnotVector::kMaxDegree + 1> vals{};
            for (int i = 0; i < n; ++i) {
                const int span = kv.find_span(g[static_cast<std::size_t>(i)]);
                kv.basis_values(span, g[static_cast<std::size_t>(i)], vals.data());
                for (int j = 0; j <= kv.degree(); ++j)
                    trips.emplace_back(i, span - kv.degree() + j, vals[static_cast<std::size_t>(j)]);
            }
            Eigen::SparseMatrix<double> colloc(n, n);
            colloc.setFromTriplets(trips.begin(), trips.end());
            auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
            lu->compute(colloc);
            if (lu->info() != Eigen::Success)
                throw std::runtime_error("TensorSplineSpace: Greville collocation factorization failed");
            projectors_.push_back(std::move(lu));
        }
    }

    std::vector<KnotVector> kvs_;
    long size_ = 0;
    std::vector<std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>> projectors_;
};

}  // namespace dgiga
