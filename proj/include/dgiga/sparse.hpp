#pragma once

#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dgiga {

/// Sparse symmetric matrix; only the upper triangle is stored, so symmetry
/// is exact by construction.
class SymmetricSparseMatrix {
public:
    SymmetricSparseMatrix() = default;

    explicit SymmetricSparseMatrix(long n) : upper_(n, n) {}

    /// Builds from raw triplets. Entries are mirrored into the upper
    /// triangle, duplicates summed, exact zeros dropped.
    static SymmetricSparseMatrix from_triplets(long n, std::vector<Eigen::Triplet<double>>& trips) {
        for (auto& t : trips)
            if (t.row() > t.col()) t = Eigen::Triplet<double>(t.col(), t.row(), t.value());
        SymmetricSparseMatrix m(n);
        m.upper_.setFromTriplets(trips.begin(), trips.end());
        m.upper_.prune([](long, long, double v) { return v != 0.0; });
        m.upper_.makeCompressed();
        return m;
    }

    long dim() const { return upper_.rows(); }
    long nonzeros() const { return upper_.nonZeros(); }
    const Eigen::SparseMatrix<double>& upper() const { return upper_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        return upper_.selfadjointView<Eigen::Upper>() * x;
    }

    /// x^T A y.
    double quadratic_form(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        return x.dot(apply(y));
    }

    /// A + c B, dimensions must agree.
    SymmetricSparseMatrix plus_scaled(const SymmetricSparseMatrix& other, double c) const {
        SymmetricSparseMatrix out(dim());
        out.upper_ = upper_ + c * other.upper_;
        out.upper_.makeCompressed();
        return out;
    }

    Eigen::MatrixXd dense() const {
        const Eigen::SparseMatrix<double> full = upper_.selfadjointView<Eigen::Upper>();
        return Eigen::MatrixXd(full);
    }

    /// Largest stored entries per row, for structural checks.
    long max_row_entries() const {
        std::vector<long> count(static_cast<std::size_t>(dim()), 0);
        for (int k = 0; k < upper_.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(upper_, k); it; ++it) {
                ++count[static_cast<std::size_t>(it.row())];
                if (it.row() != it.col()) ++count[static_cast<std::size_t>(it.col())];
            }
        long mx = 0;
        for (const long c : count) mx = std::max(mx, c);
        return mx;
    }

    /// Plain-text coordinate dump: "dim nnz" header, then "row col value"
    /// per stored (upper-triangle) entry.
    void dump(std::ostream& os) const {
        os << dim() << " " << nonzeros() << "\n";
        for (int k = 0; k < upper_.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(upper_, k); it; ++it)
                os << it.row() << " " << it.col() << " " << it.value() << "\n";
    }

private:
    Eigen::SparseMatrix<double> upper_;
};

}  // namespace dgiga
