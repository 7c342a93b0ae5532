#pragma once

#include <optional>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "dgiga/sparse.hpp"

namespace dgiga {

struct SourceSolution {
    Eigen::VectorXd coefficients;
    double residual = 0.0;  // relative linear-solve residual
};

/// Direct sparse solve A w = b. Tries the (unpivoted) symmetric LDLT first
/// and falls back to sparse LU when the factorization fails or the residual
/// misses the tolerance (indefinite A).
inline SourceSolution solve_source(const SymmetricSparseMatrix& A, const Eigen::VectorXd& b,
                                   double tol = 1e-10) {
    if (A.dim() != b.size()) throw std::invalid_argument("solve_source: dimension mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) return {Eigen::VectorXd::Zero(A.dim()), 0.0};

    auto residual_of = [&](const Eigen::VectorXd& w) { return (A.apply(w) - b).norm() / bnorm; };

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt(A.upper());
    if (ldlt.info() == Eigen::Success) {
        SourceSolution s;
        s.coefficients = ldlt.solve(b);
        s.residual = residual_of(s.coefficients);
        if (s.residual <= tol) return s;
    }
    Eigen::SparseMatrix<double> full =
        Eigen::SparseMatrix<double>(A.upper().selfadjointView<Eigen::Upper>());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(full);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("solve_source: factorization failed (consider a beta shift)");
    SourceSolution s;
    s.coefficients = lu.solve(b);
    s.residual = residual_of(s.coefficients);
    if (s.residual > tol)
        throw std::runtime_error("solve_source: linear solve did not reach the tolerance");
    return s;
}

struct EigenSolveOptions {
    std::optional<double> sigma;  // shift; default -1
    double tol = 1e-9;            // relative residual per pair
    int max_block_steps = 200;
    unsigned seed = 20240811;     // deterministic start block
};

struct EigenSolution {
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd vectors;      // columns, M-orthonormal (x^T M x = 1)
    Eigen::VectorXd residuals;    // ||A x - lambda M x|| / ||A x||
    int iterations = 0;
};

namespace detail {

/// Fixes each eigenvector's overall sign: largest-magnitude entry positive.
inline void fix_signs(Eigen::MatrixXd& X) {
    for (long j = 0; j < X.cols(); ++j) {
        long imax = 0;
        X.col(j).cwiseAbs().maxCoeff(&imax);
        if (X(imax, j) < 0.0) X.col(j) = -X.col(j);
    }
}

inline void compute_residuals(const SymmetricSparseMatrix& A, const SymmetricSparseMatrix& M,
                              EigenSolution& sol) {
    sol.residuals.resize(sol.eigenvalues.size());
    for (long j = 0; j < sol.eigenvalues.size(); ++j) {
        const Eigen::VectorXd Ax = A.apply(sol.vectors.col(j));
        const Eigen::VectorXd Mx = M.apply(sol.vectors.col(j));
        const double den = std::max(Ax.norm(), 1e-300);
        sol.residuals[j] = (Ax - sol.eigenvalues[j] * Mx).norm() / den;
    }
}

}  // namespace detail

/// Lowest k eigenpairs of A x = lambda M x (M SPD) by shift-invert block
/// Lanczos: the Krylov basis of (A - sigma M)^{-1} M is kept M-orthonormal
/// with full reorthogonalization and Ritz pairs are extracted from the
/// projected pencil. The shift is lowered automatically until A - sigma M
/// is positive definite, so the factorization is stable without pivoting.
inline EigenSolution solve_eigen(const SymmetricSparseMatrix& A, const SymmetricSparseMatrix& M,
                                 int k, const EigenSolveOptions& opts = {}) {
    const long n = A.dim();
    if (M.dim() != n) throw std::invalid_argument("solve_eigen: dimension mismatch");
    if (k < 1 || k > n) throw std::invalid_argument("solve_eigen: k out of range");

    // factor K = A - sigma M, lowering sigma until positive definite
    double sigma = opts.sigma.value_or(-1.0);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> K;
    for (int attempt = 0;; ++attempt) {
        K.compute(A.plus_scaled(M, -sigma).upper());
        if (K.info() == Eigen::Success && K.vectorD().minCoeff() > 0.0) break;
        if (attempt >= 12)
            throw std::runtime_error("solve_eigen: could not find a definite shift");
        sigma = sigma * 2.0 - 1.0;
    }

    const int block = static_cast<int>(std::min<long>(std::max(k + 5, 2 * k), n));
    const long m_max = std::min<long>(n, std::max(4L * block, 64L));

    std::mt19937 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_vec = [&]() {
        Eigen::VectorXd v(n);
        for (long i = 0; i < n; ++i) v[i] = gauss(rng);
        return v;
    };

    Eigen::MatrixXd V(n, 0), MV(n, 0);
    Eigen::MatrixXd T(0, 0);

    // M-orthonormalizes each column against V (classical Gram-Schmidt, two
    // passes) and appends it. A column is only rejected when it collapses
    // relative to its own M-norm (numerically dependent direction); small
    // remainders are genuine Krylov corrections and must be kept.
    auto append_block = [&](const Eigen::MatrixXd& W) -> long {
        long added = 0;
        for (long c = 0; c < W.cols(); ++c) {
            Eigen::VectorXd w = W.col(c);
            for (int attempt = 0; attempt < 3; ++attempt) {
                const double nrm0 = std::sqrt(std::max(w.dot(M.apply(w)), 0.0));
                for (int pass = 0; pass < 2; ++pass)
                    if (V.cols() > 0) w -= V * (MV.transpose() * w);
                const Eigen::VectorXd Mw = M.apply(w);
                const double nrm = std::sqrt(std::max(w.dot(Mw), 0.0));
                if (nrm0 > 0.0 && nrm > 1e-13 * nrm0) {
                    V.conservativeResize(Eigen::NoChange, V.cols() + 1);
                    V.col(V.cols() - 1) = w / nrm;
                    MV.conservativeResize(Eigen::NoChange, MV.cols() + 1);
                    MV.col(MV.cols() - 1) = Mw / nrm;
                    ++added;
                    break;
                }
                w = random_vec();
            }
        }
        return added;
    };

    // seed block
    {
        Eigen::MatrixXd W(n, block);
        for (int c = 0; c < block; ++c) W.col(c) = random_vec();
        append_block(std::move(W));
    }

    EigenSolution sol;
    Eigen::VectorXd theta;
    Eigen::MatrixXd Y;
    long last_block_begin = 0;

    for (int step = 0; step < opts.max_block_steps; ++step) {
        // expand: apply (A - sigma M)^{-1} M to the newest basis vectors
        const long lo = last_block_begin, hi = V.cols();
        Eigen::MatrixXd W = K.solve(MV.middleCols(lo, hi - lo));
        last_block_begin = V.cols();
        if (append_block(std::move(W)) == 0) {
            Eigen::MatrixXd R(n, 1);
            R.col(0) = random_vec();
            append_block(std::move(R));
        }

        // extend the projected matrix T = V^T A V
        const long m = V.cols();
        Eigen::MatrixXd Told = T;
        T.resize(m, m);
        if (Told.cols() > 0) T.topLeftCorner(Told.rows(), Told.cols()) = Told;
        for (long c = Told.cols(); c < m; ++c) {
            const Eigen::VectorXd Av = A.apply(V.col(c));
            for (long r = 0; r <= c; ++r) {
                const double v = V.col(r).dot(Av);
                T(r, c) = v;
                T(c, r) = v;
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta = es.eigenvalues();
        Y = es.eigenvectors();

        // residual check on the k lowest Ritz pairs
        bool done = m >= k;
        if (done) {
            for (int j = 0; j < k; ++j) {
                const Eigen::VectorXd x = V * Y.col(j);
                const Eigen::VectorXd Ax = A.apply(x);
                const Eigen::VectorXd Mx = M.apply(x);
                const double res = (Ax - theta[j] * Mx).norm() / std::max(Ax.norm(), 1e-300);
                if (res > opts.tol) {
                    done = false;
                    break;
                }
            }
        }
        sol.iterations = step + 1;
        if (done) {
            sol.eigenvalues = theta.head(k);
            sol.vectors = V * Y.leftCols(k);
            detail::fix_signs(sol.vectors);
            detail::compute_residuals(A, M, sol);
            return sol;
        }

        if (m + block > m_max) {
            // thick restart with the lowest Ritz vectors
            const long keep = std::min<long>(std::max<long>(2L * k, block), m);
            Eigen::MatrixXd Vk = V * Y.leftCols(keep);
            Eigen::MatrixXd MVk = MV * Y.leftCols(keep);
            V = Vk;
            MV = MVk;
            T = theta.head(keep).asDiagonal();
            last_block_begin = 0;
        }
    }
    throw std::runtime_error("solve_eigen: no convergence within the step limit");
}

/// Dense verification path: Cholesky-based reduction of the generalized
/// problem and a full symmetric eigensolve. Dimension-capped; returns the
/// first k pairs in the same normalization as solve_eigen.
inline EigenSolution dense_oracle(const SymmetricSparseMatrix& A, const SymmetricSparseMatrix& M,
                                  int k, long max_dim = 2000) {
    const long n = A.dim();
    if (n > max_dim) throw std::invalid_argument("dense_oracle: dimension exceeds the cap");
    if (k < 1 || k > n) throw std::invalid_argument("dense_oracle: k out of range");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A.dense(), M.dense());
    if (es.info() != Eigen::Success) throw std::runtime_error("dense_oracle: eigensolver failed");
    EigenSolution sol;
    sol.eigenvalues = es.eigenvalues().head(k);
    sol.vectors = es.eigenvectors().leftCols(k);
    detail::fix_signs(sol.vectors);
    detail::compute_residuals(A, M, sol);
    sol.iterations = 1;
    return sol;
}

/// Largest principal angle (radians) between the column spans of X and Y in
/// the M inner product; the cluster-level comparison for degenerate pairs.
inline double subspace_angle(const SymmetricSparseMatrix& M, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Y) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("subspace_angle: rank mismatch");
    Eigen::MatrixXd MY(Y.rows(), Y.cols());
    for (long j = 0; j < Y.cols(); ++j) MY.col(j) = M.apply(Y.col(j));
    // assumes both bases are M-orthonormal (solver contract)
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X.transpose() * MY);
    const double smin = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
    return std::acos(std::min(1.0, smin));
}

}  // namespace dgiga
