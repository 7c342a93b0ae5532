#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgiga {

/// Univariate B-spline basis on [0,1] defined by an open knot vector.
///
/// Knots are non-decreasing, the first and last degree+1 entries are clamped
/// to 0 and 1, and internal knots are simple. The basis follows the Cox-de
/// Boor recursion with the usual 0/0 := 0 convention; evaluation at x = 1 is
/// attached to the closure of the last non-empty span so that the final basis
/// function interpolates the right endpoint.
class KnotVector {
public:
    KnotVector(int degree, std::vector<double> knots)
        : degree_(degree), knots_(std::move(knots)) {
        validate();
        build_breakpoints();
    }

    /// Open knot vector with `elements` equal spans on [0,1].
    static KnotVector uniform_open(int degree, int elements) {
        if (degree < 0) throw std::invalid_argument("KnotVector: degree must be >= 0");
        if (elements < 1) throw std::invalid_argument("KnotVector: need at least one element");
        std::vector<double> knots;
        knots.reserve(static_cast<std::size_t>(elements + 1 + 2 * degree));
        for (int i = 0; i < degree; ++i) knots.push_back(0.0);
        for (int j = 0; j <= elements; ++j)
            knots.push_back(static_cast<double>(j) / static_cast<double>(elements));
        for (int i = 0; i < degree; ++i) knots.push_back(1.0);
        return KnotVector(degree, std::move(knots));
    }

    /// Open knot vector through the given strictly increasing breakpoints,
    /// which must start at 0 and end at 1.
    static KnotVector from_breakpoints(int degree, const std::vector<double>& breaks) {
        if (breaks.size() < 2) throw std::invalid_argument("KnotVector: need >= 2 breakpoints");
        std::vector<double> knots;
        knots.reserve(breaks.size() + 2 * static_cast<std::size_t>(degree));
        for (int i = 0; i < degree; ++i) knots.push_back(breaks.front());
        knots.insert(knots.end(), breaks.begin(), breaks.end());
        for (int i = 0; i < degree; ++i) knots.push_back(breaks.back());
        return KnotVector(degree, std::move(knots));
    }

    int degree() const { return degree_; }

    /// Number of basis functions n; length(knots) = n + degree + 1.
    int size() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

    const std::vector<double>& knots() const { return knots_; }
    double knot(int k) const { return knots_[static_cast<std::size_t>(k)]; }

    /// Distinct knot values; consecutive pairs delimit the mesh spans.
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    int span_count() const { return static_cast<int>(breakpoints_.size()) - 1; }

    double max_span() const {
        double h = 0.0;
        for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k)
            h = std::max(h, breakpoints_[k + 1] - breakpoints_[k]);
        return h;
    }

    /// Index mu with knots[mu] <= x < knots[mu+1]; x = 1 maps to the last
    /// non-empty span. Valid span indices run from degree to size()-1.
    int find_span(double x) const {
        check_point(x);
        const int n = size();
        if (x >= knots_[static_cast<std::size_t>(n)]) return n - 1;
        int lo = degree_, hi = n;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (x < knots_[static_cast<std::size_t>(mid)])
                hi = mid;
            else
                lo = mid;
        }
        return lo;
    }

    /// Highest degree supported by the stack-buffer evaluation paths.
    static constexpr int kMaxDegree = 7;

    /// Values of the degree+1 basis functions that are non-zero on `span`;
    /// vals[j] = B_{span-degree+j}(x). vals must hold degree+1 doubles.
    void basis_values(int span, double x, double* vals) const {
        triangular_scheme(degree_, span, x, vals);
    }

    /// Values and first derivatives of the non-zero basis functions on `span`.
    void basis_values_derivatives(int span, double x, double* vals, double* ders) const {
        const int p = degree_;
        basis_values(span, x, vals);
        if (p == 0) {
            ders[0] = 0.0;
            return;
        }
        // Derivative from the degree p-1 functions on the same span.
        double lower[kMaxDegree + 1];
        triangular_scheme(p - 1, span, x, lower);
        for (int j = 0; j <= p; ++j) {
            const int i = span - p + j;
            double d = 0.0;
            const double den1 = knots_[static_cast<std::size_t>(i + p)] -
                                knots_[static_cast<std::size_t>(i)];
            if (den1 > 0.0 && j > 0) d += lower[static_cast<std::size_t>(j - 1)] / den1;
            const double den2 = knots_[static_cast<std::size_t>(i + p + 1)] -
                                knots_[static_cast<std::size_t>(i + 1)];
            if (den2 > 0.0 && j < p) d -= lower[static_cast<std::size_t>(j)] / den2;
            ders[j] = static_cast<double>(p) * d;
        }
    }

    /// Single basis function B_{i}(x) (0-based i) or its first derivative,
    /// straight from the Cox-de Boor recursion.
    double eval_basis(int i, double x, int deriv = 0) const {
        if (i < 0 || i >= size())
            throw std::out_of_range("KnotVector::eval_basis: basis index out of range");
        check_point(x);
        if (deriv == 0) return cox_de_boor(i, degree_, x);
        if (deriv != 1)
            throw std::invalid_argument("KnotVector::eval_basis: deriv must be 0 or 1");
        const int p = degree_;
        if (p == 0) return 0.0;
        double d = 0.0;
        const double den1 = knots_[static_cast<std::size_t>(i + p)] - knots_[static_cast<std::size_t>(i)];
        if (den1 > 0.0) d += cox_de_boor(i, p - 1, x) / den1;
        const double den2 = knots_[static_cast<std::size_t>(i + p + 1)] -
                            knots_[static_cast<std::size_t>(i + 1)];
        if (den2 > 0.0) d -= cox_de_boor(i + 1, p - 1, x) / den2;
        return static_cast<double>(p) * d;
    }

    /// Greville abscissae g_i = (knot_{i+1} + ... + knot_{i+p}) / p.
    std::vector<double> greville() const {
        if (degree_ < 1)
            throw std::logic_error("KnotVector::greville: requires degree >= 1");
        std::vector<double> g(static_cast<std::size_t>(size()));
        for (int i = 0; i < size(); ++i) {
            double s = 0.0;
            for (int k = 1; k <= degree_; ++k) s += knots_[static_cast<std::size_t>(i + k)];
            g[static_cast<std::size_t>(i)] = s / degree_;
        }
        return g;
    }

    /// Splits every span into `factor` equal parts (dyadic for factor 2).
    KnotVector refined(int factor = 2) const {
        if (factor < 1) throw std::invalid_argument("KnotVector::refined: factor must be >= 1");
        std::vector<double> breaks;
        breaks.reserve(breakpoints_.size() * static_cast<std::size_t>(factor));
        for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
            const double a = breakpoints_[k], b = breakpoints_[k + 1];
            for (int j = 0; j < factor; ++j)
                breaks.push_back(a + (b - a) * j / factor);
        }
        breaks.push_back(breakpoints_.back());
        return from_breakpoints(degree_, breaks);
    }

private:
    static constexpr double kBreakTol = 1e-14;

    void validate() const {
        const int n = size();
        if (degree_ < 0) throw std::invalid_argument("KnotVector: negative degree");
        if (degree_ > kMaxDegree)
            throw std::invalid_argument("KnotVector: degree exceeds supported maximum");
        if (n < degree_ + 1)
            throw std::invalid_argument("KnotVector: too few knots for degree " +
                                        std::to_string(degree_));
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k)
            if (knots_[k] > knots_[k + 1])
                throw std::invalid_argument("KnotVector: knots must be non-decreasing");
        if (knots_.front() < 0.0 || knots_.back() > 1.0)
            throw std::invalid_argument("KnotVector: knots must lie in [0,1]");
        for (int k = 0; k <= degree_; ++k) {
            if (knots_[static_cast<std::size_t>(k)] != 0.0)
                throw std::invalid_argument("KnotVector: not open (leading knots must be 0)");
            if (knots_[knots_.size() - 1 - static_cast<std::size_t>(k)] != 1.0)
                throw std::invalid_argument("KnotVector: not open (trailing knots must be 1)");
        }
        // internal knots must be simple
        for (int k = degree_ + 1; k < n; ++k)
            if (knots_[static_cast<std::size_t>(k)] ==
                knots_[static_cast<std::size_t>(k) + 1])
                throw std::invalid_argument("KnotVector: internal knots must have multiplicity 1");
    }

    void build_breakpoints() {
        breakpoints_.clear();
        for (const double k : knots_)
            if (breakpoints_.empty() || k - breakpoints_.back() > kBreakTol)
                breakpoints_.push_back(k);
    }

    void check_point(double x) const {
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("KnotVector: evaluation point outside [0,1]");
    }

    // B_{i,p}(x) with the half-open convention, closed on the last span.
    double cox_de_boor(int i, int p, double x) const {
        if (p == 0) {
            const double xi = knots_[static_cast<std::size_t>(i)];
            const double xi1 = knots_[static_cast<std::size_t>(i + 1)];
            if (xi <= x && x < xi1) return 1.0;
            if (x == 1.0 && xi1 == 1.0 && xi < 1.0) return 1.0;
            return 0.0;
        }
        double v = 0.0;
        const double den1 = knots_[static_cast<std::size_t>(i + p)] - knots_[static_cast<std::size_t>(i)];
        if (den1 > 0.0) v += (x - knots_[static_cast<std::size_t>(i)]) / den1 * cox_de_boor(i, p - 1, x);
        const double den2 = knots_[static_cast<std::size_t>(i + p + 1)] -
                            knots_[static_cast<std::size_t>(i + 1)];
        if (den2 > 0.0)
            v += (knots_[static_cast<std::size_t>(i + p + 1)] - x) / den2 * cox_de_boor(i + 1, p - 1, x);
        return v;
    }

    // Triangular scheme: values at x of the q+1 functions of degree q that
    // are non-zero on `span` (a span of the degree() mesh).
    void triangular_scheme(int q, int span, double x, double* vals) const {
        if (q > kMaxDegree) throw std::logic_error("KnotVector: degree exceeds kMaxDegree");
        double left[kMaxDegree + 1], right[kMaxDegree + 1];
        vals[0] = 1.0;
        for (int j = 1; j <= q; ++j) {
            left[j] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
            right[j] = knots_[static_cast<std::size_t>(span + j)] - x;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double temp = vals[r] / (right[r + 1] + left[j - r]);
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
    }

    int degree_;
    std::vector<double> knots_;
    std::vector<double> breakpoints_;
};

}  // namespace dgiga
