#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dgiga/spline_space.hpp"

namespace dgiga {

/// Gauss-Legendre nodes and weights on [-1,1], q points (exact through
/// polynomial degree 2q-1). Computed by Newton iteration on the Legendre
/// recurrence; deterministic and accurate to machine precision.
inline void gauss_legendre(int q, std::vector<double>& nodes, std::vector<double>& weights) {
    if (q < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    nodes.assign(static_cast<std::size_t>(q), 0.0);
    weights.assign(static_cast<std::size_t>(q), 0.0);
    const int m = (q + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < q; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = q * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(q - 1 - i)] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(q - 1 - i)] = w;
    }
}

/// Quadrature rule on a concrete axis-aligned box (or face): a flat list of
/// points with positive weights summing to the box measure.
struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }

    double total_weight() const {
        double s = 0.0;
        for (const double w : weights) s += w;
        return s;
    }
};

namespace detail {

/// Gauss points of order q mapped to [a,b], appended per direction.
inline void gauss_on_interval(int q, double a, double b, std::vector<double>& pts,
                              std::vector<double>& wts) {
    std::vector<double> xs, ws;
    gauss_legendre(q, xs, ws);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < q; ++i) {
        pts.push_back(mid + half * xs[static_cast<std::size_t>(i)]);
        wts.push_back(half * ws[static_cast<std::size_t>(i)]);
    }
}

inline void tensorize(int dim, const std::array<std::vector<double>, 3>& pts,
                      const std::array<std::vector<double>, 3>& wts, QuadratureRule& rule) {
    const std::size_t n0 = pts[0].size();
    const std::size_t n1 = dim > 1 ? pts[1].size() : 1;
    const std::size_t n2 = dim > 2 ? pts[2].size() : 1;
    for (std::size_t i0 = 0; i0 < n0; ++i0)
        for (std::size_t i1 = 0; i1 < n1; ++i1)
            for (std::size_t i2 = 0; i2 < n2; ++i2) {
                Point x{pts[0][i0], 0.0, 0.0};
                double w = wts[0][i0];
                if (dim > 1) {
                    x[1] = pts[1][i1];
                    w *= wts[1][i1];
                }
                if (dim > 2) {
                    x[2] = pts[2][i2];
                    w *= wts[2][i2];
                }
                rule.points.push_back(x);
                rule.weights.push_back(w);
            }
}

}  // namespace detail

/// Plain tensor Gauss rule of order q per direction on the box [lo, hi].
inline QuadratureRule tensor_gauss(int dim, const Point& lo, const Point& hi, int q) {
    std::array<std::vector<double>, 3> pts, wts;
    for (int a = 0; a < dim; ++a)
        detail::gauss_on_interval(q, lo[static_cast<std::size_t>(a)], hi[static_cast<std::size_t>(a)],
                                  pts[static_cast<std::size_t>(a)], wts[static_cast<std::size_t>(a)]);
    QuadratureRule rule;
    detail::tensorize(dim, pts, wts, rule);
    return rule;
}

/// Tensor Gauss rule graded geometrically (ratio 1/2) toward the box corner
/// `corner` (a vertex of [lo,hi]): per direction the interval is split into
/// `levels` sub-intervals shrinking dyadically toward the corner, and a
/// tensor Gauss rule of order q is laid on every sub-box. Keeps quadrature
/// points away from an integrable corner singularity.
inline QuadratureRule graded_tensor_gauss(int dim, const Point& lo, const Point& hi,
                                          const Point& corner, int q, int levels) {
    if (levels < 1) throw std::invalid_argument("graded_tensor_gauss: levels must be >= 1");
    // per direction: sub-interval breakpoints, ordered away from the corner
    std::array<std::vector<double>, 3> breaks;
    for (int a = 0; a < dim; ++a) {
        const double c = corner[static_cast<std::size_t>(a)];
        const double l = lo[static_cast<std::size_t>(a)], h = hi[static_cast<std::size_t>(a)];
        const bool at_lo = std::abs(c - l) <= std::abs(c - h);
        const double len = h - l;
        std::vector<double>& bk = breaks[static_cast<std::size_t>(a)];
        bk.push_back(0.0);
        for (int s = levels - 1; s >= 0; --s) bk.push_back(len / (1 << s));
        // map normalized distances from the corner into [l,h]
        for (double& b : bk) b = at_lo ? l + b : h - b;
        if (!at_lo) std::reverse(bk.begin(), bk.end());
    }
    QuadratureRule rule;
    std::array<int, 3> cells{1, 1, 1};
    for (int a = 0; a < dim; ++a) cells[static_cast<std::size_t>(a)] = levels;
    std::array<int, 3> ci{0, 0, 0};
    for (ci[0] = 0; ci[0] < cells[0]; ++ci[0])
        for (ci[1] = 0; ci[1] < cells[1]; ++ci[1])
            for (ci[2] = 0; ci[2] < cells[2]; ++ci[2]) {
                std::array<std::vector<double>, 3> pts, wts;
                for (int a = 0; a < dim; ++a) {
                    const auto& bk = breaks[static_cast<std::size_t>(a)];
                    const int k = ci[static_cast<std::size_t>(a)];
                    detail::gauss_on_interval(q, bk[static_cast<std::size_t>(k)],
                                              bk[static_cast<std::size_t>(k) + 1],
                                              pts[static_cast<std::size_t>(a)],
                                              wts[static_cast<std::size_t>(a)]);
                }
                detail::tensorize(dim, pts, wts, rule);
            }
    return rule;
}

}  // namespace dgiga
