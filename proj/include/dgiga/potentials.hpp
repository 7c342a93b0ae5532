#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dgiga/dofmap.hpp"
#include "dgiga/geometry.hpp"

namespace dgiga {

/// Point charges Z_k at positions R_k.
struct Nucleus {
    double charge = 1.0;
    Point position{0.0, 0.0, 0.0};
};

struct NucleusSet {
    std::vector<Nucleus> nuclei;

    std::vector<Point> positions() const {
        std::vector<Point> out;
        out.reserve(nuclei.size());
        for (const auto& nk : nuclei) out.push_back(nk.position);
        return out;
    }

    double max_charge() const {
        double z = 0.0;
        for (const auto& nk : nuclei) z = std::max(z, nk.charge);
        return z;
    }
};

/// V_ext(r) = -sum_k Z_k / |r - R_k|.
inline double eval_coulomb(const NucleusSet& nuclei, const Point& r, int dim) {
    double v = 0.0;
    for (const auto& nk : nuclei.nuclei) {
        double d2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double dx = r[static_cast<std::size_t>(a)] - nk.position[static_cast<std::size_t>(a)];
            d2 += dx * dx;
        }
        if (d2 == 0.0)
            throw std::domain_error("eval_coulomb: evaluation at a nucleus position");
        v -= nk.charge / std::sqrt(d2);
    }
    return v;
}

/// Slater exchange potential V_x = -(3 rho / pi)^{1/3}.
inline double lda_exchange_potential(double rho) {
    return -std::cbrt(3.0 * rho / M_PI);
}

/// Slater exchange energy density e_x = -(3/4)(3 rho / pi)^{1/3}.
inline double lda_exchange_energy_density(double rho) {
    return 0.75 * lda_exchange_potential(rho);
}

namespace detail {

// Perdew-Zunger 1981 parametrization (unpolarized), atomic units.
constexpr double kPZGamma = -0.1423, kPZBeta1 = 1.0529, kPZBeta2 = 0.3334;
constexpr double kPZA = 0.0311, kPZB = -0.048, kPZC = 0.0020, kPZD = -0.0116;

inline double seitz_radius(double rho) { return std::cbrt(3.0 / (4.0 * M_PI * rho)); }

}  // namespace detail

/// Perdew-Zunger correlation energy density for the uniform gas.
inline double pz81_correlation_energy_density(double rho) {
    if (rho <= 0.0) return 0.0;
    const double rs = detail::seitz_radius(rho);
    if (rs >= 1.0)
        return detail::kPZGamma / (1.0 + detail::kPZBeta1 * std::sqrt(rs) + detail::kPZBeta2 * rs);
    return detail::kPZA * std::log(rs) + detail::kPZB + detail::kPZC * rs * std::log(rs) +
           detail::kPZD * rs;
}

/// Perdew-Zunger correlation potential V_c = e_c - (rs/3) de_c/drs.
inline double pz81_correlation_potential(double rho) {
    if (rho <= 0.0) return 0.0;
    const double rs = detail::seitz_radius(rho);
    if (rs >= 1.0) {
        const double srs = std::sqrt(rs);
        const double denom = 1.0 + detail::kPZBeta1 * srs + detail::kPZBeta2 * rs;
        const double ec = detail::kPZGamma / denom;
        return ec * (1.0 + 7.0 / 6.0 * detail::kPZBeta1 * srs + 4.0 / 3.0 * detail::kPZBeta2 * rs) /
               denom;
    }
    const double lnrs = std::log(rs);
    return detail::kPZA * lnrs + detail::kPZB - detail::kPZA / 3.0 +
           2.0 / 3.0 * detail::kPZC * rs * lnrs +
           (2.0 * detail::kPZD - detail::kPZC) * rs / 3.0;
}

/// LDA exchange-correlation potential at a density value; negative densities
/// are clamped to zero before the cube root.
inline double eval_lda_xc(double rho, bool with_correlation = true) {
    const double r = std::max(rho, 0.0);
    if (r == 0.0) return 0.0;
    double v = lda_exchange_potential(r);
    if (with_correlation) v += pz81_correlation_potential(r);
    return v;
}

/// Matching LDA exchange-correlation energy density.
inline double eval_lda_xc_energy_density(double rho, bool with_correlation = true) {
    const double r = std::max(rho, 0.0);
    if (r == 0.0) return 0.0;
    double e = lda_exchange_energy_density(r);
    if (with_correlation) e += pz81_correlation_energy_density(r);
    return e;
}

/// Electron density rho on the multi-patch spline spaces (full per-patch
/// coefficient sets; the density does not carry boundary constraints).
struct DensityField {
    MultiPatchField field;
    double electron_count = 0.0;

    double value(const Point& x) const { return field.value(x); }
};

/// Projects a pointwise density (e.g. occ * |u|^2) onto the per-patch spline
/// spaces by the Greville quasi-interpolant.
inline DensityField project_density(const MultiPatchMesh& mesh, const ScalarField& rho,
                                    double electron_count) {
    std::vector<Eigen::VectorXd> coeffs;
    coeffs.reserve(mesh.patches.size());
    for (int i = 0; i < mesh.layout.patch_count(); ++i) {
        const auto& sp = mesh.patches[static_cast<std::size_t>(i)].space();
        coeffs.push_back(sp.project([&](const Point& xi) {
            return rho(mesh.layout.pushforward(i, xi));
        }));
    }
    return DensityField{MultiPatchField(mesh, std::move(coeffs)), electron_count};
}

/// Ordered list of potential terms, evaluable at physical points. Terms are
/// plain callables so external, Hartree, xc and density terms compose freely.
class PotentialStack {
public:
    void add(std::string name, PotentialFn term) {
        names_.push_back(std::move(name));
        terms_.push_back(std::move(term));
    }

    bool empty() const { return terms_.empty(); }
    const std::vector<std::string>& names() const { return names_; }

    double operator()(const Point& x) const {
        double v = 0.0;
        for (const auto& t : terms_) v += t(x);
        return v;
    }

    /// As a single callable for the assembly layer (empty -> V = 0).
    PotentialFn function() const {
        if (terms_.empty()) return {};
        PotentialStack copy = *this;
        return [copy](const Point& x) { return copy(x); };
    }

private:
    std::vector<std::string> names_;
    std::vector<PotentialFn> terms_;
};

}  // namespace dgiga
