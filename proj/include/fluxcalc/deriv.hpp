#pragma once

#include "chains.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "integrate.hpp"
#include "multiindex.hpp"
#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace fluxcalc {

struct DerivConfig {
    /// Stencil half-width; default 1e-4 * max(1, |x|_inf).
    std::optional<double> eps;
    /// Bound K on L(B)/l(B) for flux averages. The stencil itself uses cubes.
    double aspect_bound = 2.0;
    /// Midpoint cells per face axis; 1 is the one-point face-centre rule.
    int face_subdivisions = 1;
    int richardson_levels = 0;
    std::optional<double> jacobian_step;

    double eps_at(const Point& x) const {
        const double e = eps ? *eps : 1e-4 * std::max(1.0, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
        if (!(e > 0.0)) throw ShapeError("stencil half-width must be positive");
        return e;
    }

    void validate() const {
        if (eps && !(*eps > 0.0)) throw ShapeError("stencil half-width must be positive");
        if (!(aspect_bound > 1.0)) throw ShapeError("aspect bound K must exceed 1");
        if (face_subdivisions < 1) throw ShapeError("face subdivisions must be at least 1");
        if (richardson_levels < 0) throw ShapeError("richardson levels must be non-negative");
    }
};

/// The 2n face centres x +- eps e_q, ordered (q = 1: -, +), (q = 2: -, +), ...
inline std::vector<Point> stencil_points(const Point& x, double eps) {
    std::vector<Point> pts;
    for (Eigen::Index q = 0; q < x.size(); ++q)
        for (double s : {-1.0, 1.0}) {
            Point p = x;
            p[q] += s * eps;
            pts.push_back(p);
        }
    return pts;
}

namespace detail {

inline AlternatingTensor stencil_sample(const FormField& field, const Point& p, const MultiIndex& Q) {
    try {
        return field.sample(p);
    } catch (const SamplingError& e) {
        throw SamplingError("missing sample at stencil node " + format_point(p) + " for component " + Q.key() +
                                ": " + e.what(),
                            e.point());
    }
}

}  // namespace detail

/// Components of D omega at x on the canonical directions:
///
///   D omega_x(e_q1, ..., e_qk) = 1/(2 eps) sum_{i=1..k} sum_{j=0,1} (-1)^(i+j)
///                                omega_{x + (-1)^(j+1) eps e_qi}[Q \ q_i]
///
/// for every increasing Q of length k = degree + 1. With face_subdivisions
/// m > 1 the single face-centre sample is replaced by the mean over an m^(k-1)
/// midpoint grid on the face of the 2 eps cube in the Q-plane.
inline AlternatingTensor exterior_derivative_at(const FormField& field, const Point& x, const DerivConfig& cfg = {}) {
    cfg.validate();
    const int n = field.dimension();
    const int k = field.degree() + 1;
    if (x.size() != n) throw ShapeError("point dimension does not match the field");
    if (k > n) throw DegreeError("exterior derivative of a degree-" + std::to_string(k - 1) + " form on R^" +
                                 std::to_string(n) + " is identically zero and has no component keys");
    const double eps = cfg.eps_at(x);
    const int m = cfg.face_subdivisions;
    AlternatingTensor out(n, k);

    if (m == 1) {
        std::map<std::pair<int, int>, AlternatingTensor> cache;  // (axis, side) -> sample
        auto face_centre = [&](int q, int j, const MultiIndex& Q) -> const AlternatingTensor& {
            auto it = cache.find({q, j});
            if (it != cache.end()) return it->second;
            Point p = x;
            p[q - 1] += (j == 1 ? eps : -eps);
            return cache.emplace(std::make_pair(q, j), detail::stencil_sample(field, p, Q)).first->second;
        };
        for (const auto& Q : enumerate(n, k)) {
            double sum = 0.0;
            for (int i = 1; i <= k; ++i) {
                const MultiIndex rest = Q.without_position(static_cast<std::size_t>(i - 1));
                for (int j = 0; j <= 1; ++j) {
                    const double v = face_centre(Q[static_cast<std::size_t>(i - 1)], j, Q).get(rest);
                    sum += ((i + j) % 2 == 0) ? v : -v;
                }
            }
            out.set(Q, sum / (2.0 * eps));
        }
        return out;
    }

    for (const auto& Q : enumerate(n, k)) {
        double sum = 0.0;
        for (int i = 1; i <= k; ++i) {
            const MultiIndex rest = Q.without_position(static_cast<std::size_t>(i - 1));
            const Block face_domain = Block(std::vector<Interval>(static_cast<std::size_t>(k - 1), {-eps, eps}));
            for (int j = 0; j <= 1; ++j) {
                auto node = [&](const Point& s) {
                    Point p = x;
                    p[Q[static_cast<std::size_t>(i - 1)] - 1] += (j == 1 ? eps : -eps);
                    for (int l = 0, o = 0; l < k; ++l)
                        if (l != i - 1) p[Q[static_cast<std::size_t>(l)] - 1] += s[o++];
                    return detail::stencil_sample(field, p, Q).get(rest);
                };
                const double mean = detail::midpoint_sum(face_domain, m, node) / face_domain.volume();
                sum += ((i + j) % 2 == 0) ? mean : -mean;
            }
        }
        out.set(Q, sum / (2.0 * eps));
    }
    return out;
}

struct FluxAverage {
    double value = 0.0;
    double aspect_ratio = 1.0;
    /// False when L(B)/l(B) >= K; the value is still computed.
    bool within_aspect_bound = true;
};

/// (1 / vol B) * integral over dB of phi* omega, for a map phi defined on a
/// block A containing B, and base point p in B. As B shrinks to p with bounded
/// aspect ratio this tends to D omega_{phi(p)}(phi'(p) e_1, ..., phi'(p) e_k).
inline FluxAverage flux_average(const FormField& field, const SingularBlock& phi, const Point& p, const Block& b,
                                const QuadratureSpec& q = {}, double aspect_bound = 2.0) {
    const int k = phi.dimension();
    if (b.dimension() != k) throw ShapeError("block dimension does not match the map's domain");
    if (field.degree() != k - 1)
        throw DegreeError("flux average over " + std::to_string(k) + "-blocks needs a degree-" + std::to_string(k - 1) +
                          " form");
    if (!b.contains(p)) throw ShapeError("base point " + detail::format_point(p) + " is not in the block");
    for (int i = 0; i < k; ++i) {
        const auto& outer = phi.domain()[static_cast<std::size_t>(i)];
        const auto& inner = b[static_cast<std::size_t>(i)];
        if (inner.lo < outer.lo || inner.hi > outer.hi) throw ShapeError("block leaves the map's domain");
    }
    SingularBlock restricted;
    if (phi.affine_map()) {
        restricted = SingularBlock::affine(b, phi.affine_map()->linear, phi.affine_map()->offset);
    } else {
        SingularBlock::Jacobian jac;
        if (phi.has_jacobian()) jac = [phi](const Point& t) { return phi.jacobian(t); };
        restricted = SingularBlock::from_map(b, phi.target_dimension(), [phi](const Point& t) { return phi(t); },
                                             std::move(jac), phi.label());
    }
    FluxAverage r;
    r.value = boundary_integral(field, restricted, q) / b.volume();
    r.aspect_ratio = b.aspect_ratio();
    r.within_aspect_bound = r.aspect_ratio < aspect_bound;
    return r;
}

struct RefinedDerivative {
    AlternatingTensor value;
    /// Max component change between the last two diagonal Richardson entries.
    double error_estimate = 0.0;
    /// log2 of successive stencil-difference ratios (needs >= 2 levels).
    std::optional<double> observed_order;
    /// False when the observed order is more than 0.5 away from 2.
    bool reliable = true;
};

/// Richardson extrapolation over eps, eps/2, ..., eps/2^r assuming an even
/// error expansion of the centred stencil.
inline RefinedDerivative exterior_derivative_refined(const FormField& field, const Point& x, const DerivConfig& cfg) {
    cfg.validate();
    const int r = cfg.richardson_levels;
    if (r < 1) throw ShapeError("refinement needs richardson_levels >= 1");
    const double eps = cfg.eps_at(x);
    std::vector<AlternatingTensor> base;
    for (int i = 0; i <= r; ++i) {
        DerivConfig c = cfg;
        c.eps = eps / std::pow(2.0, i);
        base.push_back(exterior_derivative_at(field, x, c));
    }
    // table[i][j]: j-th extrapolation using levels i-j..i
    std::vector<std::vector<AlternatingTensor>> table(static_cast<std::size_t>(r + 1));
    for (int i = 0; i <= r; ++i) {
        auto& row = table[static_cast<std::size_t>(i)];
        row.push_back(base[static_cast<std::size_t>(i)]);
        for (int j = 1; j <= i; ++j) {
            const double f = std::pow(4.0, j) - 1.0;
            const auto& fine = row[static_cast<std::size_t>(j - 1)];
            const auto& coarse = table[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
            row.push_back(fine + (1.0 / f) * (fine - coarse));
        }
    }
    RefinedDerivative out;
    out.value = table[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
    out.error_estimate =
        max_abs_difference(out.value, table[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(r - 1)]);
    if (r >= 2) {
        const double d01 = max_abs_difference(base[0], base[1]);
        const double d12 = max_abs_difference(base[1], base[2]);
        if (d01 > 0.0 && d12 > 0.0) {
            out.observed_order = std::log2(d01 / d12);
            out.reliable = std::abs(*out.observed_order - 2.0) <= 0.5;
        }
    }
    return out;
}

struct ConvergenceResult {
    std::vector<double> eps;
    std::vector<double> errors;
    /// Least-squares slope of log(error) against log(eps); empty when some
    /// level reproduced the reference exactly.
    std::optional<double> slope;

    bool exact() const noexcept { return !slope.has_value(); }
};

/// Empirical order of the stencil against a reference tensor over a
/// decreasing sequence of half-widths.
inline ConvergenceResult convergence_order(const FormField& field, const Point& x, const std::vector<double>& eps_sequence,
                                           const AlternatingTensor& reference, const DerivConfig& cfg = {}) {
    if (eps_sequence.size() < 3) throw ShapeError("convergence order needs at least three half-widths");
    for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
        if (!(eps_sequence[i] > 0.0)) throw ShapeError("half-widths must be positive");
        if (i && !(eps_sequence[i] < eps_sequence[i - 1])) throw ShapeError("half-widths must be decreasing");
    }
    ConvergenceResult res;
    res.eps = eps_sequence;
    bool any_zero = false;
    for (double e : eps_sequence) {
        DerivConfig c = cfg;
        c.eps = e;
        const double err = max_abs_difference(exterior_derivative_at(field, x, c), reference);
        res.errors.push_back(err);
        any_zero = any_zero || err == 0.0;
    }
    if (any_zero) return res;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(eps_sequence.size());
    for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
        const double lx = std::log(eps_sequence[i]);
        const double ly = std::log(res.errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    res.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return res;
}

}  // namespace fluxcalc
